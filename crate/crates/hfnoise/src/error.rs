use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series too short: need at least {need} observations, got {got}")]
    SeriesTooShort { need: usize, got: usize },

    #[error("neighborhood index is empty (xi smaller than every grid spacing)")]
    EmptyNeighborhood,

    #[error("frequency grid does not cover the kernel support: need |s| up to {need}, grid reaches {got}")]
    FrequencyCoverage { need: f64, got: f64 },

    #[error("degenerate regression design: all regressors are zero")]
    DegenerateDesign,

    #[error("data has zero scale (all values equal)")]
    ZeroScale,

    #[error("no feasible (h, xi) grid point: every candidate xi selects an empty pair set")]
    EmptyFeasibleGrid,

    #[error("{0}")]
    Io(String),
}
