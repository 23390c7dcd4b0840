use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hfnoise::bandwidth::{select_h_xi, SelectConfig};
use hfnoise::density::truncate_negative;
use hfnoise::grid::TimeGrid;
use hfnoise::io as hio;
use hfnoise::ivol::estimate_iv;
use hfnoise::kernel::KernelFamily;
use hfnoise::moments::estimate_moments;
use hfnoise::neighborhood::build_neighborhoods;
use hfnoise::sim::{
    generate_noise, make_observations, rescale_model, simulate_heston, HestonParams, NoiseFamily,
    NoiseSpec,
};
use hfnoise::TickSeries;
use hfnoise_cli::bench::{
    density_with, failure_rate_exceeded, report_to_csv, run_benchmark, BenchmarkConfig,
    EstimatorKind, ModelId,
};
use hfnoise_cli::ingest::{preprocess_ticks, read_raw_csv};

/// Frequency-domain analysis of noisy high-frequency series: error
/// density, noise moments and integrated volatility.
#[derive(Parser)]
#[command(name = "hfnoise", version, about)]
struct Cli {
    /// Master seed for anything random.
    #[arg(long, global = true, default_value_t = 17)]
    seed: u64,
    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format where both make sense.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    I,
    Ii,
}

impl ModelArg {
    fn id(self) -> ModelId {
        match self {
            ModelArg::I => ModelId::I,
            ModelArg::Ii => ModelId::II,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    Normal,
    T8,
}

impl NoiseArg {
    fn family(self) -> NoiseFamily {
        match self {
            NoiseArg::Normal => NoiseFamily::Normal,
            NoiseArg::T8 => NoiseFamily::ScaledT8,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Sinc,
    Gaussian,
    /// Gaussian when the pilot differences carry ties, sinc otherwise.
    Auto,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a noisy Heston day and write it as `time,value` CSV.
    Simulate(SimulateArgs),
    /// Estimate the error density from a tick CSV.
    Density(DensityArgs),
    /// Estimate even noise moments from a tick CSV.
    Moments(MomentsArgs),
    /// Estimate integrated volatility from a tick CSV.
    Ivol(IvolArgs),
    /// Run the two-level bandwidth selection on a tick CSV.
    Bandwidth(BandwidthArgs),
    /// Clean a raw `timestamp,price[,cond,corr]` CSV into a tick CSV.
    Ingest(IngestArgs),
    /// Replicate the estimator studies over simulated cells.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Benchmark parameter set.
    #[arg(long, value_enum, default_value = "i")]
    model: ModelArg,
    /// Override individual Heston parameters.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    sigma0_sq: Option<f64>,
    #[arg(long, value_enum, default_value = "normal")]
    noise: NoiseArg,
    #[arg(long, default_value_t = 0.005)]
    sigma_u: f64,
    /// Observation spacing in seconds.
    #[arg(long, default_value_t = 30)]
    delta_s: u32,
    /// Relative jitter of interior grid points, in [0, 0.5).
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, default_value_t = 10)]
    substeps: usize,
    /// Unit rescaling factor c (tau, gamma, sigma_u, X0).
    #[arg(long)]
    rescale: Option<f64>,
    /// Also write ground truth (integrated volatility, parameters) here.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct InputArg {
    /// Tick CSV with header `time,value`.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    input: InputArg,
    #[arg(long, value_enum, default_value = "auto")]
    kernel: KernelArg,
    /// Fixed bandwidth (selected when omitted).
    #[arg(long)]
    h: Option<f64>,
    /// Fixed window (selected when omitted).
    #[arg(long)]
    xi: Option<f64>,
    /// Perturb tied pilot samples before the reference bandwidth.
    #[arg(long, default_value_t = false)]
    tie_break: bool,
    /// Keep the negative lobes instead of clamping them.
    #[arg(long, default_value_t = false)]
    no_truncate: bool,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    input: InputArg,
    /// Localization window (defaults to t_2 - t_1).
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, default_value_t = 2)]
    kmax: usize,
}

#[derive(Args)]
struct IvolArgs {
    #[command(flatten)]
    input: InputArg,
    #[arg(long)]
    xi: Option<f64>,
    /// Number of regression frequencies.
    #[arg(long, default_value_t = 50)]
    m: usize,
    /// Scan threshold on the difference characteristic function.
    #[arg(long, default_value_t = 0.99)]
    threshold: f64,
}

#[derive(Args)]
struct BandwidthArgs {
    #[command(flatten)]
    input: InputArg,
    #[arg(long, value_enum, default_value = "auto")]
    kernel: KernelArg,
    #[arg(long, default_value_t = false)]
    tie_break: bool,
    /// Dump the level-1 ISE surface as CSV.
    #[arg(long)]
    surface_out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Raw CSV `timestamp,price[,cond,corr]`.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated model ids.
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = vec![ModelArg::I])]
    models: Vec<ModelArg>,
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = vec![NoiseArg::Normal])]
    noise: Vec<NoiseArg>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.005])]
    sigma_u: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![30])]
    delta_s: Vec<u32>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, value_delimiter = ',', value_enum,
          default_values_t = vec![BenchEstimatorArg::Density, BenchEstimatorArg::Moments, BenchEstimatorArg::Ivol])]
    estimators: Vec<BenchEstimatorArg>,
    #[arg(long, value_enum, default_value = "sinc")]
    kernel: KernelArg,
    /// Worker threads (defaults to the rayon global default). Results do
    /// not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write the long-format CSV here.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Per-cell failure share that flips the exit code to 3.
    #[arg(long, default_value_t = 0.2)]
    max_failure_share: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchEstimatorArg {
    Density,
    Moments,
    Ivol,
}

impl BenchEstimatorArg {
    fn kind(self) -> EstimatorKind {
        match self {
            BenchEstimatorArg::Density => EstimatorKind::Density,
            BenchEstimatorArg::Moments => EstimatorKind::Moments,
            BenchEstimatorArg::Ivol => EstimatorKind::Ivol,
        }
    }
}

fn open_output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn read_series(path: &PathBuf) -> anyhow::Result<TickSeries> {
    let f = File::open(path)?;
    Ok(hio::read_tick_csv(BufReader::new(f))?)
}

/// Pilot differences carry ties when any two coincide exactly.
fn has_ties(series: &TickSeries) -> bool {
    let mut d = series.first_differences();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d.windows(2).any(|w| w[0] == w[1])
}

fn resolve_kernel(arg: KernelArg, series: &TickSeries) -> KernelFamily {
    match arg {
        KernelArg::Sinc => KernelFamily::Sinc,
        KernelArg::Gaussian => KernelFamily::Gaussian,
        KernelArg::Auto => {
            if has_ties(series) {
                KernelFamily::Gaussian
            } else {
                KernelFamily::Sinc
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Simulate(args) => {
            let base = args.model.id().params();
            let mut params = HestonParams::new(
                args.kappa.unwrap_or(base.kappa),
                args.tau.unwrap_or(base.tau),
                args.gamma.unwrap_or(base.gamma),
                args.rho.unwrap_or(base.rho),
                args.x0.unwrap_or(base.x0),
                args.sigma0_sq
                    .unwrap_or(args.tau.unwrap_or(base.sigma0_sq)),
            )?;
            let mut spec = NoiseSpec::new(args.noise.family(), args.sigma_u)?;
            if let Some(c) = args.rescale {
                (params, spec) = rescale_model(&params, &spec, c)?;
            }
            let grid = TimeGrid::for_day(args.delta_s, args.jitter, cli.seed)?;
            let path = simulate_heston(&params, &grid, args.substeps, cli.seed)?;
            let noise = generate_noise(&spec, path.x.len(), cli.seed.wrapping_add(1));
            let series = make_observations(&path, &noise)?;
            let mut out = open_output(&cli.out)?;
            hio::write_tick_csv(&series, &mut out)?;
            if let Some(tp) = args.truth_out {
                let truth = json!({
                    "integrated_vol": path.integrated_vol,
                    "params": params,
                    "noise": spec,
                    "delta_s": args.delta_s,
                    "n_intervals": grid.n_intervals(),
                });
                let mut tw = BufWriter::new(File::create(tp)?);
                writeln!(tw, "{}", serde_json::to_string_pretty(&truth)?)?;
            }
            Ok(0)
        }
        Command::Density(args) => {
            let series = read_series(&args.input.input)?;
            let kernel = resolve_kernel(args.kernel, &series);
            let (h, xi, selection) = match (args.h, args.xi) {
                (Some(h), Some(xi)) => (h, xi, None),
                _ => {
                    let cfg = SelectConfig {
                        kernel,
                        tie_break: args.tie_break || has_ties(&series),
                        seed: cli.seed,
                        ..SelectConfig::default()
                    };
                    let sel = select_h_xi(&series, &cfg)?;
                    (
                        args.h.unwrap_or(sel.h_hat),
                        args.xi.unwrap_or(sel.xi_hat),
                        Some(sel),
                    )
                }
            };
            let est = density_with(&series, kernel, h, xi)?;
            let est = if args.no_truncate { est } else { truncate_negative(&est) };
            let mut out = open_output(&cli.out)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    hio::write_density_csv(&est, &mut out)?;
                    eprintln!("kernel={kernel} h={h:.6e} xi={xi:.6e}");
                }
                Format::Json => {
                    let payload = json!({
                        "kernel": kernel.to_string(),
                        "h": h,
                        "xi": xi,
                        "selected": selection.is_some(),
                        "x": est.x_grid,
                        "fhat": est.values,
                        "truncated": est.truncated,
                    });
                    writeln!(out, "{}", serde_json::to_string_pretty(&payload)?)?;
                }
            }
            Ok(0)
        }
        Command::Moments(args) => {
            let series = read_series(&args.input.input)?;
            let xi = args.xi.unwrap_or_else(|| series.grid().t2_minus_t1());
            let nbhd = build_neighborhoods(series.grid(), xi)?;
            let set = estimate_moments(&series, &nbhd, args.kmax)?;
            let payload = json!({
                "xi": set.xi,
                "k": (1..=args.kmax).collect::<Vec<_>>(),
                "m_tilde": set.m_tilde,
                "m_u": set.m_u,
            });
            let mut out = open_output(&cli.out)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&payload)?)?;
            Ok(0)
        }
        Command::Ivol(args) => {
            let series = read_series(&args.input.input)?;
            let res = estimate_iv(&series, args.xi, args.m, args.threshold)?;
            let payload = json!({
                "beta_hat": res.beta_hat,
                "rv_baseline": res.rv_baseline,
                "xi": res.xi,
                "m": res.s_points.len(),
                "S": res.s_upper,
                "flagged_negative": res.flagged_negative,
                "degenerate_grid": res.degenerate_grid,
            });
            let mut out = open_output(&cli.out)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&payload)?)?;
            Ok(0)
        }
        Command::Bandwidth(args) => {
            let series = read_series(&args.input.input)?;
            let kernel = resolve_kernel(args.kernel, &series);
            let cfg = SelectConfig {
                kernel,
                tie_break: args.tie_break || has_ties(&series),
                seed: cli.seed,
                ..SelectConfig::default()
            };
            let sel = select_h_xi(&series, &cfg)?;
            if let Some(sp) = args.surface_out {
                let mut w = BufWriter::new(File::create(sp)?);
                writeln!(w, "xi,h,ise")?;
                for (i, xi) in sel.xi_grid.iter().enumerate() {
                    for (j, h) in sel.h_grid.iter().enumerate() {
                        writeln!(w, "{xi:.9e},{h:.9e},{:.9e}", sel.ise_surface[i][j])?;
                    }
                }
            }
            let payload = json!({
                "h1": sel.h1,
                "xi1": sel.xi1,
                "h2": sel.h2,
                "h_hat": sel.h_hat,
                "xi_hat": sel.xi_hat,
                "sj_h1": sel.sj_h1,
                "sj_h2": sel.sj_h2,
                "sj_fallback": sel.sj_fallback,
                "kernel": kernel.to_string(),
            });
            let mut out = open_output(&cli.out)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&payload)?)?;
            Ok(0)
        }
        Command::Ingest(args) => {
            let mut raw = String::new();
            File::open(&args.input)?.read_to_string(&mut raw)?;
            let records = read_raw_csv(raw.as_bytes())?;
            let series = preprocess_ticks(&records)?;
            let mut out = open_output(&cli.out)?;
            hio::write_tick_csv(&series, &mut out)?;
            eprintln!(
                "kept {} observations of {} raw records",
                series.len(),
                records.len()
            );
            Ok(0)
        }
        Command::Bench(args) => {
            let cfg = BenchmarkConfig {
                models: args.models.iter().map(|m| m.id()).collect(),
                noise_families: args.noise.iter().map(|n| n.family()).collect(),
                sigma_us: args.sigma_u.clone(),
                delta_ss: args.delta_s.clone(),
                replications: args.reps,
                master_seed: cli.seed,
                kernel: match args.kernel {
                    KernelArg::Gaussian => KernelFamily::Gaussian,
                    _ => KernelFamily::Sinc,
                },
                estimators: args.estimators.iter().map(|e| e.kind()).collect(),
                ..BenchmarkConfig::default()
            };
            let report = if let Some(t) = args.threads {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build()?;
                pool.install(|| run_benchmark(&cfg))?
            } else {
                run_benchmark(&cfg)?
            };
            if let Some(cp) = args.csv_out {
                std::fs::write(cp, report_to_csv(&report))?;
            }
            let mut out = open_output(&cli.out)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
                Format::Csv => write!(out, "{}", report_to_csv(&report))?,
            }
            if failure_rate_exceeded(&report, args.max_failure_share) {
                return Ok(3);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            // domain/validation/io problems exit 2
            ExitCode::from(2)
        }
    }
}
