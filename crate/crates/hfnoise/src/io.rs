//! CSV serialization of the core value types.
//!
//! Numbers are written with 17 significant digits so round-tripping
//! through text preserves the doubles exactly.

use std::io::{BufRead, Write};

use crate::density::DensityEstimate;
use crate::ecf::CharFnEstimate;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::sim::TickSeries;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_tick_csv<W: Write>(series: &TickSeries, mut w: W) -> Result<()> {
    let mut run = || -> std::io::Result<()> {
        writeln!(w, "time,value")?;
        for (t, y) in series.grid().points().iter().zip(series.values()) {
            writeln!(w, "{},{}", fmt(*t), fmt(*y))?;
        }
        Ok(())
    };
    run().map_err(|e| Error::Io(e.to_string()))
}

pub fn read_tick_csv<R: BufRead>(r: R) -> Result<TickSeries> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Io(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.starts_with("time") {
            continue;
        }
        let mut parts = line.split(',');
        let (t, v) = match (parts.next(), parts.next()) {
            (Some(t), Some(v)) => (t, v),
            _ => {
                return Err(Error::Io(format!(
                    "line {}: expected `time,value`, got `{line}`",
                    lineno + 1
                )))
            }
        };
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::Io(format!("line {}: bad time `{t}`", lineno + 1)))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Io(format!("line {}: bad value `{v}`", lineno + 1)))?;
        times.push(t);
        values.push(v);
    }
    TickSeries::new(TimeGrid::new(times)?, values)
}

pub fn write_charfn_csv<W: Write>(est: &CharFnEstimate, mut w: W) -> Result<()> {
    let mut run = || -> std::io::Result<()> {
        writeln!(w, "s,value")?;
        for (s, v) in est.s_grid.iter().zip(&est.values) {
            writeln!(w, "{},{}", fmt(*s), fmt(*v))?;
        }
        Ok(())
    };
    run().map_err(|e| Error::Io(e.to_string()))
}

pub fn write_density_csv<W: Write>(est: &DensityEstimate, mut w: W) -> Result<()> {
    let mut run = || -> std::io::Result<()> {
        writeln!(w, "x,fhat")?;
        for (x, v) in est.x_grid.iter().zip(&est.values) {
            writeln!(w, "{},{}", fmt(*x), fmt(*v))?;
        }
        Ok(())
    };
    run().map_err(|e| Error::Io(e.to_string()))
}
