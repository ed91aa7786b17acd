//! `dmpk simulate` — per-path transmission values on a recording grid,
//! written as CSV with header `path_id,s,T_1,...,T_N`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args as ClapArgs, ValueEnum};

use dmpk_core::ensemble::run_paths;
use dmpk_core::sde::{degenerate_start, dmpk_as_coulomb, solve_coulomb, solve_path};
use dmpk_core::transfer::{evolve_transfer, transmission_spectrum};
use dmpk_core::{Chart, TransmissionState};

use super::{fmt_f64, parse_grid, CommonArgs};
use crate::manifest::RunManifest;
use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Eigenvalue diffusion from the degenerate start.
    Sde,
    /// Transfer-matrix Brownian motion, spectrum extracted at the grid.
    Matrix,
    /// The generic Coulomb-repulsion engine on the eigenvalue coefficients.
    Coulomb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChartArg {
    T,
    Lambda,
}

#[derive(Debug, ClapArgs)]
pub struct Args {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Wire length to integrate to.
    #[arg(long)]
    pub length: f64,
    /// Comma-separated recording lengths (values above --length are dropped).
    #[arg(long)]
    pub grid: Option<String>,
    /// Output CSV path; the manifest lands next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Coordinate chart for the eigenvalue integrator.
    #[arg(long, value_enum, default_value = "t")]
    pub chart: ChartArg,
}

pub fn run(args: &Args) -> Result<bool, AppError> {
    if !(args.length >= 0.0) || !args.length.is_finite() {
        return Err(AppError::Usage(format!("--length must be finite and >= 0, got {}", args.length)));
    }
    if args.common.paths == 0 {
        return Err(AppError::Usage("--paths must be at least 1".into()));
    }
    let class = args.common.class()?;
    let grid = match &args.grid {
        Some(raw) => parse_grid(raw)?,
        None => vec![args.length],
    };
    let mut cfg = args.common.solver_config();
    cfg.record_grid = grid.clone();
    cfg.coordinate_chart = match args.chart {
        ChartArg::T => Chart::Transmission,
        ChartArg::Lambda => Chart::Lambda,
    };
    cfg.validate()?;

    let n = class.channels();
    let s_end = args.length;
    let rows: Vec<Vec<(f64, Vec<f64>)>> = match args.mode {
        Mode::Sde => {
            let t0 = TransmissionState::degenerate(n);
            run_paths(args.common.seed, args.common.paths, |_, stream| {
                let rec = solve_path(&t0, s_end, class, &cfg, stream)?;
                Ok(rec
                    .grid()
                    .iter()
                    .copied()
                    .zip(rec.states().iter().cloned())
                    .collect())
            })?
        }
        Mode::Coulomb => {
            let system = dmpk_as_coulomb(class);
            let x0 = degenerate_start(class, cfg.resolved_degenerate_n(n))?;
            run_paths(args.common.seed, args.common.paths, |_, stream| {
                let rec = solve_coulomb(&system, x0.values(), s_end, &cfg, stream)?;
                Ok(rec
                    .grid()
                    .iter()
                    .copied()
                    .zip(rec.states().iter().cloned())
                    .collect())
            })?
        }
        Mode::Matrix => run_paths(args.common.seed, args.common.paths, |_, stream| {
            let path = evolve_transfer(s_end, class, &cfg, stream)?;
            path.iter()
                .map(|tm| Ok((tm.s(), transmission_spectrum(tm)?.values().to_vec())))
                .collect()
        })?,
    };

    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(&args.out)?);
    write!(file, "path_id,s")?;
    for k in 1..=n {
        write!(file, ",T_{k}")?;
    }
    writeln!(file)?;
    for (path_id, path_rows) in rows.iter().enumerate() {
        for (s, state) in path_rows {
            write!(file, "{path_id},{}", fmt_f64(*s))?;
            for v in state {
                write!(file, ",{}", fmt_f64(*v))?;
            }
            writeln!(file)?;
        }
    }
    file.flush()?;

    let mode = match args.mode {
        Mode::Sde => "sde",
        Mode::Matrix => "matrix",
        Mode::Coulomb => "coulomb",
    };
    let config = args.common.config_json(
        &cfg,
        serde_json::json!({
            "mode": mode,
            "length": args.length,
            "grid": grid,
            "out": args.out.display().to_string(),
        }),
    );
    RunManifest::new("simulate", args.common.seed, config).write_alongside(&args.out)?;
    Ok(true)
}
