pub mod compare;
pub mod simulate;
pub mod ucf;
pub mod verify;

use clap::Args as ClapArgs;
use dmpk_core::{Chart, SolverConfig, SymmetryClass};

use crate::AppError;

/// Flags shared by every ensemble-running subcommand.
#[derive(Debug, Clone, ClapArgs)]
pub struct CommonArgs {
    /// Symmetry class: 1 (time-reversal symmetric) or 2 (broken).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub beta: u8,
    /// Number of propagating channels N.
    #[arg(long)]
    pub channels: usize,
    /// Number of Monte-Carlo paths.
    #[arg(long)]
    pub paths: u64,
    /// Master seed; path i draws from the stream (seed, i).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Step-size ceiling (matrix engine: the fixed step).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Adaptive guard factor in (0, 1).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Ladder index n of the near-degenerate start (default max(N+1, 100N)).
    #[arg(long = "degenerate-n")]
    pub degenerate_n: Option<usize>,
}

impl CommonArgs {
    pub fn class(&self) -> Result<SymmetryClass, AppError> {
        Ok(SymmetryClass::new(self.beta, self.channels)?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig {
            seed: self.seed,
            degenerate_n: self.degenerate_n,
            ..SolverConfig::default()
        };
        if let Some(dt) = self.dt {
            cfg.dt_base = dt;
        }
        if let Some(eta) = self.eta {
            cfg.eta_gap = eta;
        }
        cfg
    }

    pub fn config_json(&self, cfg: &SolverConfig, extra: serde_json::Value) -> serde_json::Value {
        let mut v = serde_json::json!({
            "beta": self.beta,
            "channels": self.channels,
            "paths": self.paths,
            "seed": self.seed,
            "dt_base": cfg.dt_base,
            "eta_gap": cfg.eta_gap,
            "max_halvings": cfg.max_halvings,
            "reproject_every": cfg.reproject_every,
            "degenerate_n": cfg.resolved_degenerate_n(self.channels),
            "chart": match cfg.coordinate_chart { Chart::Transmission => "T", Chart::Lambda => "lambda" },
        });
        if let serde_json::Value::Object(extra_map) = extra {
            let map = v.as_object_mut().expect("object");
            for (k, val) in extra_map {
                map.insert(k, val);
            }
        }
        v
    }
}

/// Parses a comma-separated list of wire lengths.
pub fn parse_grid(raw: &str) -> Result<Vec<f64>, AppError> {
    let mut out = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let v: f64 = part
            .parse()
            .map_err(|_| AppError::Usage(format!("invalid grid value '{part}'")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(AppError::Usage(format!("grid value {v} must be finite and >= 0")));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(AppError::Usage("grid must contain at least one value".into()));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// Round-trippable number formatting for outputs (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json_output(
    body: &serde_json::Value,
    out: Option<&std::path::Path>,
) -> Result<(), AppError> {
    let text = serde_json::to_string_pretty(body).expect("serializable");
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}
