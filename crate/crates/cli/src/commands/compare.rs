//! `dmpk compare` — two-sample KS comparison of the conductance laws drawn
//! from the matrix engine and from the eigenvalue engine.

use std::path::PathBuf;

use clap::Args as ClapArgs;

use dmpk_core::analysis::{dmpk_conductance_ensemble, ks_two_sample, law_equality_test};
use dmpk_core::TransmissionState;

use super::{parse_grid, CommonArgs};
use crate::manifest::RunManifest;
use crate::AppError;

#[derive(Debug, ClapArgs)]
pub struct Args {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated wire lengths at which the laws are compared.
    #[arg(long)]
    pub times: String,
    /// Compare the eigenvalue engine against itself (identical seeds);
    /// the distance must come out exactly zero.
    #[arg(long, default_value_t = false)]
    pub self_check: bool,
    /// Optional JSON output path (stdout otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &Args) -> Result<bool, AppError> {
    if args.common.paths < 1000 {
        return Err(AppError::Usage(format!(
            "--paths must be at least 1000 per engine, got {}",
            args.common.paths
        )));
    }
    let times = parse_grid(&args.times)?;
    if times.iter().any(|&s| s <= 0.0) {
        return Err(AppError::Usage("comparison times must be positive".into()));
    }
    let class = args.common.class()?;
    let cfg = args.common.solver_config();

    let comparisons: Vec<(f64, dmpk_core::analysis::TwoSampleReport)> = if args.self_check {
        let t0 = TransmissionState::degenerate(class.channels());
        let a = dmpk_conductance_ensemble(&t0, class, &times, args.common.paths, &cfg, args.common.seed)?;
        let b = dmpk_conductance_ensemble(&t0, class, &times, args.common.paths, &cfg, args.common.seed)?;
        a.grid
            .iter()
            .zip(a.g.iter().zip(&b.g))
            .map(|(&s, (ga, gb))| Ok((s, ks_two_sample(ga, gb, 0.01)?)))
            .collect::<Result<_, dmpk_core::Error>>()?
    } else {
        law_equality_test(class, &times, args.common.paths, &cfg, args.common.seed)?
            .into_iter()
            .map(|c| (c.s, c.report))
            .collect()
    };

    let mut all_pass = true;
    let rows: Vec<serde_json::Value> = comparisons
        .iter()
        .map(|(s, r)| {
            let pass = r.distance < r.threshold;
            all_pass &= pass;
            serde_json::json!({
                "s": s,
                "ks_distance": r.distance,
                "p_value": r.p_value,
                "threshold": r.threshold,
                "pass": pass,
            })
        })
        .collect();
    let body = serde_json::Value::Array(rows);
    super::write_json_output(&body, args.out.as_deref())?;
    if let Some(out) = &args.out {
        let config = args.common.config_json(
            &cfg,
            serde_json::json!({ "times": times, "self_check": args.self_check }),
        );
        RunManifest::new("compare", args.common.seed, config).write_alongside(out)?;
    }
    Ok(all_pass)
}
