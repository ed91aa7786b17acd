//! `dmpk ucf` — Monte-Carlo Var(g) at one wire length against the universal
//! value 2/(15β), reported as JSON.

use std::path::PathBuf;

use clap::Args as ClapArgs;

use dmpk_core::analysis::ucf_variance;

use super::CommonArgs;
use crate::manifest::RunManifest;
use crate::AppError;

#[derive(Debug, ClapArgs)]
pub struct Args {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Wire length at which the variance is evaluated.
    #[arg(long)]
    pub length: f64,
    /// Optional JSON output path (stdout otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Relative tolerance of the pass gate.
    #[arg(long, default_value_t = 0.2)]
    pub tolerance: f64,
}

pub fn run(args: &Args) -> Result<bool, AppError> {
    if args.common.paths < 2 {
        return Err(AppError::Usage("--paths must be at least 2 for a variance".into()));
    }
    if !(args.length >= 0.0) || !args.length.is_finite() {
        return Err(AppError::Usage("--length must be finite and >= 0".into()));
    }
    let class = args.common.class()?;
    let cfg = args.common.solver_config();
    let report = ucf_variance(class, args.length, args.common.paths, &cfg, args.common.seed)?;
    let pass = report.relative_error.abs() <= args.tolerance;
    let body = serde_json::json!({
        "var_g": report.var_g,
        "stderr_var_g": report.stderr_var_g,
        "mean_g": report.mean_g,
        "target": report.target,
        "relative_error": report.relative_error,
        "tolerance": args.tolerance,
        "pass": pass,
        "paths": report.paths,
        "ordering_violations": report.ordering_violations,
    });
    super::write_json_output(&body, args.out.as_deref())?;
    if let Some(out) = &args.out {
        let config = args.common.config_json(
            &cfg,
            serde_json::json!({ "length": args.length, "tolerance": args.tolerance }),
        );
        RunManifest::new("ucf", args.common.seed, config).write_alongside(out)?;
    }
    Ok(pass && report.ordering_violations == 0)
}
