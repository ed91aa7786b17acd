//! `dmpk verify` — scripted verification suites, one JSON row per check:
//! `{name, trials, failures, worst_residual}`.

use std::path::PathBuf;

use clap::{Args as ClapArgs, ValueEnum};

use dmpk_core::analysis::{
    ordering_test, proof_identity_sums, proof_identity_z, relative_residual, sample_domain_point,
};
use dmpk_core::noise::{assemble_l_increment, NoiseStream};
use dmpk_core::sde::degenerate_start;
use dmpk_core::transfer::{constraint_defect, evolve_transfer, small_s_nondegeneracy, transmission_spectrum};
use dmpk_core::{SolverConfig, SymmetryClass, TransmissionState};

use crate::manifest::RunManifest;
use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Repulsion identities and their bounds on random interior points.
    Identities,
    /// Coupled-path componentwise ordering conservation.
    Ordering,
    /// Second moments and exact symmetries of the block increments.
    Noise,
    /// Group-conservation defects along matrix paths.
    Constraints,
    /// Non-degeneracy of the matrix spectrum at small lengths.
    Smalls,
}

#[derive(Debug, ClapArgs)]
pub struct Args {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Samples / paths per check.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional JSON output path (stdout otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct CheckRow {
    name: String,
    trials: u64,
    failures: u64,
    worst_residual: f64,
}

pub fn run(args: &Args) -> Result<bool, AppError> {
    if args.trials == 0 {
        return Err(AppError::Usage("--trials must be at least 1".into()));
    }
    let rows = match args.suite {
        Suite::Identities => identities(args.trials, args.seed)?,
        Suite::Ordering => ordering(args.trials, args.seed)?,
        Suite::Noise => noise(args.trials, args.seed)?,
        Suite::Constraints => constraints(args.trials, args.seed)?,
        Suite::Smalls => smalls(args.trials, args.seed)?,
    };
    let failures: u64 = rows.iter().map(|r| r.failures).sum();
    let body = serde_json::Value::Array(
        rows.iter()
            .map(|r| {
                serde_json::json!({
                    "name": r.name,
                    "trials": r.trials,
                    "failures": r.failures,
                    "worst_residual": r.worst_residual,
                })
            })
            .collect(),
    );
    super::write_json_output(&body, args.out.as_deref())?;
    if let Some(out) = &args.out {
        let config = serde_json::json!({
            "suite": format!("{:?}", args.suite).to_lowercase(),
            "trials": args.trials,
            "seed": args.seed,
        });
        RunManifest::new("verify", args.seed, config).write_alongside(out)?;
    }
    Ok(failures == 0)
}

fn identities(trials: u64, seed: u64) -> Result<Vec<CheckRow>, AppError> {
    let mut rows = Vec::new();
    for n in 1..=8usize {
        let mut stream = NoiseStream::new(seed, n as u64);
        let mut failures = 0;
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let t = sample_domain_point(n, 1e-4, &mut stream);
            let z = proof_identity_z(&t)?;
            let s = proof_identity_sums(&t)?;
            let res = relative_residual(z.lhs, z.rhs)
                .max(relative_residual(s.pair_lhs, s.pair_rhs))
                .max(relative_residual(s.square_sum, s.square_rhs));
            worst = worst.max(res);
            let bounds_ok = z.lhs.abs() <= z.bound
                && s.pair_lhs.abs() <= s.pair_bound
                && s.square_sum >= s.square_lower - 1e-12
                && s.square_sum <= s.square_upper + 1e-12;
            if res > 1e-9 || !bounds_ok {
                failures += 1;
            }
        }
        rows.push(CheckRow {
            name: format!("identities_n{n}"),
            trials,
            failures,
            worst_residual: worst,
        });
    }
    Ok(rows)
}

fn ordering(trials: u64, seed: u64) -> Result<Vec<CheckRow>, AppError> {
    let mut rows = Vec::new();
    for beta in [1u8, 2] {
        let class = SymmetryClass::new(beta, 4)?;
        let low = degenerate_start(class, 8)?;
        let high = TransmissionState::new(
            0.0,
            low.values().iter().map(|t| t + 0.05).collect(),
        )?;
        let cfg = SolverConfig {
            record_grid: vec![0.5, 1.0, 1.5, 2.0],
            ..SolverConfig::default()
        };
        let report = ordering_test(&low, &high, class, 2.0, trials, &cfg, seed)?;
        rows.push(CheckRow {
            name: format!("ordering_beta{beta}"),
            trials,
            failures: report.violations,
            worst_residual: report.violations as f64 / report.comparisons.max(1) as f64,
        });
    }
    Ok(rows)
}

fn noise(trials: u64, seed: u64) -> Result<Vec<CheckRow>, AppError> {
    let n = 3usize;
    let mut rows = Vec::new();
    for beta in [1u8, 2] {
        let class = SymmetryClass::new(beta, n)?;
        let mut stream = NoiseStream::new(seed, u64::from(beta));
        // named second moments per unit length: (label, expected, extractor)
        type Extract = fn(&dmpk_core::noise::NoiseIncrement) -> f64;
        let nf = n as f64;
        let checks: Vec<(&str, f64, Extract)> = match beta {
            1 => vec![
                ("a_offdiag_re", 1.0 / (2.0 * nf), |l| l.da_plus[(0, 1)].re),
                ("a_diag_im", 1.0 / nf, |l| l.da_plus[(0, 0)].im),
                ("b_offdiag_re", 1.0 / (2.0 * (nf + 1.0)), |l| l.db[(0, 2)].re),
                ("b_offdiag_im", 1.0 / (2.0 * (nf + 1.0)), |l| l.db[(0, 2)].im),
                ("b_diag_re", 1.0 / (nf + 1.0), |l| l.db[(1, 1)].re),
                ("b_diag_im", 1.0 / (nf + 1.0), |l| l.db[(1, 1)].im),
            ],
            _ => vec![
                ("a_offdiag_re", 1.0 / (2.0 * nf), |l| l.da_plus[(0, 1)].re),
                ("a_diag_im", 1.0 / nf, |l| l.da_plus[(0, 0)].im),
                ("b_entry_re", 1.0 / (2.0 * nf), |l| l.db[(1, 0)].re),
                ("b_entry_im", 1.0 / (2.0 * nf), |l| l.db[(2, 2)].im),
            ],
        };
        let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(trials as usize); checks.len()];
        let mut sym_worst: f64 = 0.0;
        for _ in 0..trials {
            let l = assemble_l_increment(class, 1.0, &mut stream)?;
            for (i, (_, _, extract)) in checks.iter().enumerate() {
                samples[i].push(extract(&l));
            }
            let anti = (&l.da_plus + l.da_plus.adjoint()).norm();
            let coupling = match beta {
                1 => (&l.da_minus - l.da_plus.map(|z| z.conj())).norm()
                    + (&l.db - l.db.transpose()).norm(),
                _ => 0.0,
            };
            sym_worst = sym_worst.max(anti).max(coupling);
        }
        for (i, (label, expected, _)) in checks.iter().enumerate() {
            let (_, var) = dmpk_core::analysis::mean_variance(&samples[i]);
            let dev = (var - expected).abs();
            let three_se = 3.0 * expected * (2.0 / (trials as f64 - 1.0)).sqrt();
            rows.push(CheckRow {
                name: format!("moments_beta{beta}_{label}"),
                trials,
                failures: u64::from(dev >= three_se),
                worst_residual: dev / expected,
            });
        }
        rows.push(CheckRow {
            name: format!("symmetry_beta{beta}_exact"),
            trials,
            failures: u64::from(sym_worst != 0.0),
            worst_residual: sym_worst,
        });
    }
    Ok(rows)
}

fn constraints(trials: u64, seed: u64) -> Result<Vec<CheckRow>, AppError> {
    let steps_per_path = 2000u64;
    let paths = trials.div_ceil(steps_per_path).max(1);
    let mut rows = Vec::new();
    for beta in [1u8, 2] {
        let class = SymmetryClass::new(beta, 3)?;
        let cfg = SolverConfig {
            dt_base: 1e-3,
            record_grid: (1..=4).map(|i| 0.5 * f64::from(i)).collect(),
            ..SolverConfig::default()
        };
        let mut worst_cons: f64 = 0.0;
        let mut worst_tr: f64 = 0.0;
        let mut failures = 0u64;
        for i in 0..paths {
            let mut stream = NoiseStream::new(seed, i);
            let path = evolve_transfer(2.0, class, &cfg, &mut stream)?;
            for tm in &path {
                let (cons, tr) = constraint_defect(tm);
                worst_cons = worst_cons.max(cons);
                if cons > 1e-10 {
                    failures += 1;
                }
                if let Some(tr) = tr {
                    worst_tr = worst_tr.max(tr);
                    if tr > 1e-12 {
                        failures += 1;
                    }
                }
                let spectrum = transmission_spectrum(tm)?;
                if spectrum.values().iter().any(|t| !(0.0..=1.0).contains(t)) {
                    failures += 1;
                }
            }
        }
        rows.push(CheckRow {
            name: format!("constraints_beta{beta}"),
            trials: paths * steps_per_path,
            failures,
            worst_residual: worst_cons.max(worst_tr),
        });
    }
    Ok(rows)
}

fn smalls(trials: u64, seed: u64) -> Result<Vec<CheckRow>, AppError> {
    let class = SymmetryClass::new(2, 4)?;
    let cfg = SolverConfig { dt_base: 1e-5, ..SolverConfig::default() };
    let fraction = small_s_nondegeneracy(class, 0.01, trials, 1e-8, &cfg, seed)?;
    let failures = ((1.0 - fraction) * trials as f64).round() as u64;
    Ok(vec![CheckRow {
        name: "small_s_nondegeneracy".into(),
        trials,
        failures: if fraction >= 0.99 { 0 } else { failures },
        worst_residual: 1.0 - fraction,
    }])
}
