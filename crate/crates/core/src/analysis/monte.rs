//! Ensemble-level experiments: conductance statistics from both engines,
//! the variance of the conductance against its universal value, two-engine
//! law comparison, coupled-path ordering counts, and the Lyapunov growth
//! probe.

use super::ks::{ks_two_sample, TwoSampleReport};
use super::observables::{
    landauer_g, lyapunov_f, mean_variance, variance_std_error, EnsembleSummary,
};
use crate::ensemble::run_paths;
use crate::sde::{solve_pair_dmpk, solve_path};
use crate::state::in_open_domain;
use crate::transfer::{evolve_transfer, transmission_spectrum};
use crate::{Error, Result, SolverConfig, SymmetryClass, TransmissionState};

/// Conductance samples of one engine on a recording grid, with the strict
/// ordering of every recorded positive-length state tallied alongside.
#[derive(Debug, Clone)]
pub struct ConductanceEnsemble {
    pub grid: Vec<f64>,
    /// `g[i]` holds the per-path conductances at `grid[i]`.
    pub g: Vec<Vec<f64>>,
    /// Recorded states at `s > 0` that were not strictly ordered inside `(0,1)`.
    pub ordering_violations: u64,
    /// Smallest local margin seen over all paths (active-chart coordinates).
    pub min_gap: f64,
    pub paths: u64,
    pub master_seed: u64,
}

fn tally<I: IntoIterator<Item = (f64, Vec<f64>)>>(
    per_path: Vec<I>,
    grid: &[f64],
    paths: u64,
    master_seed: u64,
    min_gap: f64,
) -> ConductanceEnsemble {
    let mut g = vec![Vec::with_capacity(paths as usize); grid.len()];
    let mut violations = 0u64;
    for path in per_path {
        for (i, (s, state)) in path.into_iter().enumerate() {
            if s > 0.0 && !in_open_domain(&state, 0.0) {
                violations += 1;
            }
            g[i].push(landauer_g(&state));
        }
    }
    ConductanceEnsemble {
        grid: grid.to_vec(),
        g,
        ordering_violations: violations,
        min_gap,
        paths,
        master_seed,
    }
}

/// Runs `paths` eigenvalue-diffusion paths from `t0` and collects the
/// conductance at every grid time.
pub fn dmpk_conductance_ensemble(
    t0: &TransmissionState,
    class: SymmetryClass,
    grid: &[f64],
    paths: u64,
    config: &SolverConfig,
    master_seed: u64,
) -> Result<ConductanceEnsemble> {
    if grid.is_empty() || paths == 0 {
        return Err(Error::Domain("need a nonempty grid and at least one path".into()));
    }
    let s_end = grid.iter().copied().fold(0.0, f64::max);
    let cfg = SolverConfig { record_grid: grid.to_vec(), ..config.clone() };
    let records = run_paths(master_seed, paths, |_, stream| {
        solve_path(t0, s_end, class, &cfg, stream)
    })?;
    let min_gap = records.iter().map(|r| r.min_gap_seen).fold(f64::INFINITY, f64::min);
    let rows: Vec<Vec<(f64, Vec<f64>)>> = records
        .into_iter()
        .map(|r| {
            r.grid()
                .iter()
                .copied()
                .zip(r.states().iter().cloned())
                .collect()
        })
        .collect();
    let grid_sorted = {
        let mut g: Vec<f64> = grid.to_vec();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    };
    Ok(tally(rows, &grid_sorted, paths, master_seed, min_gap))
}

/// Runs `paths` transfer-matrix paths and collects the conductance of the
/// extracted spectrum at every grid time.
pub fn matrix_conductance_ensemble(
    class: SymmetryClass,
    grid: &[f64],
    paths: u64,
    config: &SolverConfig,
    master_seed: u64,
) -> Result<ConductanceEnsemble> {
    if grid.is_empty() || paths == 0 {
        return Err(Error::Domain("need a nonempty grid and at least one path".into()));
    }
    let s_end = grid.iter().copied().fold(0.0, f64::max);
    let cfg = SolverConfig { record_grid: grid.to_vec(), ..config.clone() };
    let rows = run_paths(master_seed, paths, |_, stream| {
        let path = evolve_transfer(s_end, class, &cfg, stream)?;
        path.iter()
            .map(|tm| Ok((tm.s(), transmission_spectrum(tm)?.values().to_vec())))
            .collect::<Result<Vec<_>>>()
    })?;
    let grid_sorted = {
        let mut g: Vec<f64> = grid.to_vec();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    };
    Ok(tally(rows, &grid_sorted, paths, master_seed, f64::INFINITY))
}

/// Monte-Carlo estimate of `Var(g)` at one wire length, with the standard
/// error of the variance from the fourth moment, against the universal
/// target `2/(15β)`.
#[derive(Debug, Clone, Copy)]
pub struct UcfReport {
    pub var_g: f64,
    pub stderr_var_g: f64,
    pub mean_g: f64,
    pub target: f64,
    pub relative_error: f64,
    pub paths: u64,
    /// Recorded positive-length states that broke strict ordering.
    pub ordering_violations: u64,
}

/// Estimates the conductance variance at `s_eval` from the degenerate start.
pub fn ucf_variance(
    class: SymmetryClass,
    s_eval: f64,
    paths: u64,
    config: &SolverConfig,
    master_seed: u64,
) -> Result<UcfReport> {
    if paths < 2 {
        return Err(Error::Domain("variance needs at least two paths".into()));
    }
    let t0 = TransmissionState::degenerate(class.channels());
    let ens = dmpk_conductance_ensemble(&t0, class, &[s_eval], paths, config, master_seed)?;
    let samples = &ens.g[0];
    let (mean_g, var_g) = mean_variance(samples);
    let stderr_var_g = variance_std_error(samples);
    let target = 2.0 / (15.0 * class.beta_f());
    Ok(UcfReport {
        var_g,
        stderr_var_g,
        mean_g,
        target,
        relative_error: (var_g - target) / target,
        paths,
        ordering_violations: ens.ordering_violations,
    })
}

/// One wire length of the two-engine law comparison.
#[derive(Debug, Clone, Copy)]
pub struct LawComparison {
    pub s: f64,
    pub report: TwoSampleReport,
}

/// Draws conductance samples from the matrix engine and from the eigenvalue
/// engine (both from the degenerate start) and compares their laws per wire
/// length with a two-sample KS test at significance 0.01. Requires at least
/// 1000 paths per engine.
pub fn law_equality_test(
    class: SymmetryClass,
    s_eval_list: &[f64],
    paths: u64,
    config: &SolverConfig,
    master_seed: u64,
) -> Result<Vec<LawComparison>> {
    if paths < 1000 {
        return Err(Error::Domain(format!(
            "law comparison needs at least 1000 paths per engine, got {paths}"
        )));
    }
    if s_eval_list.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Domain("evaluation lengths must be positive".into()));
    }
    let t0 = TransmissionState::degenerate(class.channels());
    let dmpk = dmpk_conductance_ensemble(&t0, class, s_eval_list, paths, config, master_seed)?;
    let matrix_seed = master_seed ^ 0xd1b5_4a32_d192_ed03;
    let matrix = matrix_conductance_ensemble(class, s_eval_list, paths, config, matrix_seed)?;
    dmpk.grid
        .iter()
        .zip(dmpk.g.iter().zip(&matrix.g))
        .map(|(&s, (gd, gm))| {
            Ok(LawComparison { s, report: ks_two_sample(gm, gd, 0.01)? })
        })
        .collect()
}

/// Coupled-pair ordering check over an ensemble.
#[derive(Debug, Clone, Copy)]
pub struct OrderingReport {
    /// Grid points at which some component of the upper path fell to or
    /// below the lower path.
    pub violations: u64,
    /// Grid points compared in total.
    pub comparisons: u64,
}

/// Integrates `paths` coupled pairs from the componentwise-ordered starts
/// against identical noise and counts every grid time at which the ordering
/// fails.
pub fn ordering_test(
    t0_low: &TransmissionState,
    t0_high: &TransmissionState,
    class: SymmetryClass,
    s_end: f64,
    paths: u64,
    config: &SolverConfig,
    master_seed: u64,
) -> Result<OrderingReport> {
    let counts = run_paths(master_seed, paths, |_, stream| {
        let (low, high) = solve_pair_dmpk(t0_low, t0_high, s_end, class, config, stream)?;
        let mut violations = 0u64;
        let mut comparisons = 0u64;
        for i in 0..low.len() {
            comparisons += 1;
            let bad = low.states()[i]
                .iter()
                .zip(&high.states()[i])
                .any(|(l, h)| l >= h);
            if bad {
                violations += 1;
            }
        }
        Ok((violations, comparisons))
    })?;
    let (violations, comparisons) = counts
        .iter()
        .fold((0, 0), |(v, c), (dv, dc)| (v + dv, c + dc));
    Ok(OrderingReport { violations, comparisons })
}

/// Mean of the Lyapunov functional along the flow, with a linear fit.
#[derive(Debug, Clone)]
pub struct GrowthProbe {
    pub summary: EnsembleSummary,
    pub f0: f64,
    pub fit_intercept: f64,
    pub fit_slope: f64,
    /// Set when the fitted intercept strays more than 10% from `f(T(0))`,
    /// i.e. the observed growth is not a linear envelope from the start.
    pub flagged: bool,
}

/// Tracks `E f(T(s))` on the configured grid from an interior start.
/// Diagnostic: the growth is expected to fit a linear envelope.
pub fn lyapunov_growth_probe(
    t0: &TransmissionState,
    class: SymmetryClass,
    s_end: f64,
    paths: u64,
    config: &SolverConfig,
    master_seed: u64,
) -> Result<GrowthProbe> {
    if !t0.in_open_domain(0.0) {
        return Err(Error::Domain("growth probe needs an interior start".into()));
    }
    let mut grid: Vec<f64> = config
        .record_grid
        .iter()
        .copied()
        .filter(|&s| s >= 0.0 && s <= s_end)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        grid.push(s_end);
    }
    let cfg = SolverConfig { record_grid: grid.clone(), ..config.clone() };
    let records = run_paths(master_seed, paths.max(2), |_, stream| {
        solve_path(t0, s_end, class, &cfg, stream)
    })?;
    let mut samples = vec![Vec::with_capacity(records.len()); grid.len()];
    for rec in &records {
        for (i, state) in rec.states().iter().enumerate() {
            samples[i].push(lyapunov_f(state));
        }
    }
    let summary = EnsembleSummary::from_samples("lyapunov_f", &grid, &samples, master_seed)?;
    let f0 = lyapunov_f(t0.values());
    let (fit_intercept, fit_slope) = linear_fit(&grid, &summary.mean);
    let flagged = (fit_intercept - f0).abs() > 0.1 * f0.abs().max(1.0);
    Ok(GrowthProbe { summary, f0, fit_intercept, fit_slope, flagged })
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return (y.first().copied().unwrap_or(0.0), 0.0);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}
