//! Domain types: symmetry class, transmission/λ states, solver configuration.

use crate::{Error, Result};

/// Default tolerance for "strictly inside the ordered open set" checks:
/// below solver noise, above rounding.
pub const DEFAULT_GAP_TOL: f64 = 1e-12;

/// Symmetry class of the wire: β = 1 (time-reversal symmetric) or β = 2
/// (broken time reversal), with N propagating channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryClass {
    beta: u8,
    channels: usize,
}

impl SymmetryClass {
    pub fn new(beta: u8, channels: usize) -> Result<Self> {
        if beta != 1 && beta != 2 {
            return Err(Error::Domain(format!("beta must be 1 or 2, got {beta}")));
        }
        if channels == 0 {
            return Err(Error::Domain("channel count must be >= 1".into()));
        }
        Ok(Self { beta, channels })
    }

    pub fn beta(&self) -> u8 {
        self.beta
    }

    pub fn beta_f(&self) -> f64 {
        f64::from(self.beta)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// The common denominator γ = βN + 2 − β = β(N−1) + 2 of the drift,
    /// diffusion, and noise normalizations. Always positive.
    pub fn gamma(&self) -> f64 {
        let (b, n) = (f64::from(self.beta), self.channels as f64);
        b * (n - 1.0) + 2.0
    }
}

/// Ordered transmission eigenvalues `T_1 <= ... <= T_N` in `[0, 1]` at wire
/// length `s`. Strict membership in the open ordered set is a predicate
/// ([`TransmissionState::in_open_domain`]), not a construction invariant:
/// the physical initial condition is the fully degenerate `T_k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionState {
    s: f64,
    t: Vec<f64>,
}

impl TransmissionState {
    /// Builds a state, requiring `0 <= T_1 <= ... <= T_N <= 1` and `s >= 0`.
    pub fn new(s: f64, t: Vec<f64>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::Domain("state must have at least one channel".into()));
        }
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("wire length must be >= 0, got {s}")));
        }
        for (k, &v) in t.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("T_{} = {v} outside [0, 1]", k + 1)));
            }
        }
        if t.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("transmission values must be sorted ascending".into()));
        }
        Ok(Self { s, t })
    }

    /// The zero-length initial condition `T_k = 1` for all channels.
    pub fn degenerate(channels: usize) -> Self {
        Self { s: 0.0, t: vec![1.0; channels] }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn values(&self) -> &[f64] {
        &self.t
    }

    pub fn channels(&self) -> usize {
        self.t.len()
    }

    /// True iff the state lies strictly inside the ordered open set with
    /// margin `gap_tol`: `T_1 > tol`, `1 − T_N > tol`, and every consecutive
    /// gap `> tol`.
    pub fn in_open_domain(&self, gap_tol: f64) -> bool {
        in_open_domain(&self.t, gap_tol)
    }

    /// Maps to the λ picture, `λ_k = 1/T_k` elementwise (stored order kept,
    /// so ascending `T` becomes descending `λ`).
    pub fn to_lambda(&self) -> Result<LambdaState> {
        let mut lambda = Vec::with_capacity(self.t.len());
        for (k, &v) in self.t.iter().enumerate() {
            if v <= 0.0 {
                return Err(Error::Domain(format!(
                    "T_{} = {v} has no reciprocal in the λ picture",
                    k + 1
                )));
            }
            lambda.push(1.0 / v);
        }
        Ok(LambdaState { s: self.s, lambda })
    }
}

/// Ordering predicate on a raw coordinate vector; see
/// [`TransmissionState::in_open_domain`].
pub fn in_open_domain(t: &[f64], gap_tol: f64) -> bool {
    match (t.first(), t.last()) {
        (Some(&first), Some(&last)) => {
            first > gap_tol
                && 1.0 - last > gap_tol
                && t.windows(2).all(|w| w[1] - w[0] > gap_tol)
        }
        _ => false,
    }
}

/// Reciprocal transmission eigenvalues `λ_k = 1/T_k >= 1`, stored in the
/// descending order that mirrors the ascending `T` order.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaState {
    s: f64,
    lambda: Vec<f64>,
}

impl LambdaState {
    pub fn new(s: f64, lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::Domain("state must have at least one channel".into()));
        }
        for (k, &v) in lambda.iter().enumerate() {
            if !(v >= 1.0) {
                return Err(Error::Domain(format!("lambda_{} = {v} below 1", k + 1)));
            }
        }
        if lambda.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Domain("lambda values must be sorted descending".into()));
        }
        Ok(Self { s, lambda })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn values(&self) -> &[f64] {
        &self.lambda
    }

    /// Inverse of [`TransmissionState::to_lambda`].
    pub fn to_transmission(&self) -> TransmissionState {
        TransmissionState {
            s: self.s,
            t: self.lambda.iter().map(|&l| 1.0 / l).collect(),
        }
    }
}

/// Coordinate chart the path integrator works in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Chart {
    #[default]
    Transmission,
    Lambda,
}

/// Knobs of the adaptive path integrators.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Step-size ceiling (matrix engine: the fixed step).
    pub dt_base: f64,
    /// Dimensionless guard factor: a proposal moves each particle at most
    /// `eta_gap` of its local gap, in drift and in one diffusion deviation.
    pub eta_gap: f64,
    /// Halving budget before a step is declared failed.
    pub max_halvings: u32,
    /// Wire lengths at which states are recorded.
    pub record_grid: Vec<f64>,
    /// Ladder index `n` of the near-degenerate start `T_k = 1 − (N+1−k)/n`;
    /// `None` resolves to `max(N+1, 100·N)`.
    pub degenerate_n: Option<usize>,
    /// Coordinate chart for the eigenvalue integrator.
    pub coordinate_chart: Chart,
    /// Matrix engine: reproject onto the group every this many steps.
    pub reproject_every: usize,
    /// Master seed for ensemble runs.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_base: 1e-2,
            eta_gap: 0.1,
            max_halvings: 40,
            record_grid: Vec::new(),
            degenerate_n: None,
            coordinate_chart: Chart::Transmission,
            reproject_every: 1,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_base > 0.0) {
            return Err(Error::Domain(format!("dt_base must be > 0, got {}", self.dt_base)));
        }
        if !(self.eta_gap > 0.0 && self.eta_gap < 1.0) {
            return Err(Error::Domain(format!(
                "eta_gap must lie in (0, 1), got {}",
                self.eta_gap
            )));
        }
        if self.max_halvings == 0 {
            return Err(Error::Domain("max_halvings must be >= 1".into()));
        }
        if self.reproject_every == 0 {
            return Err(Error::Domain("reproject_every must be >= 1".into()));
        }
        Ok(())
    }

    /// The degenerate-start ladder index actually used for `N` channels.
    pub fn resolved_degenerate_n(&self, channels: usize) -> usize {
        self.degenerate_n.unwrap_or_else(|| (channels + 1).max(100 * channels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn class_rejects_bad_parameters() {
        assert!(SymmetryClass::new(3, 4).is_err());
        assert!(SymmetryClass::new(0, 4).is_err());
        assert!(SymmetryClass::new(2, 0).is_err());
    }

    #[test]
    fn gamma_is_positive_and_matches_both_forms() {
        for beta in [1u8, 2] {
            for n in [1usize, 2, 5, 32] {
                let c = SymmetryClass::new(beta, n).unwrap();
                let (b, nf) = (f64::from(beta), n as f64);
                assert!(c.gamma() > 0.0);
                assert_relative_eq!(c.gamma(), b * nf + 2.0 - b);
                assert_relative_eq!(c.gamma(), b * (nf - 1.0) + 2.0);
            }
        }
    }

    #[test]
    fn to_lambda_identity_case() {
        let st = TransmissionState::new(0.0, vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(st.to_lambda().unwrap().values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn to_lambda_reciprocal() {
        let st = TransmissionState::new(0.0, vec![0.5]).unwrap();
        assert_eq!(st.to_lambda().unwrap().values(), &[2.0]);
        let st = TransmissionState::new(0.0, vec![0.25, 0.5]).unwrap();
        assert_eq!(st.to_lambda().unwrap().values(), &[4.0, 2.0]);
    }

    #[test]
    fn to_lambda_rejects_zero() {
        let st = TransmissionState::new(0.0, vec![0.0, 0.5]).unwrap();
        assert!(st.to_lambda().is_err());
    }

    #[test]
    fn open_domain_examples() {
        let st = TransmissionState::new(0.0, vec![0.2, 0.5, 0.8]).unwrap();
        assert!(st.in_open_domain(0.01));
        let st = TransmissionState::new(0.0, vec![0.5, 0.5]).unwrap();
        assert!(!st.in_open_domain(0.0));
        let st = TransmissionState::new(0.0, vec![1.0]).unwrap();
        assert!(!st.in_open_domain(0.0));
    }

    #[test]
    fn degenerate_start_state() {
        let st = TransmissionState::degenerate(3);
        assert_eq!(st.s(), 0.0);
        assert_eq!(st.values(), &[1.0, 1.0, 1.0]);
        assert!(!st.in_open_domain(0.0));
    }

    #[test]
    fn config_default_resolves_degenerate_n() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.resolved_degenerate_n(4), 400);
        assert_eq!(cfg.resolved_degenerate_n(1), 100);
        let cfg = SolverConfig { degenerate_n: Some(7), ..SolverConfig::default() };
        assert_eq!(cfg.resolved_degenerate_n(4), 7);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { dt_base: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { eta_gap: 1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { max_halvings: 0, ..Default::default() }.validate().is_err());
    }

    fn interior_state() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(1e-6..1.0f64, 1..9).prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            v
        })
    }

    proptest! {
        #[test]
        fn lambda_round_trip(t in interior_state()) {
            let st = TransmissionState::new(0.0, t.clone()).unwrap();
            let back = st.to_lambda().unwrap().to_transmission();
            for (a, b) in t.iter().zip(back.values()) {
                prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs());
            }
        }

        #[test]
        fn open_domain_monotone_in_tolerance(t in interior_state(), tol in 0.0..0.2f64, shrink in 0.0..1.0f64) {
            let at_tol = in_open_domain(&t, tol);
            let smaller = tol * shrink;
            if at_tol {
                prop_assert!(in_open_domain(&t, smaller));
            }
        }
    }
}
