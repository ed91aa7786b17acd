//! Drift and diffusion coefficients of the transmission-eigenvalue SDE, in
//! the `T` and `λ` charts, plus their cutoff-regularized versions.

use crate::{Error, Result, SymmetryClass, TransmissionState};

/// Writes drift and diffusion at `t` without domain checks; the pair loop
/// reuses each repulsion quotient with opposite signs.
pub(crate) fn dmpk_drift_diffusion_into(
    t: &[f64],
    class: SymmetryClass,
    v: &mut [f64],
    d: &mut [f64],
) {
    let n = t.len();
    let gamma = class.gamma();
    let half_beta = 0.5 * class.beta_f();
    v[..n].fill(0.0);
    for k in 0..n {
        let tk = t[k];
        for j in (k + 1)..n {
            let tj = t[j];
            let r = (tk + tj - 2.0 * tk * tj) / (tk - tj);
            v[k] += r;
            v[j] -= r;
        }
    }
    for k in 0..n {
        let tk = t[k];
        let pref = 2.0 * tk / gamma;
        v[k] = -tk + pref * (1.0 - tk + half_beta * v[k]);
        d[k] = (4.0 * tk * tk * (1.0 - tk) / gamma).sqrt();
    }
}

fn check_distinct(t: &[f64]) -> Result<()> {
    for k in 0..t.len() {
        for j in (k + 1)..t.len() {
            if t[k] == t[j] {
                return Err(Error::Singular(format!(
                    "coordinates {} and {} coincide at {}",
                    k + 1,
                    j + 1,
                    t[k]
                )));
            }
        }
    }
    Ok(())
}

/// Drift `v_k = −T_k + (2T_k/γ)(1 − T_k + (β/2) Σ_{j≠k} (T_k+T_j−2T_kT_j)/(T_k−T_j))`.
pub fn dmpk_drift(t: &[f64], class: SymmetryClass) -> Result<Vec<f64>> {
    check_distinct(t)?;
    let mut v = vec![0.0; t.len()];
    let mut d = vec![0.0; t.len()];
    dmpk_drift_diffusion_into(t, class, &mut v, &mut d);
    Ok(v)
}

/// Diffusion `D_k = √(4 T_k² (1−T_k) / γ)`.
pub fn dmpk_diffusion(t: &[f64], class: SymmetryClass) -> Result<Vec<f64>> {
    for (k, &x) in t.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("T_{} = {x} outside [0, 1]", k + 1)));
        }
    }
    let gamma = class.gamma();
    Ok(t.iter().map(|&x| (4.0 * x * x * (1.0 - x) / gamma).sqrt()).collect())
}

pub(crate) fn lambda_coefficients_into(
    lambda: &[f64],
    class: SymmetryClass,
    v: &mut [f64],
    d: &mut [f64],
) {
    let n = lambda.len();
    let gamma = class.gamma();
    let beta_over_gamma = class.beta_f() / gamma;
    v[..n].fill(0.0);
    for k in 0..n {
        let lk = lambda[k];
        for j in (k + 1)..n {
            let lj = lambda[j];
            let r = (2.0 * lk * lj - lk - lj) / (lk - lj);
            v[k] += r;
            v[j] -= r;
        }
    }
    for k in 0..n {
        let lk = lambda[k];
        v[k] = 2.0 * lk - 1.0 + beta_over_gamma * v[k];
        d[k] = (4.0 * lk * (lk - 1.0) / gamma).sqrt();
    }
}

/// Coefficients of the reciprocal-coordinate SDE
/// `dλ_k = (2λ_k − 1 + (β/γ) Σ_{l≠k} (2λ_kλ_l − λ_k − λ_l)/(λ_k − λ_l)) ds − √(4λ_k(λ_k−1)/γ) dB_k`;
/// the returned diffusion is the nonnegative amplitude, the sign belongs to
/// the chart convention.
pub fn lambda_coefficients(lambda: &[f64], class: SymmetryClass) -> Result<(Vec<f64>, Vec<f64>)> {
    for (k, &x) in lambda.iter().enumerate() {
        if !(x >= 1.0) {
            return Err(Error::Domain(format!("lambda_{} = {x} below 1", k + 1)));
        }
    }
    check_distinct(lambda)?;
    let mut v = vec![0.0; lambda.len()];
    let mut d = vec![0.0; lambda.len()];
    lambda_coefficients_into(lambda, class, &mut v, &mut d);
    Ok((v, d))
}

/// Cutoff scale for the regularized system: the cutoff equals one whenever
/// the state keeps distance `(√2 R)⁻¹` from the boundary of the ordered set.
#[derive(Debug, Clone, Copy)]
pub struct RegularizationConfig {
    r: f64,
}

impl RegularizationConfig {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 1.0) {
            return Err(Error::Domain(format!("cutoff scale must exceed 1, got {r}")));
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// C² quintic ramp: 0 below 0, 1 above 1.
    fn ramp(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
        }
    }

    /// Smooth cutoff: product of ramps of the boundary distances (scaled by
    /// `√2 R`) and of the consecutive gaps (scaled by `R`). Exactly 1 on the
    /// far-from-boundary region, exactly 0 outside the open ordered set.
    pub fn chi(&self, t: &[f64]) -> f64 {
        let sqrt2_r = core::f64::consts::SQRT_2 * self.r;
        let mut chi = match (t.first(), t.last()) {
            (Some(&first), Some(&last)) => {
                Self::ramp(sqrt2_r * first) * Self::ramp(sqrt2_r * (1.0 - last))
            }
            _ => return 0.0,
        };
        for w in t.windows(2) {
            if chi == 0.0 {
                return 0.0;
            }
            chi *= Self::ramp(self.r * (w[1] - w[0]));
        }
        chi
    }
}

/// Drift with the singular repulsion switched off smoothly near the
/// boundary: `χ_R(T) · v(T)`, identically zero outside the cutoff support,
/// defined on all of `[0, 1]^N`.
pub fn regularized_drift(t: &[f64], class: SymmetryClass, reg: RegularizationConfig) -> Vec<f64> {
    let chi = reg.chi(t);
    if chi == 0.0 {
        return vec![0.0; t.len()];
    }
    let mut v = vec![0.0; t.len()];
    let mut d = vec![0.0; t.len()];
    dmpk_drift_diffusion_into(t, class, &mut v, &mut d);
    if chi != 1.0 {
        for x in &mut v {
            *x *= chi;
        }
    }
    v
}

/// Companion cutoff of the diffusion, `χ_R(T) · D(T)`.
pub fn regularized_diffusion(
    t: &[f64],
    class: SymmetryClass,
    reg: RegularizationConfig,
) -> Vec<f64> {
    let chi = reg.chi(t);
    if chi == 0.0 {
        return vec![0.0; t.len()];
    }
    let gamma = class.gamma();
    t.iter()
        .map(|&x| chi * (4.0 * x * x * (1.0 - x) / gamma).sqrt())
        .collect()
}

/// The strictly ordered start `T_k = 1 − (N+1−k)/n` approximating the
/// degenerate all-ones initial condition from below; requires `n ≥ N+1`.
pub fn degenerate_start(class: SymmetryClass, n: usize) -> Result<TransmissionState> {
    let channels = class.channels();
    if n < channels + 1 {
        return Err(Error::Domain(format!(
            "ladder index n = {n} must be at least N+1 = {}",
            channels + 1
        )));
    }
    let nf = n as f64;
    let t = (1..=channels)
        .map(|k| 1.0 - (channels + 1 - k) as f64 / nf)
        .collect();
    TransmissionState::new(0.0, t)
}
