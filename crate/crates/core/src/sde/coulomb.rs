//! Generic interacting-particle systems with Coulomb-type pair repulsion:
//! `dx_k = D_k(x) dB_k + v_k(x) dt + Σ_{l≠k} c_kl(x)/(x_k − x_l) dt`.

use std::sync::Arc;

use crate::{Error, Result, SymmetryClass};

type FieldFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type PairFn = dyn Fn(&[f64], usize, usize) -> f64 + Send + Sync;

/// Coefficient bundle `(v, c_kl, D)` of a Coulomb-repulsion system, with an
/// optional confining box for systems whose coefficients live on an interval.
#[derive(Clone)]
pub struct CoulombSystem {
    dimension: usize,
    bounds: Option<(f64, f64)>,
    wall_margins: (f64, f64),
    smooth_drift: Arc<FieldFn>,
    pair: Arc<PairFn>,
    diffusion: Arc<FieldFn>,
}

impl std::fmt::Debug for CoulombSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoulombSystem")
            .field("dimension", &self.dimension)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl CoulombSystem {
    pub fn new(
        dimension: usize,
        smooth_drift: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        pair: impl Fn(&[f64], usize, usize) -> f64 + Send + Sync + 'static,
        diffusion: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dimension,
            bounds: None,
            wall_margins: (0.0, 0.0),
            smooth_drift: Arc::new(smooth_drift),
            pair: Arc::new(pair),
            diffusion: Arc::new(diffusion),
        }
    }

    /// Confines the particles to the open interval `(lo, hi)`.
    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = Some((lo, hi));
        self
    }

    /// Microscopic margins inside the bounds that proposals must respect;
    /// guards keep scaling with the physical boundary distance.
    pub fn with_wall_margins(mut self, lo_margin: f64, hi_margin: f64) -> Self {
        self.wall_margins = (lo_margin, hi_margin);
        self
    }

    pub fn wall_margins(&self) -> (f64, f64) {
        self.wall_margins
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    pub fn smooth_drift_into(&self, x: &[f64], out: &mut [f64]) {
        (self.smooth_drift)(x, out);
    }

    pub fn diffusion_into(&self, x: &[f64], out: &mut [f64]) {
        (self.diffusion)(x, out);
    }

    pub fn pair_coefficient(&self, x: &[f64], k: usize, l: usize) -> f64 {
        (self.pair)(x, k, l)
    }

    /// The `N×N` pair-coefficient matrix at `x`, row-major, zero diagonal.
    pub fn pair_coefficients(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dimension;
        let mut m = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                if k != l {
                    m[k * n + l] = (self.pair)(x, k, l);
                }
            }
        }
        m
    }

    /// Full drift `v_k(x) + Σ_{l≠k} c_kl(x)/(x_k − x_l)`.
    pub fn total_drift_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.smooth_drift)(x, out);
        let n = self.dimension;
        for k in 0..n {
            for l in 0..n {
                if l == k {
                    continue;
                }
                let gap = x[k] - x[l];
                if gap == 0.0 {
                    return Err(Error::Singular(format!(
                        "coordinates {} and {} coincide at {}",
                        k + 1,
                        l + 1,
                        x[k]
                    )));
                }
                out[k] += (self.pair)(x, k, l) / gap;
            }
        }
        Ok(())
    }

    /// Checks the permutation equivariance of `v` and `c` at `x` against the
    /// permutation `perm` (image positions); returns the worst absolute
    /// mismatch. Zero for genuinely symmetric systems.
    pub fn equivariance_defect(&self, x: &[f64], perm: &[usize]) -> f64 {
        let n = self.dimension;
        let xp: Vec<f64> = perm.iter().map(|&p| x[p]).collect();
        let mut v = vec![0.0; n];
        let mut vp = vec![0.0; n];
        (self.smooth_drift)(x, &mut v);
        (self.smooth_drift)(&xp, &mut vp);
        let mut worst: f64 = 0.0;
        for k in 0..n {
            worst = worst.max((vp[k] - v[perm[k]]).abs());
        }
        for k in 0..n {
            for l in 0..n {
                if k == l {
                    continue;
                }
                let direct = (self.pair)(&xp, k, l);
                let relabeled = (self.pair)(x, perm[k], perm[l]);
                worst = worst.max((direct - relabeled).abs());
            }
        }
        worst
    }

    /// Worst violation of the repulsion condition
    /// `c_kl + c_lk ≥ (D_k² + D_l²)/2` over all pairs at `x` (positive means
    /// violated by that amount).
    pub fn repulsion_defect(&self, x: &[f64]) -> f64 {
        let n = self.dimension;
        let mut d = vec![0.0; n];
        (self.diffusion)(x, &mut d);
        let mut worst = f64::NEG_INFINITY;
        for k in 0..n {
            for l in 0..n {
                if k == l {
                    continue;
                }
                let lhs = (self.pair)(x, k, l) + (self.pair)(x, l, k);
                let rhs = 0.5 * (d[k] * d[k] + d[l] * d[l]);
                worst = worst.max(rhs - lhs);
            }
        }
        worst
    }
}

/// The transmission-eigenvalue diffusion as a Coulomb-repulsion instance:
/// `c_kl = (β/γ) T_k (T_k + T_l − 2T_kT_l)`, `v_k = −T_k + 2T_k(1−T_k)/γ`,
/// diffusion unchanged, confined to `(0, 1)`.
pub fn dmpk_as_coulomb(class: SymmetryClass) -> CoulombSystem {
    let n = class.channels();
    let gamma = class.gamma();
    let beta_over_gamma = class.beta_f() / gamma;
    CoulombSystem::new(
        n,
        move |x: &[f64], out: &mut [f64]| {
            for (o, &t) in out.iter_mut().zip(x) {
                *o = -t + 2.0 * t * (1.0 - t) / gamma;
            }
        },
        move |x: &[f64], k: usize, l: usize| {
            let (tk, tl) = (x[k], x[l]);
            beta_over_gamma * tk * (tk + tl - 2.0 * tk * tl)
        },
        move |x: &[f64], out: &mut [f64]| {
            for (o, &t) in out.iter_mut().zip(x) {
                *o = (4.0 * t * t * (1.0 - t) / gamma).sqrt();
            }
        },
    )
    .with_bounds(0.0, 1.0)
    .with_wall_margins(0.0, crate::sde::engine::WALL_MARGIN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseStream;
    use crate::sde::dmpk_drift;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn class(beta: u8, n: usize) -> SymmetryClass {
        SymmetryClass::new(beta, n).unwrap()
    }

    fn random_domain_point(n: usize, stream: &mut NoiseStream) -> Vec<f64> {
        loop {
            let mut u = vec![0.0; n];
            stream.fill_standard_normals(&mut u);
            let mut t: Vec<f64> = u
                .iter()
                .map(|&x| {
                    let y = x / 8.0;
                    0.5 + 0.49 * (y / (1.0 + y.abs())) * 2.0
                })
                .collect();
            t.sort_by(f64::total_cmp);
            if crate::state::in_open_domain(&t, 1e-4) {
                return t;
            }
        }
    }

    #[test]
    fn assembled_drift_matches_direct_form() {
        let mut stream = NoiseStream::new(91, 0);
        for beta in [1, 2] {
            for n in [1usize, 2, 4, 6] {
                let c = class(beta, n);
                let system = dmpk_as_coulomb(c);
                for _ in 0..250 {
                    let t = random_domain_point(n, &mut stream);
                    let mut assembled = vec![0.0; n];
                    system.total_drift_into(&t, &mut assembled).unwrap();
                    let direct = dmpk_drift(&t, c).unwrap();
                    for k in 0..n {
                        assert_relative_eq!(
                            assembled[k],
                            direct[k],
                            max_relative = 1e-12,
                            epsilon = 1e-13
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let mut stream = NoiseStream::new(92, 0);
        let c = class(2, 5);
        let system = dmpk_as_coulomb(c);
        let perms: [[usize; 5]; 3] = [[4, 3, 2, 1, 0], [1, 0, 3, 2, 4], [2, 4, 0, 1, 3]];
        for _ in 0..50 {
            let t = random_domain_point(5, &mut stream);
            for perm in &perms {
                assert!(system.equivariance_defect(&t, perm) < 1e-14);
            }
        }
    }

    #[test]
    fn repulsion_condition_near_coincidence() {
        // as T_l -> T_k = t: c_kl + c_lk -> 4β t²(1−t)/γ versus
        // (D_k²+D_l²)/2 -> 4 t²(1−t)/γ; the ratio is β ≥ 1.
        for beta in [1, 2] {
            let c = class(beta, 2);
            let system = dmpk_as_coulomb(c);
            for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
                for eps in [1e-3, 1e-5, 1e-7] {
                    let x = [t, t + eps];
                    let defect = system.repulsion_defect(&x);
                    // beta = 1 meets the bound with equality in the limit;
                    // allow the O(eps) expansion slack.
                    assert!(
                        defect <= 8.0 * eps,
                        "beta={beta} t={t} eps={eps} defect={defect:.3e}"
                    );
                }
                let lhs = 2.0 * system.pair_coefficient(&[t, t], 0, 1);
                let expected = 4.0 * c.beta_f() * t * t * (1.0 - t) / c.gamma();
                assert_relative_eq!(lhs, expected, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn pair_matrix_has_zero_diagonal() {
        let system = dmpk_as_coulomb(class(2, 3));
        let m = system.pair_coefficients(&[0.2, 0.5, 0.8]);
        for k in 0..3 {
            assert_eq!(m[k * 3 + k], 0.0);
        }
    }

    proptest! {
        #[test]
        fn pair_coefficient_nonnegative_on_unit_square(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            // T_k + T_l − 2 T_k T_l ≥ 0 on [0,1]²
            let system = dmpk_as_coulomb(class(2, 2));
            prop_assert!(system.pair_coefficient(&[a, b], 0, 1) >= 0.0);
            prop_assert!(system.pair_coefficient(&[a, b], 1, 0) >= 0.0);
        }
    }
}
