//! Algebraic identities behind the well-posedness argument, evaluated as
//! testable equalities: the triple-sum telescoping of the repulsion part of
//! the Lyapunov drift and the companion pair-sum identities, each with its
//! a-priori bound.

use super::dd::Dd;
use crate::noise::NoiseStream;
use crate::state::in_open_domain;
use crate::{Error, Result};

fn augmented(t: &[f64]) -> Result<Vec<f64>> {
    if !in_open_domain(t, 0.0) {
        return Err(Error::Singular(
            "identity evaluation needs a strictly ordered interior point".into(),
        ));
    }
    let mut a = Vec::with_capacity(t.len() + 2);
    a.push(0.0);
    a.extend_from_slice(t);
    a.push(1.0);
    Ok(a)
}

/// The repulsion cross-term in two algebraically equal forms.
#[derive(Debug, Clone, Copy)]
pub struct ZIdentity {
    /// Original form: `Σ_k ρ_k (A_k² − B_k)` with `A_k = Σ_{j≠k} 1/(T_k−T_j)`,
    /// `B_k = Σ_{m≠k} 1/(T_k−T_m)²`, over the augmented family `T_0 = 0`,
    /// `T_{N+1} = 1`, `ρ = T²(1−T)`.
    pub lhs: f64,
    /// Telescoped form: `(1/3) Σ over distinct index triples of (1 − T_j − T_l − T_k)`.
    pub rhs: f64,
    /// A-priori bound `(2/3)(N+1)³` on both.
    pub bound: f64,
}

/// Evaluates both forms of the repulsion cross-term in compensated
/// arithmetic. Errors on degenerate input.
pub fn proof_identity_z(t: &[f64]) -> Result<ZIdentity> {
    let a = augmented(t)?;
    let m = a.len(); // N + 2
    let n = t.len();

    let mut lhs = Dd::ZERO;
    for k in 1..=n {
        let tk = a[k];
        let rho = Dd::from(tk).square().mul(Dd::from(1.0 - tk));
        let mut sum_inv = Dd::ZERO;
        let mut sum_inv_sq = Dd::ZERO;
        for j in 0..m {
            if j == k {
                continue;
            }
            let q = Dd::div(1.0, tk - a[j]);
            sum_inv = sum_inv.add(q);
            sum_inv_sq = sum_inv_sq.add(q.square());
        }
        lhs = lhs.add(rho.mul(sum_inv.square().sub(sum_inv_sq)));
    }

    let mut rhs = Dd::ZERO;
    for k in 0..m {
        for j in 0..m {
            if j == k {
                continue;
            }
            for l in 0..m {
                if l == k || l == j {
                    continue;
                }
                rhs = rhs.add_f64(1.0 - a[j] - a[l] - a[k]);
            }
        }
    }
    let rhs = rhs.scale(1.0 / 3.0);

    let np1 = (n + 1) as f64;
    Ok(ZIdentity {
        lhs: lhs.value(),
        rhs: rhs.value(),
        bound: (2.0 / 3.0) * np1 * np1 * np1,
    })
}

/// The two companion sums with their exact counterparts and bounds.
#[derive(Debug, Clone, Copy)]
pub struct SumIdentities {
    /// `Σ_{k=1..N} Σ_{j≠k} T_k(1−T_k)/(T_k−T_j)` over the augmented family.
    pub pair_lhs: f64,
    /// Its symmetrized equal: `(1/2) Σ_{k≠j} (1 − T_k − T_j)`.
    pub pair_rhs: f64,
    /// Bound `(N+1)(N+2)/2` on the pair sum.
    pub pair_bound: f64,
    /// `Σ_{k=1..N} Σ_{j≠k} T_k²/(T_j−T_k)` over the augmented family.
    pub square_sum: f64,
    /// Its exact rewriting `−Σ_{k,j=1..N}(T_k+T_j)/2 + Σ_k T_k²/(1−T_k)`.
    pub square_rhs: f64,
    /// Sandwich `−N² ≤ square_sum ≤ Σ_k T_k²/(1−T_k)`.
    pub square_lower: f64,
    pub square_upper: f64,
}

pub fn proof_identity_sums(t: &[f64]) -> Result<SumIdentities> {
    let a = augmented(t)?;
    let m = a.len();
    let n = t.len();

    let mut pair_lhs = Dd::ZERO;
    let mut square_sum = Dd::ZERO;
    for k in 1..=n {
        let tk = a[k];
        let w = Dd::from(tk).mul(Dd::from(1.0 - tk));
        let tk2 = Dd::from(tk).square();
        for j in 0..m {
            if j == k {
                continue;
            }
            pair_lhs = pair_lhs.add(w.mul(Dd::div(1.0, tk - a[j])));
            square_sum = square_sum.add(tk2.mul(Dd::div(1.0, a[j] - tk)));
        }
    }

    let mut pair_rhs = Dd::ZERO;
    for k in 0..m {
        for j in 0..m {
            if j != k {
                pair_rhs = pair_rhs.add_f64(1.0 - a[k] - a[j]);
            }
        }
    }
    let pair_rhs = pair_rhs.scale(0.5);

    let mut cross = Dd::ZERO;
    let mut square_upper = Dd::ZERO;
    for k in 1..=n {
        for j in 1..=n {
            cross = cross.add_f64(a[k] + a[j]);
        }
        square_upper = square_upper.add(Dd::from(a[k]).square().mul(Dd::div(1.0, 1.0 - a[k])));
    }
    let square_rhs = square_upper.sub(cross.scale(0.5));

    let nf = n as f64;
    Ok(SumIdentities {
        pair_lhs: pair_lhs.value(),
        pair_rhs: pair_rhs.value(),
        pair_bound: (nf + 1.0) * (nf + 2.0) / 2.0,
        square_sum: square_sum.value(),
        square_rhs: square_rhs.value(),
        square_lower: -nf * nf,
        square_upper: square_upper.value(),
    })
}

/// Relative residual `|lhs − rhs| / (1 + |lhs|)`.
pub fn relative_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / (1.0 + lhs.abs())
}

/// Uniformly random strictly ordered point with all gaps and boundary
/// margins above `min_gap` (rejection sampling on sorted uniforms).
pub fn sample_domain_point(n: usize, min_gap: f64, stream: &mut NoiseStream) -> Vec<f64> {
    loop {
        let mut t = vec![0.0; n];
        stream.fill_uniforms(&mut t);
        t.sort_by(f64::total_cmp);
        if in_open_domain(&t, min_gap) {
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_identity_single_channel_closed_form() {
        // T = (0.5): A₁ = 0, B₁ = 8, ρ₁ = 1/8 gives lhs = −1; the triple sum
        // over {0, 1/2, 1} has six terms of −1/2, so rhs = −1.
        let z = proof_identity_z(&[0.5]).unwrap();
        assert!((z.lhs + 1.0).abs() < 1e-12);
        assert!((z.rhs + 1.0).abs() < 1e-12);
        assert!((z.lhs - z.rhs).abs() < 1e-12);
        assert!(z.lhs.abs() <= z.bound);
    }

    #[test]
    fn sums_single_channel() {
        let t = [0.5];
        let s = proof_identity_sums(&t).unwrap();
        // pair: 0.25/(0.5−0) + 0.25/(0.5−1) = 0; rhs: ½·Σ_{k≠j}(1−T_k−T_j)
        // over {0, ½, 1} = ½·(couples) = 0
        assert!((s.pair_lhs).abs() < 1e-14);
        assert!((s.pair_rhs).abs() < 1e-14);
        // square: 0.25/(0−0.5) + 0.25/(1−0.5) = 0; rhs: −(0.5+0.5)/2 + 0.25/0.5 = 0
        assert!((s.square_sum).abs() < 1e-14);
        assert!((s.square_rhs).abs() < 1e-14);
        assert!(s.square_sum >= s.square_lower && s.square_sum <= s.square_upper + 1e-14);
    }

    #[test]
    fn identities_on_random_points() {
        let mut stream = NoiseStream::new(2024, 1);
        for n in 1..=8 {
            for _ in 0..500 {
                let t = sample_domain_point(n, 1e-4, &mut stream);
                let z = proof_identity_z(&t).unwrap();
                assert!(
                    relative_residual(z.lhs, z.rhs) < 1e-9,
                    "N = {n}: {} vs {}",
                    z.lhs,
                    z.rhs
                );
                assert!(z.lhs.abs() <= z.bound);
                let s = proof_identity_sums(&t).unwrap();
                assert!(relative_residual(s.pair_lhs, s.pair_rhs) < 1e-9);
                assert!(s.pair_lhs.abs() <= s.pair_bound);
                assert!(relative_residual(s.square_sum, s.square_rhs) < 1e-9);
                assert!(s.square_sum >= s.square_lower - 1e-12);
                assert!(s.square_sum <= s.square_upper + 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_points_are_rejected() {
        assert!(proof_identity_z(&[0.4, 0.4]).is_err());
        assert!(proof_identity_z(&[0.0, 0.5]).is_err());
        assert!(proof_identity_sums(&[0.5, 1.0]).is_err());
    }

    #[test]
    fn sampler_respects_margins() {
        let mut stream = NoiseStream::new(5, 0);
        for _ in 0..200 {
            let t = sample_domain_point(6, 1e-4, &mut stream);
            assert!(in_open_domain(&t, 1e-4));
        }
    }
}
