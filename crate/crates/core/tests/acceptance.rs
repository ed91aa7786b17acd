//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The heavy criteria are sized for a desk-scale machine; `DMPK_THREADS`
//! caps the worker pool.

use dmpk_core::analysis::{
    law_equality_test, mean_variance, ordering_test, proof_identity_sums, proof_identity_z,
    relative_residual, sample_domain_point, ucf_variance,
};
use dmpk_core::ensemble::run_paths;
use dmpk_core::noise::{assemble_l_increment, driving_brownian, NoiseStream};
use dmpk_core::sde::{degenerate_start, dmpk_as_coulomb, solve_coulomb, solve_path};
use dmpk_core::transfer::{constraint_defect, evolve_transfer, small_s_nondegeneracy};
use dmpk_core::{SolverConfig, SymmetryClass, TransmissionState};

fn report(criterion: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} — {detail}");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// 1. Universal conductance fluctuations: β = 2, N = 32, s = 6,
///    2×10⁴ eigenvalue-engine paths; Var(g) within ±20% of 2/(15β) = 1/15.
#[test]
fn criterion_1_ucf_reproduction() {
    let class = SymmetryClass::new(2, 32).unwrap();
    let config = SolverConfig { eta_gap: 0.3, ..SolverConfig::default() };
    let r = ucf_variance(class, 6.0, 20_000, &config, 0xDCAF).unwrap();
    let pass = r.relative_error.abs() <= 0.20
        && r.stderr_var_g.is_finite()
        && r.stderr_var_g > 0.0
        && r.stderr_var_g < 0.20 * r.target
        && r.ordering_violations == 0;
    report(
        "1 (UCF)",
        pass,
        &format!(
            "Var(g) = {:.5} ± {:.5}, target 2/(15β) = {:.5}, relative error {:+.1}%",
            r.var_g,
            r.stderr_var_g,
            r.target,
            100.0 * r.relative_error
        ),
    );
}

/// 2. Law equality between the matrix and eigenvalue engines: β = 2, N = 4,
///    s ∈ {0.5, 1, 2}, 5000 paths per engine, KS distance < 0.04 everywhere.
#[test]
fn criterion_2_law_equality() {
    let class = SymmetryClass::new(2, 4).unwrap();
    let config = SolverConfig {
        dt_base: 1e-3,       // matrix-engine step
        eta_gap: 0.05,       // eigenvalue-engine guard
        degenerate_n: Some(10_000),
        ..SolverConfig::default()
    };
    let comparisons =
        law_equality_test(class, &[0.5, 1.0, 2.0], 5000, &config, 0xBEEF).unwrap();
    let mut detail = String::new();
    let mut pass = true;
    for c in &comparisons {
        pass &= c.report.distance < 0.04;
        detail.push_str(&format!(
            "s={}: KS={:.4} (p={:.3}) ",
            c.s, c.report.distance, c.report.p_value
        ));
    }
    report("2 (law equality)", pass, detail.trim());
}

/// 3. Monotone coupling: 10³ coupled pairs per class, N = 4, s_end = 2,
///    zero componentwise ordering violations at every grid point.
#[test]
fn criterion_3_monotone_coupling() {
    let mut detail = String::new();
    let mut pass = true;
    for beta in [1u8, 2] {
        let class = SymmetryClass::new(beta, 4).unwrap();
        let low = degenerate_start(class, 8).unwrap();
        let high = TransmissionState::new(
            0.0,
            low.values().iter().map(|t| t + 0.05).collect(),
        )
        .unwrap();
        let config = SolverConfig {
            record_grid: vec![0.25, 0.5, 1.0, 1.5, 2.0],
            ..SolverConfig::default()
        };
        let r = ordering_test(&low, &high, class, 2.0, 1000, &config, 0xC0A1u64).unwrap();
        pass &= r.violations == 0;
        detail.push_str(&format!(
            "β={beta}: {} violations / {} grid checks; ",
            r.violations, r.comparisons
        ));
    }
    report("3 (monotone coupling)", pass, detail.trim());
}

/// 4. Non-collision and confinement: recorded states at s > 0 are strictly
///    ordered inside (0,1) on every path, and the degenerate start exits
///    degeneracy by the first positive grid time.
#[test]
fn criterion_4_non_collision_and_confinement() {
    let mut pass = true;
    let mut min_gap_seen = f64::INFINITY;
    let mut paths_checked = 0u64;
    for beta in [1u8, 2] {
        let class = SymmetryClass::new(beta, 4).unwrap();
        let t0 = TransmissionState::degenerate(4);
        let config = SolverConfig {
            record_grid: vec![0.01, 0.1, 0.5, 1.0, 2.0],
            ..SolverConfig::default()
        };
        let records = run_paths(0xC0FFEE, 500, |_, stream| {
            solve_path(&t0, 2.0, class, &config, stream)
        })
        .unwrap();
        for rec in &records {
            paths_checked += 1;
            min_gap_seen = min_gap_seen.min(rec.min_gap_seen);
            for (i, state) in rec.states().iter().enumerate() {
                if rec.grid()[i] > 0.0 {
                    pass &= dmpk_core::state::in_open_domain(state, 0.0);
                }
            }
            // first positive grid time has already left full degeneracy
            pass &= dmpk_core::state::in_open_domain(&rec.states()[0], 0.0);
        }
    }
    report(
        "4 (non-collision/confinement)",
        pass && min_gap_seen > 0.0,
        &format!("{paths_checked} paths, min local margin {min_gap_seen:.3e}"),
    );
}

/// 5. Group conservation: matrix paths of 10⁴ steps keep the conservation
///    defect ≤ 1e−10 with per-step reprojection; β = 1 time-reversal defect
///    ≤ 1e−12.
#[test]
fn criterion_5_group_conservation() {
    let mut pass = true;
    let mut detail = String::new();
    for beta in [1u8, 2] {
        let class = SymmetryClass::new(beta, 4).unwrap();
        let config = SolverConfig {
            dt_base: 1e-4, // 10^4 steps to s = 1
            record_grid: (1..=10).map(|i| 0.1 * f64::from(i)).collect(),
            reproject_every: 1,
            ..SolverConfig::default()
        };
        let defects = run_paths(0x5EED, 5, |_, stream| {
            let path = evolve_transfer(1.0, class, &config, stream)?;
            let mut worst_cons: f64 = 0.0;
            let mut worst_tr: f64 = 0.0;
            for tm in &path {
                let (cons, tr) = constraint_defect(tm);
                worst_cons = worst_cons.max(cons);
                if let Some(tr) = tr {
                    worst_tr = worst_tr.max(tr);
                }
            }
            Ok((worst_cons, worst_tr))
        })
        .unwrap();
        let worst_cons = defects.iter().map(|d| d.0).fold(0.0, f64::max);
        let worst_tr = defects.iter().map(|d| d.1).fold(0.0, f64::max);
        pass &= worst_cons <= 1e-10;
        if beta == 1 {
            pass &= worst_tr <= 1e-12;
            detail.push_str(&format!(
                "β=1: conservation {worst_cons:.2e}, time-reversal {worst_tr:.2e}; "
            ));
        } else {
            detail.push_str(&format!("β=2: conservation {worst_cons:.2e}; "));
        }
    }
    report("5 (group conservation)", pass, detail.trim());
}

/// 6. Proof identities: double-sum vs telescoped agreement ≤ 1e−9 relative,
///    |Z| ≤ (2/3)(N+1)³, companion identities and bounds, 10⁴ random interior
///    points per N ∈ {1..8}.
#[test]
fn criterion_6_proof_identities() {
    let mut worst: f64 = 0.0;
    let mut failures = 0u64;
    for n in 1..=8usize {
        let mut stream = NoiseStream::new(0x1D, n as u64);
        for _ in 0..10_000 {
            let t = sample_domain_point(n, 1e-4, &mut stream);
            let z = proof_identity_z(&t).unwrap();
            let s = proof_identity_sums(&t).unwrap();
            let res = relative_residual(z.lhs, z.rhs)
                .max(relative_residual(s.pair_lhs, s.pair_rhs))
                .max(relative_residual(s.square_sum, s.square_rhs));
            worst = worst.max(res);
            let ok = res <= 1e-9
                && z.lhs.abs() <= z.bound
                && s.pair_lhs.abs() <= s.pair_bound
                && s.square_sum >= s.square_lower - 1e-12
                && s.square_sum <= s.square_upper + 1e-12;
            failures += u64::from(!ok);
        }
    }
    report(
        "6 (proof identities)",
        failures == 0,
        &format!("80000 points, {failures} failures, worst residual {worst:.2e}"),
    );
}

/// 7. Noise law conformance: every block second moment within 3 Monte-Carlo
///    standard errors at 10⁵ samples; Var(ΔB_k) = ds via the γ-scaling,
///    exactly in the coefficients and statistically on samples.
#[test]
fn criterion_7_noise_law() {
    const SAMPLES: usize = 100_000;
    let mut pass = true;
    let mut detail = String::new();
    let three_se = |expected: f64| 3.0 * expected * (2.0 / (SAMPLES as f64 - 1.0)).sqrt();

    for beta in [1u8, 2] {
        let n = 3usize;
        let nf = n as f64;
        let class = SymmetryClass::new(beta, n).unwrap();
        let mut stream = NoiseStream::new(31, u64::from(beta));
        let mut a_off_re = Vec::with_capacity(SAMPLES);
        let mut a_off_im = Vec::with_capacity(SAMPLES);
        let mut a_diag_im = Vec::with_capacity(SAMPLES);
        let mut b_off_re = Vec::with_capacity(SAMPLES);
        let mut b_off_im = Vec::with_capacity(SAMPLES);
        let mut b_diag_re = Vec::with_capacity(SAMPLES);
        let mut b_diag_im = Vec::with_capacity(SAMPLES);
        let mut brownian = Vec::with_capacity(SAMPLES);
        let mut exact_defect: f64 = 0.0;
        for _ in 0..SAMPLES {
            let l = assemble_l_increment(class, 1.0, &mut stream).unwrap();
            a_off_re.push(l.da_plus[(0, 1)].re);
            a_off_im.push(l.da_plus[(0, 1)].im);
            a_diag_im.push(l.da_plus[(0, 0)].im);
            b_off_re.push(l.db[(0, 2)].re);
            b_off_im.push(l.db[(0, 2)].im);
            b_diag_re.push(l.db[(1, 1)].re);
            b_diag_im.push(l.db[(1, 1)].im);
            let diag: Vec<f64> = (0..n).map(|k| l.db[(k, k)].re).collect();
            brownian.push(driving_brownian(&diag, class)[0]);
            exact_defect = exact_defect
                .max((&l.da_plus + l.da_plus.adjoint()).norm())
                .max(l.da_plus[(0, 0)].re.abs());
            if beta == 1 {
                exact_defect = exact_defect
                    .max((&l.da_minus - l.da_plus.map(|z| z.conj())).norm())
                    .max((&l.db - l.db.transpose()).norm());
            }
        }
        let var = |xs: &Vec<f64>| mean_variance(xs).1;
        let b_off = match beta {
            1 => 1.0 / (2.0 * (nf + 1.0)),
            _ => 1.0 / (2.0 * nf),
        };
        let b_diag = match beta {
            1 => 1.0 / (nf + 1.0),
            _ => 1.0 / (2.0 * nf),
        };
        let checks = [
            ("a off re", var(&a_off_re), 1.0 / (2.0 * nf)),
            ("a off im", var(&a_off_im), 1.0 / (2.0 * nf)),
            ("a diag im", var(&a_diag_im), 1.0 / nf),
            ("b off re", var(&b_off_re), b_off),
            ("b off im", var(&b_off_im), b_off),
            ("b diag re", var(&b_diag_re), b_diag),
            ("b diag im", var(&b_diag_im), b_diag),
            ("ΔB", var(&brownian), 1.0),
        ];
        for (label, got, expected) in checks {
            let ok = (got - expected).abs() < three_se(expected);
            if !ok {
                detail.push_str(&format!("β={beta} {label}: {got:.5} vs {expected:.5}! "));
            }
            pass &= ok;
        }
        // the γ-scaling of the driving Brownian motion is exact by algebra
        let diag_var = match beta {
            1 => 1.0 / (nf + 1.0),
            _ => 1.0 / (2.0 * nf),
        };
        pass &= (class.gamma() * diag_var - 1.0).abs() < 1e-14;
        pass &= exact_defect == 0.0;
        detail.push_str(&format!("β={beta} exact symmetry defect {exact_defect:.1e}; "));
    }
    report("7 (noise law)", pass, detail.trim());
}

/// 8. Engine oracle equivalence: the generic Coulomb engine on the
///    eigenvalue coefficients matches the specialized path to 1e−12 per
///    component on shared noise, 100 paths.
#[test]
fn criterion_8_engine_equivalence() {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for beta in [1u8, 2] {
        let class = SymmetryClass::new(beta, 4).unwrap();
        let system = dmpk_as_coulomb(class);
        let t0 = degenerate_start(class, 9).unwrap();
        let config = SolverConfig {
            record_grid: vec![0.25, 0.5, 0.75, 1.0],
            ..SolverConfig::default()
        };
        for idx in 0..50u64 {
            let mut s1 = NoiseStream::new(0xAB, idx);
            let mut s2 = NoiseStream::new(0xAB, idx);
            let spec = solve_path(&t0, 1.0, class, &config, &mut s1).unwrap();
            let gen = solve_coulomb(&system, t0.values(), 1.0, &config, &mut s2).unwrap();
            for i in 0..spec.len() {
                for (a, b) in spec.states()[i].iter().zip(&gen.states()[i]) {
                    let d = (a - b).abs();
                    worst = worst.max(d);
                    pass &= d <= 1e-12;
                }
            }
        }
    }
    report(
        "8 (engine equivalence)",
        pass,
        &format!("100 coupled paths, worst per-component gap {worst:.2e}"),
    );
}

/// 9. Small-s non-degeneracy: β = 2, N = 4, s = 0.01, 2000 matrix paths with
///    spectrum gaps above 1e−8 on at least 99% of paths.
#[test]
fn criterion_9_small_s_nondegeneracy() {
    let class = SymmetryClass::new(2, 4).unwrap();
    let config = SolverConfig { dt_base: 1e-5, ..SolverConfig::default() };
    let fraction = small_s_nondegeneracy(class, 0.01, 2000, 1e-8, &config, 0x51).unwrap();
    report(
        "9 (small-s nondegeneracy)",
        fraction >= 0.99,
        &format!("fraction with open spectrum: {fraction:.4}"),
    );
}
