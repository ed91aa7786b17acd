//! The microscopic picture: Brownian motion on the pseudo-unitary group of
//! `2N×2N` transfer matrices, `dM = dL·M` from the identity, with exact
//! restoration of the current-conservation constraint `M*Σ_z M = Σ_z` and,
//! for β = 1, structural time-reversal symmetry `Σ_x M Σ_x = conj(M)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::noise::{assemble_l_increment, NoiseStream};
use crate::state::in_open_domain;
use crate::{Error, Result, SolverConfig, SymmetryClass, TransmissionState};

/// Hard ceiling on the current-conservation defect after reprojection.
const DEFECT_CEILING: f64 = 1e-6;
/// Eigenvalues of `M_{++}* M_{++}` this far below 1 are attributed to
/// rounding and clamped up.
const EIGEN_CLAMP_WINDOW: f64 = 1e-10;
/// Below this the spectrum is declared off the group.
const EIGEN_FLOOR: f64 = 1e-8;

/// A transfer matrix with its wire length and symmetry class.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    m: DMatrix<Complex64>,
    s: f64,
    class: SymmetryClass,
}

impl TransferMatrix {
    /// Wraps a raw matrix; the caller vouches for its provenance.
    pub fn from_parts(m: DMatrix<Complex64>, s: f64, class: SymmetryClass) -> Result<Self> {
        let n = class.channels();
        if m.nrows() != 2 * n || m.ncols() != 2 * n {
            return Err(Error::Domain(format!(
                "matrix is {}x{}, class needs {}x{}",
                m.nrows(),
                m.ncols(),
                2 * n,
                2 * n
            )));
        }
        Ok(Self { m, s, class })
    }

    /// The zero-length wire: the identity.
    pub fn identity(class: SymmetryClass) -> Self {
        let n = class.channels();
        Self { m: DMatrix::identity(2 * n, 2 * n), s: 0.0, class }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn class(&self) -> SymmetryClass {
        self.class
    }

    fn block(&self, row: usize, col: usize) -> DMatrix<Complex64> {
        let n = self.class.channels();
        self.m.view((row * n, col * n), (n, n)).into_owned()
    }
}

/// Applies `Σ_z` on the left: flips the sign of the bottom block rows.
fn sigma_z_mul(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows() / 2;
    let mut out = m.clone();
    for r in n..2 * n {
        for c in 0..m.ncols() {
            out[(r, c)] = -out[(r, c)];
        }
    }
    out
}

/// `M* Σ_z M − Σ_z`, the current-conservation defect matrix.
fn conservation_defect_matrix(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows() / 2;
    let mut d = m.adjoint() * sigma_z_mul(m);
    for k in 0..n {
        d[(k, k)] -= Complex64::ONE;
    }
    for k in n..2 * n {
        d[(k, k)] += Complex64::ONE;
    }
    d
}

/// Rebuilds the bottom block rows from the top ones:
/// `M_{−+} = conj(M_{+−})`, `M_{−−} = conj(M_{++})`. Exact time reversal by
/// construction.
fn impose_time_reversal(m: &mut DMatrix<Complex64>) {
    let n = m.nrows() / 2;
    for r in 0..n {
        for c in 0..n {
            m[(n + r, c)] = m[(r, n + c)].conj();
            m[(n + r, n + c)] = m[(r, c)].conj();
        }
    }
}

/// Frobenius norms of the two constraint defects: current conservation
/// `‖M*Σ_zM − Σ_z‖`, and for β = 1 the time-reversal defect
/// `‖Σ_xMΣ_x − conj(M)‖` (absent for β = 2).
pub fn constraint_defect(tm: &TransferMatrix) -> (f64, Option<f64>) {
    let conservation = conservation_defect_matrix(&tm.m).norm();
    let time_reversal = (tm.class.beta() == 1).then(|| {
        let n = tm.class.channels();
        let mut worst: f64 = 0.0;
        for r in 0..2 * n {
            for c in 0..2 * n {
                let swapped = tm.m[((r + n) % (2 * n), (c + n) % (2 * n))];
                worst += (swapped - tm.m[(r, c)].conj()).norm_sqr();
            }
        }
        worst.sqrt()
    });
    (conservation, time_reversal)
}

/// Pulls `M` back onto the group: `M' = M · X^{−1/2}` with
/// `X = Σ_z M* Σ_z M`, computed by the coupled Newton–Schulz iteration for
/// the principal inverse square root. Converges whenever `‖X − 1‖ < 1`;
/// an `X` with spectrum touching the closed negative real axis makes the
/// iteration diverge, which is reported as a failure.
pub fn reproject(tm: &TransferMatrix) -> Result<TransferMatrix> {
    let dim = tm.m.nrows();
    let x = sigma_z_mul(&(tm.m.adjoint() * sigma_z_mul(&tm.m)));
    let id = DMatrix::<Complex64>::identity(dim, dim);

    let mut y = x.clone();
    let mut z = id.clone();
    let tol = 1e-15 * dim as f64;
    let mut prev_residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..100 {
        // E = 3I − Z Y; both iterates contract towards Y → X^{1/2}, Z → X^{−1/2}
        let zy = &z * &y;
        let residual = (&zy - &id).norm();
        if residual <= tol {
            converged = true;
            break;
        }
        if !residual.is_finite() || residual > prev_residual.max(1.0) * 4.0 {
            return Err(Error::Reprojection(format!(
                "inverse square root iteration diverged (residual {residual:.3e}); \
                 spectrum likely touches the negative real axis"
            )));
        }
        prev_residual = residual.min(prev_residual);
        let e = id.scale(3.0) - zy;
        y = (&y * &e).scale(0.5);
        z = (&e * &z).scale(0.5);
    }
    if !converged {
        return Err(Error::Reprojection("inverse square root iteration stalled".into()));
    }
    let mut m = &tm.m * &z;
    if tm.class.beta() == 1 {
        impose_time_reversal(&mut m);
    }
    Ok(TransferMatrix { m, s: tm.s, class: tm.class })
}

/// Singular-value factorization of a transfer matrix: block-diagonal
/// unitaries around the central coupling built from `Λ ≥ 1`.
#[derive(Debug, Clone)]
pub struct SingularDecomposition {
    pub u_plus: DMatrix<Complex64>,
    pub u_minus: DMatrix<Complex64>,
    pub v_plus: DMatrix<Complex64>,
    pub v_minus: DMatrix<Complex64>,
    /// Diagonal entries of `Λ`, each ≥ 1.
    pub lambda: DVector<f64>,
}

fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<Complex64>::identity(n, n)).norm()
}

/// Multiplies out the factorization
/// `M = diag(U_+, U_−) · [[Λ, √(Λ²−1)], [√(Λ²−1), Λ]] · diag(V_+, V_−)`.
pub fn assemble_from_decomposition(
    d: &SingularDecomposition,
    class: SymmetryClass,
) -> Result<TransferMatrix> {
    let n = class.channels();
    for (name, u) in [
        ("U_+", &d.u_plus),
        ("U_-", &d.u_minus),
        ("V_+", &d.v_plus),
        ("V_-", &d.v_minus),
    ] {
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::Domain(format!("{name} must be {n}x{n}")));
        }
        let defect = unitarity_defect(u);
        if defect > 1e-10 {
            return Err(Error::Domain(format!("{name} is not unitary (defect {defect:.3e})")));
        }
    }
    if d.lambda.len() != n {
        return Err(Error::Domain(format!("Lambda must have {n} entries")));
    }
    if d.lambda.iter().any(|&l| l < 1.0) {
        return Err(Error::Domain("Lambda entries must be >= 1".into()));
    }
    if class.beta() == 1 {
        let cu = (d.u_plus.map(|z| z.conj()) - &d.u_minus).norm();
        let cv = (d.v_plus.map(|z| z.conj()) - &d.v_minus).norm();
        if cu > 1e-10 || cv > 1e-10 {
            return Err(Error::Domain(format!(
                "time-reversal couplings U_+ = conj(U_-), V_+ = conj(V_-) violated \
                 ({cu:.3e}, {cv:.3e})"
            )));
        }
    }
    let lam = DMatrix::from_diagonal(&d.lambda.map(|l| Complex64::new(l, 0.0)));
    let coupling =
        DMatrix::from_diagonal(&d.lambda.map(|l| Complex64::new((l * l - 1.0).sqrt(), 0.0)));
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(&d.u_plus * &lam * &d.v_plus));
    m.view_mut((0, n), (n, n)).copy_from(&(&d.u_plus * &coupling * &d.v_minus));
    m.view_mut((n, 0), (n, n)).copy_from(&(&d.u_minus * &coupling * &d.v_plus));
    m.view_mut((n, n), (n, n)).copy_from(&(&d.u_minus * &lam * &d.v_minus));
    TransferMatrix::from_parts(m, 0.0, class)
}

/// Transmission eigenvalues of the wire: `T_k = 1/λ_k` with `λ_k` the
/// eigenvalues of `M_{++}* M_{++}`, sorted ascending in `T`.
pub fn transmission_spectrum(tm: &TransferMatrix) -> Result<TransmissionState> {
    let a = tm.block(0, 0);
    let w = a.adjoint() * &a;
    let eigs = w.symmetric_eigenvalues();
    let mut t = Vec::with_capacity(eigs.len());
    for &lam in eigs.iter() {
        if lam < 1.0 - EIGEN_FLOOR {
            return Err(Error::ConstraintViolation(format!(
                "spectrum of M_++* M_++ reaches {lam}, below the group floor of 1"
            )));
        }
        if lam <= 0.0 {
            return Err(Error::Domain("M_++ is singular".into()));
        }
        let lam = if lam < 1.0 && lam >= 1.0 - EIGEN_CLAMP_WINDOW { 1.0 } else { lam };
        t.push(1.0 / lam);
    }
    t.sort_by(f64::total_cmp);
    // a rounding-level overshoot above 1 is clamped by construction above;
    // anything below the floor already errored
    let t = t.iter().map(|&x| x.min(1.0)).collect();
    TransmissionState::new(tm.s, t)
}

/// Euler evolution `M ← M + ΔL·M` from the identity, reprojecting onto the
/// group every `reproject_every` steps and at every recorded length; records
/// at the configured grid. Fails if the defect ceiling is breached.
pub fn evolve_transfer(
    s_end: f64,
    class: SymmetryClass,
    config: &SolverConfig,
    stream: &mut NoiseStream,
) -> Result<Vec<TransferMatrix>> {
    config.validate()?;
    if !(s_end >= 0.0) {
        return Err(Error::Domain(format!("end length must be >= 0, got {s_end}")));
    }
    let mut grid: Vec<f64> = config
        .record_grid
        .iter()
        .copied()
        .filter(|s| s.is_finite() && (0.0..=s_end).contains(s))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        grid.push(s_end);
    }

    let beta1 = class.beta() == 1;
    let mut tm = TransferMatrix::identity(class);
    let mut out = Vec::with_capacity(grid.len());
    let mut steps_since_projection = 0usize;
    for &target in &grid {
        while tm.s < target {
            let dt = config.dt_base.min(target - tm.s);
            let dl = assemble_l_increment(class, dt, stream)?.full_matrix();
            tm.m += &dl * &tm.m;
            if beta1 {
                impose_time_reversal(&mut tm.m);
            }
            tm.s = if dt == target - tm.s { target } else { tm.s + dt };
            steps_since_projection += 1;
            if steps_since_projection >= config.reproject_every {
                tm = reproject(&tm)?;
                steps_since_projection = 0;
            }
        }
        if steps_since_projection > 0 {
            tm = reproject(&tm)?;
            steps_since_projection = 0;
        }
        let (defect, _) = constraint_defect(&tm);
        if defect > DEFECT_CEILING {
            return Err(Error::IntegrationFailure(format!(
                "conservation defect {defect:.3e} above ceiling {DEFECT_CEILING:.0e} at s = {}",
                tm.s
            )));
        }
        out.push(tm.clone());
    }
    Ok(out)
}

/// Fraction of matrix paths whose spectrum at `s_small` is strictly
/// non-degenerate at tolerance `gap_tol`. Sequential reference version;
/// ensemble callers parallelize per path themselves.
pub fn small_s_nondegeneracy(
    class: SymmetryClass,
    s_small: f64,
    paths: u64,
    gap_tol: f64,
    config: &SolverConfig,
    master_seed: u64,
) -> Result<f64> {
    if paths == 0 {
        return Err(Error::Domain("need at least one path".into()));
    }
    let cfg = SolverConfig { record_grid: vec![s_small], ..config.clone() };
    let mut hits = 0u64;
    for i in 0..paths {
        let mut stream = NoiseStream::new(master_seed, i);
        let path = evolve_transfer(s_small, class, &cfg, &mut stream)?;
        let spectrum = transmission_spectrum(path.last().expect("grid nonempty"))?;
        if in_open_domain(spectrum.values(), gap_tol) {
            hits += 1;
        }
    }
    Ok(hits as f64 / paths as f64)
}

/// Haar-ish random unitary via QR of a complex Gaussian matrix; handy for
/// building on-group test matrices.
pub fn random_unitary(n: usize, stream: &mut NoiseStream) -> DMatrix<Complex64> {
    let mut draws = vec![0.0; 2 * n * n];
    stream.fill_standard_normals(&mut draws);
    let g = DMatrix::from_fn(n, n, |r, c| {
        let at = 2 * (r * n + c);
        Complex64::new(draws[at], draws[at + 1])
    });
    let qr = g.qr();
    qr.q()
}
