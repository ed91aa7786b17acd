//! Brownian increments of the block matrix that drives the transfer-matrix
//! evolution, and the scalar Brownian motions extracted from its diagonal.
//!
//! Per unit length, with γ = β(N−1)+2:
//!
//! * `𝔞` blocks are anti-hermitian; above the diagonal each entry has
//!   independent real and imaginary parts of variance `1/(2N)`, the diagonal
//!   is purely imaginary with variance `1/N`.
//! * `𝔟` block, β = 1: complex symmetric (`𝔟ᵀ = 𝔟`); off-diagonal parts have
//!   variance `1/(2(N+1))` each, diagonal parts `1/(N+1)` each.
//! * `𝔟` block, β = 2: all entries i.i.d. with part variance `1/(2N)`.
//! * β = 1 couples the corner blocks by `𝔞_− = conj(𝔞_+)`; for β = 2 all
//!   three blocks are independent.
//!
//! Reproducibility contract: path `i` of a run draws from
//! `ChaCha12(seed = splitmix64-expansion of master_seed, stream = i)`.
//! Normals come from Box–Muller on 64-bit uniforms, consuming exactly two
//! `u64` per pair of normals, so stream consumption is a fixed function of
//! the request sequence. The adaptive stepper addresses a pre-committed
//! window per (step, halving level) through [`NoiseStream::seek_words`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::{Error, Result, SymmetryClass};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One deterministic Gaussian stream, owned by a single path worker.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha12Rng,
    master_seed: u64,
    path_index: u64,
}

impl NoiseStream {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        let mut st = master_seed;
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut st).to_le_bytes());
        }
        let mut rng = ChaCha12Rng::from_seed(seed);
        rng.set_stream(path_index);
        Self { rng, master_seed, path_index }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// Current position in the underlying counter, in 32-bit words.
    pub fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Jumps the counter; O(1). Used for pre-committed window addressing.
    pub fn seek_words(&mut self, words: u128) {
        self.rng.set_word_pos(words);
    }

    fn uniform_pair(&mut self) -> (f64, f64) {
        // (0,1] and [0,1): the log argument never vanishes.
        let a = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
        let b = (self.rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
        (a, b)
    }

    /// Fills `out` with independent standard normals (Box–Muller).
    /// Consumes exactly `2·ceil(out.len()/2)` values of `u64` state.
    pub fn fill_standard_normals(&mut self, out: &mut [f64]) {
        let mut i = 0;
        while i < out.len() {
            let (u1, u2) = self.uniform_pair();
            let r = (-2.0 * u1.ln()).sqrt();
            let phi = core::f64::consts::TAU * u2;
            out[i] = r * phi.cos();
            if i + 1 < out.len() {
                out[i + 1] = r * phi.sin();
            }
            i += 2;
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        let mut one = [0.0];
        self.fill_standard_normals(&mut one);
        one[0]
    }

    /// Fills `out` with uniforms on `[0, 1)`; one `u64` of state each.
    pub fn fill_uniforms(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = (self.rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
        }
    }
}

/// Stream words consumed by one `fill_standard_normals` call of length `n`
/// (each u64 is two 32-bit words).
pub fn normal_block_words(n: usize) -> u128 {
    4 * n.div_ceil(2) as u128
}

/// One Brownian increment of the full block matrix over length `ds`.
#[derive(Debug, Clone)]
pub struct NoiseIncrement {
    pub da_plus: DMatrix<Complex64>,
    pub da_minus: DMatrix<Complex64>,
    pub db: DMatrix<Complex64>,
    pub ds: f64,
}

impl NoiseIncrement {
    /// Assembles the `2N×2N` increment `[[𝔞_+, 𝔟], [𝔟*, 𝔞_−]]`.
    pub fn full_matrix(&self) -> DMatrix<Complex64> {
        let n = self.da_plus.nrows();
        let mut full = DMatrix::zeros(2 * n, 2 * n);
        full.view_mut((0, 0), (n, n)).copy_from(&self.da_plus);
        full.view_mut((0, n), (n, n)).copy_from(&self.db);
        full.view_mut((n, 0), (n, n)).copy_from(&self.db.adjoint());
        full.view_mut((n, n), (n, n)).copy_from(&self.da_minus);
        full
    }
}

fn check_ds(ds: f64) -> Result<()> {
    if !(ds >= 0.0) {
        return Err(Error::Domain(format!("increment length must be >= 0, got {ds}")));
    }
    Ok(())
}

/// Draws one anti-hermitian corner-block increment over `ds`.
///
/// Draw order (fixed for reproducibility): rows `μ = 1..N`, for each
/// `ν = μ..N`; one normal for the imaginary diagonal, a (re, im) pair above
/// the diagonal. Entries below the diagonal mirror as `−conj`.
pub fn sample_a_increment(
    class: SymmetryClass,
    ds: f64,
    stream: &mut NoiseStream,
) -> Result<DMatrix<Complex64>> {
    check_ds(ds)?;
    let n = class.channels();
    let off = (ds / (2.0 * n as f64)).sqrt();
    let diag = (ds / n as f64).sqrt();
    let mut draws = vec![0.0; n * n];
    stream.fill_standard_normals(&mut draws);
    let mut m = DMatrix::zeros(n, n);
    let mut next = 0;
    for mu in 0..n {
        for nu in mu..n {
            if mu == nu {
                m[(mu, mu)] = Complex64::new(0.0, diag * draws[next]);
                next += 1;
            } else {
                let z = Complex64::new(off * draws[next], off * draws[next + 1]);
                next += 2;
                m[(mu, nu)] = z;
                m[(nu, mu)] = -z.conj();
            }
        }
    }
    Ok(m)
}

/// Draws one channel-coupling block increment over `ds`.
///
/// β = 1 returns a complex symmetric matrix (upper triangle drawn row-major,
/// one (re, im) pair per entry, mirrored without conjugation); β = 2 draws
/// every entry independently, row-major.
pub fn sample_b_increment(
    class: SymmetryClass,
    ds: f64,
    stream: &mut NoiseStream,
) -> Result<DMatrix<Complex64>> {
    check_ds(ds)?;
    let n = class.channels();
    let mut m = DMatrix::zeros(n, n);
    match class.beta() {
        1 => {
            let off = (ds / (2.0 * (n as f64 + 1.0))).sqrt();
            let diag = (ds / (n as f64 + 1.0)).sqrt();
            let mut draws = vec![0.0; n * (n + 1)];
            stream.fill_standard_normals(&mut draws);
            let mut next = 0;
            for mu in 0..n {
                for nu in mu..n {
                    let scale = if mu == nu { diag } else { off };
                    let z = Complex64::new(scale * draws[next], scale * draws[next + 1]);
                    next += 2;
                    m[(mu, nu)] = z;
                    m[(nu, mu)] = z;
                }
            }
        }
        _ => {
            let part = (ds / (2.0 * n as f64)).sqrt();
            let mut draws = vec![0.0; 2 * n * n];
            stream.fill_standard_normals(&mut draws);
            let mut next = 0;
            for mu in 0..n {
                for nu in 0..n {
                    m[(mu, nu)] = Complex64::new(part * draws[next], part * draws[next + 1]);
                    next += 2;
                }
            }
        }
    }
    Ok(m)
}

/// Draws the full block increment, enforcing the class couplings:
/// `𝔞_− = conj(𝔞_+)` for β = 1, independent `𝔞_−` for β = 2.
/// Block order on the stream: `𝔞_+`, then `𝔞_−` (β = 2 only), then `𝔟`.
pub fn assemble_l_increment(
    class: SymmetryClass,
    ds: f64,
    stream: &mut NoiseStream,
) -> Result<NoiseIncrement> {
    let da_plus = sample_a_increment(class, ds, stream)?;
    let da_minus = match class.beta() {
        1 => da_plus.map(|z| z.conj()),
        _ => sample_a_increment(class, ds, stream)?,
    };
    let db = sample_b_increment(class, ds, stream)?;
    Ok(NoiseIncrement { da_plus, da_minus, db, ds })
}

/// Rescales the real diagonal of a `𝔟` increment into standard Brownian
/// increments: `ΔB_k = −√γ · Re 𝔟_kk`, with `Var(ΔB_k) = ds`.
pub fn driving_brownian(db_diag_real: &[f64], class: SymmetryClass) -> Vec<f64> {
    let scale = -class.gamma().sqrt();
    db_diag_real.iter().map(|&x| scale * x).collect()
}
