//! Adaptive Euler–Maruyama integrator for ordered interacting particles.
//!
//! Step-size policy: every particle is guarded by its local gap (the
//! smaller of its two neighbor/boundary margins): a proposal of size `Δ`
//! must satisfy `|v_k| Δ ≤ η·gap_k` and `D_k √Δ ≤ η·gap_k`. The resulting
//! ceiling is rounded down to `dt_base / 2^m`, so step sequences are dyadic
//! and insensitive to last-ulp coefficient noise. A proposal that leaves
//! the ordered domain is rejected and the step halved.
//!
//! Noise addressing: each (accepted-step index, halving level) owns a
//! pre-committed block of the stream, seeked in O(1), so the draw a level
//! sees never depends on the acceptance history. Halving redraws from the
//! next level's block; no Brownian-bridge conditioning.

use crate::noise::{normal_block_words, NoiseStream};
use crate::sde::coeffs::{dmpk_drift_diffusion_into, lambda_coefficients_into};
use crate::sde::{degenerate_start, CoulombSystem};
use crate::{Chart, Error, Result, SolverConfig, SymmetryClass, TransmissionState};

/// The eigenvalue integrator hands a path to the reciprocal chart once the
/// smallest transmission value drops below this.
const CHART_SWITCH_T_MIN: f64 = 1e-8;

/// Acceptance barrier at the perfect-transmission wall. The wall distance
/// `1 − T` is a critical squared-Bessel process (its logarithm is driftless),
/// so paths make arbitrarily deep log-excursions towards the wall; resolving
/// them costs steps proportional to the inverse depth while moving every
/// observable by less than the depth itself. Proposals bounce here instead.
/// Guards keep using the physical boundary, so the step size never collapses
/// against the barrier itself.
pub(crate) const WALL_MARGIN: f64 = 1e-6;

/// Minimum relative gap a proposal may leave between adjacent particles.
/// Adjacent gaps of the time-reversal-symmetric class are themselves
/// critical Bessel processes (the repulsion bound is met with equality), so
/// excursions towards coincidence are bounced here, well below every
/// observable scale but far above coordinate resolution.
const GAP_MARGIN: f64 = 1e-12;

/// One recorded path: states at the requested grid lengths plus step
/// accounting and the seed identity that reproduces it.
#[derive(Debug, Clone)]
pub struct PathRecord {
    grid: Vec<f64>,
    states: Vec<Vec<f64>>,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    /// Smallest local margin (gaps and, for bounded systems, boundary
    /// distances) seen over all accepted states, in the active chart.
    pub min_gap_seen: f64,
    pub master_seed: u64,
    pub path_index: u64,
}

impl PathRecord {
    fn new(master_seed: u64, path_index: u64) -> Self {
        Self {
            grid: Vec::new(),
            states: Vec::new(),
            accepted_steps: 0,
            rejected_steps: 0,
            min_gap_seen: f64::INFINITY,
            master_seed,
            path_index,
        }
    }

    fn push(&mut self, s: f64, state: Vec<f64>) {
        debug_assert!(self.grid.last().is_none_or(|&last| s > last));
        self.grid.push(s);
        self.states.push(state);
    }

    /// Strictly increasing recording grid.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Recorded coordinate vectors, one per grid entry (transmission picture
    /// for the eigenvalue solvers).
    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn state_at(&self, i: usize) -> (&f64, &[f64]) {
        (&self.grid[i], &self.states[i])
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

pub(crate) trait ParticleDynamics {
    fn eval(&self, x: &[f64], v: &mut [f64], d: &mut [f64]);
    /// Physical boundaries; set the length scale of the step-size guards.
    fn bounds(&self) -> (f64, f64);
    /// Boundaries a proposal must respect; may sit a microscopic margin
    /// inside the physical ones.
    fn accept_bounds(&self) -> (f64, f64) {
        self.bounds()
    }
    /// The driving-noise component seen by particle `k`; charts may permute
    /// and flip the shared draws.
    fn noise_component(&self, xi: &[f64], k: usize) -> f64 {
        xi[k]
    }
}

struct DmpkDynamics {
    class: SymmetryClass,
}

impl ParticleDynamics for DmpkDynamics {
    fn eval(&self, x: &[f64], v: &mut [f64], d: &mut [f64]) {
        dmpk_drift_diffusion_into(x, self.class, v, d);
    }
    fn bounds(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn accept_bounds(&self) -> (f64, f64) {
        (0.0, 1.0 - WALL_MARGIN)
    }
}

/// Reciprocal chart on the ascending array `u_i = 1/t_{n−1−i}`; the noise
/// component flips index and sign so a shared draw drives the same
/// continuum Brownian motion in both charts.
struct LambdaDynamics {
    class: SymmetryClass,
}

impl ParticleDynamics for LambdaDynamics {
    fn eval(&self, x: &[f64], v: &mut [f64], d: &mut [f64]) {
        lambda_coefficients_into(x, self.class, v, d);
    }
    fn bounds(&self) -> (f64, f64) {
        (1.0, f64::INFINITY)
    }
    fn accept_bounds(&self) -> (f64, f64) {
        (1.0 + WALL_MARGIN, f64::INFINITY)
    }
    fn noise_component(&self, xi: &[f64], k: usize) -> f64 {
        -xi[xi.len() - 1 - k]
    }
}

struct CoulombDynamics<'a> {
    system: &'a CoulombSystem,
}

impl ParticleDynamics for CoulombDynamics<'_> {
    fn eval(&self, x: &[f64], v: &mut [f64], d: &mut [f64]) {
        self.system.smooth_drift_into(x, v);
        let n = x.len();
        for k in 0..n {
            for l in 0..n {
                if l != k {
                    v[k] += self.system.pair_coefficient(x, k, l) / (x[k] - x[l]);
                }
            }
        }
        self.system.diffusion_into(x, d);
    }
    fn bounds(&self) -> (f64, f64) {
        self.system
            .bounds()
            .unwrap_or((f64::NEG_INFINITY, f64::INFINITY))
    }
    fn accept_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.bounds();
        let (mlo, mhi) = self.system.wall_margins();
        (lo + mlo, hi - mhi)
    }
}

/// Pre-committed window addressing over a stream.
struct WindowCtx<'a> {
    stream: &'a mut NoiseStream,
    origin: u128,
    words_per_level: u128,
    levels_per_step: u128,
    step_index: u64,
}

impl<'a> WindowCtx<'a> {
    fn new(stream: &'a mut NoiseStream, particles: usize, max_halvings: u32) -> Self {
        let origin = stream.word_pos();
        Self {
            stream,
            origin,
            words_per_level: normal_block_words(particles),
            levels_per_step: u128::from(max_halvings) + 1,
            step_index: 0,
        }
    }

    fn level_normals(&mut self, level: u32, out: &mut [f64]) {
        let base = self.origin
            + u128::from(self.step_index) * self.words_per_level * self.levels_per_step
            + u128::from(level) * self.words_per_level;
        self.stream.seek_words(base);
        self.stream.fill_standard_normals(out);
    }

    fn finish_step(&mut self) {
        self.step_index += 1;
    }
}

fn local_gap(x: &[f64], k: usize, lo: f64, hi: f64) -> f64 {
    let left = if k == 0 { x[0] - lo } else { x[k] - x[k - 1] };
    let right = if k + 1 == x.len() { hi - x[k] } else { x[k + 1] - x[k] };
    left.min(right)
}

fn min_local_gap(x: &[f64], lo: f64, hi: f64) -> f64 {
    (0..x.len()).fold(f64::INFINITY, |m, k| m.min(local_gap(x, k, lo, hi)))
}

fn guard_ceiling(x: &[f64], v: &[f64], d: &[f64], eta: f64, lo: f64, hi: f64, cap: f64) -> f64 {
    let mut dt = cap;
    for k in 0..x.len() {
        let guard = eta * local_gap(x, k, lo, hi);
        let vk = v[k].abs();
        if vk > 0.0 {
            dt = dt.min(guard / vk);
        }
        let dk = d[k].abs();
        if dk > 0.0 {
            let q = guard / dk;
            dt = dt.min(q * q);
        }
    }
    dt
}

/// Rounds `raw` down onto the dyadic ladder `dt_base / 2^m`.
fn quantize_dt(dt_base: f64, raw: f64) -> f64 {
    if raw >= dt_base {
        return dt_base;
    }
    let floor = dt_base * 2.0f64.powi(-400);
    let mut dt = dt_base;
    while dt > raw && dt > floor {
        dt *= 0.5;
    }
    dt
}

fn proposal_valid(y: &[f64], lo: f64, hi: f64) -> bool {
    if !(y[0] > lo && y[y.len() - 1] < hi) {
        return false;
    }
    y.windows(2)
        .all(|w| w[1] - w[0] > GAP_MARGIN * w[0].abs().max(1.0))
}

/// Compensated wire-length accumulator: deep repulsion excursions force
/// steps far below one ulp of `s`, which a bare `s += dt` would swallow.
#[derive(Debug, Clone, Copy)]
struct LengthAccumulator {
    s: f64,
    carry: f64,
}

impl LengthAccumulator {
    fn new(s: f64) -> Self {
        Self { s, carry: 0.0 }
    }

    fn value(&self) -> f64 {
        self.s
    }

    fn add(&mut self, dt: f64) {
        let y = dt - self.carry;
        let t = self.s + y;
        self.carry = (t - self.s) - y;
        self.s = t;
    }

    fn set(&mut self, s: f64) {
        self.s = s;
        self.carry = 0.0;
    }
}

struct StepBuffers {
    v: Vec<f64>,
    d: Vec<f64>,
    y: Vec<f64>,
    xi: Vec<f64>,
}

impl StepBuffers {
    fn new(n: usize) -> Self {
        Self {
            v: vec![0.0; n],
            d: vec![0.0; n],
            y: vec![0.0; n],
            xi: vec![0.0; n],
        }
    }
}

/// One accepted adaptive step towards `s_target`; `x`/`s` are updated in
/// place and the window counter advances by exactly one step.
#[allow(clippy::too_many_arguments)]
fn adaptive_step<D: ParticleDynamics>(
    dynamics: &D,
    cfg: &SolverConfig,
    x: &mut [f64],
    s: &mut LengthAccumulator,
    s_target: f64,
    ctx: &mut WindowCtx,
    bufs: &mut StepBuffers,
    rec: &mut PathRecord,
) -> Result<()> {
    let (lo, hi) = dynamics.bounds();
    let (accept_lo, accept_hi) = dynamics.accept_bounds();
    dynamics.eval(x, &mut bufs.v, &mut bufs.d);
    let raw = guard_ceiling(x, &bufs.v, &bufs.d, cfg.eta_gap, lo, hi, cfg.dt_base);
    if !(raw > 0.0) {
        return Err(Error::StepFailure {
            s: s.value(),
            halvings: 0,
            min_gap: min_local_gap(x, lo, hi),
            state: x.to_vec(),
        });
    }
    let dt0 = quantize_dt(cfg.dt_base, raw);
    let remaining = s_target - s.value();
    let clamped = remaining.is_finite() && dt0 >= remaining;
    let dt_top = if clamped { remaining } else { dt0 };

    for level in 0..=cfg.max_halvings {
        let dt = dt_top * 2.0f64.powi(-(level as i32));
        ctx.level_normals(level, &mut bufs.xi);
        let sq = dt.sqrt();
        for k in 0..x.len() {
            bufs.y[k] =
                x[k] + bufs.v[k] * dt + bufs.d[k] * sq * dynamics.noise_component(&bufs.xi, k);
        }
        if proposal_valid(&bufs.y, accept_lo, accept_hi) {
            x.copy_from_slice(&bufs.y);
            if clamped && level == 0 {
                s.set(s_target);
            } else {
                s.add(dt);
            }
            ctx.finish_step();
            rec.accepted_steps += 1;
            rec.min_gap_seen = rec.min_gap_seen.min(min_local_gap(x, lo, hi));
            return Ok(());
        }
        rec.rejected_steps += 1;
    }
    Err(Error::StepFailure {
        s: s.value(),
        halvings: cfg.max_halvings,
        min_gap: min_local_gap(x, lo, hi),
        state: x.to_vec(),
    })
}

/// Lockstep variant: both systems see the same draw and the joint (more
/// conservative) step size; a step is accepted only if both proposals stay
/// in their domains.
#[allow(clippy::too_many_arguments)]
fn adaptive_step_pair<A: ParticleDynamics, B: ParticleDynamics>(
    a: &A,
    b: &B,
    cfg: &SolverConfig,
    xa: &mut [f64],
    xb: &mut [f64],
    s: &mut LengthAccumulator,
    s_target: f64,
    ctx: &mut WindowCtx,
    ba: &mut StepBuffers,
    bb: &mut StepBuffers,
    rec: &mut PathRecord,
) -> Result<()> {
    let (alo, ahi) = a.bounds();
    let (blo, bhi) = b.bounds();
    let (a_alo, a_ahi) = a.accept_bounds();
    let (b_alo, b_ahi) = b.accept_bounds();
    a.eval(xa, &mut ba.v, &mut ba.d);
    b.eval(xb, &mut bb.v, &mut bb.d);
    let raw = guard_ceiling(xa, &ba.v, &ba.d, cfg.eta_gap, alo, ahi, cfg.dt_base)
        .min(guard_ceiling(xb, &bb.v, &bb.d, cfg.eta_gap, blo, bhi, cfg.dt_base));
    if !(raw > 0.0) {
        return Err(Error::StepFailure {
            s: s.value(),
            halvings: 0,
            min_gap: min_local_gap(xa, alo, ahi),
            state: xa.to_vec(),
        });
    }
    let dt0 = quantize_dt(cfg.dt_base, raw);
    let remaining = s_target - s.value();
    let clamped = remaining.is_finite() && dt0 >= remaining;
    let dt_top = if clamped { remaining } else { dt0 };

    for level in 0..=cfg.max_halvings {
        let dt = dt_top * 2.0f64.powi(-(level as i32));
        ctx.level_normals(level, &mut ba.xi);
        bb.xi.copy_from_slice(&ba.xi);
        let sq = dt.sqrt();
        for k in 0..xa.len() {
            ba.y[k] = xa[k] + ba.v[k] * dt + ba.d[k] * sq * a.noise_component(&ba.xi, k);
        }
        for k in 0..xb.len() {
            bb.y[k] = xb[k] + bb.v[k] * dt + bb.d[k] * sq * b.noise_component(&bb.xi, k);
        }
        if proposal_valid(&ba.y, a_alo, a_ahi) && proposal_valid(&bb.y, b_alo, b_ahi) {
            xa.copy_from_slice(&ba.y);
            xb.copy_from_slice(&bb.y);
            if clamped && level == 0 {
                s.set(s_target);
            } else {
                s.add(dt);
            }
            ctx.finish_step();
            rec.accepted_steps += 1;
            rec.min_gap_seen = rec
                .min_gap_seen
                .min(min_local_gap(xa, alo, ahi))
                .min(min_local_gap(xb, blo, bhi));
            return Ok(());
        }
        rec.rejected_steps += 1;
    }
    Err(Error::StepFailure {
        s: s.value(),
        halvings: cfg.max_halvings,
        min_gap: min_local_gap(xa, alo, ahi),
        state: xa.to_vec(),
    })
}

fn effective_grid(grid: &[f64], s0: f64, s_end: f64) -> Result<Vec<f64>> {
    if !s_end.is_finite() || s_end < s0 {
        return Err(Error::Domain(format!(
            "end length {s_end} must be finite and >= start {s0}"
        )));
    }
    let mut g: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|s| s.is_finite() && *s >= s0 && *s <= s_end)
        .collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    if g.is_empty() {
        g.push(s_end);
    }
    Ok(g)
}

fn t_to_lambda_ascending(t: &[f64]) -> Vec<f64> {
    t.iter().rev().map(|&x| 1.0 / x).collect()
}

fn lambda_ascending_to_t(u: &[f64]) -> Vec<f64> {
    u.iter().rev().map(|&x| 1.0 / x).collect()
}

fn resolve_start(
    t0: &TransmissionState,
    class: SymmetryClass,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    if t0.channels() != class.channels() {
        return Err(Error::Domain(format!(
            "state has {} channels, class has {}",
            t0.channels(),
            class.channels()
        )));
    }
    if t0.values().iter().all(|&x| x == 1.0) {
        if t0.s() != 0.0 {
            return Err(Error::Domain(
                "degenerate all-ones start is only meaningful at s = 0".into(),
            ));
        }
        let n = config.resolved_degenerate_n(class.channels());
        return Ok(degenerate_start(class, n)?.values().to_vec());
    }
    if !t0.in_open_domain(0.0) {
        return Err(Error::Domain(
            "start must lie strictly inside the ordered open set, or be fully degenerate".into(),
        ));
    }
    Ok(t0.values().to_vec())
}

fn check_start_clears_wall(x: &[f64]) -> Result<()> {
    let top = *x.last().expect("nonempty");
    if top > 1.0 - 2.0 * WALL_MARGIN {
        return Err(Error::Domain(format!(
            "start value {top} sits inside the wall acceptance margin {WALL_MARGIN:.0e}"
        )));
    }
    Ok(())
}

/// Integrates one transmission-eigenvalue path from `t0` (interior, or the
/// degenerate all-ones start, which is replaced by the ladder state) and
/// records the states on the configured grid, in ascending `T` coordinates.
pub fn solve_path(
    t0: &TransmissionState,
    s_end: f64,
    class: SymmetryClass,
    config: &SolverConfig,
    stream: &mut NoiseStream,
) -> Result<PathRecord> {
    config.validate()?;
    let n = class.channels();
    let mut x = resolve_start(t0, class, config)?;
    check_start_clears_wall(&x)?;
    let mut s = LengthAccumulator::new(t0.s());
    let grid = effective_grid(&config.record_grid, s.value(), s_end)?;

    let mut chart = config.coordinate_chart;
    if chart == Chart::Lambda {
        x = t_to_lambda_ascending(&x);
    }
    let mut rec = PathRecord::new(stream.master_seed(), stream.path_index());
    let mut ctx = WindowCtx::new(stream, n, config.max_halvings);
    let mut bufs = StepBuffers::new(n);
    let t_dyn = DmpkDynamics { class };
    let l_dyn = LambdaDynamics { class };

    for &target in &grid {
        while s.value() < target {
            match chart {
                Chart::Transmission => {
                    adaptive_step(&t_dyn, config, &mut x, &mut s, target, &mut ctx, &mut bufs, &mut rec)?;
                    if x[0] < CHART_SWITCH_T_MIN {
                        x = t_to_lambda_ascending(&x);
                        chart = Chart::Lambda;
                    }
                }
                Chart::Lambda => {
                    adaptive_step(&l_dyn, config, &mut x, &mut s, target, &mut ctx, &mut bufs, &mut rec)?;
                }
            }
        }
        let state = match chart {
            Chart::Transmission => x.clone(),
            Chart::Lambda => lambda_ascending_to_t(&x),
        };
        rec.push(target, state);
    }
    Ok(rec)
}

/// One accepted adaptive step of the eigenvalue diffusion; `step_index`
/// addresses the pre-committed noise window.
pub fn dmpk_step(
    state: &TransmissionState,
    class: SymmetryClass,
    config: &SolverConfig,
    stream: &mut NoiseStream,
    step_index: u64,
) -> Result<TransmissionState> {
    config.validate()?;
    if state.channels() != class.channels() {
        return Err(Error::Domain("channel count mismatch".into()));
    }
    if !state.in_open_domain(0.0) {
        return Err(Error::Domain("step requires a strictly ordered interior state".into()));
    }
    let mut x = state.values().to_vec();
    let mut s = LengthAccumulator::new(state.s());
    let mut rec = PathRecord::new(stream.master_seed(), stream.path_index());
    let mut ctx = WindowCtx::new(stream, class.channels(), config.max_halvings);
    ctx.step_index = step_index;
    ctx.origin = 0;
    let mut bufs = StepBuffers::new(class.channels());
    adaptive_step(
        &DmpkDynamics { class },
        config,
        &mut x,
        &mut s,
        f64::INFINITY,
        &mut ctx,
        &mut bufs,
        &mut rec,
    )?;
    TransmissionState::new(s.value(), x)
}

/// Integrates a generic Coulomb-repulsion system from the strictly ordered
/// `x0`, with the same guard and rejection policy as the eigenvalue solver.
pub fn solve_coulomb(
    system: &CoulombSystem,
    x0: &[f64],
    s_end: f64,
    config: &SolverConfig,
    stream: &mut NoiseStream,
) -> Result<PathRecord> {
    config.validate()?;
    if x0.len() != system.dimension() {
        return Err(Error::Domain("initial state dimension mismatch".into()));
    }
    if x0.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("initial coordinates must be strictly ascending".into()));
    }
    let dynamics = CoulombDynamics { system };
    let (lo, hi) = dynamics.bounds();
    if !(x0[0] > lo && x0[x0.len() - 1] < hi) {
        return Err(Error::Domain("initial coordinates must lie strictly inside the bounds".into()));
    }
    let mut x = x0.to_vec();
    let mut s = LengthAccumulator::new(0.0);
    let grid = effective_grid(&config.record_grid, s.value(), s_end)?;
    let mut rec = PathRecord::new(stream.master_seed(), stream.path_index());
    let mut ctx = WindowCtx::new(stream, x.len(), config.max_halvings);
    let mut bufs = StepBuffers::new(x.len());
    for &target in &grid {
        while s.value() < target {
            adaptive_step(&dynamics, config, &mut x, &mut s, target, &mut ctx, &mut bufs, &mut rec)?;
        }
        rec.push(target, x.clone());
    }
    Ok(rec)
}

/// Integrates two eigenvalue paths against the identical draw sequence in
/// lockstep (shared step sizes, shared normals). Initial componentwise
/// ordering `low_j < high_j` is required; whether it is conserved is up to
/// the dynamics and can be read off the records.
pub fn solve_pair_dmpk(
    low: &TransmissionState,
    high: &TransmissionState,
    s_end: f64,
    class: SymmetryClass,
    config: &SolverConfig,
    stream: &mut NoiseStream,
) -> Result<(PathRecord, PathRecord)> {
    config.validate()?;
    if low.channels() != class.channels() || high.channels() != class.channels() {
        return Err(Error::Domain("channel count mismatch".into()));
    }
    if !low.in_open_domain(0.0) || !high.in_open_domain(0.0) {
        return Err(Error::Domain("both starts must be strictly ordered interior states".into()));
    }
    if low
        .values()
        .iter()
        .zip(high.values())
        .any(|(l, h)| l >= h)
    {
        return Err(Error::Domain(
            "componentwise ordering low_j < high_j required at the start".into(),
        ));
    }
    let n = class.channels();
    let mut xl = low.values().to_vec();
    let mut xh = high.values().to_vec();
    let mut s = LengthAccumulator::new(0.0);
    let grid = effective_grid(&config.record_grid, s.value(), s_end)?;
    let mut rec_l = PathRecord::new(stream.master_seed(), stream.path_index());
    let mut rec_h = PathRecord::new(stream.master_seed(), stream.path_index());
    let mut ctx = WindowCtx::new(stream, n, config.max_halvings);
    let (mut bl, mut bh) = (StepBuffers::new(n), StepBuffers::new(n));
    let dynamics = DmpkDynamics { class };
    for &target in &grid {
        while s.value() < target {
            adaptive_step_pair(
                &dynamics, &dynamics, config, &mut xl, &mut xh, &mut s, target, &mut ctx, &mut bl,
                &mut bh, &mut rec_l,
            )?;
        }
        rec_l.push(target, xl.clone());
        rec_h.push(target, xh.clone());
    }
    rec_h.accepted_steps = rec_l.accepted_steps;
    rec_h.rejected_steps = rec_l.rejected_steps;
    Ok((rec_l, rec_h))
}

/// Integrates the same initial state in the `T` chart and in the `λ` chart
/// against the identical draw sequence in lockstep; both records are
/// reported in `T` coordinates.
pub fn solve_chart_pair(
    t0: &TransmissionState,
    s_end: f64,
    class: SymmetryClass,
    config: &SolverConfig,
    stream: &mut NoiseStream,
) -> Result<(PathRecord, PathRecord)> {
    config.validate()?;
    if t0.channels() != class.channels() {
        return Err(Error::Domain("channel count mismatch".into()));
    }
    if !t0.in_open_domain(0.0) {
        return Err(Error::Domain("chart comparison needs a strictly ordered interior start".into()));
    }
    let n = class.channels();
    let mut xt = t0.values().to_vec();
    let mut xu = t_to_lambda_ascending(&xt);
    let mut s = LengthAccumulator::new(t0.s());
    let grid = effective_grid(&config.record_grid, s.value(), s_end)?;
    let mut rec_t = PathRecord::new(stream.master_seed(), stream.path_index());
    let mut rec_u = PathRecord::new(stream.master_seed(), stream.path_index());
    let mut ctx = WindowCtx::new(stream, n, config.max_halvings);
    let (mut bt, mut bu) = (StepBuffers::new(n), StepBuffers::new(n));
    let t_dyn = DmpkDynamics { class };
    let l_dyn = LambdaDynamics { class };
    for &target in &grid {
        while s.value() < target {
            adaptive_step_pair(
                &t_dyn, &l_dyn, config, &mut xt, &mut xu, &mut s, target, &mut ctx, &mut bt,
                &mut bu, &mut rec_t,
            )?;
        }
        rec_t.push(target, xt.clone());
        rec_u.push(target, lambda_ascending_to_t(&xu));
    }
    rec_u.accepted_steps = rec_t.accepted_steps;
    rec_u.rejected_steps = rec_t.rejected_steps;
    Ok((rec_t, rec_u))
}

/// A Brownian path tabulated on a uniform fine grid, for coupling
/// integrations at different step sizes to the same noise.
#[derive(Debug, Clone)]
pub struct BrownianTable {
    channels: usize,
    cell_dt: f64,
    cells: usize,
    xi: Vec<f64>,
}

impl BrownianTable {
    pub fn generate(channels: usize, cell_dt: f64, cells: usize, stream: &mut NoiseStream) -> Result<Self> {
        if !(cell_dt > 0.0) || channels == 0 || cells == 0 {
            return Err(Error::Domain("table needs positive cell size, channels, cells".into()));
        }
        let mut xi = vec![0.0; channels * cells];
        stream.fill_standard_normals(&mut xi);
        Ok(Self { channels, cell_dt, cells, xi })
    }

    pub fn cell_dt(&self) -> f64 {
        self.cell_dt
    }

    pub fn span(&self) -> f64 {
        self.cell_dt * self.cells as f64
    }

    /// Brownian increment over cells `[cell0, cell0 + count)`.
    fn increment_into(&self, cell0: usize, count: usize, out: &mut [f64]) {
        out.fill(0.0);
        for c in cell0..cell0 + count {
            let row = &self.xi[c * self.channels..(c + 1) * self.channels];
            for (o, &z) in out.iter_mut().zip(row) {
                *o += z;
            }
        }
        let scale = self.cell_dt.sqrt();
        for o in out.iter_mut() {
            *o *= scale;
        }
    }
}

/// Fixed-step Euler integration of the eigenvalue diffusion driven by a
/// shared Brownian table; `dt` must be an integer multiple of the table
/// cell. Used for strong self-convergence studies; a proposal that leaves
/// the domain is an error here, not a retry.
pub fn solve_path_driven(
    t0: &TransmissionState,
    s_end: f64,
    class: SymmetryClass,
    dt: f64,
    table: &BrownianTable,
) -> Result<TransmissionState> {
    if t0.channels() != class.channels() || table.channels != class.channels() {
        return Err(Error::Domain("channel count mismatch".into()));
    }
    if !t0.in_open_domain(0.0) {
        return Err(Error::Domain("driven integration needs an interior start".into()));
    }
    let cells_per_step = dt / table.cell_dt;
    let m = cells_per_step.round();
    if !(m >= 1.0) || (cells_per_step - m).abs() > 1e-9 * m {
        return Err(Error::Domain(format!(
            "dt = {dt} is not an integer multiple of the table cell {}",
            table.cell_dt
        )));
    }
    let m = m as usize;
    let steps_f = s_end / dt;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-9 * steps.max(1.0) {
        return Err(Error::Domain(format!("s_end = {s_end} is not an integer multiple of dt = {dt}")));
    }
    let steps = steps as usize;
    if steps * m > table.cells {
        return Err(Error::Domain("table does not cover the requested span".into()));
    }
    let n = class.channels();
    let mut x = t0.values().to_vec();
    let mut bufs = StepBuffers::new(n);
    let mut dw = vec![0.0; n];
    for step in 0..steps {
        dmpk_drift_diffusion_into(&x, class, &mut bufs.v, &mut bufs.d);
        table.increment_into(step * m, m, &mut dw);
        for k in 0..n {
            bufs.y[k] = x[k] + bufs.v[k] * dt + bufs.d[k] * dw[k];
        }
        if !proposal_valid(&bufs.y, 0.0, 1.0 - WALL_MARGIN) {
            return Err(Error::StepFailure {
                s: step as f64 * dt,
                halvings: 0,
                min_gap: min_local_gap(&x, 0.0, 1.0),
                state: x.to_vec(),
            });
        }
        x.copy_from_slice(&bufs.y);
    }
    TransmissionState::new(s_end, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::dmpk_as_coulomb;
    use crate::state::in_open_domain;

    fn class(beta: u8, n: usize) -> SymmetryClass {
        SymmetryClass::new(beta, n).unwrap()
    }

    fn cfg(grid: &[f64]) -> SolverConfig {
        SolverConfig { record_grid: grid.to_vec(), ..SolverConfig::default() }
    }

    #[test]
    fn quantize_keeps_dyadic_ladder() {
        assert_eq!(quantize_dt(0.01, 0.02), 0.01);
        assert_eq!(quantize_dt(0.01, 0.01), 0.01);
        assert_eq!(quantize_dt(0.01, 0.009), 0.005);
        assert_eq!(quantize_dt(0.01, 1.3e-6), 0.01 * 2.0f64.powi(-13));
    }

    #[test]
    fn zero_system_path_is_constant() {
        let zero = CoulombSystem::new(
            3,
            |_x, out: &mut [f64]| out.fill(0.0),
            |_x, _k, _l| 0.0,
            |_x, out: &mut [f64]| out.fill(0.0),
        );
        let mut stream = NoiseStream::new(5, 0);
        let rec = solve_coulomb(&zero, &[-1.0, 0.5, 2.0], 3.0, &cfg(&[1.0, 2.0, 3.0]), &mut stream).unwrap();
        for (_, state) in (0..rec.len()).map(|i| rec.state_at(i)) {
            assert_eq!(state, &[-1.0, 0.5, 2.0]);
        }
    }

    #[test]
    fn zero_length_records_only_start() {
        let c = class(2, 2);
        let t0 = TransmissionState::new(0.0, vec![0.3, 0.7]).unwrap();
        let mut stream = NoiseStream::new(5, 1);
        let rec = solve_path(&t0, 0.0, c, &cfg(&[0.0, 0.5, 1.0]), &mut stream).unwrap();
        assert_eq!(rec.grid(), &[0.0]);
        assert_eq!(rec.states()[0], vec![0.3, 0.7]);
    }

    #[test]
    fn single_channel_mean_decays() {
        // v = −T² < 0 on (0, 1): the ensemble mean must drop.
        let c = class(2, 1);
        let t0 = TransmissionState::new(0.0, vec![0.5]).unwrap();
        let config = cfg(&[1.0]);
        let mut sum = 0.0;
        let paths = 1000;
        for i in 0..paths {
            let mut stream = NoiseStream::new(99, i);
            let rec = solve_path(&t0, 1.0, c, &config, &mut stream).unwrap();
            sum += rec.states()[0][0];
        }
        let mean = sum / paths as f64;
        assert!(mean < 0.45, "mean T(1) = {mean}");
    }

    #[test]
    fn degenerate_start_is_substituted_and_exits() {
        let c = class(2, 4);
        let t0 = TransmissionState::degenerate(4);
        let config = cfg(&[0.01, 0.1]);
        let mut stream = NoiseStream::new(7, 3);
        let rec = solve_path(&t0, 0.1, c, &config, &mut stream).unwrap();
        for i in 0..rec.len() {
            let (_, state) = rec.state_at(i);
            assert!(in_open_domain(state, 0.0), "state {state:?}");
        }
    }

    #[test]
    fn paths_are_reproducible() {
        let c = class(1, 3);
        let t0 = TransmissionState::degenerate(3);
        let config = cfg(&[0.5, 1.0]);
        let run = |seed, idx| {
            let mut stream = NoiseStream::new(seed, idx);
            solve_path(&t0, 1.0, c, &config, &mut stream).unwrap()
        };
        let (a, b, c2) = (run(1, 0), run(1, 0), run(1, 1));
        assert_eq!(a.states(), b.states());
        assert_ne!(a.states(), c2.states());
    }

    #[test]
    fn generic_engine_matches_specialized_on_shared_noise() {
        let c = class(2, 4);
        let system = dmpk_as_coulomb(c);
        let t0 = degenerate_start(c, 9).unwrap();
        let config = cfg(&[0.25, 0.5, 1.0]);
        for idx in 0..4 {
            let mut s1 = NoiseStream::new(31, idx);
            let mut s2 = NoiseStream::new(31, idx);
            let spec = solve_path(&t0, 1.0, c, &config, &mut s1).unwrap();
            let gen = solve_coulomb(&system, t0.values(), 1.0, &config, &mut s2).unwrap();
            assert_eq!(spec.grid(), gen.grid());
            for i in 0..spec.len() {
                for (a, b) in spec.states()[i].iter().zip(&gen.states()[i]) {
                    assert!((a - b).abs() <= 1e-12, "|{a} - {b}| too large");
                }
            }
        }
    }

    #[test]
    fn coupled_pair_keeps_componentwise_order() {
        let c = class(2, 3);
        let low = TransmissionState::new(0.0, vec![0.2, 0.4, 0.6]).unwrap();
        let high = TransmissionState::new(0.0, vec![0.25, 0.45, 0.65]).unwrap();
        let config = cfg(&[0.5, 1.0, 2.0]);
        for idx in 0..16 {
            let mut stream = NoiseStream::new(13, idx);
            let (rl, rh) = solve_pair_dmpk(&low, &high, 2.0, c, &config, &mut stream).unwrap();
            for i in 0..rl.len() {
                for (l, h) in rl.states()[i].iter().zip(&rh.states()[i]) {
                    assert!(l < h, "ordering violated: {l} >= {h}");
                }
            }
        }
    }

    #[test]
    fn chart_pair_stays_close() {
        let c = class(2, 3);
        let t0 = TransmissionState::new(0.0, vec![0.25, 0.5, 0.75]).unwrap();
        let config = SolverConfig {
            record_grid: vec![0.25],
            dt_base: 1e-3,
            ..SolverConfig::default()
        };
        let mut worst: f64 = 0.0;
        for idx in 0..24 {
            let mut stream = NoiseStream::new(101, idx);
            let (rt, ru) = solve_chart_pair(&t0, 0.25, c, &config, &mut stream).unwrap();
            for i in 0..rt.len() {
                for (a, b) in rt.states()[i].iter().zip(&ru.states()[i]) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        // strong-order-1/2 envelope at dt <= 1e-3: C sqrt(dt) with C = 3
        assert!(worst < 3.0 * 1e-3f64.sqrt(), "worst chart gap {worst}");
        assert!(worst > 0.0);
    }

    #[test]
    fn lambda_chart_from_config_agrees_in_law_smoke() {
        let c = class(2, 2);
        let t0 = TransmissionState::new(0.0, vec![0.4, 0.8]).unwrap();
        let config = SolverConfig {
            record_grid: vec![0.5],
            coordinate_chart: Chart::Lambda,
            ..SolverConfig::default()
        };
        let mut stream = NoiseStream::new(3, 0);
        let rec = solve_path(&t0, 0.5, c, &config, &mut stream).unwrap();
        assert!(in_open_domain(&rec.states()[0], 0.0));
    }

    #[test]
    fn driven_self_convergence_is_strong_order_half() {
        let c = class(2, 2);
        let t0 = TransmissionState::new(0.0, vec![0.3, 0.7]).unwrap();
        let s_end = 0.25;
        let cell = s_end / 1024.0;
        let paths = 100;
        let mut used = 0u32;
        let mut err_coarse = 0.0; // dt = 16 cells
        let mut err_fine = 0.0; // dt = 2 cells
        for i in 0..paths {
            let mut stream = NoiseStream::new(2718, i);
            let table = BrownianTable::generate(2, cell, 1024, &mut stream).unwrap();
            // fixed-step proposals can exit near the walls on rare paths;
            // those are skipped, the ratio is measured on the survivors
            let levels = [1.0, 16.0, 2.0].map(|m| solve_path_driven(&t0, s_end, c, cell * m, &table));
            let [Ok(reference), Ok(coarse), Ok(fine)] = levels else { continue };
            let g = |st: &TransmissionState| st.values().iter().sum::<f64>();
            err_coarse += (g(&coarse) - g(&reference)).abs();
            err_fine += (g(&fine) - g(&reference)).abs();
            used += 1;
        }
        assert!(used >= 90, "too many wall exits: {used} of {paths} usable");
        err_coarse /= f64::from(used);
        err_fine /= f64::from(used);
        // dt ratio is 8, so order 1/2 predicts a factor ~2.8; allow wide slack
        let ratio = err_coarse / err_fine;
        assert!(ratio > 1.5, "ratio {ratio} too small: {err_coarse} vs {err_fine}");
        // absolute envelope C sqrt(dt) with C = 2 at dt = 16 cells
        assert!(err_coarse < 2.0 * (cell * 16.0).sqrt());
    }

    #[test]
    fn driven_rejects_misaligned_dt() {
        let c = class(2, 1);
        let t0 = TransmissionState::new(0.0, vec![0.5]).unwrap();
        let mut stream = NoiseStream::new(1, 0);
        let table = BrownianTable::generate(1, 0.01, 10, &mut stream).unwrap();
        assert!(solve_path_driven(&t0, 0.1, c, 0.015, &table).is_err());
    }

    #[test]
    fn pair_requires_componentwise_order() {
        let c = class(2, 2);
        let a = TransmissionState::new(0.0, vec![0.3, 0.6]).unwrap();
        let b = TransmissionState::new(0.0, vec![0.2, 0.7]).unwrap();
        let mut stream = NoiseStream::new(0, 0);
        assert!(solve_pair_dmpk(&a, &b, 1.0, c, &cfg(&[1.0]), &mut stream).is_err());
    }

    #[test]
    fn solve_rejects_partial_degeneracy() {
        let c = class(2, 2);
        let t0 = TransmissionState::new(0.0, vec![0.5, 1.0]).unwrap();
        let mut stream = NoiseStream::new(0, 0);
        assert!(solve_path(&t0, 1.0, c, &cfg(&[1.0]), &mut stream).is_err());
    }

    #[test]
    fn dmpk_step_advances_once() {
        let c = class(2, 2);
        let st = TransmissionState::new(0.0, vec![0.3, 0.7]).unwrap();
        let mut stream = NoiseStream::new(17, 0);
        let next = dmpk_step(&st, c, &SolverConfig::default(), &mut stream, 0).unwrap();
        assert!(next.s() > 0.0);
        assert!(next.in_open_domain(0.0));
    }
}
