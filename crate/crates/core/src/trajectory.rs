//! Photon-counting quantum trajectories.
//!
//! Each step evolves with `exp(-i H_eff dt)`, `H_eff = H - (i/2) Σ L_j† L_j`,
//! renormalizes, draws one uniform number and applies at most one jump
//! `L_j` with probability `p_j = <L_j† L_j> dt`. After `t_burn` the state is
//! sampled every `sample_every` steps and the projectors are averaged.
//!
//! Trajectory `k` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `k`,
//! so results do not depend on scheduling. Trajectories are grouped into
//! contiguous batches; batch averages feed jackknife error estimates.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build_mode_operators, build_mode_operators_in, product_vector, Basis, FockSpace};
use crate::kerr::ModeMoments;
use crate::liouvillian::dimer_hamiltonian;
use crate::linalg::{c, propagator, taylor_propagate, CMatrix, CVector, SparseCombination, SparseMatrix, C64, I, ONE, ZERO};
use crate::params::ModelParams;
use crate::state::{DensityMatrix, FidelityReference};

/// Per-step jump probability above which a run is flagged.
pub const JUMP_WARN: f64 = 0.1;
/// Per-step total jump probability counted as an overflow.
pub const JUMP_OVERFLOW: f64 = 0.5;
/// Norm below which a state is considered lost.
pub const NORM_FLOOR: f64 = 1e-200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub t_burn: f64,
    pub t_total: f64,
    /// Steps between samples.
    pub sample_every: usize,
    pub n_traj: usize,
    pub seed: u64,
    /// Number of contiguous trajectory groups used for error estimates.
    pub batches: usize,
    /// Keep `<n_j>` at every sample of every trajectory.
    pub record_series: bool,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_burn: 20.0,
            t_total: 120.0,
            sample_every: 50,
            n_traj: 500,
            seed: 0,
            batches: 20,
            record_series: false,
        }
    }
}

impl TrajectoryConfig {
    /// Same sampling interval in time with a different step.
    pub fn with_dt(mut self, dt: f64) -> Self {
        let interval = self.dt * self.sample_every as f64;
        self.dt = dt;
        self.sample_every = ((interval / dt).round() as usize).max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be > 0".into()));
        }
        if !(self.t_total > self.t_burn && self.t_burn >= 0.0) {
            return Err(Error::InvalidParameter("need 0 <= t_burn < t_total".into()));
        }
        if self.sample_every == 0 || self.n_traj == 0 {
            return Err(Error::InvalidParameter("sample_every and n_traj must be positive".into()));
        }
        if self.batches == 0 || self.batches > self.n_traj {
            return Err(Error::InvalidParameter("batches must lie in 1..=n_traj".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_total / self.dt).round() as usize
    }

    fn burn_steps(&self) -> usize {
        (self.t_burn / self.dt).round() as usize
    }
}

/// A stochastic unraveling: deterministic non-Hermitian drift plus jumps.
pub trait Unraveling: Sync {
    type State: Clone + Send;

    /// Space and basis of sampled vectors.
    fn space(&self) -> &FockSpace;
    fn basis(&self) -> Basis;
    fn channels(&self) -> usize;
    fn initial(&self) -> Self::State;
    /// Non-Hermitian evolution over `dt`, followed by renormalization.
    fn evolve(&self, state: &mut Self::State, dt: f64) -> Result<()>;
    /// `<L_j† L_j>` of the normalized state, per channel.
    fn rates(&self, state: &Self::State, out: &mut [f64]);
    fn jump(&self, state: &mut Self::State, channel: usize) -> Result<()>;
    /// Normalized state vector on [`Unraveling::space`].
    fn sample(&self, state: &Self::State) -> CVector;
    /// Steps rejected and retried with a smaller step (Gaussian closures only).
    fn rejected_steps(&self, _state: &Self::State) -> u64 {
        0
    }
}

/// Sums over one batch of trajectories.
#[derive(Debug, Clone)]
pub struct BatchSummary {
    /// Sum of sampled projectors.
    pub rho_sum: CMatrix,
    pub samples: usize,
    /// Per-mode occupation sums over samples.
    pub occupation_sum: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub index: usize,
    pub jumps: Vec<u64>,
    /// Steps whose total jump probability exceeded [`JUMP_WARN`].
    pub warn_steps: u64,
    pub overflow_steps: u64,
    pub rejected_steps: u64,
    /// `<n_j>` at each sample, when requested.
    pub series: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub rho: DensityMatrix,
    pub batches: Vec<BatchSummary>,
    pub trajectories: Vec<TrajectoryRecord>,
    pub config: TrajectoryConfig,
}

/// Distance estimate with its jackknife error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    /// `1 - f` of the full average.
    pub distance: f64,
    /// Jackknife bias-corrected value `B d - (B - 1) mean(d_-b)`.
    pub corrected: f64,
    pub stderr: f64,
}

impl TrajectoryEnsemble {
    pub fn total_samples(&self) -> usize {
        self.batches.iter().map(|b| b.samples).sum()
    }

    /// Mean of `<n_j>` over all samples, per mode.
    pub fn occupations(&self) -> Vec<f64> {
        let w = self.total_samples() as f64;
        let k = self.batches[0].occupation_sum.len();
        (0..k).map(|j| self.batches.iter().map(|b| b.occupation_sum[j]).sum::<f64>() / w).collect()
    }

    pub fn total_occupation(&self) -> f64 {
        self.occupations().iter().sum()
    }

    /// Standard error of the total occupation from the spread of batch means.
    pub fn total_occupation_stderr(&self) -> f64 {
        let means: Vec<f64> = self
            .batches
            .iter()
            .map(|b| b.occupation_sum.iter().sum::<f64>() / b.samples as f64)
            .collect();
        stderr_of_mean(&means)
    }

    pub fn jump_counts(&self) -> Vec<Vec<u64>> {
        self.trajectories.iter().map(|t| t.jumps.clone()).collect()
    }

    pub fn warn_steps(&self) -> u64 {
        self.trajectories.iter().map(|t| t.warn_steps).sum()
    }

    pub fn rejected_steps(&self) -> u64 {
        self.trajectories.iter().map(|t| t.rejected_steps).sum()
    }

    /// Distance to a reference state with a leave-one-batch-out jackknife.
    pub fn distance_to(&self, reference: &FidelityReference) -> Result<DistanceEstimate> {
        let d_full = reference.distance(&self.rho)?;
        let b = self.batches.len();
        if b < 2 {
            return Ok(DistanceEstimate { distance: d_full, corrected: d_full, stderr: f64::NAN });
        }
        let total: CMatrix = self.batches.iter().fold(CMatrix::zeros(self.rho.dim(), self.rho.dim()), |acc, x| acc + &x.rho_sum);
        let mut leave_out = Vec::with_capacity(b);
        for x in &self.batches {
            let part = &total - &x.rho_sum;
            let rho = DensityMatrix::sanitized(self.rho.space().clone(), self.rho.basis(), part)?;
            leave_out.push(reference.distance(&rho)?);
        }
        let bf = b as f64;
        let mean = leave_out.iter().sum::<f64>() / bf;
        let var = leave_out.iter().map(|d| (d - mean).powi(2)).sum::<f64>() * (bf - 1.0) / bf;
        Ok(DistanceEstimate { distance: d_full, corrected: bf * d_full - (bf - 1.0) * mean, stderr: var.sqrt() })
    }
}

fn stderr_of_mean(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

/// Averaged state of a set of normalized samples.
#[derive(Debug, Clone)]
pub struct AveragedState {
    pub rho: DensityMatrix,
    /// Mean total occupation.
    pub n_total: f64,
    /// Standard error of `n_total`, treating samples as independent.
    pub n_total_stderr: f64,
}

/// Mean of `|ψ⟩⟨ψ|` over normalized samples.
pub fn average_density_matrix(space: &FockSpace, basis: Basis, samples: &[CVector]) -> Result<AveragedState> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let d = space.dim();
    let mut acc = CMatrix::zeros(d, d);
    let mut totals = Vec::with_capacity(samples.len());
    for psi in samples {
        if psi.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: psi.len() });
        }
        acc.gerc(ONE, psi, psi, ONE);
        totals.push(total_number(space, psi));
    }
    let rho = DensityMatrix::sanitized(space.clone(), basis, acc)?;
    let n = totals.len() as f64;
    let mean = totals.iter().sum::<f64>() / n;
    Ok(AveragedState { rho, n_total: mean, n_total_stderr: stderr_of_mean(&totals).max(0.0) })
}

fn total_number(space: &FockSpace, psi: &CVector) -> f64 {
    space
        .states()
        .iter()
        .zip(psi.iter())
        .map(|(occ, z)| (occ[0] + if space.modes() == 2 { occ[1] } else { 0 }) as f64 * z.norm_sqr())
        .sum::<f64>()
        / psi.norm_squared()
}

fn mode_numbers(space: &FockSpace, psi: &CVector, out: &mut [f64]) {
    let norm = psi.norm_squared();
    out.iter_mut().for_each(|x| *x = 0.0);
    for (occ, z) in space.states().iter().zip(psi.iter()) {
        let w = z.norm_sqr() / norm;
        for (j, o) in out.iter_mut().enumerate() {
            *o += occ[j] as f64 * w;
        }
    }
}

/// Run `cfg.n_traj` trajectories of `model`.
pub fn run<M: Unraveling>(model: &M, cfg: &TrajectoryConfig) -> Result<TrajectoryEnsemble> {
    cfg.validate()?;
    let per = cfg.n_traj / cfg.batches;
    let extra = cfg.n_traj % cfg.batches;
    let ranges: Vec<(usize, usize)> = (0..cfg.batches)
        .scan(0usize, |start, b| {
            let len = per + usize::from(b < extra);
            let r = (*start, *start + len);
            *start += len;
            Some(r)
        })
        .collect();
    let results: Vec<Result<(BatchSummary, Vec<TrajectoryRecord>)>> =
        ranges.par_iter().map(|&(lo, hi)| run_batch(model, cfg, lo, hi)).collect();
    let mut batches = Vec::with_capacity(cfg.batches);
    let mut trajectories = Vec::with_capacity(cfg.n_traj);
    for r in results {
        let (b, t) = r?;
        batches.push(b);
        trajectories.extend(t);
    }
    let d = model.space().dim();
    let total = batches.iter().fold(CMatrix::zeros(d, d), |acc, b| acc + &b.rho_sum);
    if batches.iter().all(|b| b.samples == 0) {
        return Err(Error::EmptySamples);
    }
    let rho = DensityMatrix::sanitized(model.space().clone(), model.basis(), total)?;
    let overflow: u64 = trajectories.iter().map(|t| t.overflow_steps).sum();
    if overflow > 0 {
        log::warn!("{overflow} steps had total jump probability above {JUMP_OVERFLOW}; reduce dt");
    }
    Ok(TrajectoryEnsemble { rho, batches, trajectories, config: *cfg })
}

fn run_batch<M: Unraveling>(
    model: &M,
    cfg: &TrajectoryConfig,
    lo: usize,
    hi: usize,
) -> Result<(BatchSummary, Vec<TrajectoryRecord>)> {
    let d = model.space().dim();
    let k = model.channels();
    let mut summary = BatchSummary { rho_sum: CMatrix::zeros(d, d), samples: 0, occupation_sum: vec![0.0; k] };
    let mut records = Vec::with_capacity(hi - lo);
    let steps = cfg.steps();
    let burn = cfg.burn_steps();
    let mut rates = vec![0.0; k];
    let mut occ = vec![0.0; model.space().modes().max(k)];
    for index in lo..hi {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index as u64);
        let mut state = model.initial();
        let mut rec = TrajectoryRecord {
            index,
            jumps: vec![0; k],
            warn_steps: 0,
            overflow_steps: 0,
            rejected_steps: 0,
            series: cfg.record_series.then(Vec::new),
        };
        for step in 1..=steps {
            model.evolve(&mut state, cfg.dt)?;
            model.rates(&state, &mut rates);
            let total: f64 = rates.iter().sum::<f64>() * cfg.dt;
            if total > JUMP_WARN {
                rec.warn_steps += 1;
            }
            if total > JUMP_OVERFLOW {
                rec.overflow_steps += 1;
            }
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (j, r) in rates.iter().enumerate() {
                acc += r * cfg.dt;
                if u < acc {
                    model.jump(&mut state, j)?;
                    rec.jumps[j] += 1;
                    break;
                }
            }
            if step > burn && (step - burn) % cfg.sample_every == 0 {
                let psi = model.sample(&state);
                summary.rho_sum.gerc(ONE, &psi, &psi, ONE);
                summary.samples += 1;
                let occ = &mut occ[..model.space().modes()];
                mode_numbers(model.space(), &psi, occ);
                for (s, o) in summary.occupation_sum.iter_mut().zip(occ.iter()) {
                    *s += o;
                }
                if let Some(series) = rec.series.as_mut() {
                    series.push(occ.to_vec());
                }
            }
        }
        rec.rejected_steps = model.rejected_steps(&state);
        if rec.warn_steps > 0 {
            log::warn!("trajectory {index}: {} steps with jump probability above {JUMP_WARN}", rec.warn_steps);
        }
        records.push(rec);
    }
    Ok((summary, records))
}

fn normalize(v: &mut CVector) -> Result<()> {
    let n = v.norm();
    if !(n > NORM_FLOOR) || !n.is_finite() {
        return Err(Error::NormUnderflow(0));
    }
    *v /= c(n);
    Ok(())
}

/// Exact unraveling on a full Fock space with a precomputed dense propagator.
pub struct FullSpace {
    space: FockSpace,
    basis: Basis,
    dt: f64,
    propagator: CMatrix,
    jumps: Vec<SparseMatrix>,
    /// Diagonal of `L_j† L_j` (number-type jumps only).
    rate_diag: Vec<Vec<f64>>,
}

impl FullSpace {
    /// `jumps` must be `sqrt(rate) * (annihilation operator)` so that
    /// `L† L` is diagonal in the Fock basis.
    pub fn new(space: FockSpace, basis: Basis, h: &CMatrix, jumps: Vec<CMatrix>, dt: f64) -> Result<Self> {
        let d = space.dim();
        if h.nrows() != d || jumps.iter().any(|l| l.nrows() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: h.nrows() });
        }
        let mut h_eff = h.clone();
        let mut rate_diag = Vec::with_capacity(jumps.len());
        for l in &jumps {
            let ll = l.adjoint() * l;
            let off = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| ll[(i, j)].norm()).fold(0.0, f64::max);
            if off > 1e-12 {
                return Err(Error::InvalidParameter("jump operators must have diagonal L†L".into()));
            }
            rate_diag.push((0..d).map(|k| ll[(k, k)].re).collect());
            h_eff -= ll * C64::new(0.0, 0.5);
        }
        Ok(Self {
            propagator: propagator(&h_eff, dt),
            jumps: jumps.iter().map(SparseMatrix::from_dense).collect(),
            space,
            basis,
            dt,
            rate_diag,
        })
    }

    /// Dimer with loss counted in `basis` (site or bonding/anti-bonding photons).
    pub fn dimer(p: &ModelParams, space: &FockSpace, basis: Basis, dt: f64) -> Result<Self> {
        let h = dimer_hamiltonian(p, space, basis)?;
        let ops = build_mode_operators_in(space, basis);
        let jumps = ops.a.iter().map(|a| &a.matrix * c(p.gamma.sqrt())).collect();
        Self::new(space.clone(), basis, &h, jumps, dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

impl Unraveling for FullSpace {
    type State = CVector;

    fn space(&self) -> &FockSpace {
        &self.space
    }
    fn basis(&self) -> Basis {
        self.basis
    }
    fn channels(&self) -> usize {
        self.jumps.len()
    }
    fn initial(&self) -> CVector {
        let mut v = CVector::zeros(self.space.dim());
        v[0] = ONE;
        v
    }
    fn evolve(&self, state: &mut CVector, dt: f64) -> Result<()> {
        if (dt - self.dt).abs() > 1e-15 * self.dt {
            return Err(Error::InvalidParameter(format!("propagator was built for dt = {}, got {dt}", self.dt)));
        }
        *state = &self.propagator * &*state;
        normalize(state)
    }
    fn rates(&self, state: &CVector, out: &mut [f64]) {
        for (o, diag) in out.iter_mut().zip(&self.rate_diag) {
            *o = diag.iter().zip(state.iter()).map(|(r, z)| r * z.norm_sqr()).sum();
        }
    }
    fn jump(&self, state: &mut CVector, channel: usize) -> Result<()> {
        let v = self.jumps[channel].matvec(state.as_slice());
        *state = CVector::from_vec(v);
        normalize(state)
    }
    fn sample(&self, state: &CVector) -> CVector {
        state.clone()
    }
}

/// Sparse single-mode operators used by the product-state unravelings.
struct ModeOps {
    a: SparseMatrix,
    ad: SparseMatrix,
    n: SparseMatrix,
    ad2: SparseMatrix,
    a2: SparseMatrix,
    n_diag: Vec<f64>,
}

impl ModeOps {
    fn new(space: &FockSpace) -> Self {
        let ops = build_mode_operators(space);
        let a = &ops.a[0].matrix;
        let ad = &ops.ad[0].matrix;
        Self {
            a: SparseMatrix::from_dense(a),
            ad: SparseMatrix::from_dense(ad),
            n: SparseMatrix::from_dense(&ops.n[0].matrix),
            ad2: SparseMatrix::from_dense(&(ad * ad)),
            a2: SparseMatrix::from_dense(&(a * a)),
            n_diag: (0..space.dim()).map(|k| k as f64).collect(),
        }
    }

    /// `-i γ/2 n + ω n + kerr a†² a² + drive a† + h.c.` without partner terms.
    fn base(&self, space: &FockSpace, omega: f64, kerr: f64, drive: C64, gamma: f64) -> SparseMatrix {
        let ops = build_mode_operators(space);
        let a = &ops.a[0].matrix;
        let ad = &ops.ad[0].matrix;
        let n = &ops.n[0].matrix;
        let h = n * C64::new(omega, -gamma / 2.0) + ad * ad * a * a * c(kerr) + ad * drive + a * drive.conj();
        SparseMatrix::from_dense(&h)
    }

    fn moments(&self, psi: &CVector) -> ModeMoments {
        let x = psi.as_slice();
        let norm = psi.norm_squared();
        let dot = |m: &SparseMatrix| -> C64 {
            let y = m.matvec(x);
            x.iter().zip(&y).map(|(u, v)| u.conj() * v).sum::<C64>() / norm
        };
        let n = self.n_diag.iter().zip(x).map(|(k, z)| k * z.norm_sqr()).sum::<f64>() / norm;
        ModeMoments { alpha: dot(&self.a), n, m: dot(&self.a2) }
    }
}

/// Product of the factors projected onto `out` and renormalized.
fn normalized_product(out: &FockSpace, a: &CVector, b: &CVector) -> CVector {
    let mut v = product_vector(out, a, b);
    let n = v.norm();
    if n > NORM_FLOOR {
        v /= c(n);
    }
    v
}

fn vec_of(v: Vec<C64>) -> CVector {
    CVector::from_vec(v)
}

/// Product state `|ψ_0⟩|ψ_1⟩` with mean-field coupling between the factors,
/// in site (`Real`) or bonding/anti-bonding (`Reciprocal`) coordinates.
pub struct GutzwillerProduct {
    p: ModelParams,
    basis: Basis,
    mode: FockSpace,
    out: FockSpace,
    ops: ModeOps,
    bases: [SparseMatrix; 2],
}

#[derive(Debug, Clone)]
pub struct ProductState {
    pub factors: [CVector; 2],
    pub basis: Basis,
}

impl GutzwillerProduct {
    /// Factors use cutoff `out.mode_cutoff()`; samples are projected onto `out`.
    pub fn new(p: &ModelParams, out: &FockSpace, basis: Basis) -> Result<Self> {
        p.validate()?;
        if out.modes() != 2 {
            return Err(Error::NotTwoMode);
        }
        let mode = FockSpace::single(out.mode_cutoff())?;
        let ops = ModeOps::new(&mode);
        let bases = match basis {
            Basis::Real => {
                let b = ops.base(&mode, -p.delta, p.u / 2.0, ZERO, p.gamma);
                [b.clone(), b]
            }
            Basis::Reciprocal => [
                ops.base(&mode, -p.delta - p.j, p.u / 4.0, p.f * SQRT_2, p.gamma),
                ops.base(&mode, -p.delta + p.j, p.u / 4.0, ZERO, p.gamma),
            ],
        };
        Ok(Self { p: *p, basis, mode, out: out.clone(), ops, bases })
    }

    fn step_factor(&self, k: usize, psi: &CVector, partner: &ModeMoments, dt: f64) -> Vec<C64> {
        let o = &self.ops;
        let p = &self.p;
        let terms: Vec<(C64, &SparseMatrix)> = match self.basis {
            Basis::Real => {
                let f_eff = p.f - p.j * partner.alpha;
                vec![(f_eff, &o.ad), (f_eff.conj(), &o.a)]
            }
            Basis::Reciprocal => {
                let pair = partner.m * (p.u / 4.0);
                vec![(c(p.u * partner.n), &o.n), (pair, &o.ad2), (pair.conj(), &o.a2)]
            }
        };
        let op = SparseCombination { base: &self.bases[k], terms };
        taylor_propagate(&op, psi.as_slice(), dt)
    }
}

impl Unraveling for GutzwillerProduct {
    type State = ProductState;

    fn space(&self) -> &FockSpace {
        &self.out
    }
    fn basis(&self) -> Basis {
        self.basis
    }
    fn channels(&self) -> usize {
        2
    }
    fn initial(&self) -> ProductState {
        let mut v = CVector::zeros(self.mode.dim());
        v[0] = ONE;
        ProductState { factors: [v.clone(), v], basis: self.basis }
    }
    fn evolve(&self, s: &mut ProductState, dt: f64) -> Result<()> {
        let m0 = self.ops.moments(&s.factors[0]);
        let m1 = self.ops.moments(&s.factors[1]);
        let new0 = self.step_factor(0, &s.factors[0], &m1, dt);
        let new1 = self.step_factor(1, &s.factors[1], &m0, dt);
        s.factors = [vec_of(new0), vec_of(new1)];
        normalize(&mut s.factors[0])?;
        normalize(&mut s.factors[1])
    }
    fn rates(&self, s: &ProductState, out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&s.factors) {
            *o = self.p.gamma * self.ops.n_diag.iter().zip(f.iter()).map(|(k, z)| k * z.norm_sqr()).sum::<f64>();
        }
    }
    fn jump(&self, s: &mut ProductState, channel: usize) -> Result<()> {
        let f = &mut s.factors[channel];
        *f = vec_of(self.ops.a.matvec(f.as_slice()));
        normalize(f)
    }
    fn sample(&self, s: &ProductState) -> CVector {
        normalized_product(&self.out, &s.factors[0], &s.factors[1])
    }
}

/// Unnormalized Gaussian moments `A = <ψ|a|ψ>`, `M = <ψ|aa|ψ>`,
/// `N = <ψ|a†a|ψ>`, `Z = <ψ|ψ>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianWavefunction {
    pub a1: C64,
    pub m: C64,
    pub n: f64,
    pub norm: f64,
}

/// Cross-mode inputs to the anti-bonding Gaussian evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDrive {
    /// `-Δ + J + U <n_B>`.
    pub omega: f64,
    pub u: f64,
    pub gamma: f64,
    /// `<a_B a_B>`.
    pub m_b: C64,
}

impl GaussianWavefunction {
    pub fn vacuum() -> Self {
        Self { a1: ZERO, m: ZERO, n: 0.0, norm: 1.0 }
    }

    pub fn normalized(&self) -> ModeMoments {
        ModeMoments { alpha: self.a1 / self.norm, n: self.n / self.norm, m: self.m / self.norm }
    }

    fn renormalize(&mut self) {
        let z = self.norm;
        *self = Self { a1: self.a1 / z, m: self.m / z, n: self.n / z, norm: 1.0 };
    }

    /// Wick closures, unnormalized: `(<a†aa>, <a†aaa>, <a†a†aa>)`.
    pub fn closures(&self) -> (C64, C64, f64) {
        let z = self.norm;
        let (a, m, n) = (self.a1, self.m, self.n);
        let t3 = a.conj() * m / z + a * (2.0 * n / z) - a.conj() * a * a * (2.0 / (z * z));
        let t4 = m * (3.0 * n / z) - a.conj() * a * a * a * (2.0 / (z * z * z));
        let t22 = 2.0 * n * n / z + m.norm_sqr() / z - 2.0 * a.norm_sqr().powi(2) / (z * z * z);
        (t3, t4, t22)
    }

    /// Time derivatives of `(A, M, N, Z)` under the anti-bonding effective
    /// Hamiltonian `(ω - iγ/2) n + U/4 a†²a² + U/4 (m_B a†² + m_B* a²)`.
    pub fn derivative(&self, d: &GaussianDrive) -> (C64, C64, f64, f64) {
        let (t3, t4, t22) = self.closures();
        let mi = -I;
        let da = mi
            * (C64::new(d.omega, -d.gamma / 2.0) * self.a1
                + C64::new(d.u / 2.0, -d.gamma) * t3
                + d.m_b * self.a1.conj() * (d.u / 2.0));
        let dm = mi
            * (C64::new(2.0 * d.omega + d.u / 2.0, -d.gamma) * self.m
                + C64::new(d.u, -d.gamma) * t4
                + d.m_b * ((d.u / 2.0) * (2.0 * self.n + self.norm)));
        let dn = -d.gamma * (self.n + t22) + d.u * (d.m_b * self.m.conj()).im;
        let dz = -d.gamma * self.n;
        (da, dm, dn, dz)
    }

    fn axpy(&self, h: f64, k: (C64, C64, f64, f64)) -> Self {
        Self { a1: self.a1 + k.0 * h, m: self.m + k.1 * h, n: self.n + k.2 * h, norm: self.norm + k.3 * h }
    }

    /// One classical RK4 step of the moment equations.
    pub fn rk4(&self, d: &GaussianDrive, dt: f64) -> Self {
        let k1 = self.derivative(d);
        let k2 = self.axpy(dt / 2.0, k1).derivative(d);
        let k3 = self.axpy(dt / 2.0, k2).derivative(d);
        let k4 = self.axpy(dt, k3).derivative(d);
        Self {
            a1: self.a1 + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (dt / 6.0),
            m: self.m + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (dt / 6.0),
            n: self.n + (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2) * (dt / 6.0),
            norm: self.norm + (k1.3 + 2.0 * k2.3 + 2.0 * k3.3 + k4.3) * (dt / 6.0),
        }
    }

    pub fn check_physical(&self, tol: f64) -> Result<()> {
        let g = self.normalized();
        if !(self.norm > 0.0) || !g.n.is_finite() {
            return Err(Error::Unphysical(format!("norm = {}", self.norm)));
        }
        if g.n < g.alpha.norm_sqr() - tol {
            return Err(Error::Unphysical(format!("n = {:.6e} < |alpha|^2 = {:.6e}", g.n, g.alpha.norm_sqr())));
        }
        Ok(())
    }

    /// Moments after a photon detection, normalized.
    pub fn after_jump(&self) -> Result<Self> {
        let g = self.normalized();
        if !(g.n > 0.0) {
            return Err(Error::Unphysical("jump from a state with <a†a> = 0".into()));
        }
        let (a, m, n) = (g.alpha, g.m, g.n);
        Ok(Self {
            a1: (a.conj() * m + a * (2.0 * n) - a.conj() * a * a * 2.0) / n,
            m: (m * (3.0 * n) - a.conj() * a * a * a * 2.0) / n,
            n: (2.0 * n * n + m.norm_sqr() - 2.0 * a.norm_sqr().powi(2)) / n,
            norm: 1.0,
        })
    }

    /// Displacement `α` and squeezing `(r, θ)` of `D(α) S(r e^{iθ}) |0⟩`
    /// matching the normalized moments: `r = asinh sqrt(n - |α|²)`,
    /// `θ = arg(m - α²)`.
    pub fn parameters(&self) -> (C64, f64, f64) {
        let g = self.normalized();
        let n0 = g.centered_n().max(0.0);
        let m0 = g.centered_m();
        let theta = if m0 == ZERO { 0.0 } else { m0.arg() };
        (g.alpha, n0.sqrt().asinh(), theta)
    }

    /// State vector on a single-mode space with the given cutoff.
    pub fn vector(&self, space: &FockSpace) -> Result<CVector> {
        let (alpha, r, theta) = self.parameters();
        let d = space.dim();
        let big = if alpha == ZERO { d } else { d + 40 + (4.0 * alpha.norm_sqr()).ceil() as usize };
        let mut v = CVector::zeros(big);
        // S|0⟩ = cosh(r)^{-1/2} Σ_k (e^{iθ} tanh r / 2)^k sqrt((2k)!)/k! |2k⟩
        let t = C64::from_polar(r.tanh(), theta);
        let mut coeff = C64::new(1.0 / r.cosh().sqrt(), 0.0);
        let mut k = 0usize;
        while 2 * k < big {
            v[2 * k] = coeff;
            let kk = (k + 1) as f64;
            coeff *= t * (((2.0 * kk - 1.0) * (2.0 * kk)).sqrt() / (2.0 * kk));
            k += 1;
        }
        if alpha != ZERO {
            let bs = FockSpace::single(big - 1)?;
            let ops = ModeOps::new(&bs);
            // exp(α a† - α* a) = exp(-i A) with A = i(α a† - α* a)
            let base = SparseMatrix::from_triplets(big, big, Vec::new());
            let op = SparseCombination { base: &base, terms: vec![(I * alpha, &ops.ad), (-I * alpha.conj(), &ops.a)] };
            v = vec_of(taylor_propagate(&op, v.as_slice(), 1.0));
        }
        let mut out = v.rows(0, d).into_owned();
        normalize(&mut out)?;
        Ok(out)
    }
}

/// Bonding factor on a full single-mode space, anti-bonding factor Gaussian.
pub struct GaussianAntibonding {
    p: ModelParams,
    mode: FockSpace,
    out: FockSpace,
    ops: ModeOps,
    base_b: SparseMatrix,
    max_halvings: u32,
}

#[derive(Debug, Clone)]
pub struct GaussianProductState {
    pub bonding: CVector,
    pub antibonding: GaussianWavefunction,
    pub rejected: u64,
}

impl GaussianAntibonding {
    pub fn new(p: &ModelParams, out: &FockSpace) -> Result<Self> {
        p.validate()?;
        if out.modes() != 2 {
            return Err(Error::NotTwoMode);
        }
        let mode = FockSpace::single(out.mode_cutoff())?;
        let ops = ModeOps::new(&mode);
        let base_b = ops.base(&mode, -p.delta - p.j, p.u / 4.0, p.f * SQRT_2, p.gamma);
        Ok(Self { p: *p, mode, out: out.clone(), ops, base_b, max_halvings: 8 })
    }

    fn drive(&self, b: &ModeMoments) -> GaussianDrive {
        GaussianDrive { omega: -self.p.delta + self.p.j + self.p.u * b.n, u: self.p.u, gamma: self.p.gamma, m_b: b.m }
    }

    /// Integrate the anti-bonding moments over `dt`, halving the step on
    /// unphysical results.
    fn advance_ab(&self, g: &GaussianWavefunction, d: &GaussianDrive, dt: f64, depth: u32, rejected: &mut u64) -> Result<GaussianWavefunction> {
        let trial = g.rk4(d, dt);
        if trial.check_physical(1e-8).is_ok() {
            return Ok(trial);
        }
        if depth >= self.max_halvings {
            trial.check_physical(1e-8)?;
        }
        *rejected += 1;
        log::debug!("Gaussian step rejected at dt = {dt:e}; halving");
        let half = self.advance_ab(g, d, dt / 2.0, depth + 1, rejected)?;
        self.advance_ab(&half, d, dt / 2.0, depth + 1, rejected)
    }
}

impl Unraveling for GaussianAntibonding {
    type State = GaussianProductState;

    fn space(&self) -> &FockSpace {
        &self.out
    }
    fn basis(&self) -> Basis {
        Basis::Reciprocal
    }
    fn channels(&self) -> usize {
        2
    }
    fn initial(&self) -> GaussianProductState {
        let mut v = CVector::zeros(self.mode.dim());
        v[0] = ONE;
        GaussianProductState { bonding: v, antibonding: GaussianWavefunction::vacuum(), rejected: 0 }
    }
    fn evolve(&self, s: &mut GaussianProductState, dt: f64) -> Result<()> {
        let mb = self.ops.moments(&s.bonding);
        let ma = s.antibonding.normalized();
        let pair = ma.m * (self.p.u / 4.0);
        let o = &self.ops;
        let op = SparseCombination {
            base: &self.base_b,
            terms: vec![(c(self.p.u * ma.n), &o.n), (pair, &o.ad2), (pair.conj(), &o.a2)],
        };
        let mut b = vec_of(taylor_propagate(&op, s.bonding.as_slice(), dt));
        normalize(&mut b)?;
        let mut g = self.advance_ab(&s.antibonding, &self.drive(&mb), dt, 0, &mut s.rejected)?;
        g.renormalize();
        s.bonding = b;
        s.antibonding = g;
        Ok(())
    }
    fn rates(&self, s: &GaussianProductState, out: &mut [f64]) {
        let nb = self.ops.n_diag.iter().zip(s.bonding.iter()).map(|(k, z)| k * z.norm_sqr()).sum::<f64>();
        out[0] = self.p.gamma * nb;
        out[1] = self.p.gamma * s.antibonding.normalized().n.max(0.0);
    }
    fn jump(&self, s: &mut GaussianProductState, channel: usize) -> Result<()> {
        if channel == 0 {
            s.bonding = vec_of(self.ops.a.matvec(s.bonding.as_slice()));
            normalize(&mut s.bonding)
        } else {
            s.antibonding = s.antibonding.after_jump()?;
            Ok(())
        }
    }
    fn sample(&self, s: &GaussianProductState) -> CVector {
        let ab = s.antibonding.vector(&self.mode).unwrap_or_else(|_| {
            let mut v = CVector::zeros(self.mode.dim());
            v[0] = ONE;
            v
        });
        normalized_product(&self.out, &s.bonding, &ab)
    }
    fn rejected_steps(&self, s: &GaussianProductState) -> u64 {
        s.rejected
    }
}

/// Exact trajectories of the dimer, photons counted in `basis`.
pub fn trajectory_run(p: &ModelParams, space: &FockSpace, basis: Basis, cfg: &TrajectoryConfig) -> Result<TrajectoryEnsemble> {
    run(&FullSpace::dimer(p, space, basis, cfg.dt)?, cfg)
}

/// Product-wavefunction trajectories with mean-field coupling in `basis`.
pub fn gutzwiller_trajectory_run(p: &ModelParams, space: &FockSpace, basis: Basis, cfg: &TrajectoryConfig) -> Result<TrajectoryEnsemble> {
    run(&GutzwillerProduct::new(p, space, basis)?, cfg)
}

/// Reciprocal product trajectories with a Gaussian anti-bonding wavefunction.
pub fn gaussian_ab_trajectory_run(p: &ModelParams, space: &FockSpace, cfg: &TrajectoryConfig) -> Result<TrajectoryEnsemble> {
    run(&GaussianAntibonding::new(p, space)?, cfg)
}
