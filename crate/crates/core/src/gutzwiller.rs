//! Product-state (Gutzwiller) decouplings of the dimer density matrix.
//!
//! * Real space: `rho = rho1 ⊗ rho1`, each site a Kerr mode driven by
//!   `F_eff = F - J <a>`.
//! * Reciprocal space: `rho = rhoB ⊗ rhoAB`. Replacing partner bilinears by
//!   their averages in the reciprocal Hamiltonian gives per mode
//!
//!   ```text
//!   H_B  = (-Δ - J + U n_AB) n_B  + U/4 a_B†² a_B²  + (U/4 m_AB a_B†² + h.c.) + (√2 F a_B† + h.c.)
//!   H_AB = (-Δ + J + U n_B)  n_AB + U/4 a_AB†² a_AB² + (U/4 m_B  a_AB†² + h.c.)
//!   ```
//!
//!   where `n_X = <a_X† a_X>` and `m_X = <a_X a_X>` of the partner.
//! * Reciprocal space with a Gaussian anti-bonding factor, reconstructed as a
//!   squeezed thermal state.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build_mode_operators, Basis, FockSpace};
use crate::kerr::{self, KerrParams, ModeMoments};
use crate::linalg::{c, expm, CMatrix, C64, ZERO};
use crate::liouvillian::SingleModeModel;
use crate::params::ModelParams;
use crate::semiclassical::homogeneous_roots;
use crate::state::{distance, DensityMatrix};
use crate::steady::steady_state;

/// Top-Fock population above which a single-mode factor is flagged.
pub const TOP_POPULATION_FLAG: f64 = 1e-6;
/// Trace allowed outside the target space for a reconstructed squeezed thermal state.
pub const SQUEEZED_TAIL_TOL: f64 = 1e-8;
/// Fixed points closer than this (state distance) are merged.
pub const DEDUP_DISTANCE: f64 = 1e-6;
/// Relative separation below which two effective drives are one root.
const ROOT_MERGE: f64 = 1e-7;
const SCAN_RADII: usize = 6;
const SCAN_ANGLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointOptions {
    /// Convergence threshold on the change of the self-consistent parameters.
    pub tol: f64,
    pub max_iterations: usize,
    /// Initial mixing `new = (1 - λ) old + λ update`; halved whenever the residual grows.
    pub damping: f64,
    /// Real-space decoupling only: additionally search for fixed points by
    /// Newton's method from a grid of site fields.
    pub scan_roots: bool,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 3000, damping: 0.5, scan_roots: true }
    }
}

/// One self-consistent solution.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    /// Product state on the requested two-mode space.
    pub rho: DensityMatrix,
    /// Single-mode factors, in coordinate-mode order.
    pub factors: [DensityMatrix; 2],
    /// Moments of the two factors.
    pub moments: [ModeMoments; 2],
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct FixedPointReport {
    /// Maximum over solutions.
    pub iterations: usize,
    /// Maximum over solutions.
    pub residual: f64,
    pub converged: bool,
    /// Set when the mixing parameter had to be reduced on some run.
    pub damping_engaged: bool,
    /// Largest top-Fock population among the single-mode factors.
    pub top_population: f64,
    /// At least one factor has `top_population > TOP_POPULATION_FLAG`.
    pub cutoff_flag: bool,
    /// Distinct solutions, in the order of the seeds that produced them.
    pub solutions: Vec<FixedPoint>,
}

impl FixedPointReport {
    pub fn primary(&self) -> &FixedPoint {
        &self.solutions[0]
    }

    pub fn is_multistable(&self) -> bool {
        self.solutions.len() > 1
    }
}

/// `<a>`, `<a†a>` and `<aa>` of a single-mode state.
pub fn single_mode_moments(rho: &DensityMatrix) -> ModeMoments {
    let m = rho.matrix();
    let d = rho.dim();
    let mut alpha = ZERO;
    let mut n = 0.0;
    let mut aa = ZERO;
    for k in 0..d {
        n += k as f64 * m[(k, k)].re;
        if k + 1 < d {
            alpha += m[(k + 1, k)] * ((k + 1) as f64).sqrt();
        }
        if k + 2 < d {
            aa += m[(k + 2, k)] * (((k + 1) * (k + 2)) as f64).sqrt();
        }
    }
    ModeMoments { alpha, n, m: aa }
}

fn single_mode_steady(model: &SingleModeModel, n_max: usize) -> Result<DensityMatrix> {
    steady_state(&model.liouvillian(&FockSpace::single(n_max)?)?)
}

struct Iteration {
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    damping_engaged: bool,
}

/// Damped iteration of `x -> map(x)`, with `residual = max |map(x) - x|`.
/// A Newton polish with a finite-difference Jacobian takes over when the
/// damped iteration stalls.
fn solve_fixed_point<G>(x0: Vec<f64>, mut map: G, opts: &FixedPointOptions) -> Result<Iteration>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0;
    let mut lambda = opts.damping.clamp(1e-6, 1.0);
    let mut prev = f64::INFINITY;
    let mut engaged = false;
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iterations {
        let gx = map(&x)?;
        residual = gx.iter().zip(&x).map(|(g, v)| (g - v).abs()).fold(0.0, f64::max);
        if !residual.is_finite() {
            return Err(Error::NonConvergence { iterations: it, residual });
        }
        if residual < opts.tol {
            return Ok(Iteration { x, iterations: it, residual, damping_engaged: engaged });
        }
        if residual > prev && lambda > 1e-3 {
            lambda *= 0.5;
            engaged = true;
        }
        prev = residual;
        for (v, g) in x.iter_mut().zip(&gx) {
            *v += lambda * (g - *v);
        }
    }
    match newton_root(x, |v| Ok(map(v)?.iter().zip(v).map(|(g, x)| g - x).collect()), opts.tol, 50)? {
        Some((x, it, residual)) => {
            Ok(Iteration { x, iterations: opts.max_iterations + it, residual, damping_engaged: engaged })
        }
        None => Err(Error::NonConvergence { iterations: opts.max_iterations + 50, residual }),
    }
}

/// Newton iteration for `r(x) = 0` with a forward-difference Jacobian and a
/// step capped at `max(1, |x|)/2`. `None` when it does not reach `tol`.
fn newton_root<R>(mut x: Vec<f64>, mut r: R, tol: f64, max_iterations: usize) -> Result<Option<(Vec<f64>, usize, f64)>>
where
    R: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let dim = x.len();
    for it in 0..max_iterations {
        let r0 = r(&x)?;
        let residual = r0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !residual.is_finite() {
            return Ok(None);
        }
        if residual < tol {
            return Ok(Some((x, it, residual)));
        }
        let mut jac = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        for k in 0..dim {
            let h = 1e-7 * (1.0 + x[k].abs());
            let mut xp = x.clone();
            xp[k] += h;
            let rp = r(&xp)?;
            for i in 0..dim {
                jac[(i, k)] = (rp[i] - r0[i]) / h;
            }
        }
        let rhs = nalgebra::DVector::from_iterator(dim, r0.iter().map(|v| -v));
        let Some(step) = jac.lu().solve(&rhs) else { return Ok(None) };
        let size = step.norm();
        let cap = 0.5 * nalgebra::DVector::from_column_slice(&x).norm().max(1.0);
        let scale = if size > cap { cap / size } else { 1.0 };
        for k in 0..dim {
            x[k] += scale * step[k];
        }
    }
    Ok(None)
}

fn push_distinct(solutions: &mut Vec<FixedPoint>, candidate: FixedPoint) -> Result<()> {
    for s in solutions.iter() {
        let same = (0..2).try_fold(true, |acc, k| -> Result<bool> {
            Ok(acc && distance(&s.factors[k], &candidate.factors[k])?.abs() < DEDUP_DISTANCE)
        })?;
        if same {
            return Ok(());
        }
    }
    solutions.push(candidate);
    Ok(())
}

fn finish(solutions: Vec<FixedPoint>, damping_engaged: bool) -> FixedPointReport {
    let top = solutions
        .iter()
        .flat_map(|s| s.factors.iter().map(|f| f.top_population()))
        .fold(0.0, f64::max);
    FixedPointReport {
        iterations: solutions.iter().map(|s| s.iterations).max().unwrap_or(0),
        residual: solutions.iter().map(|s| s.residual).fold(0.0, f64::max),
        converged: !solutions.is_empty(),
        damping_engaged,
        top_population: top,
        cutoff_flag: top > TOP_POPULATION_FLAG,
        solutions,
    }
}

fn check_dimer_space(space: &FockSpace) -> Result<()> {
    if space.modes() != 2 {
        return Err(Error::NotTwoMode);
    }
    Ok(())
}

/// Default seeds for the real-space iteration: the empty cavity and each
/// homogeneous mean-field site field.
pub fn rdc_default_seeds(p: &ModelParams) -> Result<Vec<C64>> {
    let mut seeds = vec![ZERO];
    seeds.extend(homogeneous_roots(p)?.iter().map(|b| b.site_field()));
    Ok(seeds)
}

/// Real-space decoupling. Each seed is a guess for the site field `<a>`;
/// the site problem is solved in closed form during the iteration and by
/// exact diagonalization (cutoff `space.mode_cutoff()`) for the returned state.
pub fn rdc_steady_state(
    p: &ModelParams,
    space: &FockSpace,
    seeds: &[C64],
    opts: &FixedPointOptions,
) -> Result<FixedPointReport> {
    p.validate()?;
    check_dimer_space(space)?;
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("at least one seed is required".into()));
    }
    let site = |f_eff: C64| KerrParams { delta: p.delta, u: p.u, f: f_eff, gamma: p.gamma };
    let field = |f_eff: C64| -> Result<C64> {
        if p.u == 0.0 {
            Ok(site(f_eff).linear_field())
        } else {
            kerr::correlation(0, 1, &site(f_eff))
        }
    };
    let map = |x: &[f64]| -> Result<Vec<f64>> {
        let g = p.f - p.j * field(C64::new(x[0], x[1]))?;
        Ok(vec![g.re, g.im])
    };
    let n_max = space.mode_cutoff();
    let mut roots: Vec<(C64, usize, f64)> = Vec::new();
    let mut engaged = false;
    let mut last_err = None;
    let record = |f_eff: C64, iterations: usize, residual: f64, roots: &mut Vec<(C64, usize, f64)>| {
        if !roots.iter().any(|(g, _, _)| (g - f_eff).norm() < ROOT_MERGE * (1.0 + f_eff.norm())) {
            roots.push((f_eff, iterations, residual));
        }
    };
    for &seed in seeds {
        let f0 = p.f - p.j * seed;
        match solve_fixed_point(vec![f0.re, f0.im], map, opts) {
            Ok(it) => {
                engaged |= it.damping_engaged;
                record(C64::new(it.x[0], it.x[1]), it.iterations, it.residual, &mut roots);
            }
            Err(e) => last_err = Some(e),
        }
    }
    if opts.scan_roots && p.j != 0.0 {
        // Newton in the site field from a polar grid; finds fixed points the
        // damped iteration cannot reach (repelling ones included).
        let radius = seeds.iter().map(|s| s.norm()).fold(1.0, f64::max) * 1.25;
        let resid = |x: &[f64]| -> Result<Vec<f64>> {
            let phi = C64::new(x[0], x[1]);
            let g = field(p.f - p.j * phi)? - phi;
            Ok(vec![g.re, g.im])
        };
        for ir in 1..=SCAN_RADII {
            for ia in 0..SCAN_ANGLES {
                let phi0 = C64::from_polar(radius * ir as f64 / SCAN_RADII as f64, std::f64::consts::TAU * ia as f64 / SCAN_ANGLES as f64);
                if let Some((x, it, _)) = newton_root(vec![phi0.re, phi0.im], resid, opts.tol / p.j.abs().max(1.0), 60)? {
                    let f_eff = p.f - p.j * C64::new(x[0], x[1]);
                    let g = map(&[f_eff.re, f_eff.im])?;
                    let residual = (C64::new(g[0], g[1]) - f_eff).norm();
                    if residual < opts.tol {
                        record(f_eff, it, residual, &mut roots);
                    }
                }
            }
        }
    }
    if roots.is_empty() {
        return Err(last_err.unwrap_or(Error::NonConvergence { iterations: 0, residual: f64::NAN }));
    }
    let mut solutions = Vec::new();
    for (f_eff, iterations, residual) in roots {
        let rho1 = single_mode_steady(&site(f_eff).model(), n_max)?;
        let mom = single_mode_moments(&rho1);
        let rho = DensityMatrix::product(space, Basis::Real, &rho1, &rho1)?;
        let candidate = FixedPoint { rho, factors: [rho1.clone(), rho1], moments: [mom, mom], iterations, residual };
        push_distinct(&mut solutions, candidate)?;
    }
    Ok(finish(solutions, engaged))
}

/// Mean-field bonding-mode model given anti-bonding moments.
pub fn kdc_bonding_model(p: &ModelParams, n_ab: f64, m_ab: C64) -> SingleModeModel {
    SingleModeModel {
        omega: -p.delta - p.j + p.u * n_ab,
        kerr: p.u / 4.0,
        drive: p.f * SQRT_2,
        pair: m_ab * (p.u / 4.0),
        gamma: p.gamma,
    }
}

/// Mean-field anti-bonding-mode model given bonding moments.
pub fn kdc_antibonding_model(p: &ModelParams, n_b: f64, m_b: C64) -> SingleModeModel {
    SingleModeModel {
        omega: -p.delta + p.j + p.u * n_b,
        kerr: p.u / 4.0,
        drive: ZERO,
        pair: m_b * (p.u / 4.0),
        gamma: p.gamma,
    }
}

/// Reciprocal-space decoupling with both factors solved numerically on
/// single-mode spaces with cutoff `space.mode_cutoff()`. The returned state is
/// in the reciprocal basis.
pub fn kdc_steady_state(p: &ModelParams, space: &FockSpace, opts: &FixedPointOptions) -> Result<FixedPointReport> {
    p.validate()?;
    check_dimer_space(space)?;
    let n_max = space.mode_cutoff();
    let solve_b = |x: &[f64]| single_mode_steady(&kdc_bonding_model(p, x[0], C64::new(x[1], x[2])), n_max);
    let solve_ab = |mb: &ModeMoments| single_mode_steady(&kdc_antibonding_model(p, mb.n, mb.m), n_max);
    let map = |x: &[f64]| -> Result<Vec<f64>> {
        let mb = single_mode_moments(&solve_b(x)?);
        let ma = single_mode_moments(&solve_ab(&mb)?);
        Ok(vec![ma.n, ma.m.re, ma.m.im])
    };
    let it = solve_fixed_point(vec![0.0; 3], map, opts)?;
    let rho_b = solve_b(&it.x)?;
    let mb = single_mode_moments(&rho_b);
    let rho_ab = solve_ab(&mb)?;
    let ma = single_mode_moments(&rho_ab);
    let rho = DensityMatrix::product(space, Basis::Reciprocal, &rho_b, &rho_ab)?;
    let fp = FixedPoint {
        rho,
        factors: [rho_b, rho_ab],
        moments: [mb, ma],
        iterations: it.iterations,
        residual: it.residual,
    };
    Ok(finish(vec![fp], it.damping_engaged))
}

/// Gaussian steady state of the anti-bonding factor for given bonding
/// moments `(n_b, m_b)`. With `<a_AB> = 0` and Wick factorization,
///
/// ```text
/// 0 = γ n + U Im[m_b* m]
/// 0 = 2(ω - iγ/2) m + U/2 (m + m_b)(1 + 2n),   ω = -Δ + J + U(n_b + n)
/// ```
///
/// The second equation fixes `m(n)`; the root in `n` nearest the vacuum is taken.
pub fn gaussian_antibonding_moments(p: &ModelParams, n_b: f64, m_b: C64) -> Result<ModeMoments> {
    if p.u == 0.0 || m_b == ZERO {
        return Ok(ModeMoments::vacuum());
    }
    let m_of = |n: f64| -> Result<C64> {
        let omega = -p.delta + p.j + p.u * (n_b + n);
        let den = C64::new(omega, -p.gamma / 2.0) * 2.0 + p.u / 2.0 * (1.0 + 2.0 * n);
        if den.norm() < 1e-300 {
            return Err(Error::Singular(format!("anti-bonding Gaussian equations singular at n = {n}")));
        }
        Ok(-m_b * (p.u / 2.0 * (1.0 + 2.0 * n)) / den)
    };
    let g = |n: f64| -> Result<f64> { Ok(p.gamma * n + p.u * (m_b.conj() * m_of(n)?).im) };
    let n = kerr::nearest_root(&g, 0.0)?;
    let out = ModeMoments { alpha: ZERO, n, m: m_of(n)? };
    let resid = g(n)?.abs();
    if resid > 1e-9 * (1.0 + n) {
        return Err(Error::NonConvergence { iterations: 0, residual: resid });
    }
    out.check_physical(1e-9)?;
    Ok(out)
}

/// Reciprocal-space decoupling with the anti-bonding factor restricted to
/// Gaussian states. The bonding factor is solved numerically.
pub fn kdc_gaussian_ab(p: &ModelParams, space: &FockSpace, opts: &FixedPointOptions) -> Result<FixedPointReport> {
    p.validate()?;
    check_dimer_space(space)?;
    let n_max = space.mode_cutoff();
    let solve_b = |x: &[f64]| single_mode_steady(&kdc_bonding_model(p, x[0], C64::new(x[1], x[2])), n_max);
    let map = |x: &[f64]| -> Result<Vec<f64>> {
        let mb = single_mode_moments(&solve_b(x)?);
        let ma = gaussian_antibonding_moments(p, mb.n, mb.m)?;
        Ok(vec![ma.n, ma.m.re, ma.m.im])
    };
    let it = solve_fixed_point(vec![0.0; 3], map, opts)?;
    let rho_b = solve_b(&it.x)?;
    let mb = single_mode_moments(&rho_b);
    let ma = gaussian_antibonding_moments(p, mb.n, mb.m)?;
    let rho_ab = squeezed_thermal_dm(&SqueezedThermalParams::from_moments(ma.n, ma.m)?, &FockSpace::single(n_max)?)?;
    let rho = DensityMatrix::product(space, Basis::Reciprocal, &rho_b, &rho_ab)?;
    let fp = FixedPoint {
        rho,
        factors: [rho_b, rho_ab],
        moments: [mb, ma],
        iterations: it.iterations,
        residual: it.residual,
    };
    Ok(finish(vec![fp], it.damping_engaged))
}

/// `S(ξ) rho_th(n) S(ξ)†` with `S(ξ) = exp((ξ a†² - ξ* a²)/2)` and `ξ = r e^{iθ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedThermalParams {
    pub theta: f64,
    pub r: f64,
    pub n: f64,
}

impl SqueezedThermalParams {
    pub fn new(theta: f64, r: f64, n: f64) -> Result<Self> {
        if !(r >= 0.0 && n >= 0.0 && theta.is_finite() && r.is_finite() && n.is_finite()) {
            return Err(Error::InvalidParameter(format!("need r >= 0, n >= 0 (r = {r}, n = {n})")));
        }
        Ok(Self { theta, r, n })
    }

    /// Parameters of the zero-mean Gaussian state with `<a†a> = n_mode` and `<aa> = m`.
    pub fn from_moments(n_mode: f64, m: C64) -> Result<Self> {
        let s = 1.0 + 2.0 * n_mode;
        let am = 2.0 * m.norm();
        if !(s > am) {
            return Err(Error::Unphysical(format!(
                "squeezed thermal state needs 1 + 2n > 2|m| (1 + 2n = {s}, 2|m| = {am})"
            )));
        }
        let r = ((s + am) / (s - am)).ln() / 4.0;
        let n = 0.5 * ((s * s - am * am).sqrt() - 1.0);
        Self::new(if m == ZERO { 0.0 } else { m.arg() }, r, n.max(0.0))
    }

    /// `(<a†a>, <aa>)`.
    pub fn to_moments(&self) -> (f64, C64) {
        let s = 2.0 * self.n + 1.0;
        let n_mode = s * (2.0 * self.r).cosh() / 2.0 - 0.5;
        let m = C64::from_polar(s * (2.0 * self.r).sinh() / 2.0, self.theta);
        (n_mode, m)
    }
}

/// Squeezed thermal state on a single-mode space. The squeezing is built in a
/// larger space and projected; projection losses above [`SQUEEZED_TAIL_TOL`]
/// are reported as a cutoff error.
pub fn squeezed_thermal_dm(p: &SqueezedThermalParams, space: &FockSpace) -> Result<DensityMatrix> {
    if space.modes() != 1 {
        return Err(Error::InvalidParameter("squeezed thermal state needs a one-mode space".into()));
    }
    let p = SqueezedThermalParams::new(p.theta, p.r, p.n)?;
    let d = space.dim();
    let (n_mode, _) = p.to_moments();
    let big_n = (2 * d).max(d + 40 + (20.0 * n_mode).ceil() as usize);
    let big = FockSpace::single(big_n)?;
    let ops = build_mode_operators(&big);
    let a = &ops.a[0].matrix;
    let ad = &ops.ad[0].matrix;
    let xi = C64::from_polar(p.r, p.theta);
    let gen = (ad * ad * xi - a * a * xi.conj()) * c(0.5);
    let s = expm(&gen);
    let q = if p.n > 0.0 { p.n / (1.0 + p.n) } else { 0.0 };
    let thermal = CMatrix::from_fn(big.dim(), big.dim(), |i, j| {
        if i == j {
            c(q.powi(i as i32) / (1.0 + p.n))
        } else {
            ZERO
        }
    });
    let full = &s * thermal * s.adjoint();
    let rho = full.view((0, 0), (d, d)).into_owned();
    let kept = rho.trace().re;
    if 1.0 - kept > SQUEEZED_TAIL_TOL {
        return Err(Error::CutoffInsufficient(format!(
            "squeezed thermal state loses {:.3e} of its trace at cutoff {}",
            1.0 - kept,
            space.n_max()
        )));
    }
    DensityMatrix::sanitized(space.clone(), Basis::Real, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::build_liouvillian;
    use crate::state::{dimer_space, distance};
    use approx::assert_relative_eq;

    #[test]
    fn squeezed_thermal_trivial_cases() {
        let space = FockSpace::single(30).unwrap();
        let vac = squeezed_thermal_dm(&SqueezedThermalParams::new(0.0, 0.0, 0.0).unwrap(), &space).unwrap();
        assert_relative_eq!(vac.matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);
        let th = squeezed_thermal_dm(&SqueezedThermalParams::new(0.0, 0.0, 1.0).unwrap(), &FockSpace::single(60).unwrap())
            .unwrap();
        assert_relative_eq!(th.occupation(0), 1.0, epsilon = 1e-9);
        assert_relative_eq!(th.matrix()[(1, 1)].re, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn squeezed_thermal_moments_round_trip() {
        let p = SqueezedThermalParams::new(0.0, 0.3, 0.2).unwrap();
        let rho = squeezed_thermal_dm(&p, &FockSpace::single(40).unwrap()).unwrap();
        let mom = single_mode_moments(&rho);
        let (n, m) = p.to_moments();
        assert!((mom.n - n).abs() < 1e-8);
        assert!((mom.m - m).norm() < 1e-8);
        let back = SqueezedThermalParams::from_moments(mom.n, mom.m).unwrap();
        assert!((back.theta - p.theta).abs() < 1e-8);
        assert!((back.r - p.r).abs() < 1e-8);
        assert!((back.n - p.n).abs() < 1e-8);
    }

    #[test]
    fn squeezed_thermal_reports_small_cutoff() {
        let p = SqueezedThermalParams::new(0.0, 1.5, 2.0).unwrap();
        assert!(matches!(
            squeezed_thermal_dm(&p, &FockSpace::single(5).unwrap()),
            Err(Error::CutoffInsufficient(_))
        ));
    }

    #[test]
    fn rdc_at_zero_hopping_is_exact() {
        let p = ModelParams::new(0.0, 2.0, 1.0, 0.8);
        let space = dimer_space(12).unwrap();
        let rep = rdc_steady_state(&p, &space, &rdc_default_seeds(&p).unwrap(), &Default::default()).unwrap();
        assert_eq!(rep.solutions.len(), 1);
        let exact = steady_state(&build_liouvillian(&p, &space, Basis::Real).unwrap()).unwrap();
        let d = distance(&rep.primary().rho, &exact).unwrap();
        // Projection onto the total-number cutoff is the only difference.
        assert!(d.abs() < 1e-7, "d = {d:e} top {}", exact.top_population());
        let dw = kerr::density(&p.site_kerr()).unwrap();
        assert!((rep.primary().moments[0].n - dw).abs() < 1e-8);
    }

    #[test]
    fn kdc_is_exact_without_interaction() {
        let p = ModelParams::with_fixed_sum(0.7, 2.0, 0.0, 0.9);
        let space = dimer_space(14).unwrap();
        let rep = kdc_steady_state(&p, &space, &Default::default()).unwrap();
        let exact = steady_state(&build_liouvillian(&p, &space, Basis::Reciprocal).unwrap()).unwrap();
        assert!(distance(&rep.primary().rho, &exact).unwrap().abs() < 1e-8);
        assert!(rep.primary().moments[1].n.abs() < 1e-14);
        let g = kdc_gaussian_ab(&p, &space, &Default::default()).unwrap();
        assert!(distance(&g.primary().rho, &exact).unwrap().abs() < 1e-8);
    }

    #[test]
    fn gaussian_antibonding_solves_its_equations() {
        let p = ModelParams::with_fixed_sum(3.0, 2.0, 1.0, 1.0);
        let m_b = C64::new(-0.4, 0.7);
        let ma = gaussian_antibonding_moments(&p, 1.2, m_b).unwrap();
        let omega = -p.delta + p.j + p.u * (1.2 + ma.n);
        let e1 = p.gamma * ma.n + p.u * (m_b.conj() * ma.m).im;
        let e2 = C64::new(omega, -0.5) * 2.0 * ma.m + (ma.m + m_b) * (p.u / 2.0 * (1.0 + 2.0 * ma.n));
        assert!(e1.abs() < 1e-9 && e2.norm() < 1e-9);
        assert!(ma.n > 0.0);
    }

    #[test]
    fn moments_of_basis_states() {
        let space = FockSpace::single(6).unwrap();
        let rho = DensityMatrix::coherent(space, C64::new(0.3, -0.2)).unwrap();
        let mom = single_mode_moments(&rho);
        let ops = crate::state::operators_for(&rho);
        let a = rho.expect(&ops.a[0].matrix).unwrap();
        let aa = rho.expect(&(&ops.a[0].matrix * &ops.a[0].matrix)).unwrap();
        assert!((mom.alpha - a).norm() < 1e-14);
        assert!((mom.m - aa).norm() < 1e-14);
    }
}
