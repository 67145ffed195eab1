//! Homogeneous mean-field (Gross-Pitaevskii) steady states of the dimer,
//! their linear stability, and the Gaussian fluctuation closure around them.
//!
//! Homogeneous solutions have `α_1 = α_2`, so only the bonding mode is
//! occupied and the on-site density `n = |α_B|²/2` solves
//! `n [(U n - Δ - J)² + γ²/4] = |F|²`.
//!
//! Linearizing the mean-field equations around such a solution in
//! `(δa_B, δa_B*, δa_AB, δa_AB*)` gives a block-diagonal matrix. With
//! `ω_B = -Δ - J + U|α_B|²`, `ω_AB = -Δ + J + U|α_B|²` and `g = U α_B²/2`,
//! each block is
//!
//! ```text
//! d/dt (δ, δ*) = [[-i(ω - iγ/2), -i g], [i g*, i(ω + iγ/2)]] (δ, δ*)
//! ```
//!
//! with eigenvalues `-γ/2 ± sqrt(|g|² - ω²)`.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, Matrix3, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, I};
use crate::params::ModelParams;

/// Two roots closer than this (relative) count as a fold.
pub const FOLD_TOL: f64 = 1e-6;

/// A homogeneous mean-field steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScBranch {
    /// On-site density.
    pub n: f64,
    /// Bonding-mode field, `|alpha_b|² = 2n`.
    pub alpha_b: C64,
    pub stable: bool,
    /// Largest real part of the linearized spectrum.
    pub growth_rate: f64,
    /// Set when another root lies within [`FOLD_TOL`].
    pub fold: bool,
}

impl ScBranch {
    /// Field of each site, `alpha_b / sqrt2`.
    pub fn site_field(&self) -> C64 {
        self.alpha_b / SQRT_2
    }

    /// Total photon number `2n`.
    pub fn total_density(&self) -> f64 {
        2.0 * self.n
    }
}

/// `U²n³ - 2Uδn² + (δ² + γ²/4)n - |F|²`.
pub fn cubic_residual(u: f64, delta_sum: f64, f2: f64, gamma: f64, n: f64) -> f64 {
    n * ((u * n - delta_sum).powi(2) + gamma * gamma / 4.0) - f2
}

/// Non-negative real roots in ascending order of
/// `n [(U n - δ)² + γ²/4] = |F|²`.
pub fn density_roots(u: f64, delta_sum: f64, f2: f64, gamma: f64) -> Vec<f64> {
    if f2 == 0.0 {
        return vec![0.0];
    }
    if u == 0.0 {
        return vec![f2 / (delta_sum * delta_sum + gamma * gamma / 4.0)];
    }
    // Monic cubic n³ + a n² + b n + c.
    let a = -2.0 * delta_sum / u;
    let b = (delta_sum * delta_sum + gamma * gamma / 4.0) / (u * u);
    let cc = -f2 / (u * u);
    let companion = Matrix3::new(0.0, 0.0, -cc, 1.0, 0.0, -b, 0.0, 1.0, -a);
    let eig = Schur::new(companion).complex_eigenvalues();
    let scale = 1.0 + eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut roots: Vec<f64> = eig
        .iter()
        .filter(|z| z.im.abs() <= 1e-6 * scale)
        .map(|z| polish(z.re, a, b, cc))
        .filter(|&x| x >= 0.0)
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * (1.0 + y.abs()));
    if roots.is_empty() {
        // The cubic is positive-leading and negative at n = 0, so at least one
        // positive root exists; fall back to bisection if eigenvalues missed it.
        roots.push(bisect_root(a, b, cc));
    }
    roots
}

fn monic(x: f64, a: f64, b: f64, c: f64) -> (f64, f64) {
    let p = ((x + a) * x + b) * x + c;
    let dp = (3.0 * x + 2.0 * a) * x + b;
    (p, dp)
}

fn polish(mut x: f64, a: f64, b: f64, c: f64) -> f64 {
    for _ in 0..50 {
        let (p, dp) = monic(x, a, b, c);
        if dp == 0.0 {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.abs() <= 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

fn bisect_root(a: f64, b: f64, c: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while monic(hi, a, b, c).0 < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if monic(mid, a, b, c).0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bonding field for on-site density `n`: `α_B = -sqrt2 F / (-Δ - J - iγ/2 + U n)`.
pub fn bonding_field(p: &ModelParams, n: f64) -> C64 {
    -p.f * SQRT_2 / C64::new(-p.detuning_sum() + p.u * n, -p.gamma / 2.0)
}

/// Linearized mean-field generator in `(δa_B, δa_B*, δa_AB, δa_AB*)`.
pub fn stability_matrix(p: &ModelParams, alpha_b: C64) -> CMatrix {
    let n_b = alpha_b.norm_sqr();
    let g = alpha_b * alpha_b * (p.u / 2.0);
    let block = |omega: f64| -> [[C64; 2]; 2] {
        let w = C64::new(omega, -p.gamma / 2.0);
        [[-I * w, -I * g], [I * g.conj(), I * w.conj()]]
    };
    let mut m = CMatrix::zeros(4, 4);
    for (offset, omega) in [(0, -p.delta - p.j + p.u * n_b), (2, -p.delta + p.j + p.u * n_b)] {
        let b = block(omega);
        for r in 0..2 {
            for col in 0..2 {
                m[(offset + r, offset + col)] = b[r][col];
            }
        }
    }
    m
}

/// Eigenvalues of [`stability_matrix`].
pub fn stability_spectrum(p: &ModelParams, alpha_b: C64) -> Vec<C64> {
    let m = stability_matrix(p, alpha_b);
    Schur::new(m).eigenvalues().expect("complex Schur form is triangular").iter().copied().collect()
}

/// Homogeneous steady states, ascending in density, each classified by the
/// sign of the largest real part of its linearized spectrum.
pub fn homogeneous_roots(p: &ModelParams) -> Result<Vec<ScBranch>> {
    p.validate()?;
    let roots = density_roots(p.u, p.detuning_sum(), p.f.norm_sqr(), p.gamma);
    let mut out: Vec<ScBranch> = roots
        .iter()
        .map(|&n| {
            let alpha_b = bonding_field(p, n);
            let growth_rate = stability_spectrum(p, alpha_b).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            ScBranch { n, alpha_b, stable: growth_rate < 0.0, growth_rate, fold: false }
        })
        .collect();
    for k in 1..out.len() {
        if (out[k].n - out[k - 1].n).abs() <= FOLD_TOL * (1.0 + out[k].n) {
            out[k].fold = true;
            out[k - 1].fold = true;
        }
    }
    Ok(out)
}

/// Whether the homogeneous solution can be multivalued: `J + Δ >= sqrt3 γ/2`.
pub fn bistability_threshold_check(p: &ModelParams) -> bool {
    p.detuning_sum() >= 3f64.sqrt() * p.gamma / 2.0 - 1e-12 * p.gamma
}

/// Drive window `(F_low, F_high)` with three homogeneous roots, from the
/// turning points `n± = (2δ ± sqrt(δ² - 3γ²/4)) / (3U)`.
pub fn bistable_window(u: f64, delta_sum: f64, gamma: f64) -> Option<(f64, f64)> {
    let disc = delta_sum * delta_sum - 0.75 * gamma * gamma;
    if u <= 0.0 || delta_sum <= 0.0 || disc < 0.0 {
        return None;
    }
    let f_at = |n: f64| cubic_residual(u, delta_sum, 0.0, gamma, n).sqrt();
    let n_lo = (2.0 * delta_sum - disc.sqrt()) / (3.0 * u);
    let n_hi = (2.0 * delta_sum + disc.sqrt()) / (3.0 * u);
    // F² is increasing below n_lo, decreasing between, increasing above.
    Some((f_at(n_hi), f_at(n_lo)))
}

/// Turning-point densities of the S-curve.
pub fn turning_points(u: f64, delta_sum: f64, gamma: f64) -> Option<(f64, f64)> {
    let disc = delta_sum * delta_sum - 0.75 * gamma * gamma;
    if u <= 0.0 || disc < 0.0 {
        return None;
    }
    Some(((2.0 * delta_sum - disc.sqrt()) / (3.0 * u), (2.0 * delta_sum + disc.sqrt()) / (3.0 * u)))
}

/// Parameter sets sharing `J + Δ` give identical homogeneous densities.
/// Errors if the sets do not share the sum.
pub fn jplusdelta_invariance_check(sets: &[ModelParams]) -> Result<bool> {
    let Some(first) = sets.first() else {
        return Err(Error::InvalidParameter("empty parameter list".into()));
    };
    for s in sets {
        if (s.detuning_sum() - first.detuning_sum()).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "J + Delta differs: {} vs {}",
                s.detuning_sum(),
                first.detuning_sum()
            )));
        }
    }
    let reference: Vec<f64> = homogeneous_roots(first)?.iter().map(|b| b.n).collect();
    for s in &sets[1..] {
        let roots: Vec<f64> = homogeneous_roots(s)?.iter().map(|b| b.n).collect();
        if roots.len() != reference.len()
            || roots.iter().zip(&reference).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs()))
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Right-hand side of the site-mode mean-field equations
/// `i dα_j/dt = (-Δ - iγ/2) α_j + U|α_j|² α_j - J α_k + F`.
pub fn gp_rhs(p: &ModelParams, a: [C64; 2]) -> [C64; 2] {
    let w = C64::new(-p.delta, -p.gamma / 2.0);
    let f = |x: C64, y: C64| -I * ((w + p.u * x.norm_sqr()) * x - p.j * y + p.f);
    [f(a[0], a[1]), f(a[1], a[0])]
}

/// RK4 integration of [`gp_rhs`] for time `t`.
pub fn gp_evolve(p: &ModelParams, mut a: [C64; 2], t: f64, dt: f64) -> [C64; 2] {
    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let add = |x: [C64; 2], k: [C64; 2], s: f64| [x[0] + k[0] * s, x[1] + k[1] * s];
    for _ in 0..steps {
        let k1 = gp_rhs(p, a);
        let k2 = gp_rhs(p, add(a, k1, h / 2.0));
        let k3 = gp_rhs(p, add(a, k2, h / 2.0));
        let k4 = gp_rhs(p, add(a, k3, h));
        for j in 0..2 {
            a[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
        }
    }
    a
}

/// Gaussian closure of the dimer around a homogeneous mean-field solution.
/// Quantities with `_b` refer to the bonding mode, `_ab` to the anti-bonding mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerGaussianMoments {
    pub alpha_b: C64,
    pub n_b: f64,
    pub m_b: C64,
    pub n_ab: f64,
    pub m_ab: C64,
    pub residual: f64,
    pub iterations: usize,
}

impl DimerGaussianMoments {
    pub fn bonding(&self) -> crate::kerr::ModeMoments {
        crate::kerr::ModeMoments { alpha: self.alpha_b, n: self.n_b, m: self.m_b }
    }

    pub fn antibonding(&self) -> crate::kerr::ModeMoments {
        crate::kerr::ModeMoments { alpha: C64::new(0.0, 0.0), n: self.n_ab, m: self.m_ab }
    }
}

/// Residuals of the closure in terms of the centered unknowns
/// `x = [N_B, Re M_B, Im M_B, n_AB, Re m_AB, Im m_AB]`, with
/// `N_B = n_B - |α_B|²`, `M_B = m_B - α_B²`, `P = m_AB + m_B`:
///
/// ```text
/// γ N_B + U Im[P* M_B]                                   = 0
/// γ n_AB + U Im[P* m_AB]                                 = 0
/// 2(-Δ - J + U(n_B + n_AB) - iγ/2) M_B + U/2 P (1 + 2N_B)   = 0
/// 2(-Δ + J + U(n_B + n_AB) - iγ/2) m_AB + U/2 P (1 + 2n_AB) = 0
/// ```
pub fn dimer_gaussian_residual(p: &ModelParams, alpha_b: C64, x: &[f64; 6]) -> [f64; 6] {
    let nb0 = x[0];
    let mb0 = C64::new(x[1], x[2]);
    let na = x[3];
    let ma = C64::new(x[4], x[5]);
    let nb = nb0 + alpha_b.norm_sqr();
    let mb = mb0 + alpha_b * alpha_b;
    let pp = ma + mb;
    let wb = C64::new(-p.delta - p.j + p.u * (nb + na), -p.gamma / 2.0);
    let wa = C64::new(-p.delta + p.j + p.u * (nb + na), -p.gamma / 2.0);
    let e1 = p.gamma * nb0 + p.u * (pp.conj() * mb0).im;
    let e2 = p.gamma * na + p.u * (pp.conj() * ma).im;
    let e3 = wb * mb0 * 2.0 + pp * (p.u / 2.0) * (1.0 + 2.0 * nb0);
    let e4 = wa * ma * 2.0 + pp * (p.u / 2.0) * (1.0 + 2.0 * na);
    [e1, e2, e3.re, e3.im, e4.re, e4.im]
}

fn inf_norm(r: &[f64; 6]) -> f64 {
    r.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Gaussian closure on the lowest stable homogeneous branch.
pub fn dimer_gaussian_steady_state(p: &ModelParams) -> Result<DimerGaussianMoments> {
    let branches = homogeneous_roots(p)?;
    let branch = branches
        .iter()
        .find(|b| b.stable)
        .ok_or_else(|| Error::Unphysical("no stable homogeneous branch".into()))?;
    dimer_gaussian_on_branch(p, branch)
}

/// Damped Newton iteration from zero fluctuations around `branch`.
pub fn dimer_gaussian_on_branch(p: &ModelParams, branch: &ScBranch) -> Result<DimerGaussianMoments> {
    const TOL: f64 = 1e-10;
    const MAX_ITER: usize = 200;
    let alpha_b = branch.alpha_b;
    let mut x = [0.0; 6];
    let mut r = dimer_gaussian_residual(p, alpha_b, &x);
    let mut norm = inf_norm(&r);
    let mut iterations = 0;
    while norm >= TOL * 1e-2 && iterations < MAX_ITER {
        iterations += 1;
        let mut jac = DMatrix::<f64>::zeros(6, 6);
        for k in 0..6 {
            let h = 1e-7 * (1.0 + x[k].abs());
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            let (rp, rm) = (dimer_gaussian_residual(p, alpha_b, &xp), dimer_gaussian_residual(p, alpha_b, &xm));
            for row in 0..6 {
                jac[(row, k)] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        let rhs = nalgebra::DVector::from_iterator(6, r.iter().map(|v| -v));
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("Jacobian of the Gaussian closure is singular".into()))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = x;
            for k in 0..6 {
                trial[k] += lambda * step[k];
            }
            let rt = dimer_gaussian_residual(p, alpha_b, &trial);
            let nt = inf_norm(&rt);
            if nt < norm {
                x = trial;
                r = rt;
                norm = nt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !(norm < TOL) {
        return Err(Error::NonConvergence { iterations, residual: norm });
    }
    let out = DimerGaussianMoments {
        alpha_b,
        n_b: x[0] + alpha_b.norm_sqr(),
        m_b: C64::new(x[1], x[2]) + alpha_b * alpha_b,
        n_ab: x[3],
        m_ab: C64::new(x[4], x[5]),
        residual: norm,
        iterations,
    };
    out.bonding().check_physical(1e-9)?;
    out.antibonding().check_physical(1e-9)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn undriven_single_stable_root() {
        let p = ModelParams::with_fixed_sum(0.5, 2.0, 1.0, 0.0);
        let r = homogeneous_roots(&p).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].n, 0.0);
        assert!(r[0].stable);
    }

    #[test]
    fn roots_solve_the_cubic() {
        for f in [0.3, 0.8, 1.0, 1.1, 2.0] {
            let p = ModelParams::with_fixed_sum(0.25, 2.0, 1.0, f);
            for b in homogeneous_roots(&p).unwrap() {
                let res = cubic_residual(p.u, 2.0, f * f, 1.0, b.n);
                assert!(res.abs() < 1e-12 * (1.0 + f * f), "residual {res}");
                assert_relative_eq!(b.alpha_b.norm_sqr(), 2.0 * b.n, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn window_edges_match_turning_points() {
        let (lo, hi) = bistable_window(1.0, 2.0, 1.0).unwrap();
        assert!(lo < hi);
        let mid = 0.5 * (lo + hi);
        assert_eq!(density_roots(1.0, 2.0, mid * mid, 1.0).len(), 3);
        assert_eq!(density_roots(1.0, 2.0, (0.9 * lo).powi(2), 1.0).len(), 1);
        assert_eq!(density_roots(1.0, 2.0, (1.1 * hi).powi(2), 1.0).len(), 1);
        assert!(bistable_window(1.0, 0.5, 1.0).is_none());
    }

    #[test]
    fn spectrum_matches_closed_form() {
        let p = ModelParams::with_fixed_sum(0.7, 2.0, 1.0, 1.0);
        for b in homogeneous_roots(&p).unwrap() {
            let mut num: Vec<f64> = stability_spectrum(&p, b.alpha_b).iter().map(|z| z.re).collect();
            let g = (b.alpha_b * b.alpha_b * (p.u / 2.0)).norm();
            let mut want = Vec::new();
            for omega in [-p.delta - p.j + p.u * 2.0 * b.n, -p.delta + p.j + p.u * 2.0 * b.n] {
                let s = C64::new(g * g - omega * omega, 0.0).sqrt();
                want.push(-0.5 + s.re);
                want.push(-0.5 - s.re);
            }
            num.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            for (a, w) in num.iter().zip(&want) {
                assert!((a - w).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn threshold_boundary() {
        let edge = 3f64.sqrt() / 2.0;
        assert!(bistability_threshold_check(&ModelParams::with_fixed_sum(0.3, edge, 1.0, 1.0)));
        assert!(!bistability_threshold_check(&ModelParams::with_fixed_sum(0.0, 0.0, 1.0, 1.0)));
    }

    #[test]
    fn coherent_limit_of_gaussian_closure() {
        let p = ModelParams::with_fixed_sum(2.0, 1.0, 0.0, 0.5);
        let g = dimer_gaussian_steady_state(&p).unwrap();
        assert!(g.n_ab.abs() < 1e-14 && g.m_ab.norm() < 1e-14);
        assert_relative_eq!(g.n_b, g.alpha_b.norm_sqr(), epsilon = 1e-14);
    }
}
