//! Closed-form steady state of the single driven-dissipative Kerr mode
//! `H = -Δ a†a + U/2 a†² a² + F a† + F* a` with loss `gamma`, and its
//! Gaussian-fluctuation approximation around the semiclassical field.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::liouvillian::SingleModeModel;

/// Default cap on hypergeometric series terms.
pub const MAX_SERIES_TERMS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KerrParams {
    pub delta: f64,
    pub u: f64,
    pub f: Complex64,
    pub gamma: f64,
}

impl KerrParams {
    pub fn new(delta: f64, u: f64, f: f64) -> Self {
        Self { delta, u, f: Complex64::new(f, 0.0), gamma: 1.0 }
    }

    /// Drive fixed through the scaling variable `F sqrt(U)`.
    pub fn from_scaled_drive(delta: f64, u: f64, f_sqrt_u: f64) -> Self {
        Self::new(delta, u, f_sqrt_u / u.sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.delta, self.u, self.f.re, self.f.im, self.gamma].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("Kerr parameters must be finite".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParameter("gamma must be > 0".into()));
        }
        Ok(())
    }

    /// `c = 2(-Δ - iγ/2)/U`.
    pub fn c(&self) -> C64 {
        C64::new(-self.delta, -self.gamma / 2.0) * (2.0 / self.u)
    }

    /// Series argument `8 |F/U|²`.
    pub fn z(&self) -> f64 {
        8.0 * (self.f / self.u).norm_sqr()
    }

    pub fn model(&self) -> SingleModeModel {
        SingleModeModel::kerr(self.delta, self.u, self.f, self.gamma)
    }

    /// Field of the linear cavity, `F / (Δ + iγ/2)`.
    pub fn linear_field(&self) -> C64 {
        self.f / C64::new(self.delta, self.gamma / 2.0)
    }
}

/// Series value `mantissa * exp(log_scale)`.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    mantissa: C64,
    log_scale: f64,
}

const RESCALE: f64 = 1e150;

fn is_pole(x: C64) -> bool {
    x.im == 0.0 && x.re <= 0.0 && x.re.fract() == 0.0
}

fn series(c: C64, d: C64, z: f64, max_terms: usize) -> Result<Scaled> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::InvalidParameter(format!("series argument must be finite and >= 0, got {z}")));
    }
    if is_pole(c) || is_pole(d) {
        return Err(Error::InvalidParameter("hypergeometric parameters at a non-positive integer".into()));
    }
    let mut sum = C64::new(1.0, 0.0);
    let mut term = C64::new(1.0, 0.0);
    let mut log_scale = 0.0;
    let mut small = 0;
    for k in 0..max_terms {
        let kf = k as f64;
        term *= z / ((c + kf) * (d + kf) * (kf + 1.0));
        sum += term;
        if sum.norm() > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            log_scale += RESCALE.ln();
        }
        if term.norm() < 1e-16 * sum.norm() {
            small += 1;
            if small == 3 {
                return Ok(Scaled { mantissa: sum, log_scale });
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesNonConvergence { terms: max_terms })
}

/// `Σ_n Γ(c)Γ(d) / (Γ(c+n)Γ(d+n)) zⁿ/n!`, summed by term recurrence.
pub fn hypergeometric_f(c: C64, d: C64, z: f64) -> Result<C64> {
    hypergeometric_f_with(c, d, z, MAX_SERIES_TERMS)
}

pub fn hypergeometric_f_with(c: C64, d: C64, z: f64, max_terms: usize) -> Result<C64> {
    let s = series(c, d, z, max_terms)?;
    let v = s.mantissa * s.log_scale.exp();
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::Overflow(format!("hypergeometric value exceeds f64 range (log scale {})", s.log_scale)));
    }
    Ok(v)
}

/// Rising factorial `(x)_k`.
fn pochhammer(x: C64, k: usize) -> C64 {
    (0..k).fold(C64::new(1.0, 0.0), |acc, j| acc * (x + j as f64))
}

/// Steady-state `<a†ⁿ aᵐ>`:
/// `(-2F*/U)ⁿ (-2F/U)ᵐ / ((c)_m (c*)_n) · F(c+m, c*+n, z) / F(c, c*, z)`.
/// The Γ ratios reduce to finite rising factorials.
pub fn correlation(n: usize, m: usize, p: &KerrParams) -> Result<C64> {
    p.validate()?;
    if p.u == 0.0 {
        return Err(Error::InvalidParameter("closed form is singular at U = 0; use the linear solution".into()));
    }
    if n == 0 && m == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    if p.f.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let c = p.c();
    let z = p.z();
    let num = series(c + m as f64, c.conj() + n as f64, z, MAX_SERIES_TERMS)?;
    let den = series(c, c.conj(), z, MAX_SERIES_TERMS)?;
    let ratio = num.mantissa / den.mantissa * (num.log_scale - den.log_scale).exp();
    let pre_n = (-2.0 * p.f.conj() / p.u).powu(n as u32);
    let pre_m = (-2.0 * p.f / p.u).powu(m as u32);
    let value = pre_n * pre_m / (pochhammer(c, m) * pochhammer(c.conj(), n)) * ratio;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Overflow(format!("correlation <a†^{n} a^{m}> overflows")));
    }
    Ok(value)
}

/// First and second moments of one mode: `alpha = <a>`, `n = <a†a>`, `m = <aa>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMoments {
    pub alpha: C64,
    pub n: f64,
    pub m: C64,
}

/// Moments of a Gaussian description of one mode.
pub type GaussianMoments = ModeMoments;

impl ModeMoments {
    pub fn coherent(alpha: C64) -> Self {
        Self { alpha, n: alpha.norm_sqr(), m: alpha * alpha }
    }

    pub fn vacuum() -> Self {
        Self::coherent(C64::new(0.0, 0.0))
    }

    /// `n - |alpha|²`.
    pub fn centered_n(&self) -> f64 {
        self.n - self.alpha.norm_sqr()
    }

    /// `m - alpha²`.
    pub fn centered_m(&self) -> C64 {
        self.m - self.alpha * self.alpha
    }

    /// Variance of `X^θ = (e^{iθ} a† + e^{-iθ} a)/sqrt2`:
    /// `Re[e^{-2iθ}(m - α²)] + n - |α|² + 1/2`.
    pub fn quadrature_variance(&self, theta: f64) -> f64 {
        (C64::from_polar(1.0, -2.0 * theta) * self.centered_m()).re + self.centered_n() + 0.5
    }

    /// Variance of the conjugate quadrature `P^θ = X^{θ + π/2}`.
    pub fn conjugate_variance(&self, theta: f64) -> f64 {
        -(C64::from_polar(1.0, -2.0 * theta) * self.centered_m()).re + self.centered_n() + 0.5
    }

    /// `(θ*, min_θ Var X^θ)`; the variance is `A + |B| cos(arg B - 2θ)` with
    /// `A = n - |α|² + 1/2`, `B = m - α²`. `θ* ∈ [0, π)`, zero when `B = 0`.
    pub fn min_quadrature_variance(&self) -> (f64, f64) {
        let b = self.centered_m();
        let a = self.centered_n() + 0.5;
        if b.norm() == 0.0 {
            return (0.0, a);
        }
        let theta = ((b.arg() - std::f64::consts::PI) / 2.0).rem_euclid(std::f64::consts::PI);
        (theta, a - b.norm())
    }

    /// `n >= |α|²` and `|m - α²|² <= N0 (N0 + 1)` with `N0 = n - |α|²`,
    /// each to `tol`.
    pub fn check_physical(&self, tol: f64) -> Result<()> {
        let n0 = self.centered_n();
        if n0 < -tol {
            return Err(Error::Unphysical(format!("n - |alpha|^2 = {n0:.3e} < 0")));
        }
        let m0 = self.centered_m().norm_sqr();
        let bound = n0.max(0.0) * (n0.max(0.0) + 1.0);
        if m0 > bound + tol {
            return Err(Error::Unphysical(format!("|m - alpha^2|^2 = {m0:.6e} exceeds N0(N0+1) = {bound:.6e}")));
        }
        Ok(())
    }
}

/// Exact steady-state moments. `U = 0` gives the coherent state of the linear cavity.
pub fn moments(p: &KerrParams) -> Result<ModeMoments> {
    p.validate()?;
    if p.u == 0.0 {
        return Ok(ModeMoments::coherent(p.linear_field()));
    }
    Ok(ModeMoments {
        alpha: correlation(0, 1, p)?,
        n: correlation(1, 1, p)?.re,
        m: correlation(0, 2, p)?,
    })
}

/// Steady-state `<a†a>`.
pub fn density(p: &KerrParams) -> Result<f64> {
    Ok(moments(p)?.n)
}

pub fn quadrature_variance(theta: f64, p: &KerrParams) -> Result<f64> {
    Ok(moments(p)?.quadrature_variance(theta))
}

pub fn min_quadrature_variance(p: &KerrParams) -> Result<(f64, f64)> {
    Ok(moments(p)?.min_quadrature_variance())
}

/// Semiclassical fields solving `(-Δ - iγ/2 + U|α|²) α + F = 0`, ordered by
/// increasing `|α|²`.
pub fn semiclassical_fields(p: &KerrParams) -> Result<Vec<C64>> {
    p.validate()?;
    let roots = crate::semiclassical::density_roots(p.u, p.delta, p.f.norm_sqr(), p.gamma);
    Ok(roots
        .into_iter()
        .map(|n| -p.f / C64::new(-p.delta + p.u * n, -p.gamma / 2.0))
        .collect())
}

/// Gaussian fluctuations around the semiclassical field `alpha`:
///
/// `0 = -γ (n - |α|²) - 2U Im[α*² m]`
/// `0 = 2(-Δ - iγ/2)(m - α²) + U m + 2U (3 n m - |α|² m - 2 α² n)`.
///
/// The second equation is linear in `m`; the first then leaves a scalar
/// root in `n`, of which the one nearest `|α|²` is taken.
pub fn gaussian_fluctuations(p: &KerrParams, alpha: C64) -> Result<GaussianMoments> {
    p.validate()?;
    let a2 = alpha * alpha;
    let n_sc = alpha.norm_sqr();
    if p.u == 0.0 {
        return Ok(ModeMoments::coherent(alpha));
    }
    let w = C64::new(-p.delta, -p.gamma / 2.0) * 2.0;
    let m_of = |n: f64| -> Result<C64> {
        let den = w + p.u + 2.0 * p.u * (3.0 * n - n_sc);
        if den.norm() < 1e-14 * (1.0 + w.norm()) {
            return Err(Error::Singular(format!("Gaussian moment equations singular at n = {n}")));
        }
        Ok(a2 * (w + 4.0 * p.u * n) / den)
    };
    let g = |n: f64| -> Result<f64> { Ok(-p.gamma * (n - n_sc) - 2.0 * p.u * (a2.conj() * m_of(n)?).im) };
    let n = nearest_root(&g, n_sc)?;
    let result = ModeMoments { alpha, n, m: m_of(n)? };
    let resid = g(n)?.abs();
    if resid > 1e-9 * (1.0 + n) {
        return Err(Error::NonConvergence { iterations: 0, residual: resid });
    }
    Ok(result)
}

/// Root of a scalar function nearest to `x0`, searched on `[0, ∞)` by
/// expanding brackets on both sides and bisecting.
pub(crate) fn nearest_root(g: &dyn Fn(f64) -> Result<f64>, x0: f64) -> Result<f64> {
    let g0 = g(x0)?;
    if g0 == 0.0 {
        return Ok(x0);
    }
    let mut step = 1e-6 * (1.0 + x0);
    let (mut last_hi, mut last_lo) = (x0, x0);
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..200 {
        let hi = x0 + step;
        if g(hi)?.signum() != g0.signum() {
            best = Some((last_hi, hi));
            break;
        }
        last_hi = hi;
        let lo = (x0 - step).max(0.0);
        if lo < last_lo {
            if g(lo)?.signum() != g0.signum() {
                best = Some((last_lo, lo));
                break;
            }
            last_lo = lo;
        }
        step *= 2.0;
        if step > 1e12 * (1.0 + x0) {
            break;
        }
    }
    let (mut a, mut b) = best.ok_or(Error::NonConvergence { iterations: 200, residual: g0.abs() })?;
    let mut ga = g(a)?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == ga.signum() {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}
