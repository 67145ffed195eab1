//! Quadratures and the EPR-pair variance witness.
//!
//! With `u = sqrt2 X_B^θ = X_1^θ + X_2^θ` and `v = sqrt2 P_AB^θ = P_2^θ - P_1^θ`,
//! every separable state of the two sites has `(Δu)² + (Δv)² >= 2`. A smaller
//! sum detects entanglement; a larger one detects nothing.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::Basis;
use crate::gutzwiller::single_mode_moments;
use crate::kerr::{self, ModeMoments};
use crate::linalg::{CMatrix, C64};
use crate::params::ModelParams;
use crate::semiclassical::DimerGaussianMoments;
use crate::state::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EprReport {
    pub theta: f64,
    pub var_u: f64,
    pub var_v: f64,
    pub sum: f64,
    /// `sum < 2`.
    pub entangled: bool,
}

impl EprReport {
    fn new(theta: f64, var_u: f64, var_v: f64) -> Self {
        let sum = var_u + var_v;
        Self { theta, var_u, var_v, sum, entangled: sum < 2.0 }
    }
}

/// `X^θ = (e^{iθ} a† + e^{-iθ} a)/sqrt2` and `P^θ = X^{θ+π/2}`.
pub fn quadrature_ops(a: &CMatrix, theta: f64) -> (CMatrix, CMatrix) {
    let ad = a.adjoint();
    let e = C64::from_polar(FRAC_1_SQRT_2, theta);
    let x = &ad * e + a * e.conj();
    let ie = e * C64::new(0.0, 1.0);
    let p = &ad * ie + a * ie.conj();
    (x, p)
}

fn report_from_modes(bonding: &ModeMoments, antibonding: &ModeMoments, theta: f64) -> EprReport {
    EprReport::new(theta, 2.0 * bonding.quadrature_variance(theta), 2.0 * antibonding.conjugate_variance(theta))
}

/// Witness evaluated on a two-mode density matrix in either basis.
pub fn epr_variance_sum(rho: &DensityMatrix, theta: f64) -> Result<EprReport> {
    if rho.space().modes() != 2 {
        return Err(Error::NotTwoMode);
    }
    let k = rho.to_basis(Basis::Reciprocal)?;
    let b = single_mode_moments(&k.partial_trace(0)?);
    let ab = single_mode_moments(&k.partial_trace(1)?);
    Ok(report_from_modes(&b, &ab, theta))
}

/// Witness from Gaussian moments of the bonding and anti-bonding modes.
pub fn epr_from_gaussian(g: &DimerGaussianMoments, theta: f64) -> Result<EprReport> {
    let (b, ab) = (g.bonding(), g.antibonding());
    b.check_physical(1e-8)?;
    ab.check_physical(1e-8)?;
    Ok(report_from_modes(&b, &ab, theta))
}

/// Angle minimizing the bonding-mode quadrature variance of the single-mode
/// problem with `U/2`, `sqrt2 F` and detuning `Δ + J`. Zero for `U = 0`.
pub fn optimal_theta_at_large_j(p: &ModelParams) -> Result<f64> {
    if p.u == 0.0 {
        return Ok(0.0);
    }
    Ok(kerr::min_quadrature_variance(&p.bonding_kerr())?.0)
}

/// `2 min_θ (ΔX_B^θ)² + 1`: the sum when the anti-bonding mode is empty.
pub fn single_mode_asymptote(p: &ModelParams) -> Result<f64> {
    Ok(2.0 * kerr::min_quadrature_variance(&p.bonding_kerr())?.1 + 1.0)
}
