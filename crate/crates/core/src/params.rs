//! Physical parameters of the dimer, expressed in units of the loss rate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hopping `j`, detuning `delta` (drive minus cavity frequency), on-site Kerr
/// interaction `u`, homogeneous coherent drive `f` and loss rate `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub j: f64,
    pub delta: f64,
    pub u: f64,
    pub f: Complex64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(j: f64, delta: f64, u: f64, f: f64) -> Self {
        Self { j, delta, u, f: Complex64::new(f, 0.0), gamma: 1.0 }
    }

    /// Parameters at fixed bonding-mode detuning `j + delta = detuning_sum`.
    pub fn with_fixed_sum(j: f64, detuning_sum: f64, u: f64, f: f64) -> Self {
        Self::new(j, detuning_sum - j, u, f)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.j.is_finite()
            && self.delta.is_finite()
            && self.u.is_finite()
            && self.f.re.is_finite()
            && self.f.im.is_finite()
            && self.gamma.is_finite();
        if !finite {
            return Err(Error::InvalidParameter("all parameters must be finite".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!("gamma must be > 0, got {}", self.gamma)));
        }
        Ok(())
    }

    /// Effective detuning of the bonding mode, the only combination the
    /// homogeneous semiclassical solution depends on.
    pub fn detuning_sum(&self) -> f64 {
        self.j + self.delta
    }

    /// Rescale every rate so that `gamma == 1`.
    pub fn in_loss_units(&self) -> Self {
        let g = self.gamma;
        Self { j: self.j / g, delta: self.delta / g, u: self.u / g, f: self.f / g, gamma: 1.0 }
    }

    /// The single-mode Kerr problem describing one site when the sites decouple (`J = 0`).
    pub fn site_kerr(&self) -> crate::kerr::KerrParams {
        crate::kerr::KerrParams { delta: self.delta, u: self.u, f: self.f, gamma: self.gamma }
    }

    /// The single-mode Kerr problem describing the bonding mode when the
    /// anti-bonding mode is empty (`J -> infinity` at fixed `J + delta`).
    pub fn bonding_kerr(&self) -> crate::kerr::KerrParams {
        crate::kerr::KerrParams {
            delta: self.detuning_sum(),
            u: self.u / 2.0,
            f: self.f * std::f64::consts::SQRT_2,
            gamma: self.gamma,
        }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::with_fixed_sum(0.25, 2.0, 1.0, 1.0)
    }
}
