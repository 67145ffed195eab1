//! A fast self-check suite of library invariants, runnable from the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entanglement::epr_variance_sum;
use crate::error::Result;
use crate::figures::exact_state;
use crate::fock::{Basis, FockSpace};
use crate::gutzwiller::{single_mode_moments, squeezed_thermal_dm, SqueezedThermalParams};
use crate::kerr::{self, KerrParams};
use crate::linalg::{CMatrix, C64};
use crate::liouvillian::build_liouvillian;
use crate::params::ModelParams;
use crate::state::{dimer_space, fidelity, DensityMatrix};
use crate::steady::steady_state;
use crate::trajectory::GaussianWavefunction;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Worst deviation observed.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

/// Random full-rank state `G G† / Tr(G G†)` with entries uniform in the unit square.
pub fn random_density_matrix(space: &FockSpace, basis: Basis, rng: &mut impl Rng) -> Result<DensityMatrix> {
    let d = space.dim();
    let g = CMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(space.clone(), basis, m / C64::new(tr, 0.0))
}

/// Run every check with `samples` random cases each.
pub fn run_all(samples: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let cavity = KerrParams::new(0.0, 0.0, 1.0);
    let rho = steady_state(&cavity.model().liouvillian(&FockSpace::single(48)?)?)?;
    out.push(CheckResult::new("linear cavity <n> = 4", (rho.occupation(0) - 4.0).abs(), 1e-8));

    let mut worst = 0.0f64;
    for (j, u, f) in [(0.25, 1.0, 0.6), (1.0, 1.0, 0.9), (0.5, 0.3, 1.2)] {
        let p = ModelParams::with_fixed_sum(j, 2.0, u, f);
        let space = dimer_space(8)?;
        let real = steady_state(&build_liouvillian(&p, &space, Basis::Real)?)?;
        let k = exact_state(&p, &space)?.to_basis(Basis::Reciprocal)?;
        worst = worst.max((real.occupation(0) + real.occupation(1) - k.occupation(0) - k.occupation(1)).abs());
    }
    out.push(CheckResult::new("n_T equal in both bases", worst, 1e-9));

    let kp = KerrParams::new(1.0, 1.0, 0.7);
    let ed = steady_state(&kp.model().liouvillian(&FockSpace::single(30)?)?)?;
    out.push(CheckResult::new("closed-form Kerr density matches ED", (kerr::density(&kp)? - ed.occupation(0)).abs(), 1e-6));

    let space = dimer_space(3)?;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let a = random_density_matrix(&space, Basis::Real, &mut rng)?;
        let b = random_density_matrix(&space, Basis::Real, &mut rng)?;
        let fab = fidelity(&a, &b)?;
        let fba = fidelity(&b, &a)?;
        let faa = fidelity(&a, &a)?;
        let range = if (0.0..=1.0 + 1e-12).contains(&fab) { 0.0 } else { 1.0 };
        worst = worst.max((fab - fba).abs()).max((faa - 1.0).abs()).max(range);
    }
    out.push(CheckResult::new("fidelity symmetric, bounded, f(r, r) = 1", worst, 1e-8));

    let single = FockSpace::single(6)?;
    let two = dimer_space(12)?;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let a = random_density_matrix(&single, Basis::Real, &mut rng)?;
        let b = random_density_matrix(&single, Basis::Real, &mut rng)?;
        let rho = DensityMatrix::product(&two, Basis::Real, &a, &b)?;
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        worst = worst.max(2.0 - epr_variance_sum(&rho, theta)?.sum);
    }
    out.push(CheckResult::new("separable EPR sum >= 2", worst.max(0.0), 1e-8));

    let mut worst = 0.0f64;
    let big = FockSpace::single(100)?;
    for _ in 0..samples.min(20) {
        let p = SqueezedThermalParams::new(rng.random_range(-3.0..3.0), rng.random_range(0.0..0.6), rng.random_range(0.0..0.8))?;
        let (n, m) = p.to_moments();
        let back = SqueezedThermalParams::from_moments(n, m)?;
        let z = C64::from_polar(1.0, p.theta);
        let angle = (C64::from_polar(1.0, back.theta) - z).norm() * p.r.min(1.0);
        worst = worst.max((back.r - p.r).abs()).max((back.n - p.n).abs()).max(angle);
        let mm = single_mode_moments(&squeezed_thermal_dm(&p, &big)?);
        worst = worst.max((mm.n - n).abs()).max((mm.m - m).norm());
    }
    out.push(CheckResult::new("squeezed thermal parameters <-> moments", worst, 1e-8));

    let mut worst = 0.0f64;
    for _ in 0..samples {
        let n = rng.random_range(0.01..3.0);
        let m = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let g = GaussianWavefunction { a1: C64::new(0.0, 0.0), m, n, norm: 1.0 }.after_jump()?;
        worst = worst.max((g.m - 3.0 * m).norm());
        let g = GaussianWavefunction { a1: C64::new(0.0, 0.0), m: C64::new(0.0, 0.0), n, norm: 1.0 }.after_jump()?;
        worst = worst.max((g.n - 2.0 * n).abs());
    }
    out.push(CheckResult::new("Gaussian jump reductions", worst, 1e-12));

    Ok(out)
}
