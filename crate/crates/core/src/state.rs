//! Density matrices on truncated Fock spaces, expectation values and the
//! fidelity distance.

use crate::error::{Error, Result};
use crate::fock::{basis_transform, build_mode_operators_in, Basis, FockSpace, Operator, Truncation};
use crate::linalg::{c, herm_apply, herm_eigh, hermitian_part, max_abs, trace_norm, CMatrix, CVector, C64};

pub const TRACE_TOL: f64 = 1e-10;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;

/// Hermitian, unit-trace, positive-semidefinite matrix over a Fock space.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: FockSpace,
    basis: Basis,
    data: CMatrix,
}

impl DensityMatrix {
    /// Validated construction.
    pub fn new(space: FockSpace, basis: Basis, data: CMatrix) -> Result<Self> {
        let rho = Self::from_raw(space, basis, data)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Construction with only a shape check.
    pub fn from_raw(space: FockSpace, basis: Basis, data: CMatrix) -> Result<Self> {
        if data.nrows() != space.dim() || data.ncols() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: data.nrows() });
        }
        Ok(Self { space, basis, data })
    }

    /// Hermitize, clip negative eigenvalues and renormalize.
    pub fn sanitized(space: FockSpace, basis: Basis, data: CMatrix) -> Result<Self> {
        let raw = Self::from_raw(space, basis, data)?;
        let (values, vectors) = herm_eigh(&raw.data);
        let clipped = herm_apply(&values, &vectors, |x| x.max(0.0));
        let tr = clipped.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidState("no positive weight left after clipping".into()));
        }
        Ok(Self { data: clipped / c(tr), ..raw })
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(space: FockSpace, basis: Basis, psi: &CVector) -> Result<Self> {
        if psi.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: psi.len() });
        }
        let norm = psi.norm_squared();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let data = psi * psi.adjoint() / c(norm);
        Ok(Self { space, basis, data: hermitian_part(&data) })
    }

    pub fn vacuum(space: FockSpace, basis: Basis) -> Self {
        let mut data = CMatrix::zeros(space.dim(), space.dim());
        data[(0, 0)] = c(1.0);
        Self { space, basis, data }
    }

    /// Coherent state of a single mode, truncated and renormalized.
    pub fn coherent(space: FockSpace, alpha: C64) -> Result<Self> {
        if space.modes() != 1 {
            return Err(Error::InvalidParameter("coherent state needs a one-mode space".into()));
        }
        let psi = coherent_vector(space.dim(), alpha);
        Self::pure(space, Basis::Real, &psi)
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Check the trace, Hermiticity and positivity tolerances.
    pub fn validate(&self) -> Result<()> {
        let tr = self.data.trace();
        if (tr - c(1.0)).norm() >= TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from one")));
        }
        let herm = max_abs(&(&self.data - self.data.adjoint()));
        if herm >= HERMITICITY_TOL {
            return Err(Error::InvalidState(format!("anti-Hermitian part {herm:.3e}")));
        }
        let min = self.min_eigenvalue();
        if min <= -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        herm_eigh(&self.data).0.first().copied().unwrap_or(0.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eigh(&self.data).0
    }

    /// `Tr[op rho]`.
    pub fn expect(&self, op: &CMatrix) -> Result<C64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: op.nrows() });
        }
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..self.dim() {
            for k in 0..self.dim() {
                acc += op[(r, k)] * self.data[(k, r)];
            }
        }
        Ok(acc)
    }

    /// Mean occupation of coordinate mode `mode`.
    pub fn occupation(&self, mode: usize) -> f64 {
        self.space.states().iter().enumerate().map(|(k, occ)| occ[mode] as f64 * self.data[(k, k)].re).sum()
    }

    /// Mean total photon number.
    pub fn total_occupation(&self) -> f64 {
        (0..self.space.modes()).map(|m| self.occupation(m)).sum()
    }

    /// Population of the outermost retained shell.
    pub fn top_population(&self) -> f64 {
        (0..self.dim()).filter(|&k| self.space.is_top(k)).map(|k| self.data[(k, k)].re).sum()
    }

    /// Same state in other coordinates.
    pub fn to_basis(&self, basis: Basis) -> Result<Self> {
        if basis == self.basis {
            return Ok(self.clone());
        }
        let data = basis_transform(&self.data, &self.space, self.basis, basis)?;
        Ok(Self { space: self.space.clone(), basis, data: hermitian_part(&data) })
    }

    /// Reduced state of coordinate mode `keep` of a two-mode state.
    pub fn partial_trace(&self, keep: usize) -> Result<Self> {
        if self.space.modes() != 2 {
            return Err(Error::NotTwoMode);
        }
        let n_max = self.space.n_max();
        let single = FockSpace::single(n_max)?;
        let other = 1 - keep;
        let mut data = CMatrix::zeros(n_max + 1, n_max + 1);
        for (k, occ_k) in self.space.states().iter().enumerate() {
            for (l, occ_l) in self.space.states().iter().enumerate() {
                if occ_k[other] == occ_l[other] {
                    data[(occ_k[keep], occ_l[keep])] += self.data[(k, l)];
                }
            }
        }
        Ok(Self { space: single, basis: Basis::Real, data })
    }

    /// `rho1 ⊗ rho2` projected onto `space` and renormalized. The factors
    /// give the coordinate modes `0` and `1` of `basis`.
    pub fn product(space: &FockSpace, basis: Basis, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<Self> {
        if space.modes() != 2 {
            return Err(Error::NotTwoMode);
        }
        let (d1, d2) = (rho1.dim(), rho2.dim());
        let mut data = CMatrix::zeros(space.dim(), space.dim());
        for (k, a) in space.states().iter().enumerate() {
            if a[0] >= d1 || a[1] >= d2 {
                continue;
            }
            for (l, b) in space.states().iter().enumerate() {
                if b[0] >= d1 || b[1] >= d2 {
                    continue;
                }
                data[(k, l)] = rho1.data[(a[0], b[0])] * rho2.data[(a[1], b[1])];
            }
        }
        let tr = data.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState("product has no weight inside the truncation".into()));
        }
        Ok(Self { space: space.clone(), basis, data: data / c(tr) })
    }

    /// Convex combination weights must sum to one.
    pub fn mixture(states: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let (_, first) = states.first().ok_or(Error::EmptySamples)?;
        let mut data = CMatrix::zeros(first.dim(), first.dim());
        for (w, s) in states {
            if s.space != first.space || s.basis != first.basis {
                return Err(Error::BasisMismatch("mixture of states on different spaces".into()));
            }
            data += &s.data * c(*w);
        }
        Self::new(first.space.clone(), first.basis, data)
    }
}

/// Truncated coherent-state amplitudes `e^{-|α|²/2} α^n / sqrt(n!)`.
pub fn coherent_vector(dim: usize, alpha: C64) -> CVector {
    let mut v = CVector::zeros(dim);
    let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            amp *= alpha / (n as f64).sqrt();
        }
        v[n] = amp;
    }
    v
}

/// `Tr[op rho]` for a labelled operator.
pub fn expectation(op: &Operator, rho: &DensityMatrix) -> Result<C64> {
    rho.expect(&op.matrix)
}

/// Precomputed square root of a reference state for repeated fidelity
/// evaluations against it.
#[derive(Debug, Clone)]
pub struct FidelityReference {
    space: FockSpace,
    basis: Basis,
    sqrt: CMatrix,
}

impl FidelityReference {
    pub fn new(sigma: &DensityMatrix) -> Result<Self> {
        sigma.validate()?;
        let (values, vectors) = herm_eigh(&sigma.data);
        Ok(Self {
            space: sigma.space.clone(),
            basis: sigma.basis,
            sqrt: herm_apply(&values, &vectors, |x| x.max(0.0).sqrt()),
        })
    }

    pub fn fidelity(&self, rho: &DensityMatrix) -> Result<f64> {
        if rho.space != self.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: rho.dim() });
        }
        let rho = rho.to_basis(self.basis)?;
        rho.validate()?;
        let (values, vectors) = herm_eigh(&rho.data);
        let sqrt_rho = herm_apply(&values, &vectors, |x| x.max(0.0).sqrt());
        Ok(trace_norm(&(sqrt_rho * &self.sqrt)))
    }

    pub fn distance(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(1.0 - self.fidelity(rho)?)
    }
}

/// Uhlmann fidelity `Tr sqrt(sqrt(σ) ρ sqrt(σ))`, evaluated as the trace norm
/// of `sqrt(ρ) sqrt(σ)`; both square roots clip negative eigenvalues to zero.
/// States in different coordinates are compared after transforming `rho`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    FidelityReference::new(sigma)?.fidelity(rho)
}

/// `1 - fidelity`.
pub fn distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(1.0 - fidelity(rho, sigma)?)
}

/// Number and ladder operators of a state's own coordinates.
pub fn operators_for(rho: &DensityMatrix) -> crate::fock::ModeOperators {
    build_mode_operators_in(rho.space(), rho.basis())
}

/// Two-mode space with the default truncation.
pub fn dimer_space(n_max: usize) -> Result<FockSpace> {
    FockSpace::two_mode(n_max, Truncation::Total)
}
