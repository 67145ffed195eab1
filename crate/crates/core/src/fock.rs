//! Truncated bosonic Fock spaces for one or two modes, the ladder operators
//! acting on them, and the site/reciprocal mode transform.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, ZERO};

/// How the two-mode space is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Truncation {
    /// `n_j <= n_max` for every mode; `dim = (n_max + 1)^modes`.
    PerMode,
    /// `n_1 + n_2 <= n_max`; `dim = (n_max + 1)(n_max + 2) / 2`.
    ///
    /// Invariant under any linear mixing of the modes, so the site and
    /// reciprocal descriptions span the same subspace.
    Total,
}

/// Which mode pair the coordinates of a two-mode object refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Site modes `a_1`, `a_2`.
    Real,
    /// Bonding `a_B = (a_2 + a_1)/sqrt2` and anti-bonding `a_AB = (a_2 - a_1)/sqrt2`.
    Reciprocal,
}

impl Basis {
    pub fn mode_labels(self) -> [&'static str; 2] {
        match self {
            Basis::Real => ["1", "2"],
            Basis::Reciprocal => ["B", "AB"],
        }
    }
}

/// A truncated Fock space. States are ordered lexicographically in
/// `(n_1, n_2)`; for one mode the second occupation is always zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    modes: usize,
    n_max: usize,
    truncation: Truncation,
    #[serde(skip)]
    states: Vec<[usize; 2]>,
    #[serde(skip)]
    lookup: Vec<Option<usize>>,
}

impl FockSpace {
    pub fn single(n_max: usize) -> Result<Self> {
        Self::build(1, n_max, Truncation::PerMode)
    }

    pub fn two_mode(n_max: usize, truncation: Truncation) -> Result<Self> {
        Self::build(2, n_max, truncation)
    }

    pub fn new(modes: usize, n_max: usize, truncation: Truncation) -> Result<Self> {
        Self::build(modes, n_max, truncation)
    }

    fn build(modes: usize, n_max: usize, truncation: Truncation) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParameter("photon cutoff must be at least 1".into()));
        }
        if modes != 1 && modes != 2 {
            return Err(Error::InvalidParameter(format!("only one or two modes are supported, got {modes}")));
        }
        let side = n_max + 1;
        let mut states = Vec::new();
        let mut lookup = vec![None; side * side];
        if modes == 1 {
            for n in 0..=n_max {
                lookup[n * side] = Some(states.len());
                states.push([n, 0]);
            }
        } else {
            for n1 in 0..=n_max {
                let top = match truncation {
                    Truncation::PerMode => n_max,
                    Truncation::Total => n_max - n1,
                };
                for n2 in 0..=top {
                    lookup[n1 * side + n2] = Some(states.len());
                    states.push([n1, n2]);
                }
            }
        }
        let truncation = if modes == 1 { Truncation::PerMode } else { truncation };
        Ok(Self { modes, n_max, truncation, states, lookup })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Occupations of basis state `k`.
    pub fn state(&self, k: usize) -> [usize; 2] {
        self.states[k]
    }

    pub fn states(&self) -> &[[usize; 2]] {
        &self.states
    }

    pub fn index(&self, occ: [usize; 2]) -> Option<usize> {
        if occ[0] > self.n_max || occ[1] > self.n_max || (self.modes == 1 && occ[1] != 0) {
            return None;
        }
        self.lookup[occ[0] * (self.n_max + 1) + occ[1]]
    }

    /// Photon-number cutoff of one factor.
    pub fn mode_cutoff(&self) -> usize {
        self.n_max
    }

    /// Basis states on the outermost shell reachable by the truncation.
    pub fn is_top(&self, k: usize) -> bool {
        let [n1, n2] = self.states[k];
        match self.truncation {
            Truncation::PerMode => n1 == self.n_max || n2 == self.n_max,
            Truncation::Total => n1 + n2 == self.n_max,
        }
    }

    /// Fock basis vector.
    pub fn basis_vector(&self, occ: [usize; 2]) -> Option<CVector> {
        let k = self.index(occ)?;
        let mut v = CVector::zeros(self.dim());
        v[k] = c(1.0);
        Some(v)
    }
}

/// A dense operator with a human-readable label.
#[derive(Debug, Clone)]
pub struct Operator {
    pub label: String,
    pub matrix: CMatrix,
}

impl Operator {
    pub fn new(label: impl Into<String>, matrix: CMatrix) -> Self {
        Self { label: label.into(), matrix }
    }

    pub fn dagger(&self) -> Operator {
        Operator::new(format!("{}†", self.label), self.matrix.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Annihilation, creation and number operators of every mode of a space.
#[derive(Debug, Clone)]
pub struct ModeOperators {
    pub a: Vec<Operator>,
    pub ad: Vec<Operator>,
    pub n: Vec<Operator>,
    pub basis: Basis,
}

/// Ladder operators on `space`, labelled as site modes.
pub fn build_mode_operators(space: &FockSpace) -> ModeOperators {
    build_mode_operators_in(space, Basis::Real)
}

/// Ladder operators on `space`. The coordinates of `space` are read as the
/// modes of `basis`, which only affects the labels.
pub fn build_mode_operators_in(space: &FockSpace, basis: Basis) -> ModeOperators {
    let labels = if space.modes() == 1 { ["", ""] } else { basis.mode_labels() };
    let mut a = Vec::new();
    let mut ad = Vec::new();
    let mut n = Vec::new();
    for mode in 0..space.modes() {
        let mut m = CMatrix::zeros(space.dim(), space.dim());
        for (k, occ) in space.states().iter().enumerate() {
            if occ[mode] > 0 {
                let mut lower = *occ;
                lower[mode] -= 1;
                let target = space.index(lower).expect("lowered state lies inside the truncation");
                m[(target, k)] = c((occ[mode] as f64).sqrt());
            }
        }
        let label = labels[mode];
        let num = CMatrix::from_diagonal(
            &space.states().iter().map(|occ| c(occ[mode] as f64)).collect::<Vec<_>>().into(),
        );
        ad.push(Operator::new(format!("a{label}†"), m.adjoint()));
        n.push(Operator::new(format!("n{label}"), num));
        a.push(Operator::new(format!("a{label}"), m));
    }
    ModeOperators { a, ad, n, basis }
}

/// Bonding and anti-bonding combinations of site operators, acting on the
/// same Hilbert space: `a_B = (a_2 + a_1)/sqrt2`, `a_AB = (a_2 - a_1)/sqrt2`.
pub fn to_reciprocal(ops: &ModeOperators) -> Result<ModeOperators> {
    if ops.a.len() != 2 {
        return Err(Error::NotTwoMode);
    }
    if ops.basis != Basis::Real {
        return Err(Error::BasisMismatch("expected site-mode operators".into()));
    }
    let s = c(FRAC_1_SQRT_2);
    let a_b = (&ops.a[1].matrix + &ops.a[0].matrix) * s;
    let a_ab = (&ops.a[1].matrix - &ops.a[0].matrix) * s;
    let n_b = a_b.adjoint() * &a_b;
    let n_ab = a_ab.adjoint() * &a_ab;
    Ok(ModeOperators {
        ad: vec![Operator::new("aB†", a_b.adjoint()), Operator::new("aAB†", a_ab.adjoint())],
        a: vec![Operator::new("aB", a_b), Operator::new("aAB", a_ab)],
        n: vec![Operator::new("nB", n_b), Operator::new("nAB", n_ab)],
        basis: Basis::Reciprocal,
    })
}

/// Unitary whose column `k` is the reciprocal Fock state `space.state(k)`
/// written in site-mode coordinates, so that `X_real = W X_reciprocal W†`.
/// Exact for the total-photon truncation.
pub fn reciprocal_to_real(space: &FockSpace) -> Result<CMatrix> {
    if space.modes() != 2 {
        return Err(Error::NotTwoMode);
    }
    if space.truncation() != Truncation::Total {
        return Err(Error::TruncationNotInvariant);
    }
    let real = build_mode_operators(space);
    let recip = to_reciprocal(&real)?;
    let bd = &recip.ad[0].matrix;
    let abd = &recip.ad[1].matrix;
    let dim = space.dim();
    let mut w = CMatrix::zeros(dim, dim);
    let vac = space.basis_vector([0, 0]).expect("vacuum");
    // Columns with nB = 0 by repeated AB creation, then B creation on each.
    let mut ab_states = Vec::with_capacity(space.n_max() + 1);
    let mut v = vac;
    for n_ab in 0..=space.n_max() {
        if n_ab > 0 {
            v = abd * v * c(1.0 / (n_ab as f64).sqrt());
        }
        ab_states.push(v.clone());
    }
    for (n_ab, base) in ab_states.into_iter().enumerate() {
        let mut v = base;
        for n_b in 0..=(space.n_max() - n_ab) {
            if n_b > 0 {
                v = bd * v * c(1.0 / (n_b as f64).sqrt());
            }
            let k = space.index([n_b, n_ab]).expect("state inside truncation");
            w.set_column(k, &v);
        }
    }
    Ok(w)
}

/// Change of coordinates for a two-mode operator or density matrix.
pub fn basis_transform(m: &CMatrix, space: &FockSpace, from: Basis, to: Basis) -> Result<CMatrix> {
    if m.nrows() != space.dim() || m.ncols() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: m.nrows() });
    }
    if from == to {
        return Ok(m.clone());
    }
    let w = reciprocal_to_real(space)?;
    Ok(match (from, to) {
        (Basis::Reciprocal, Basis::Real) => &w * m * w.adjoint(),
        _ => w.adjoint() * m * &w,
    })
}

/// Change of coordinates for a state vector.
pub fn basis_transform_vector(v: &CVector, space: &FockSpace, from: Basis, to: Basis) -> Result<CVector> {
    if from == to {
        return Ok(v.clone());
    }
    let w = reciprocal_to_real(space)?;
    Ok(match (from, to) {
        (Basis::Reciprocal, Basis::Real) => &w * v,
        _ => w.adjoint() * v,
    })
}

/// Embed a product of single-mode vectors into a two-mode space, discarding
/// components outside the truncation. Not renormalized.
pub fn product_vector(space: &FockSpace, psi1: &CVector, psi2: &CVector) -> CVector {
    let mut v = CVector::from_element(space.dim(), ZERO);
    for (k, occ) in space.states().iter().enumerate() {
        if occ[0] < psi1.len() && occ[1] < psi2.len() {
            v[k] = psi1[occ[0]] * psi2[occ[1]];
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs};

    #[test]
    fn dimensions() {
        assert_eq!(FockSpace::single(4).unwrap().dim(), 5);
        assert_eq!(FockSpace::two_mode(4, Truncation::PerMode).unwrap().dim(), 25);
        assert_eq!(FockSpace::two_mode(4, Truncation::Total).unwrap().dim(), 15);
        assert!(FockSpace::single(0).is_err());
        assert!(FockSpace::new(3, 2, Truncation::Total).is_err());
    }

    #[test]
    fn two_level_annihilator() {
        let ops = build_mode_operators(&FockSpace::single(1).unwrap());
        let a = &ops.a[0].matrix;
        assert_eq!(a[(0, 1)], c(1.0));
        assert_eq!(a[(0, 0)], ZERO);
        assert_eq!(a[(1, 0)], ZERO);
        assert_eq!(a[(1, 1)], ZERO);
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let space = FockSpace::single(6).unwrap();
        let ops = build_mode_operators(&space);
        let comm = commutator(&ops.a[0].matrix, &ops.ad[0].matrix);
        for k in 0..space.dim() - 1 {
            for l in 0..space.dim() - 1 {
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((comm[(k, l)] - c(want)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn double_annihilation_of_pair() {
        for trunc in [Truncation::PerMode, Truncation::Total] {
            let space = FockSpace::two_mode(3, trunc).unwrap();
            let ops = build_mode_operators(&space);
            let v = space.basis_vector([1, 1]).unwrap();
            let out = &ops.a[0].matrix * (&ops.a[1].matrix * v);
            let vac = space.basis_vector([0, 0]).unwrap();
            assert!((out - vac).norm() < 1e-14);
        }
    }

    #[test]
    fn bonding_lowers_single_site_photon() {
        let space = FockSpace::two_mode(3, Truncation::Total).unwrap();
        let rec = to_reciprocal(&build_mode_operators(&space)).unwrap();
        let out = &rec.a[0].matrix * space.basis_vector([1, 0]).unwrap();
        let want = space.basis_vector([0, 0]).unwrap() * c(FRAC_1_SQRT_2);
        assert!((out - want).norm() < 1e-14);
    }

    #[test]
    fn total_number_is_mode_invariant() {
        let space = FockSpace::two_mode(5, Truncation::Total).unwrap();
        let real = build_mode_operators(&space);
        let rec = to_reciprocal(&real).unwrap();
        let lhs = &real.n[0].matrix + &real.n[1].matrix;
        let rhs = &rec.n[0].matrix + &rec.n[1].matrix;
        assert!(max_abs(&(lhs - rhs)) < 1e-13);
    }

    #[test]
    fn reciprocal_commutators_on_retained_subspace() {
        let space = FockSpace::two_mode(5, Truncation::Total).unwrap();
        let rec = to_reciprocal(&build_mode_operators(&space)).unwrap();
        let same = commutator(&rec.a[0].matrix, &rec.ad[0].matrix);
        let cross = commutator(&rec.a[0].matrix, &rec.ad[1].matrix);
        for k in 0..space.dim() {
            if space.is_top(k) {
                continue;
            }
            for l in 0..space.dim() {
                if space.is_top(l) {
                    continue;
                }
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((same[(k, l)] - c(want)).norm() < 1e-13);
                assert!(cross[(k, l)].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn single_mode_rejected_by_reciprocal_transform() {
        let ops = build_mode_operators(&FockSpace::single(3).unwrap());
        assert!(matches!(to_reciprocal(&ops), Err(Error::NotTwoMode)));
    }

    #[test]
    fn per_mode_truncation_has_no_exact_transform() {
        let space = FockSpace::two_mode(3, Truncation::PerMode).unwrap();
        assert!(matches!(reciprocal_to_real(&space), Err(Error::TruncationNotInvariant)));
    }

    #[test]
    fn transform_is_unitary_and_maps_operators() {
        let space = FockSpace::two_mode(6, Truncation::Total).unwrap();
        let w = reciprocal_to_real(&space).unwrap();
        let eye = CMatrix::identity(space.dim(), space.dim());
        assert!(max_abs(&(w.adjoint() * &w - &eye)) < 1e-12);
        let real = build_mode_operators(&space);
        let rec = to_reciprocal(&real).unwrap();
        let coords = build_mode_operators_in(&space, Basis::Reciprocal);
        for mode in 0..2 {
            let mapped = basis_transform(&coords.a[mode].matrix, &space, Basis::Reciprocal, Basis::Real).unwrap();
            assert!(max_abs(&(mapped - &rec.a[mode].matrix)) < 1e-12);
        }
    }
}
