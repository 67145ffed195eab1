//! Hamiltonians of the dimer and of single driven Kerr modes, and the sparse
//! Lindblad generator acting on vectorized density matrices.
//!
//! A density matrix `rho` of dimension `d` is vectorized column-major,
//! element `(r, c)` at position `r + c d`. The generator is
//! `L[rho] = -i (H_eff rho - rho H_eff†) + Σ_k J_k rho J_k†` with
//! `H_eff = H - (i/2) Σ_k J_k† J_k`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{build_mode_operators_in, Basis, FockSpace};
use crate::linalg::{c, CMatrix, SparseMatrix, C64, I, ZERO};
use crate::params::ModelParams;

/// Default ceiling on the number of vectorized unknowns.
pub const DEFAULT_MAX_UNKNOWNS: usize = 60_000;

/// Elements of the density matrix carried by a superoperator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// Every element `(r, c)`.
    Full,
    /// Elements whose anti-bonding occupations have equal parity. The dimer
    /// generator is block diagonal in this superparity and the steady state
    /// lies in the even block. Requires reciprocal coordinates.
    EvenAbParity,
}

#[derive(Debug, Clone)]
pub struct Superoperator {
    space: FockSpace,
    basis: Basis,
    sector: Sector,
    matrix: SparseMatrix,
    /// Retained `(r, c)` pairs in vector order.
    elements: Vec<(usize, usize)>,
    /// Position of `r + c d` in the reduced vector.
    position: Vec<Option<usize>>,
}

impl Superoperator {
    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Number of vectorized unknowns.
    pub fn unknowns(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[(usize, usize)] {
        &self.elements
    }

    pub fn position(&self, r: usize, col: usize) -> Option<usize> {
        self.position[r + col * self.space.dim()]
    }

    /// Restrict a density matrix to the retained elements.
    pub fn vectorize(&self, rho: &CMatrix) -> Vec<C64> {
        self.elements.iter().map(|&(r, col)| rho[(r, col)]).collect()
    }

    /// Inverse of [`Superoperator::vectorize`]; dropped elements are zero.
    pub fn unvectorize(&self, v: &[C64]) -> CMatrix {
        let d = self.space.dim();
        let mut m = CMatrix::zeros(d, d);
        for (k, &(r, col)) in self.elements.iter().enumerate() {
            m[(r, col)] = v[k];
        }
        m
    }

    /// `L[rho]` as a matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        self.unvectorize(&self.matrix.matvec(&self.vectorize(rho)))
    }

    /// Largest `|Tr L[e_x]|` over the retained elementary matrices; zero for
    /// a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let mut col_trace = vec![ZERO; self.unknowns()];
        for (row, col, v) in self.matrix.iter() {
            let (r, cc) = self.elements[row];
            if r == cc {
                col_trace[col] += v;
            }
        }
        col_trace.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

/// Options for generator construction.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub max_unknowns: usize,
    /// Use the even anti-bonding superparity block when the basis is reciprocal.
    pub use_parity: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { max_unknowns: DEFAULT_MAX_UNKNOWNS, use_parity: true }
    }
}

/// Lindblad generator for Hamiltonian `h` and jump operators `jumps`
/// (rates already folded into the operators).
pub fn lindblad(
    space: &FockSpace,
    basis: Basis,
    h: &CMatrix,
    jumps: &[CMatrix],
    sector: Sector,
    max_unknowns: usize,
) -> Result<Superoperator> {
    let d = space.dim();
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: h.nrows() });
    }
    if sector == Sector::EvenAbParity && (space.modes() != 2 || basis != Basis::Reciprocal) {
        return Err(Error::BasisMismatch("superparity reduction needs reciprocal two-mode coordinates".into()));
    }
    let keep = |r: usize, col: usize| match sector {
        Sector::Full => true,
        Sector::EvenAbParity => (space.state(r)[1] + space.state(col)[1]) % 2 == 0,
    };
    let mut elements = Vec::new();
    let mut position = vec![None; d * d];
    for col in 0..d {
        for r in 0..d {
            if keep(r, col) {
                position[r + col * d] = Some(elements.len());
                elements.push((r, col));
            }
        }
    }
    let n = elements.len();
    if n > max_unknowns {
        return Err(Error::DimensionBudget { dim: n, budget: max_unknowns });
    }

    let mut heff = h.clone();
    for j in jumps {
        heff -= (j.adjoint() * j) * C64::new(0.0, 0.5);
    }
    let heff_sp = SparseMatrix::from_dense(&heff);
    let jump_sp: Vec<SparseMatrix> = jumps.iter().map(SparseMatrix::from_dense).collect();

    let mut trip: Vec<(usize, usize, C64)> = Vec::new();
    for (row, &(r, col)) in elements.iter().enumerate() {
        // -i (H_eff rho)_{r,col} = -i Σ_k H_eff[r,k] rho[k,col]
        for (k, v) in heff_sp.row(r) {
            if let Some(p) = position[k + col * d] {
                trip.push((row, p, -I * v));
            }
        }
        // +i (rho H_eff†)_{r,col} = +i Σ_k rho[r,k] conj(H_eff[col,k])
        for (k, v) in heff_sp.row(col) {
            if let Some(p) = position[r + k * d] {
                trip.push((row, p, I * v.conj()));
            }
        }
        // (J rho J†)_{r,col} = Σ_{k,l} J[r,k] rho[k,l] conj(J[col,l])
        for j in &jump_sp {
            for (k, v) in j.row(r) {
                for (l, w) in j.row(col) {
                    if let Some(p) = position[k + l * d] {
                        trip.push((row, p, v * w.conj()));
                    }
                }
            }
        }
    }
    let matrix = SparseMatrix::from_triplets(n, n, trip);
    Ok(Superoperator { space: space.clone(), basis, sector, matrix, elements, position })
}

/// Dimer Hamiltonian in the coordinates of `basis`.
///
/// Site modes: `-J (a1† a2 + h.c.) + Σ_j [-Δ n_j + U/2 a_j†² a_j² + F a_j† + F* a_j]`.
///
/// Reciprocal modes:
/// `(-Δ-J) n_B + (-Δ+J) n_AB + U/4 Σ_k a_k†² a_k² + sqrt2 (F a_B† + F* a_B)
///  + U/4 (a_B†² a_AB² + a_AB†² a_B² + 4 n_B n_AB)`.
///
/// With the total-photon truncation both operators equal the projection of
/// the untruncated Hamiltonian, hence are exactly unitarily equivalent.
pub fn dimer_hamiltonian(p: &ModelParams, space: &FockSpace, basis: Basis) -> Result<CMatrix> {
    if space.modes() != 2 {
        return Err(Error::NotTwoMode);
    }
    let ops = build_mode_operators_in(space, basis);
    let (a1, a2) = (&ops.a[0].matrix, &ops.a[1].matrix);
    let (d1, d2) = (&ops.ad[0].matrix, &ops.ad[1].matrix);
    let (n1, n2) = (&ops.n[0].matrix, &ops.n[1].matrix);
    let f = p.f;
    let h = match basis {
        Basis::Real => {
            let hop = (d1 * a2 + d2 * a1) * c(-p.j);
            let mut h = hop;
            for (a, ad, n) in [(a1, d1, n1), (a2, d2, n2)] {
                h += n * c(-p.delta);
                h += ad * ad * a * a * c(p.u / 2.0);
                h += ad * f + a * f.conj();
            }
            h
        }
        Basis::Reciprocal => {
            let (ab, aab, bd, abd) = (a1, a2, d1, d2);
            let mut h = n1 * c(-p.delta - p.j) + n2 * c(-p.delta + p.j);
            h += (bd * bd * ab * ab + abd * abd * aab * aab) * c(p.u / 4.0);
            h += (bd * (f * SQRT_2)) + ab * (f.conj() * SQRT_2);
            h += (bd * bd * aab * aab + abd * abd * ab * ab) * c(p.u / 4.0);
            h += n1 * n2 * c(p.u);
            h
        }
    };
    Ok(h)
}

/// On-site loss operators `sqrt(gamma) a_k`; the dissipator has the same form
/// in site and reciprocal coordinates.
pub fn loss_operators(space: &FockSpace, gamma: f64) -> Vec<CMatrix> {
    let ops = build_mode_operators_in(space, Basis::Real);
    ops.a.into_iter().map(|o| o.matrix * c(gamma.sqrt())).collect()
}

/// Generator of the driven-dissipative dimer.
pub fn build_liouvillian(p: &ModelParams, space: &FockSpace, basis: Basis) -> Result<Superoperator> {
    build_liouvillian_with(p, space, basis, BuildOptions::default())
}

pub fn build_liouvillian_with(
    p: &ModelParams,
    space: &FockSpace,
    basis: Basis,
    opts: BuildOptions,
) -> Result<Superoperator> {
    p.validate()?;
    let h = dimer_hamiltonian(p, space, basis)?;
    let jumps = loss_operators(space, p.gamma);
    let sector = if opts.use_parity && basis == Basis::Reciprocal { Sector::EvenAbParity } else { Sector::Full };
    lindblad(space, basis, &h, &jumps, sector, opts.max_unknowns)
}

/// A single lossy mode with Hamiltonian
/// `omega n + kerr a†² a² + (drive a† + h.c.) + (pair a†² + h.c.)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeModel {
    pub omega: f64,
    pub kerr: f64,
    pub drive: Complex64,
    pub pair: Complex64,
    pub gamma: f64,
}

impl SingleModeModel {
    /// Driven Kerr resonator `-Δ n + U/2 a†² a² + F a† + F* a`.
    pub fn kerr(delta: f64, u: f64, f: Complex64, gamma: f64) -> Self {
        Self { omega: -delta, kerr: u / 2.0, drive: f, pair: ZERO, gamma }
    }

    pub fn hamiltonian(&self, space: &FockSpace) -> CMatrix {
        let ops = build_mode_operators_in(space, Basis::Real);
        let (a, ad, n) = (&ops.a[0].matrix, &ops.ad[0].matrix, &ops.n[0].matrix);
        let mut h = n * c(self.omega);
        h += ad * ad * a * a * c(self.kerr);
        h += ad * self.drive + a * self.drive.conj();
        h += ad * ad * self.pair + a * a * self.pair.conj();
        h
    }

    pub fn liouvillian(&self, space: &FockSpace) -> Result<Superoperator> {
        if space.modes() != 1 {
            return Err(Error::InvalidParameter("single-mode model needs a one-mode space".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter("gamma must be > 0".into()));
        }
        let h = self.hamiltonian(space);
        let jumps = loss_operators(space, self.gamma);
        lindblad(space, Basis::Real, &h, &jumps, Sector::Full, DEFAULT_MAX_UNKNOWNS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{basis_transform, Truncation};
    use crate::linalg::max_abs;

    fn random_hermitian(d: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = CMatrix::from_fn(d, d, |_, _| C64::new(next(), next()));
        &m + m.adjoint()
    }

    #[test]
    fn reciprocal_hamiltonian_is_the_transformed_site_hamiltonian() {
        let p = ModelParams { j: 0.7, delta: 0.3, u: 1.3, f: C64::new(0.8, -0.4), gamma: 1.0 };
        let space = FockSpace::two_mode(7, Truncation::Total).unwrap();
        let hr = dimer_hamiltonian(&p, &space, Basis::Real).unwrap();
        let hk = dimer_hamiltonian(&p, &space, Basis::Reciprocal).unwrap();
        let mapped = basis_transform(&hk, &space, Basis::Reciprocal, Basis::Real).unwrap();
        assert!(max_abs(&(mapped - hr)) < 1e-11);
    }

    #[test]
    fn generator_preserves_trace() {
        let p = ModelParams::new(0.5, 1.0, 1.0, 0.9);
        let space = FockSpace::two_mode(4, Truncation::Total).unwrap();
        for basis in [Basis::Real, Basis::Reciprocal] {
            let l = build_liouvillian(&p, &space, basis).unwrap();
            assert!(l.trace_defect() < 1e-12);
            let rho = random_hermitian(space.dim(), 4);
            let rho = match l.sector() {
                Sector::Full => rho,
                Sector::EvenAbParity => l.unvectorize(&l.vectorize(&rho)),
            };
            assert!(l.apply(&rho).trace().norm() < 1e-12);
        }
    }

    #[test]
    fn matches_dense_commutator_form() {
        let p = ModelParams::new(0.4, -0.2, 0.9, 0.6);
        let space = FockSpace::two_mode(3, Truncation::Total).unwrap();
        let l = build_liouvillian_with(&p, &space, Basis::Real, BuildOptions { use_parity: false, ..Default::default() })
            .unwrap();
        let h = dimer_hamiltonian(&p, &space, Basis::Real).unwrap();
        let jumps = loss_operators(&space, p.gamma);
        let rho = random_hermitian(space.dim(), 8);
        let mut want = (&h * &rho - &rho * &h) * C64::new(0.0, -1.0);
        for j in &jumps {
            let jd = j.adjoint();
            want += j * &rho * &jd - (&jd * j * &rho + &rho * &jd * j) * c(0.5);
        }
        assert!(max_abs(&(l.apply(&rho) - want)) < 1e-12);
    }

    #[test]
    fn vacuum_is_stationary_without_drive() {
        let p = ModelParams::new(0.8, 0.5, 1.0, 0.0);
        let space = FockSpace::two_mode(4, Truncation::Total).unwrap();
        let l = build_liouvillian(&p, &space, Basis::Reciprocal).unwrap();
        let mut vac = CMatrix::zeros(space.dim(), space.dim());
        vac[(0, 0)] = c(1.0);
        assert!(max_abs(&l.apply(&vac)) < 1e-15);
    }

    #[test]
    fn budget_guard() {
        let p = ModelParams::default();
        let space = FockSpace::two_mode(10, Truncation::PerMode).unwrap();
        let opts = BuildOptions { max_unknowns: 1000, use_parity: false };
        assert!(matches!(
            build_liouvillian_with(&p, &space, Basis::Real, opts),
            Err(Error::DimensionBudget { .. })
        ));
    }
}
