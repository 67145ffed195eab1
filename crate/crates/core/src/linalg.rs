//! Dense and sparse complex linear algebra shared by every solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_slice(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `(m + m^dagger) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Eigendecomposition of the Hermitian part of `m`. Eigenvalues are returned
/// in ascending order with matching eigenvector columns.
pub fn herm_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Rebuild `V diag(f(lambda)) V^dagger` from a Hermitian eigendecomposition.
pub fn herm_apply(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let mut scaled = vectors.clone();
    for (k, &lam) in values.iter().enumerate() {
        let s = f(lam);
        scaled.column_mut(k).scale_mut(s);
    }
    &scaled * vectors.adjoint()
}

/// Principal square root of a positive-semidefinite matrix; negative
/// eigenvalues are clipped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = herm_eigh(m);
    herm_apply(&values, &vectors, |x| x.max(0.0).sqrt())
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().sum()
}

/// Matrix exponential (Padé scaling and squaring).
pub fn expm(m: &CMatrix) -> CMatrix {
    m.exp()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        let keep: Vec<bool> = values.iter().map(|v| *v != ZERO).collect();
        let mut k = 0;
        let mut out_cols = Vec::with_capacity(col_idx.len());
        let mut out_vals = Vec::with_capacity(values.len());
        for (idx, &r) in rows.iter().enumerate() {
            if keep[idx] {
                row_ptr[r + 1] += 1;
                out_cols.push(col_idx[idx]);
                out_vals.push(values[idx]);
                k += 1;
            }
        }
        debug_assert_eq!(k, out_vals.len());
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { nrows, ncols, row_ptr, col_idx: out_cols, values: out_vals }
    }

    /// Nonzero entries of a dense matrix.
    pub fn from_dense(m: &CMatrix) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                let v = m[(r, col)];
                if v != ZERO {
                    t.push((r, col, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y += alpha * A x`.
    pub fn matvec_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for r in 0..self.nrows {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] += alpha * acc;
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.nrows, self.ncols);
        for (r, col, v) in self.iter() {
            m[(r, col)] += v;
        }
        m
    }

    /// Upper bound on the spectral norm: `sqrt(||A||_1 ||A||_inf)`.
    pub fn norm_bound(&self) -> f64 {
        let mut col_sums = vec![0.0; self.ncols];
        let mut row_max: f64 = 0.0;
        for r in 0..self.nrows {
            let mut s = 0.0;
            for (col, v) in self.row(r) {
                s += v.norm();
                col_sums[col] += v.norm();
            }
            row_max = row_max.max(s);
        }
        let col_max = col_sums.into_iter().fold(0.0, f64::max);
        (row_max * col_max).sqrt()
    }
}

/// A linear operator applied through matrix-vector products only.
pub trait LinearOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
    fn norm_bound(&self) -> f64;
}

impl LinearOp for SparseMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec_into(x, y)
    }
    fn norm_bound(&self) -> f64 {
        SparseMatrix::norm_bound(self)
    }
}

/// Sum `base + Σ coeff_k * term_k` of sparse matrices sharing one shape,
/// evaluated lazily.
pub struct SparseCombination<'a> {
    pub base: &'a SparseMatrix,
    pub terms: Vec<(C64, &'a SparseMatrix)>,
}

impl LinearOp for SparseCombination<'_> {
    fn dim(&self) -> usize {
        self.base.nrows
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.base.matvec_into(x, y);
        for (coeff, m) in &self.terms {
            if *coeff != ZERO {
                m.matvec_add(*coeff, x, y);
            }
        }
    }
    fn norm_bound(&self) -> f64 {
        self.terms.iter().fold(self.base.norm_bound(), |acc, (coeff, m)| acc + coeff.norm() * m.norm_bound())
    }
}

/// `exp(-i t A) x` by a truncated Taylor series, split into substeps so that
/// every substep has `t * ||A|| <= 1`; terms stop below `1e-15` relative.
pub fn taylor_propagate(op: &impl LinearOp, x: &[C64], t: f64) -> Vec<C64> {
    let nb = op.norm_bound() * t.abs();
    let substeps = nb.ceil().max(1.0) as usize;
    let h = t / substeps as f64;
    let n = op.dim();
    let mut state = x.to_vec();
    let mut term = vec![ZERO; n];
    let mut next = vec![ZERO; n];
    for _ in 0..substeps {
        term.copy_from_slice(&state);
        let scale = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for k in 1..=40 {
            op.apply(&term, &mut next);
            let factor = C64::new(0.0, -h / k as f64);
            let mut tnorm = 0.0;
            for i in 0..n {
                term[i] = factor * next[i];
                tnorm += term[i].norm_sqr();
                state[i] += term[i];
            }
            if tnorm.sqrt() <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }
    state
}

/// Dense `exp(-i t A)`.
pub fn propagator(a: &CMatrix, t: f64) -> CMatrix {
    expm(&(a * C64::new(0.0, -t)))
}
