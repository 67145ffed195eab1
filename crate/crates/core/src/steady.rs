//! Stationary states of Lindblad generators and cutoff convergence.

use faer::sparse::{SparseColMat, Triplet};
use faer::prelude::Solve;
use faer::Col;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, max_abs_slice, C64, ONE, ZERO};
use crate::liouvillian::Superoperator;
use crate::state::DensityMatrix;

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SteadyMethod {
    /// Sparse LU solve of the generator with one equation replaced by the
    /// trace condition.
    Direct,
    /// Fourth-order Runge-Kutta relaxation from the vacuum.
    Propagate { dt: f64, t_max: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyOptions {
    pub method: SteadyMethod,
    pub residual_tol: f64,
    /// Skip the inverse-iteration estimate of the smallest eigenvalue.
    pub check_degeneracy: bool,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self { method: SteadyMethod::Direct, residual_tol: RESIDUAL_TOL, check_degeneracy: true }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyReport {
    pub rho: DensityMatrix,
    /// `max |L[rho]|` after post-processing.
    pub residual: f64,
    /// Estimate of the smallest eigenvalue modulus of the constrained system.
    pub min_eigenvalue: Option<f64>,
}

/// Unique stationary state of `l`.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    Ok(steady_state_with(l, &SteadyOptions::default())?.rho)
}

pub fn steady_state_with(l: &Superoperator, opts: &SteadyOptions) -> Result<SteadyReport> {
    let (raw, min_eigenvalue) = match opts.method {
        SteadyMethod::Direct => direct(l, opts.check_degeneracy)?,
        SteadyMethod::Propagate { dt, t_max } => (propagate(l, dt, t_max, opts.residual_tol)?, None),
    };
    let rho = DensityMatrix::sanitized(l.space().clone(), l.basis(), l.unvectorize(&raw))?;
    let residual = max_abs_slice(&l.matrix().matvec(&l.vectorize(rho.matrix())));
    if !(residual < opts.residual_tol) {
        return Err(Error::Residual(residual));
    }
    rho.validate()?;
    Ok(SteadyReport { rho, residual, min_eigenvalue })
}

fn direct(l: &Superoperator, check_degeneracy: bool) -> Result<(Vec<C64>, Option<f64>)> {
    let n = l.unknowns();
    let anchor = l.position(0, 0).ok_or_else(|| Error::Solver("vacuum population not retained".into()))?;
    let mut trip: Vec<Triplet<usize, usize, C64>> = Vec::with_capacity(l.matrix().nnz() + l.space().dim());
    for (r, col, v) in l.matrix().iter() {
        if r != anchor {
            trip.push(Triplet::new(r, col, v));
        }
    }
    for k in 0..l.space().dim() {
        let p = l.position(k, k).expect("diagonal elements are always retained");
        trip.push(Triplet::new(anchor, p, ONE));
    }
    let m = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let lu = m.sp_lu().map_err(|e| Error::Solver(format!("factorization failed, null space likely degenerate: {e:?}")))?;
    let mut rhs = Col::<C64>::zeros(n);
    rhs[anchor] = ONE;
    let x = lu.solve(&rhs);
    let sol: Vec<C64> = (0..n).map(|k| x[k]).collect();
    if sol.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::DegenerateNullSpace(0.0));
    }
    let min_eig = if check_degeneracy {
        // Inverse iteration: growth of ||M^-1 v|| bounds 1/|lambda_min| from below.
        let mut v = Col::<C64>::from_fn(n, |k| C64::new(1.0 + (k % 7) as f64, (k % 3) as f64 - 1.0));
        let mut est = f64::INFINITY;
        for _ in 0..6 {
            let inv = c(1.0 / v.norm_l2());
            v = Col::<C64>::from_fn(n, |k| v[k] * inv);
            let w = lu.solve(&v);
            let growth = w.norm_l2();
            if !growth.is_finite() {
                return Err(Error::DegenerateNullSpace(0.0));
            }
            est = 1.0 / growth;
            v = w;
        }
        if est < DEGENERACY_TOL {
            return Err(Error::DegenerateNullSpace(est));
        }
        Some(est)
    } else {
        None
    };
    Ok((sol, min_eig))
}

fn propagate(l: &Superoperator, dt: f64, t_max: f64, tol: f64) -> Result<Vec<C64>> {
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidParameter("propagation needs dt > 0 and t_max > 0".into()));
    }
    let n = l.unknowns();
    let mut x = vec![ZERO; n];
    x[l.position(0, 0).expect("vacuum retained")] = ONE;
    let m = l.matrix();
    let steps = (t_max / dt).ceil() as usize;
    let axpy = |a: &[C64], s: f64, b: &[C64]| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| x + y * s).collect() };
    for step in 0..steps {
        let k1 = m.matvec(&x);
        if step % 100 == 0 && max_abs_slice(&k1) < tol * 1e-2 {
            return Ok(x);
        }
        let k2 = m.matvec(&axpy(&x, dt / 2.0, &k1));
        let k3 = m.matvec(&axpy(&x, dt / 2.0, &k2));
        let k4 = m.matvec(&axpy(&x, dt, &k3));
        for i in 0..n {
            x[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    let res = max_abs_slice(&m.matvec(&x));
    if res < tol {
        Ok(x)
    } else {
        Err(Error::NonConvergence { iterations: steps, residual: res })
    }
}

/// Outcome of a cutoff ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffReport {
    /// Smallest cutoff whose value agrees with the next rung to `tol`.
    pub n_max: usize,
    /// Observable at `n_max`.
    pub value: f64,
    /// Observable at the next rung.
    pub next_value: f64,
    /// `(cutoff, value)` for every evaluated rung.
    pub history: Vec<(usize, f64)>,
    pub converged: bool,
}

/// Walk `ladder` until two successive cutoffs give values within `tol`.
pub fn converge_cutoff<F>(mut solver: F, ladder: &[usize], tol: f64) -> Result<CutoffReport>
where
    F: FnMut(usize) -> Result<f64>,
{
    if ladder.windows(2).any(|w| w[1] <= w[0]) || ladder.len() < 2 {
        return Err(Error::InvalidParameter("cutoff ladder must be strictly increasing with two or more rungs".into()));
    }
    let mut history: Vec<(usize, f64)> = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let v = solver(n)?;
        if let Some(&(prev_n, prev_v)) = history.last() {
            if (v - prev_v).abs() < tol {
                history.push((n, v));
                return Ok(CutoffReport { n_max: prev_n, value: prev_v, next_value: v, history, converged: true });
            }
        }
        history.push((n, v));
    }
    let change = match history.as_slice() {
        [.., (_, a), (_, b)] => (b - a).abs(),
        _ => f64::NAN,
    };
    Err(Error::CutoffNonConvergence { n_max: *ladder.last().unwrap(), change })
}

/// `start, start + step, ...` up to and including `stop`.
pub fn ladder(start: usize, stop: usize, step: usize) -> Vec<usize> {
    (start..=stop).step_by(step.max(1)).collect()
}
