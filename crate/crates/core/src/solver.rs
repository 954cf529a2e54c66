//! Solvers for the symmetric positive definite systems: Jacobi-preconditioned
//! conjugate gradients and sparse Cholesky (faer, AMD-ordered supernodal).

use std::time::{Duration, Instant};

use faer::prelude::*;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::Side;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Problems below this size are solved directly by default.
pub const DIRECT_LIMIT: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMethod {
    Cg,
    Direct,
    /// Direct below [`DIRECT_LIMIT`] unknowns, CG otherwise.
    Auto,
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cg" => Ok(Self::Cg),
            "direct" | "cholesky" => Ok(Self::Direct),
            "auto" => Ok(Self::Auto),
            other => Err(Error::InvalidArgument(format!("unknown solver '{other}' (expected cg|direct|auto)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub method: SolverMethod,
    /// CG iterations, or refinement sweeps for the direct solver.
    pub iterations: usize,
    /// `|b - A x| / |b|`, recomputed from the returned solution.
    pub residual: f64,
    pub wall_time: Duration,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `b - A x` and its norm.
fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let n = norm(&r);
    (r, n)
}

pub fn solve(a: &CsrMatrix, b: &[f64], tol: f64, method: SolverMethod) -> Result<SolveReport> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1e-6], got {tol:e}")));
    }
    if b.len() != a.dim() {
        return Err(Error::InvalidArgument(format!("rhs length {} does not match matrix size {}", b.len(), a.dim())));
    }
    let method = match method {
        SolverMethod::Auto if a.dim() < DIRECT_LIMIT => SolverMethod::Direct,
        SolverMethod::Auto => SolverMethod::Cg,
        m => m,
    };
    let start = Instant::now();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(SolveReport { solution: vec![0.0; a.dim()], method, iterations: 0, residual: 0.0, wall_time: start.elapsed() });
    }
    let (solution, iterations) = match method {
        SolverMethod::Cg => conjugate_gradient(a, b, tol)?,
        _ => cholesky(a, b, tol)?,
    };
    let (_, rn) = residual(a, &solution, b);
    Ok(SolveReport { solution, method, iterations, residual: rn / bnorm, wall_time: start.elapsed() })
}

fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    let max_iter = 50 * n.max(1);
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = norm(b);
    let target = tol * bnorm;
    let mut x = vec![0.0; n];
    let mut iterations = 0;
    let mut ap = vec![0.0; n];
    // outer loop restarts from the true residual if the recursive one drifted
    loop {
        let (mut r, rn) = residual(a, &x, b);
        if rn <= target {
            return Ok((x, iterations));
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        loop {
            if iterations >= max_iter {
                return Err(Error::NotConverged { iterations, residual: norm(&r) / bnorm });
            }
            a.mul_vec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::NotConverged { iterations, residual: norm(&r) / bnorm });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            if norm(&r) <= target {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
}

fn cholesky(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    // factor the Jacobi-equilibrated matrix D^{-1/2} A D^{-1/2}
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::NotSpd(format!("diagonal entry {i} is {:e}", diag[i])));
    }
    let scale: Vec<f64> = diag.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut values = a.values().to_vec();
    for i in 0..n {
        for k in a.row_ptr()[i]..a.row_ptr()[i + 1] {
            values[k] *= scale[i] * scale[a.col_idx()[k]];
        }
    }
    // symmetric, so the CSR arrays are also a valid CSC description
    let symbolic = SymbolicSparseColMat::new_checked(n, n, a.row_ptr().to_vec(), None, a.col_idx().to_vec());
    let mat = SparseColMat::new(symbolic, values);
    let llt = mat.sp_cholesky(Side::Lower).map_err(|e| Error::NotSpd(format!("{e:?}")))?;
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let (mut r, mut rn) = (b.to_vec(), bnorm);
    let mut sweeps = 0;
    // solve plus up to three steps of iterative refinement
    while sweeps < 4 {
        let mut c = Col::<f64>::from_fn(n, |i| r[i] * scale[i]);
        llt.solve_in_place(c.as_mut());
        let candidate: Vec<f64> = x.iter().enumerate().map(|(i, xi)| xi + c[i] * scale[i]).collect();
        let (r_new, rn_new) = residual(a, &candidate, b);
        sweeps += 1;
        if rn_new >= rn && sweeps > 1 {
            break;
        }
        x = candidate;
        r = r_new;
        rn = rn_new;
        if rn <= tol * bnorm {
            break;
        }
    }
    if rn > tol * bnorm {
        return Err(Error::NotConverged { iterations: sweeps, residual: rn / bnorm });
    }
    Ok((x, sweeps))
}
