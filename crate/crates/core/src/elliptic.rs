//! Solver for the screened Poisson problem `(delta - Lap_h) w = source`
//! with zero-flux boundaries.
//!
//! In 1D the operator is tridiagonal and is factored directly. In 2D a
//! Jacobi-preconditioned conjugate gradient iteration is used; the operator
//! is symmetric positive definite for `delta > 0`.

use thiserror::Error;

use crate::grid::{laplacian_neumann, ScalarField};

#[derive(Debug, Error, PartialEq)]
pub enum EllipticError {
    #[error("decay rate delta must be positive, got {0}")]
    Delta(f64),
    #[error("initial iterate lives on a different grid")]
    GridMismatch,
    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target `||A w - b|| <= tol ||b||`.
    pub tol: f64,
    /// Defaults to ten times the cell count.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticSolution {
    pub w: ScalarField,
    /// Relative residual of the returned `w`.
    pub residual: f64,
    pub iterations: usize,
}

fn apply(w: &ScalarField, delta: f64) -> Vec<f64> {
    let lap = laplacian_neumann(w);
    w.values()
        .iter()
        .zip(lap.values())
        .map(|(x, l)| delta * x - l)
        .collect()
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn relative_residual(w: &ScalarField, source: &ScalarField, delta: f64) -> f64 {
    let b = source.values();
    let r: Vec<f64> = apply(w, delta).iter().zip(b).map(|(a, b)| a - b).collect();
    let bn = norm2(b);
    if bn == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / bn
    }
}

/// Solves `(delta - Lap_h) w = source`.
///
/// `initial` is the starting iterate for the 2D iteration (typically the
/// previous time level); the 1D path ignores it.
pub fn solve_w(
    source: &ScalarField,
    delta: f64,
    opts: SolverOptions,
    initial: Option<&ScalarField>,
) -> Result<EllipticSolution, EllipticError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(EllipticError::Delta(delta));
    }
    if let Some(w0) = initial {
        if w0.spec() != source.spec() {
            return Err(EllipticError::GridMismatch);
        }
    }
    let spec = source.spec();
    // A spatially constant source has the exact solution source / delta.
    let first = source.values()[0];
    if source.values().iter().all(|&v| v == first) {
        return Ok(EllipticSolution {
            w: ScalarField::constant(spec, first / delta),
            residual: 0.0,
            iterations: 0,
        });
    }
    if spec.dim() == 1 {
        let w = solve_tridiagonal(source, delta);
        let residual = relative_residual(&w, source, delta);
        return Ok(EllipticSolution {
            w,
            residual,
            iterations: 1,
        });
    }
    let max_iter = opts.max_iter.unwrap_or(10 * spec.total_cells());
    pcg(source, delta, opts.tol, max_iter, initial)
}

fn solve_tridiagonal(source: &ScalarField, delta: f64) -> ScalarField {
    let spec = source.spec();
    let n = spec.total_cells();
    let inv_h2 = 1.0 / (spec.spacing()[0] * spec.spacing()[0]);
    let off = -inv_h2;
    let diag = |i: usize| {
        let neighbours = usize::from(i > 0) + usize::from(i + 1 < n);
        delta + neighbours as f64 * inv_h2
    };
    // forward sweep
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    let b = source.values();
    c_prime[0] = off / diag(0);
    d_prime[0] = b[0] / diag(0);
    for i in 1..n {
        let m = diag(i) - off * c_prime[i - 1];
        c_prime[i] = off / m;
        d_prime[i] = (b[i] - off * d_prime[i - 1]) / m;
    }
    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    ScalarField::from_raw(spec, x)
}

fn pcg(
    source: &ScalarField,
    delta: f64,
    tol: f64,
    max_iter: usize,
    initial: Option<&ScalarField>,
) -> Result<EllipticSolution, EllipticError> {
    let spec = source.spec();
    let b = source.values();
    let b_norm = norm2(b);
    let target = tol * b_norm;

    // diagonal of delta - Lap_h: one 1/h^2 per interior face touching the cell
    let mut diag = vec![delta; spec.total_cells()];
    for axis in 0..spec.dim() {
        let inv_h2 = 1.0 / (spec.spacing()[axis] * spec.spacing()[axis]);
        spec.for_each_face(axis, |l, r| {
            diag[l] += inv_h2;
            diag[r] += inv_h2;
        });
    }

    let mut x = match initial {
        Some(w0) => w0.clone(),
        None => ScalarField::zeros(spec),
    };
    let mut r: Vec<f64> = b.iter().zip(apply(&x, delta)).map(|(b, a)| b - a).collect();
    if norm2(&r) <= target {
        let residual = norm2(&r) / b_norm;
        return Ok(EllipticSolution {
            w: x,
            residual,
            iterations: 0,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = ScalarField::from_raw(spec, z.clone());
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = apply(&p, delta);
        let step = rz / dot(p.values(), &ap);
        for ((xi, pi), (ri, api)) in x
            .values_mut()
            .iter_mut()
            .zip(p.values())
            .zip(r.iter_mut().zip(&ap))
        {
            *xi += step * pi;
            *ri -= step * api;
        }
        let r_norm = norm2(&r);
        if r_norm <= target {
            return Ok(EllipticSolution {
                residual: relative_residual(&x, source, delta),
                w: x,
                iterations: it,
            });
        }
        for ((zi, ri), d) in z.iter_mut().zip(&r).zip(&diag) {
            *zi = ri / d;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.values_mut().iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(EllipticError::NotConverged {
        iterations: max_iter,
        residual: relative_residual(&x, source, delta),
    })
}
