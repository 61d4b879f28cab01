//! Sinkhorn–Knopp balancing of nonnegative square matrices.

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    pub matrix: Matrix,
    pub iterations: usize,
    /// Max-norm deviation of line sums from one at exit.
    pub residual: f64,
    pub converged: bool,
}

/// Alternates row and column normalisation until every line sums to one
/// within `tol` or `max_iters` sweeps have run.
///
/// Matrices without total support (for instance with an all-zero line) do
/// not converge; the caller sees `converged == false`.
pub fn sinkhorn(input: &Matrix, tol: f64, max_iters: usize) -> SinkhornResult {
    assert!(input.is_square(), "sinkhorn needs a square matrix");
    let n = input.rows();
    let mut m = input.clone();
    let mut residual = m.max_line_deviation();
    let mut iterations = 0;
    while residual > tol && iterations < max_iters {
        for i in 0..n {
            let s: f64 = m.row(i).iter().sum();
            if s > 0.0 {
                m.row_mut(i).iter_mut().for_each(|x| *x /= s);
            }
        }
        let cols = m.col_sums();
        for i in 0..n {
            for (x, &s) in m.row_mut(i).iter_mut().zip(&cols) {
                if s > 0.0 {
                    *x /= s;
                }
            }
        }
        iterations += 1;
        residual = m.max_line_deviation();
    }
    SinkhornResult {
        converged: residual <= tol,
        matrix: m,
        iterations,
        residual,
    }
}
