//! Perron eigendata of primitive nonnegative matrices by power iteration.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

pub const PERRON_TOL: f64 = 1e-13;
pub const PERRON_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone)]
pub struct PerronPair {
    pub eigenvalue: f64,
    /// Positive eigenvector, normalized to unit sum.
    pub vector: Array1<f64>,
    pub iterations: usize,
}

/// Dominant eigenpair of `m` (acting on column vectors) from the all-ones start vector.
///
/// Converged when both the Rayleigh quotient and the sum-normalized iterate change by
/// less than `tol` in relative terms.
pub fn power_iteration(m: &Array2<f64>, tol: f64, max_iter: usize) -> Result<PerronPair> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut x = Array1::from_elem(n, 1.0 / n as f64);
    let mut lambda_prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let y = m.dot(&x);
        let lambda = x.dot(&y) / x.dot(&x);
        let s = y.sum();
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: f64::NAN,
            });
        }
        let next = &y / s;
        let scale = next.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let dx = (&next - &x).iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale;
        residual = (&y - &(&x * lambda)).iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale;
        let dl = (lambda - lambda_prev).abs() / lambda.abs();
        x = next;
        if dx <= tol && dl <= tol {
            let eigenvalue = m.dot(&x).sum() / x.sum();
            return Ok(PerronPair {
                eigenvalue,
                vector: x,
                iterations: it,
            });
        }
        lambda_prev = lambda;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn golden_ratio_matrix() {
        let m = array![[1.0, 1.0], [1.0, 0.0]];
        let p = power_iteration(&m, PERRON_TOL, PERRON_MAX_ITER).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.eigenvalue - phi).abs() < 1e-13);
        assert!((p.vector[0] / p.vector[1] - phi).abs() < 1e-12);
    }

    #[test]
    fn periodic_matrix_fails() {
        let c = array![[0.0, 2.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
        assert!(matches!(
            power_iteration(&c, PERRON_TOL, 1000),
            Err(Error::NoConvergence { .. })
        ));
    }
}
