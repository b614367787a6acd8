//! Matrix-free preconditioned conjugate gradient.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric positive (semi-)definite operator applied without forming a matrix.
pub trait LinearOperator<T> {
    fn dim(&self) -> usize;

    /// `out = A x`.
    fn apply(&self, x: &[T], out: &mut [T]);

    /// Diagonal of `A`, used for Jacobi preconditioning.
    fn diagonal(&self) -> Vec<T>;
}

/// Result of a CG solve.
#[derive(Debug, Clone)]
pub struct CgSolution<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    /// `‖b - A x‖ / ‖b‖`, recomputed from the returned iterate.
    pub relative_residual: T,
}

/// Solves `A x = b` by Jacobi-preconditioned conjugate gradients from `x = 0`.
///
/// Singular operators are fine as long as `b` lies in the range of `A`; the
/// iterate may then carry an arbitrary null-space component. A right-hand
/// side with `‖b‖ <= floor` returns `x = 0` immediately.
pub fn conjugate_gradient<T: Scalar, A: LinearOperator<T>>(
    op: &A,
    b: &[T],
    tol: T,
    max_iter: usize,
    floor: T,
) -> Result<CgSolution<T>> {
    let n = op.dim();
    assert_eq!(b.len(), n, "right-hand side length");
    let b_norm = norm(b);
    if b_norm <= floor {
        return Ok(CgSolution {
            x: vec![T::zero(); n],
            iterations: 0,
            relative_residual: T::zero(),
        });
    }
    let inv_diag: Vec<T> = op
        .diagonal()
        .into_iter()
        .map(|d| if d > T::zero() { T::one() / d } else { T::one() })
        .collect();
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&r, &m)| r * m).collect();
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    while iterations < max_iter {
        if norm(&r) <= tol * b_norm {
            break;
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= T::zero() {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
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
        iterations += 1;
    }
    // Report the true residual rather than the recursively updated one.
    op.apply(&x, &mut ap);
    let true_res: Vec<T> = b.iter().zip(&ap).map(|(&b, &a)| b - a).collect();
    let relative_residual = norm(&true_res) / b_norm;
    if relative_residual > tol {
        return Err(Error::NotConverged {
            iterations,
            residual: relative_residual.as_f64(),
        });
    }
    Ok(CgSolution {
        x,
        iterations,
        relative_residual,
    })
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense(Vec<Vec<f64>>);

    impl LinearOperator<f64> for Dense {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], out: &mut [f64]) {
            for (o, row) in out.iter_mut().zip(&self.0) {
                *o = dot(row, x);
            }
        }
        fn diagonal(&self) -> Vec<f64> {
            (0..self.0.len()).map(|i| self.0[i][i]).collect()
        }
    }

    #[test]
    fn solves_small_spd_system() {
        let a = Dense(vec![vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let b = [1.0, 2.0, 3.0];
        let s = conjugate_gradient(&a, &b, 1e-12, 50, 0.0).unwrap();
        let mut ax = [0.0; 3];
        a.apply(&s.x, &mut ax);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).abs() < 1e-11);
        }
        assert!(s.iterations <= 3);
    }

    #[test]
    fn singular_consistent_system() {
        // Path-graph Laplacian; b sums to zero.
        let a = Dense(vec![vec![1.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 1.0]]);
        let b = [1.0, 0.0, -1.0];
        let s = conjugate_gradient(&a, &b, 1e-12, 50, 0.0).unwrap();
        assert!(s.relative_residual < 1e-12);
        assert!(((s.x[0] - s.x[2]) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn tiny_rhs_short_circuits() {
        let a = Dense(vec![vec![1.0]]);
        let s = conjugate_gradient(&a, &[1e-20], 1e-8, 10, 1e-14).unwrap();
        assert_eq!(s.x, vec![0.0]);
    }

    #[test]
    fn reports_non_convergence() {
        let a = Dense(vec![vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        assert!(matches!(
            conjugate_gradient(&a, &[1.0, 2.0, 3.0], 1e-14, 1, 0.0),
            Err(Error::NotConverged { .. })
        ));
    }
}
