//! Small dense linear-algebra helpers: LU solve, power iteration, norms.
//!
//! The graphs handled here have at most a few hundred nodes, so an O(n^3)
//! partial-pivot solve is more than enough and avoids a LAPACK dependency.

use crate::error::{Error, Result};
use crate::scalar::{s, Scalar};
use ndarray::{Array1, Array2};

/// Dense row-major matrix.
pub type DenseMatrix<T> = Array2<T>;
/// Dense vector.
pub type DenseVector<T> = Array1<T>;

/// Identity matrix of size `n`.
pub fn identity<T: Scalar>(n: usize) -> DenseMatrix<T> {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { T::one() } else { T::zero() })
}

/// Solve `A X = B` for `X` by LU factorization with partial pivoting.
///
/// `B` may carry multiple right-hand sides as columns. Returns
/// [`Error::SingularDiffusion`] when a pivot falls below `1e-12` relative to
/// the largest entry of `A`.
pub fn solve<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!(
            "solve expects a square system, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.nrows() != n {
        return Err(Error::Shape(format!(
            "right-hand side has {} rows, system has {}",
            b.nrows(),
            n
        )));
    }

    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = max_abs(a).max(T::one());
    let pivot_floor = scale * s::<T>(1e-12);

    for col in 0..n {
        // Partial pivot: largest magnitude in the remaining column.
        let mut pivot_row = col;
        let mut pivot_val = lu[(col, col)].abs();
        for row in col + 1..n {
            let v = lu[(row, col)].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val < pivot_floor {
            return Err(Error::SingularDiffusion);
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap((col, j), (pivot_row, j));
            }
            for j in 0..x.ncols() {
                x.swap((col, j), (pivot_row, j));
            }
        }

        let inv_pivot = T::one() / lu[(col, col)];
        for row in col + 1..n {
            let factor = lu[(row, col)] * inv_pivot;
            if factor == T::zero() {
                continue;
            }
            for j in col + 1..n {
                let delta = factor * lu[(col, j)];
                lu[(row, j)] = lu[(row, j)] - delta;
            }
            for j in 0..x.ncols() {
                let delta = factor * x[(col, j)];
                x[(row, j)] = x[(row, j)] - delta;
            }
        }
    }

    // Back substitution.
    for col in (0..n).rev() {
        let inv_pivot = T::one() / lu[(col, col)];
        for j in 0..x.ncols() {
            let mut acc = x[(col, j)];
            for k in col + 1..n {
                acc = acc - lu[(col, k)] * x[(k, j)];
            }
            x[(col, j)] = acc * inv_pivot;
        }
    }
    Ok(x)
}

/// Estimate the spectral radius of a symmetric matrix by power iteration.
pub fn spectral_radius_sym<T: Scalar>(m: &DenseMatrix<T>, iterations: usize) -> T {
    let n = m.nrows();
    if n == 0 {
        return T::zero();
    }
    // Deterministic, non-orthogonal start vector.
    let mut v = Array1::from_shape_fn(n, |i| s::<T>(1.0 + (i as f64 % 7.0) * 0.1));
    let mut lambda = T::zero();
    for _ in 0..iterations {
        let w = m.dot(&v);
        let norm = w.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        if norm == T::zero() {
            return T::zero();
        }
        lambda = norm
            / v.iter()
                .fold(T::zero(), |acc, &x| acc + x * x)
                .sqrt();
        v = w / norm;
    }
    lambda
}

/// Largest absolute entry.
pub fn max_abs<T: Scalar>(m: &DenseMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Largest absolute entrywise difference.
pub fn max_abs_diff<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> T {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}

/// Squared Frobenius norm accumulated in row-major order, left to right.
pub fn frobenius_sq<T: Scalar>(m: &DenseMatrix<T>) -> T {
    let mut acc = T::zero();
    for &x in m.iter() {
        acc += x * x;
    }
    acc
}

/// Largest absolute asymmetry `|M - M^T|`.
pub fn max_asymmetry<T: Scalar>(m: &DenseMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solve_recovers_known_solution() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let x_true = array![[1.0, 2.0], [-1.0, 0.5]];
        let b = a.dot(&x_true);
        let x = solve(&a, &b).unwrap();
        assert!(max_abs_diff(&x, &x_true) < 1e-12);
    }

    #[test]
    fn solve_needs_pivoting() {
        // Zero on the leading diagonal forces a row swap.
        let a = array![[0.0, 2.0], [3.0, 1.0]];
        let b = array![[2.0], [4.0]];
        let x = solve(&a, &b).unwrap();
        let residual = a.dot(&x) - &b;
        assert!(max_abs(&residual) < 1e-12);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = array![[1.0, -1.0], [-1.0, 1.0]];
        let b = array![[1.0], [0.0]];
        assert!(matches!(solve(&a, &b), Err(Error::SingularDiffusion)));
    }

    #[test]
    fn solve_rejects_bad_shapes() {
        let a = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let b = array![[1.0], [0.0]];
        assert!(matches!(solve(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn power_iteration_finds_dominant_eigenvalue() {
        let m = array![[2.0, 1.0], [1.0, 2.0]]; // eigenvalues 1 and 3
        let rho: f64 = spectral_radius_sym(&m, 200);
        assert!((rho - 3.0).abs() < 1e-9);
    }

    #[test]
    fn solve_works_in_f32() {
        let a = array![[2.0f32, 0.0], [0.0, 4.0]];
        let b = array![[1.0f32], [2.0]];
        let x = solve(&a, &b).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-6);
        assert!((x[(1, 0)] - 0.5).abs() < 1e-6);
    }
}
