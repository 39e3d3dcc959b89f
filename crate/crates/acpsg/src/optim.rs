//! First-order optimization shared by both training stages.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{s, Scalar};
use rand_chacha::ChaCha8Rng;
use rand::Rng;

/// Full-batch training schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

/// Adam state for one parameter matrix.
#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    pub step_count: u64,
    first_moment: DenseMatrix<T>,
    second_moment: DenseMatrix<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(shape: (usize, usize), learning_rate: f64) -> Self {
        AdamState {
            learning_rate: s(learning_rate),
            beta1: s(0.9),
            beta2: s(0.999),
            epsilon: s(1e-8),
            step_count: 0,
            first_moment: DenseMatrix::zeros(shape),
            second_moment: DenseMatrix::zeros(shape),
        }
    }

    /// One bias-corrected Adam update, in place.
    pub fn step(&mut self, params: &mut DenseMatrix<T>, grads: &DenseMatrix<T>) -> Result<()> {
        if params.dim() != grads.dim() || params.dim() != self.first_moment.dim() {
            return Err(Error::Shape(format!(
                "adam step over {:?} parameters with {:?} gradients and {:?} state",
                params.dim(),
                grads.dim(),
                self.first_moment.dim()
            )));
        }
        if let Some(&g) = grads.iter().find(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                epoch: self.step_count as usize,
                learning_rate: self.learning_rate.to_f64_lossy(),
                what: format!("non-finite gradient entry {g}"),
            });
        }
        self.step_count += 1;
        let one = T::one();
        let bc1 = one - self.beta1.powi(self.step_count as i32);
        let bc2 = one - self.beta2.powi(self.step_count as i32);

        let m = self.first_moment.as_slice_mut().expect("standard layout");
        let v = self.second_moment.as_slice_mut().expect("standard layout");
        let p = params.as_slice_mut().expect("standard layout");
        let g = grads.as_slice().expect("standard layout");
        for i in 0..p.len() {
            m[i] = self.beta1 * m[i] + (one - self.beta1) * g[i];
            v[i] = self.beta2 * v[i] + (one - self.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] = p[i] - self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

/// Glorot-style scaled-uniform initialization from a seeded generator.
///
/// Entries are uniform on `[-limit, limit]` with
/// `limit = sqrt(6 / (rows + cols))`. Draws are `f64` regardless of the
/// scalar type, so an `f64` pipeline is bit-reproducible per seed.
pub fn glorot_uniform<T: Scalar>(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
) -> DenseMatrix<T> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = DenseMatrix::<T>::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            let u: f64 = rng.random();
            m[(i, j)] = s::<T>((2.0 * u - 1.0) * limit);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut params = array![[1.0, -2.0], [0.5, 3.0]];
        let before = params.clone();
        let mut state = AdamState::new((2, 2), 0.1);
        let zeros = DenseMatrix::zeros((2, 2));
        for _ in 0..5 {
            state.step(&mut params, &zeros).unwrap();
        }
        assert_eq!(params, before);
        assert_eq!(state.step_count, 5);
    }

    #[test]
    fn first_step_moves_by_roughly_lr_times_sign() {
        let mut params = array![[0.0]];
        let mut state = AdamState::new((1, 1), 0.001);
        state.step(&mut params, &array![[4.0]]).unwrap();
        // m_hat = 4, v_hat = 16, so delta = -0.001 * 4 / (4 + 1e-8).
        let expected = -0.001 * 4.0 / (4.0 + 1e-8);
        assert!((params[(0, 0)] - expected).abs() < 1e-15);
    }

    #[test]
    fn trajectories_are_bit_identical() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut p: DenseMatrix<f64> = glorot_uniform(&mut rng, 3, 4);
            let mut state = AdamState::new((3, 4), 0.01);
            for step in 0..50 {
                let g = p.mapv(|x| x * 0.3 + step as f64 * 1e-3);
                state.step(&mut p, &g).unwrap();
            }
            p
        };
        let a = run();
        let b = run();
        assert!(a
            .iter()
            .zip(b.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn non_finite_gradient_is_divergence() {
        let mut params = array![[0.0]];
        let mut state = AdamState::<f64>::new((1, 1), 0.001);
        let err = state.step(&mut params, &array![[f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn glorot_entries_respect_the_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m: DenseMatrix<f64> = glorot_uniform(&mut rng, 10, 14);
        let limit = (6.0f64 / 24.0).sqrt();
        assert!(m.iter().all(|&x| x.abs() <= limit));
        assert!(m.iter().any(|&x| x != 0.0));
    }
}
