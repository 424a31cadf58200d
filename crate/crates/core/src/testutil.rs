//! Random instances shared by unit tests.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::kernels::gram_schmidt;
use crate::{DenseTensor, Mat};

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-distributed orthogonal matrix (Gram–Schmidt of a Gaussian matrix).
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> Mat<f64> {
    gram_schmidt(&Mat::from_fn(n, n, |_, _| normal(rng))).unwrap()
}

/// Haar-distributed unitary matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> Mat<Complex64> {
    gram_schmidt(&Mat::from_fn(n, n, |_, _| {
        Complex64::new(normal(rng), normal(rng))
    }))
    .unwrap()
}

pub fn sym_real<R: Rng>(rng: &mut R, order: usize, n: usize) -> DenseTensor<f64> {
    DenseTensor::from_fn(order, n, |_| normal(rng))
        .unwrap()
        .symmetrize()
}

pub fn rand_complex_tensor<R: Rng>(rng: &mut R, order: usize, n: usize) -> DenseTensor<Complex64> {
    DenseTensor::from_fn(order, n, |_| Complex64::new(normal(rng), normal(rng))).unwrap()
}
