#![allow(dead_code)]

use jacobi_diag::{Complex64, DenseTensor, Mat};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn orthogonal<R: Rng>(rng: &mut R, n: usize) -> Mat<f64> {
    let g = Mat::<f64>::from_fn(n, n, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

pub fn unitary<R: Rng>(rng: &mut R, n: usize) -> Mat<Complex64> {
    let g = Mat::<Complex64>::from_fn(n, n, |_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        let d = r[(k, k)];
        let phase = d / d.norm();
        for row in 0..n {
            q[(row, k)] *= phase;
        }
    }
    q
}

pub fn sym_tensor<R: Rng>(rng: &mut R, order: usize, n: usize) -> DenseTensor<f64> {
    DenseTensor::from_fn(order, n, |_| gaussian(rng))
        .unwrap()
        .symmetrize()
}

pub fn complex_tensor<R: Rng>(rng: &mut R, order: usize, n: usize) -> DenseTensor<Complex64> {
    DenseTensor::from_fn(order, n, |_| Complex64::new(gaussian(rng), gaussian(rng))).unwrap()
}

pub fn hermitian<R: Rng>(rng: &mut R, n: usize) -> Mat<Complex64> {
    let a = Mat::<Complex64>::from_fn(n, n, |_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    (&a + a.adjoint()).scale(0.5)
}
