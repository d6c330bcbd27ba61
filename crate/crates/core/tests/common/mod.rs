#![allow(dead_code)]

use gpmw::kernel_gp::KernelSpec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub use gpmw::rng::rng_from_seed as rng;

pub fn gram(kernel: &KernelSpec, xs: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(xs.len(), xs.len(), |i, j| kernel.eval(&xs[i], &xs[j]).unwrap())
}

/// Posterior mean and variance by explicit inversion of `K + σ²I`.
pub fn dense_posterior(
    kernel: &KernelSpec,
    noise_var: f64,
    prior_mean: f64,
    xs: &[Vec<f64>],
    ys: &[f64],
    queries: &[Vec<f64>],
) -> Vec<(f64, f64)> {
    let n = xs.len();
    let mut k = gram(kernel, xs);
    for i in 0..n {
        k[(i, i)] += noise_var;
    }
    let inv = k.try_inverse().expect("invertible");
    let resid = DVector::from_iterator(n, ys.iter().map(|y| y - prior_mean));
    let alpha = &inv * resid;
    queries
        .iter()
        .map(|q| {
            let kq = DVector::from_iterator(n, xs.iter().map(|x| kernel.eval(x, q).unwrap()));
            let mean = prior_mean + kq.dot(&alpha);
            let var = kernel.eval(q, q).unwrap() - kq.dot(&(&inv * &kq));
            (mean, var)
        })
        .collect()
}

/// `½ log det(I + σ⁻² K)` from a dense Cholesky.
pub fn batch_info_gain(kernel: &KernelSpec, noise_var: f64, xs: &[Vec<f64>]) -> f64 {
    let n = xs.len();
    let m = DMatrix::identity(n, n) + gram(kernel, xs) / noise_var;
    let chol = m.cholesky().expect("positive definite");
    chol.l().diagonal().iter().map(|d| d.ln()).sum()
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>() * scale).collect())
        .collect()
}

pub fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}
