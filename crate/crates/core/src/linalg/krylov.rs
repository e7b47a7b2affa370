//! Lowest eigenpairs of a large sparse symmetric matrix: block Krylov
//! subspace with full reorthogonalization and Rayleigh–Ritz extraction.
//! The block size bounds the multiplicity that is resolved reliably.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SymCsr;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct KrylovOptions {
    pub block: usize,
    pub max_dim: usize,
    /// Residual tolerance relative to the Gershgorin norm bound.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { block: 6, max_dim: 1500, tol: 1e-10, seed: 0x5eed_1e55 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Orthogonalizes `v` against `basis` twice (CGS2) and normalizes it;
/// returns `None` when `v` is numerically inside the span.
fn orthonormalize(basis: &[Vec<f64>], mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm0 = dot(&v, &v).sqrt();
    if norm0 == 0.0 {
        return None;
    }
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|q| dot(q, &v)).collect();
        for (q, c) in basis.iter().zip(coeffs) {
            axpy(-c, q, &mut v);
        }
    }
    let norm = dot(&v, &v).sqrt();
    if norm <= 1e-10 * norm0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

/// The `k` lowest eigenpairs of `a` (ascending). Eigenvectors are returned as
/// the columns of an `n × k` matrix, orthonormal in the Euclidean product.
pub fn lowest_eigenpairs(a: &SymCsr, k: usize, opts: &KrylovOptions) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.dim();
    let k = k.min(n);
    if k == 0 {
        return Ok((Vec::new(), Mat::zeros(n, 0)));
    }
    if n <= 4 * opts.block.max(k) + 16 {
        let eig = a
            .to_dense()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let vals = (0..k).map(|i| eig.S()[i]).collect();
        let vecs = Mat::from_fn(n, k, |i, j| eig.U()[(i, j)]);
        return Ok((vals, vecs));
    }
    let block = opts.block.max(1).max(k.min(8));
    let max_dim = opts.max_dim.min(n).max(block + k);
    let scale = a.norm_bound().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut projected = Mat::<f64>::zeros(max_dim, max_dim);
    let mut pending: Vec<Vec<f64>> = (0..block).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
    let mut next_check = (2 * block).max(k + block);

    loop {
        // orthonormalize the candidate block
        let mut added = Vec::new();
        for v in pending.drain(..) {
            if basis.len() >= max_dim {
                break;
            }
            if let Some(q) = orthonormalize(&basis, v) {
                basis.push(q);
                added.push(basis.len() - 1);
            }
        }
        if added.is_empty() && basis.len() < max_dim {
            // invariant subspace: restart with fresh random directions
            let fresh: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            if let Some(q) = orthonormalize(&basis, fresh) {
                basis.push(q);
                added.push(basis.len() - 1);
            }
        }
        let mut images = Vec::with_capacity(added.len());
        for &j in &added {
            let aq = a.matvec(&basis[j]);
            for (i, q) in basis.iter().enumerate() {
                let v = dot(q, &aq);
                projected[(i, j)] = v;
                projected[(j, i)] = v;
            }
            images.push(aq);
        }
        let m = basis.len();
        let exhausted = m >= max_dim || added.is_empty();
        if m >= next_check || exhausted {
            let p = Mat::from_fn(m, m, |i, j| projected[(i, j)]);
            let eig = p.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
            let mut vals = Vec::with_capacity(k);
            let mut vecs = Mat::<f64>::zeros(n, k);
            let mut worst: f64 = 0.0;
            for t in 0..k {
                let theta = eig.S()[t];
                let mut x = vec![0.0; n];
                for (i, q) in basis.iter().enumerate() {
                    axpy(eig.U()[(i, t)], q, &mut x);
                }
                let ax = a.matvec(&x);
                let res: f64 = ax.iter().zip(&x).map(|(p, q)| (p - theta * q).powi(2)).sum::<f64>().sqrt();
                worst = worst.max(res);
                vals.push(theta);
                for i in 0..n {
                    vecs[(i, t)] = x[i];
                }
            }
            if worst <= opts.tol * scale || m == n {
                return Ok((vals, vecs));
            }
            if exhausted {
                return Err(Error::NotConverged { what: "block Krylov eigensolver", iterations: m });
            }
            next_check = (m + 2 * block).max(m + m / 8);
        }
        pending = images;
    }
}
