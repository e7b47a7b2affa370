#![allow(dead_code)]

use std::sync::Arc;

use faer::{Mat, Side};
use morse_core::graph::{random_connected, Edge, PotentialField, RandomGraphSpec, WeightedGraph};
use morse_core::operator::OperatorBundle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `D^{-1/2}(A + D diag(W + V))D^{-1/2}` assembled straight from the graph
/// data, independent of the library's assembly.
pub fn oracle_sym(g: &WeightedGraph, v: &[f64]) -> Mat<f64> {
    let n = g.len();
    let mu = g.mu();
    let mut m = Mat::<f64>::zeros(n, n);
    for x in 0..n {
        m[(x, x)] += g.base_potential()[x] + v[x];
    }
    for e in g.edges() {
        let (a, b) = (e.u, e.v);
        m[(a, a)] += e.w / mu[a];
        m[(b, b)] += e.w / mu[b];
        let off = -e.w / (mu[a] * mu[b]).sqrt();
        m[(a, b)] += off;
        m[(b, a)] += off;
    }
    m
}

pub fn oracle_eigs(g: &WeightedGraph, v: &[f64]) -> Vec<f64> {
    let mut vals = oracle_sym(g, v).self_adjoint_eigenvalues(Side::Lower).unwrap();
    vals.sort_by(f64::total_cmp);
    vals
}

pub fn count_below(vals: &[f64], lambda: f64) -> usize {
    vals.iter().filter(|&&x| x < lambda).count()
}

pub fn path(n: usize) -> WeightedGraph {
    let ids = (0..n).map(|i| i.to_string()).collect();
    let edges = (0..n - 1).map(|i| Edge { u: i, v: i + 1, w: 1.0 }).collect();
    WeightedGraph::new(ids, vec![1.0; n], vec![0.0; n], edges).unwrap()
}

pub fn random_graph(seed: u64, max_vertices: usize) -> (WeightedGraph, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=max_vertices);
    let spec = RandomGraphSpec { vertices: n, extra_edges: n / 2, mu_range: (0.5, 2.0), w_range: (0.5, 2.0) };
    (random_connected(&spec, &mut rng).unwrap(), rng)
}

/// Random graph with `V ∈ [−1, 1]`.
pub fn random_instance(seed: u64, max_vertices: usize) -> (OperatorBundle, ChaCha8Rng) {
    let (g, mut rng) = random_graph(seed, max_vertices);
    let v = (0..g.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    (OperatorBundle::assemble(Arc::new(g), PotentialField::new(v)).unwrap(), rng)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
