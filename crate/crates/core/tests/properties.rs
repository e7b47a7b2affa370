mod common;

use std::sync::Arc;

use common::{oracle_eigs, random_graph, random_instance, random_vec, rel_close};
use morse_core::alternatives::{bracketing_check, nonneg_shift};
use morse_core::birman_schwinger::{build_bs, make_shift, InvSqrt};
use morse_core::graph::{BoundaryCondition, PotentialField, Region};
use morse_core::operator::{bilinear_form, doob_transform, quadratic_form, OperatorBundle};
use morse_core::parabolicity::{dirichlet_constant, green_kernel};
use morse_core::spectral::{self, count_below, inertia_count, CountRoute};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn positive_base(seed: u64, max_vertices: usize) -> (OperatorBundle, rand_chacha::ChaCha8Rng) {
    let (g, mut rng) = random_graph(seed, max_vertices);
    let w: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.0..=1.0)).collect();
    let g = g.with_base_potential(w).unwrap();
    (OperatorBundle::base(Arc::new(g)).unwrap(), rng)
}

/// A connected region grown from a random vertex.
fn grown_region(b: &OperatorBundle, rng: &mut rand_chacha::ChaCha8Rng, size: usize) -> Region {
    let g = b.graph();
    let mut inside = vec![false; g.len()];
    let start = rng.random_range(0..g.len());
    let mut frontier = vec![start];
    inside[start] = true;
    let mut members = vec![start];
    while members.len() < size && !frontier.is_empty() {
        let x = frontier.remove(rng.random_range(0..frontier.len()));
        for &(y, _) in g.neighbors(x) {
            if !inside[y] && members.len() < size {
                inside[y] = true;
                members.push(y);
                frontier.push(y);
            }
        }
    }
    Region::new(members)
}

fn sym_rank_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn green_formula(seed in any::<u64>()) {
        let (b, mut rng) = random_instance(seed, 60);
        let f = random_vec(&mut rng, b.dim());
        let g = random_vec(&mut rng, b.dim());
        let lhs = b.inner(&b.apply(&f), &g);
        let rhs = bilinear_form(&b, &f, &g).unwrap();
        prop_assert!(rel_close(lhs, rhs, 1e-12), "{} vs {}", lhs, rhs);
        let swapped = b.inner(&f, &b.apply(&g));
        prop_assert!(rel_close(lhs, swapped, 1e-12));
    }

    #[test]
    fn symmetrization_scaling(seed in any::<u64>()) {
        let (b, mut rng) = random_instance(seed, 60);
        let f = random_vec(&mut rng, b.dim());
        let g = random_vec(&mut rng, b.dim());
        let back = b.from_sym(&b.to_sym(&f));
        for (x, y) in back.iter().zip(&f) {
            prop_assert!((x - y).abs() <= 1e-14 * y.abs().max(1.0));
        }
        let sf = b.sym().matvec(&b.to_sym(&f));
        let via_sym = sym_rank_dot(&sf, &b.to_sym(&g));
        prop_assert!(rel_close(via_sym, b.inner(&b.apply(&f), &g), 1e-12));
    }

    #[test]
    fn doob_spectrum_and_form(seed in any::<u64>()) {
        let (b, mut rng) = random_instance(seed, 40);
        let phi: Vec<f64> = (0..b.dim()).map(|_| rng.random_range(0.2..=3.0)).collect();
        let d = doob_transform(&b, &phi).unwrap();
        let t = d.bundle().unwrap();
        let a = oracle_eigs(b.graph(), b.potential().values());
        let c = oracle_eigs(t.graph(), t.potential().values());
        for (x, y) in a.iter().zip(&c) {
            prop_assert!(rel_close(*x, *y, 1e-10), "{} vs {}", x, y);
        }
        let u = random_vec(&mut rng, b.dim());
        let phi_u: Vec<f64> = u.iter().zip(&phi).map(|(a, p)| a * p).collect();
        let original = quadratic_form(&b, &phi_u).unwrap();
        let transformed = quadratic_form(&t, &u).unwrap();
        prop_assert!(rel_close(original, transformed, 1e-10));
    }

    #[test]
    fn dense_count_matches_inertia(seed in any::<u64>(), lambda in -1.0f64..3.0) {
        let (b, _) = random_instance(seed, 60);
        let dense = spectral::count_below_with(&b, lambda, 1e-8, &CountRoute::Dense).unwrap();
        let inertia = inertia_count(&b, lambda, 1e-8).unwrap();
        prop_assume!(!dense.ambiguous && !inertia.ambiguous);
        prop_assert_eq!(dense.count, inertia.count);
        let oracle = oracle_eigs(b.graph(), b.potential().values()).iter().filter(|&&x| x < lambda).count();
        prop_assert_eq!(dense.count, oracle);
    }

    #[test]
    fn perron_ground_state_is_positive(seed in any::<u64>()) {
        let (b, _) = random_instance(seed, 40);
        let gs = spectral::ground_state(&b).unwrap();
        prop_assert!(gs.warning.is_none());
        prop_assert!(gs.phi.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn dirichlet_monotone_and_above_neumann(seed in any::<u64>()) {
        let (b, mut rng) = random_instance(seed, 40);
        prop_assume!(b.dim() >= 4);
        let big = grown_region(&b, &mut rng, b.dim() * 3 / 4);
        let mut members = big.as_slice().to_vec();
        members.shuffle(&mut rng);
        let small = Region::new(members[..members.len().div_ceil(2)].iter().copied());
        let d_big = spectral::lambda1_restricted(&b, &big, BoundaryCondition::Dirichlet).unwrap();
        let d_small = spectral::lambda1_restricted(&b, &small, BoundaryCondition::Dirichlet).unwrap();
        let n_big = spectral::lambda1_restricted(&b, &big, BoundaryCondition::Neumann).unwrap();
        prop_assert!(d_small >= d_big - 1e-10);
        prop_assert!(n_big <= d_big + 1e-10);
    }

    #[test]
    fn green_kernels_grow_and_stay_nonnegative(seed in any::<u64>()) {
        let (b, mut rng) = positive_base(seed, 40);
        prop_assume!(b.dim() >= 4);
        let big = grown_region(&b, &mut rng, b.dim() - 1);
        let small = grown_region(&b, &mut rng, b.dim() / 2);
        let small = Region::new(small.iter().copied().filter(|&x| big.contains(x)));
        prop_assume!(!small.is_empty());
        let gb = green_kernel(&b, &big).unwrap();
        let gs = green_kernel(&b, &small).unwrap();
        let pos = |r: &Region, x: usize| r.as_slice().binary_search(&x).unwrap();
        for (i, &x) in small.iter().enumerate() {
            for (j, &y) in small.iter().enumerate() {
                let outer = gb[(pos(&big, x), pos(&big, y))];
                prop_assert!(gs[(i, j)] >= -1e-14);
                prop_assert!(outer >= gs[(i, j)] - 1e-10 * outer.abs().max(1.0));
            }
        }
        let probe = Region::new([small.as_slice()[0]]);
        let c_small = dirichlet_constant(&b, &probe, &small).unwrap().c;
        let c_big = dirichlet_constant(&b, &probe, &big).unwrap().c;
        prop_assert!(c_big <= c_small + 1e-10 * c_small.max(1.0));
    }

    #[test]
    fn birman_schwinger_operator_is_symmetric(seed in any::<u64>()) {
        let (base, mut rng) = positive_base(seed, 40);
        let v: Vec<f64> = (0..base.dim()).map(|_| rng.random_range(-2.0..=0.5)).collect();
        let shift = make_shift(&base, &Region::new([0]), 1.0).unwrap();
        let v = PotentialField::new(v);
        let bs = build_bs(&shift.shifted_base, &shift.shifted_potential(&v), false).unwrap();
        let (_, asymmetry) = bs.matrix_t_raw().unwrap();
        prop_assert!(asymmetry <= 1e-10 * bs.scale().max(1.0), "{}", asymmetry);
    }

    #[test]
    fn shift_is_neutral(seed in any::<u64>()) {
        let (h, mut rng) = random_instance(seed, 40);
        let base = OperatorBundle::base(h.graph().clone()).unwrap();
        let u = grown_region(&base, &mut rng, 3);
        let s = make_shift(&base, &u, rng.random_range(1.0..4.0)).unwrap();
        let shifted_h = s.shifted_base.with_potential(s.shifted_base.potential().plus(&s.shifted_potential(h.potential()))).unwrap();
        let f = random_vec(&mut rng, h.dim());
        let a = h.apply(&f);
        let c = shifted_h.apply(&f);
        for (x, y) in a.iter().zip(&c) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn inverse_square_root_is_symmetric(seed in any::<u64>()) {
        let (base, _) = positive_base(seed, 30);
        let s = make_shift(&base, &Region::new([0]), 1.0).unwrap();
        let inv = InvSqrt::new(&s.shifted_base).unwrap();
        let r = inv.matrix();
        let q = inv.sqrt_matrix();
        let n = r.nrows();
        let l = s.shifted_base.sym().to_dense();
        let rlr = &r * &l * &r;
        for i in 0..n {
            for j in 0..n {
                prop_assert!((r[(i, j)] - r[(j, i)]).abs() <= 1e-12 * inv.scale().max(1.0));
                prop_assert!((q[(i, j)] - q[(j, i)]).abs() <= 1e-12 * inv.scale().max(1.0));
                let id = if i == j { 1.0 } else { 0.0 };
                prop_assert!((rlr[(i, j)] - id).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn deeper_wells_count_more(seed in any::<u64>(), factor in 1.0f64..4.0) {
        let (base, mut rng) = positive_base(seed, 40);
        let s = make_shift(&base, &Region::new([0]), 1.0).unwrap();
        let v: Vec<f64> = (0..base.dim()).map(|_| rng.random_range(-3.0..=0.0)).collect();
        let v1 = PotentialField::new(v);
        let v2 = v1.scaled(factor);
        let c1 = build_bs(&s.shifted_base, &v1, false).unwrap().count(1e-9);
        let c2 = build_bs(&s.shifted_base, &v2, false).unwrap().count(1e-9);
        prop_assume!(!c1.1 && !c2.1);
        prop_assert!(c2.0 >= c1.0);
    }

    #[test]
    fn bracketing_holds(seed in any::<u64>(), li in 0usize..3) {
        let lambda = [-0.5, 0.0, 0.3][li];
        let (b, mut rng) = random_instance(seed, 50);
        let size = rng.random_range(1..b.dim());
        let k = grown_region(&b, &mut rng, size);
        prop_assume!(k.len() < b.dim());
        let r = bracketing_check(&b, &k, lambda, 1e-8).unwrap();
        prop_assert!(r.holds, "{:?}", r);
    }

    #[test]
    fn nonneg_shift_is_sound(seed in any::<u64>()) {
        let (b, mut rng) = random_instance(seed, 40);
        let phi: Vec<f64> = (0..b.dim()).map(|_| rng.random_range(0.1..=2.0)).collect();
        let s = nonneg_shift(&b, &phi, 0.0, 1e-10).unwrap();
        prop_assert!(s.l_check >= -1e-10 * b.scale(), "{}", s.l_check);
        prop_assert!(s.vtilde.values().iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn count_agrees_with_oracle_above_dense_cap() {
    // 41² = 1681 > the dense count cap, so this goes through the factorization.
    let g = Arc::new(morse_core::graph::build_lattice(2, 20, &Default::default()).unwrap());
    let o = g.vertex("0,0").unwrap();
    let v = PotentialField::indicator(g.len(), &Region::new([o]), -6.0);
    let b = OperatorBundle::assemble(g.clone(), v).unwrap();
    let c = count_below(&b, 0.5, 1e-8).unwrap();
    let oracle = oracle_eigs(&g, b.potential().values()).iter().filter(|&&x| x < 0.5).count();
    assert_eq!(c.count, oracle);
}
