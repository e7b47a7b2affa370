//! Eigensolves, eigenvalue counts, ground states and λ₁ of restrictions.
//!
//! Counts are taken on the symmetrized matrix. Small problems use a dense
//! eigensolve; larger ones count through the inertia of `S − σI`, and very
//! large ones through the Schur complement onto a small set `K` on whose
//! complement `S − σI` is positive definite (Haynsworth).

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{BoundaryCondition, Region};
use crate::linalg::{
    dense_eigen, inertia, lowest_eigenpairs, KrylovOptions, SparseCholesky, SymCsr, DEFAULT_ENVELOPE_CAP,
};
use crate::operator::OperatorBundle;

pub const DEFAULT_DENSE_CAP: usize = 6000;
pub const DEFAULT_TOL_ZERO: f64 = 1e-8;
/// Above this size counts go through the inertia of `S − σI` instead of a
/// full dense eigensolve.
pub const DENSE_COUNT_CAP: usize = 1500;

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub dense_cap: usize,
    /// Number of lowest pairs to compute when the dense cap is exceeded.
    /// `None` makes an oversized request an error.
    pub iterative_k: Option<usize>,
    pub want_vectors: bool,
    pub tol_zero: f64,
    pub krylov: KrylovOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_cap: DEFAULT_DENSE_CAP,
            iterative_k: None,
            want_vectors: false,
            tol_zero: DEFAULT_TOL_ZERO,
            krylov: KrylovOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    Dense,
    Inertia,
    Schur,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Count {
    pub count: usize,
    /// Eigenvalues strictly below this value were counted.
    pub threshold: f64,
    pub scale: f64,
    /// Some eigenvalue sits within half a tolerance band of the threshold.
    pub ambiguous: bool,
    pub method: CountMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountRecord {
    pub lambda: f64,
    pub count: Count,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralSummary {
    /// Ascending. Complete in dense mode, the lowest `k` in iterative mode.
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors in the ν representation.
    #[serde(skip)]
    pub eigenvectors: Option<Mat<f64>>,
    pub lambda1: f64,
    pub tol_zero: f64,
    pub scale: f64,
    pub complete: bool,
    pub counts: Vec<CountRecord>,
}

impl SpectralSummary {
    /// Count of returned eigenvalues below `lambda − tol_zero·scale`; also
    /// recorded in `counts`.
    pub fn count_below(&mut self, lambda: f64) -> Count {
        let c = count_sorted(&self.eigenvalues, lambda, self.tol_zero, self.scale);
        self.counts.push(CountRecord { lambda, count: c.clone() });
        c
    }
}

fn count_sorted(values: &[f64], lambda: f64, tol: f64, scale: f64) -> Count {
    let band = tol * scale;
    let threshold = lambda - band;
    let count = values.iter().filter(|&&e| e < threshold).count();
    let ambiguous = values.iter().any(|&e| (e - threshold).abs() < 0.5 * band);
    Count { count, threshold, scale, ambiguous, method: CountMethod::Dense }
}

fn to_nu_vectors(bundle: &OperatorBundle, u: &Mat<f64>) -> Mat<f64> {
    let s = bundle.sqrt_measure();
    Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] / s[i])
}

pub fn eigen_symmetric(bundle: &OperatorBundle, opts: &EigenOptions) -> Result<SpectralSummary> {
    let n = bundle.dim();
    let scale = bundle.scale();
    let (eigenvalues, vectors, complete) = if n <= opts.dense_cap {
        let (vals, vecs) = dense_eigen(&bundle.sym().to_dense(), opts.want_vectors)?;
        (vals, vecs, true)
    } else if let Some(k) = opts.iterative_k {
        let (vals, vecs) = lowest_eigenpairs(bundle.sym(), k, &opts.krylov)?;
        (vals, opts.want_vectors.then_some(vecs), k >= n)
    } else {
        return Err(Error::DenseCapExceeded { dim: n, cap: opts.dense_cap });
    };
    let eigenvectors = vectors.map(|u| to_nu_vectors(bundle, &u));
    let lambda1 = eigenvalues.first().copied().unwrap_or(f64::NAN);
    let mut summary =
        SpectralSummary { eigenvalues, eigenvectors, lambda1, tol_zero: opts.tol_zero, scale, complete, counts: Vec::new() };
    if complete {
        summary.count_below(0.0);
    }
    Ok(summary)
}

/// How `count_below_with` counts.
#[derive(Clone, Debug, Default)]
pub enum CountRoute {
    /// Dense up to [`DENSE_COUNT_CAP`], inertia above.
    #[default]
    Auto,
    Dense,
    Inertia,
    /// Haynsworth reduction onto `K`; the shifted matrix must be positive
    /// definite on the complement of `K`.
    Schur(Region),
}

/// Number of eigenvalues of `H` below `lambda − tol·scale`.
pub fn count_below(bundle: &OperatorBundle, lambda: f64, tol: f64) -> Result<Count> {
    count_below_with(bundle, lambda, tol, &CountRoute::Auto)
}

pub fn morse_index(bundle: &OperatorBundle, tol: f64) -> Result<Count> {
    count_below(bundle, 0.0, tol)
}

pub fn count_below_with(bundle: &OperatorBundle, lambda: f64, tol: f64, route: &CountRoute) -> Result<Count> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be nonnegative, got {tol}")));
    }
    match route {
        CountRoute::Auto if bundle.dim() <= DENSE_COUNT_CAP => dense_count(bundle, lambda, tol),
        CountRoute::Auto | CountRoute::Inertia => inertia_count(bundle, lambda, tol),
        CountRoute::Dense => dense_count(bundle, lambda, tol),
        CountRoute::Schur(k) => schur_count(bundle, k, lambda, tol),
    }
}

fn dense_count(bundle: &OperatorBundle, lambda: f64, tol: f64) -> Result<Count> {
    let (vals, _) = dense_eigen(&bundle.sym().to_dense(), false)?;
    Ok(count_sorted(&vals, lambda, tol, bundle.scale()))
}

/// Independent counter: Sylvester inertia of `S − (lambda − tol·scale) I`.
pub fn inertia_count(bundle: &OperatorBundle, lambda: f64, tol: f64) -> Result<Count> {
    let scale = bundle.scale();
    let band = tol * scale;
    let threshold = lambda - band;
    let pivot_tol = 1e-13 * scale;
    let at = inertia(bundle.sym(), threshold, pivot_tol, DEFAULT_ENVELOPE_CAP)?;
    let mut ambiguous = at.zero > 0;
    if band > 0.0 {
        let lo = inertia(bundle.sym(), threshold - 0.5 * band, pivot_tol, DEFAULT_ENVELOPE_CAP)?;
        let hi = inertia(bundle.sym(), threshold + 0.5 * band, pivot_tol, DEFAULT_ENVELOPE_CAP)?;
        ambiguous |= lo.negative != hi.negative;
    }
    Ok(Count { count: at.negative, threshold, scale, ambiguous, method: CountMethod::Inertia })
}

/// Schur complement of `a` onto `k`, given a factorization of `a` on the
/// complement `e` of `k`.
pub(crate) fn schur_onto(a: &SymCsr, k: &Region, e: &Region, chol_ee: &SparseCholesky) -> Mat<f64> {
    let a_kk = a.block(k, k);
    if e.is_empty() {
        return a_kk;
    }
    let a_ek = a.block(e, k);
    let x = chol_ee.solve_mat(&a_ek);
    let mut s = a_kk;
    let prod = a_ek.transpose() * &x;
    for i in 0..k.len() {
        for j in 0..k.len() {
            s[(i, j)] -= 0.5 * (prod[(i, j)] + prod[(j, i)]);
        }
    }
    s
}

fn schur_count(bundle: &OperatorBundle, k: &Region, lambda: f64, tol: f64) -> Result<Count> {
    let n = bundle.dim();
    if k.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if let Some(&x) = k.iter().find(|&&x| x >= n) {
        return Err(Error::NotSubset(x));
    }
    let scale = bundle.scale();
    let band = tol * scale;
    let threshold = lambda - band;
    let shifted = bundle.sym().with_diagonal_added(&vec![-threshold; n]);
    let e = k.complement(n);
    let chol = if e.is_empty() {
        None
    } else {
        Some(SparseCholesky::new(&shifted.principal(&e)).map_err(|_| {
            Error::Stability("shifted operator is not positive definite off the Schur set".into())
        })?)
    };
    let schur = match &chol {
        Some(c) => schur_onto(&shifted, k, &e, c),
        None => shifted.block(k, k),
    };
    let (vals, _) = dense_eigen(&schur, false)?;
    let count = vals.iter().filter(|&&v| v < 0.0).count();
    // the Schur complement is not spectrally equivalent; flag near-zero pivots
    let ambiguous = vals.iter().any(|v| v.abs() < 0.5 * band.max(1e-13 * scale));
    Ok(Count { count, threshold, scale, ambiguous, method: CountMethod::Schur })
}

/// Smallest eigenvalue of the symmetrized matrix.
pub fn lambda1(bundle: &OperatorBundle) -> Result<f64> {
    lowest(bundle.sym(), 1).map(|(v, _)| v[0])
}

fn lowest(a: &SymCsr, k: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    if a.dim() == 0 {
        return Err(Error::EmptyRegion);
    }
    if a.dim() <= DENSE_COUNT_CAP {
        let (vals, vecs) = dense_eigen(&a.to_dense(), true)?;
        let vecs = vecs.expect("vectors requested");
        let k = k.min(a.dim());
        Ok((vals[..k].to_vec(), Mat::from_fn(a.dim(), k, |i, j| vecs[(i, j)])))
    } else {
        lowest_eigenpairs(a, k, &KrylovOptions::default())
    }
}

/// The `k` lowest eigenpairs, vectors in the ν representation.
pub fn lowest_pairs(bundle: &OperatorBundle, k: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    let (vals, u) = lowest(bundle.sym(), k)?;
    Ok((vals, to_nu_vectors(bundle, &u)))
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundState {
    pub lambda1: f64,
    /// ν-normalized and nonnegative.
    pub phi: Vec<f64>,
    pub warning: Option<String>,
}

pub fn ground_state(bundle: &OperatorBundle) -> Result<GroundState> {
    let comps = bundle.graph().components(&bundle.graph().all_vertices());
    if comps.len() > 1 {
        return Err(Error::Disconnected { components: comps.len() });
    }
    let (vals, u) = lowest(bundle.sym(), 1)?;
    let mut phi: Vec<f64> = (0..bundle.dim()).map(|i| u[(i, 0)] / bundle.sqrt_measure()[i]).collect();
    let norm = bundle.inner(&phi, &phi).sqrt();
    let sign = if phi.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    phi.iter_mut().for_each(|v| *v *= sign / norm);
    let min = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let warning = (min < 1e-12).then(|| {
        format!("Perron violation: ground state has minimum entry {min:e} on a connected graph")
    });
    Ok(GroundState { lambda1: vals[0], phi, warning })
}

/// Ground states of each connected component (ids kept in parent order).
pub fn ground_states_per_component(bundle: &OperatorBundle) -> Result<Vec<(Region, GroundState)>> {
    let graph = bundle.graph();
    graph
        .components(&graph.all_vertices())
        .into_iter()
        .map(|comp| {
            let (sub, _) = bundle.restricted(&comp, BoundaryCondition::Neumann)?;
            Ok((comp, ground_state(&sub)?))
        })
        .collect()
}

/// λ₁ of the Dirichlet restriction to the complement of `k`.
pub fn lambda1_exterior(bundle: &OperatorBundle, k: &Region) -> Result<f64> {
    let n = bundle.dim();
    if let Some(&x) = k.iter().find(|&&x| x >= n) {
        return Err(Error::NotSubset(x));
    }
    let ext = k.complement(n);
    if ext.is_empty() {
        return Err(Error::EmptyExterior);
    }
    let (sub, _) = bundle.restricted(&ext, BoundaryCondition::Dirichlet)?;
    lambda1(&sub)
}

/// λ₁ of the restriction to `region` under `bc`.
pub fn lambda1_restricted(bundle: &OperatorBundle, region: &Region, bc: BoundaryCondition) -> Result<f64> {
    let (sub, _) = bundle.restricted(region, bc)?;
    lambda1(&sub)
}

/// One value per line, 17 significant digits.
pub fn eigenvalues_csv(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24);
    for v in values {
        out.push_str(&format!("{v:.16e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::{build_half_line, Edge, PotentialField, Profiles, WeightedGraph};

    fn path(n: usize, v: &[f64]) -> OperatorBundle {
        let ids = (0..n).map(|i| format!("{i}")).collect();
        let edges = (0..n - 1).map(|i| Edge { u: i, v: i + 1, w: 1.0 }).collect();
        let g = WeightedGraph::new(ids, vec![1.0; n], vec![0.0; n], edges).unwrap();
        OperatorBundle::assemble(Arc::new(g), PotentialField::new(v.to_vec())).unwrap()
    }

    #[test]
    fn p2_spectra_and_counts() {
        let b = path(2, &[0.0, 0.0]);
        let s = eigen_symmetric(&b, &EigenOptions::default()).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-14 && (s.eigenvalues[1] - 2.0).abs() < 1e-14);
        assert_eq!(count_below(&b, 1.0, 1e-8).unwrap().count, 1);
        assert_eq!(count_below(&b, 2.5, 1e-8).unwrap().count, 2);
        assert_eq!(morse_index(&b, 1e-8).unwrap().count, 0);
        assert!(!morse_index(&b, 1e-8).unwrap().ambiguous);
        let b = path(2, &[-2.0, -2.0]);
        let s = eigen_symmetric(&b, &EigenOptions::default()).unwrap();
        assert!((s.eigenvalues[0] + 2.0).abs() < 1e-14 && s.eigenvalues[1].abs() < 1e-14);
        assert_eq!(s.counts[0].count.count, 1);
        assert_eq!(morse_index(&b, 1e-8).unwrap().count, 1);
        assert_eq!(inertia_count(&b, 0.0, 1e-8).unwrap().count, 1);
    }

    #[test]
    fn dense_cap_and_iterative_mode() {
        let g = Arc::new(build_half_line(40, &Profiles::default()).unwrap());
        let b = OperatorBundle::base(g).unwrap();
        let opts = EigenOptions { dense_cap: 10, ..Default::default() };
        assert!(matches!(eigen_symmetric(&b, &opts), Err(Error::DenseCapExceeded { dim: 41, cap: 10 })));
        let opts = EigenOptions { dense_cap: 10, iterative_k: Some(3), want_vectors: true, ..Default::default() };
        let s = eigen_symmetric(&b, &opts).unwrap();
        let full = eigen_symmetric(&b, &EigenOptions::default()).unwrap();
        assert_eq!(s.eigenvalues.len(), 3);
        assert!(!s.complete);
        for (a, e) in s.eigenvalues.iter().zip(&full.eigenvalues) {
            assert!((a - e).abs() < 1e-9);
        }
    }

    #[test]
    fn ground_state_examples() {
        let b = path(2, &[0.0, 0.0]);
        let gs = ground_state(&b).unwrap();
        assert!(gs.lambda1.abs() < 1e-14);
        for v in &gs.phi {
            assert!((v - 0.5f64.sqrt()).abs() < 1e-14);
        }
        assert!(gs.warning.is_none());

        let p3 = path(3, &[0.0; 3]);
        let (mid, _) = p3.restricted(&Region::new([1]), BoundaryCondition::Dirichlet).unwrap();
        let gs = ground_state(&mid).unwrap();
        assert!((gs.lambda1 - 2.0).abs() < 1e-14);
        assert!((gs.phi[0] - 1.0).abs() < 1e-14);

        let p4 = path(4, &[0.0; 4]);
        let (mid, _) = p4.restricted(&Region::new([1, 2]), BoundaryCondition::Dirichlet).unwrap();
        let gs = ground_state(&mid).unwrap();
        assert!((gs.lambda1 - 1.0).abs() < 1e-14);
        for v in &gs.phi {
            assert!((v - 0.5f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn disconnected_ground_state_is_refused() {
        let p4 = path(4, &[0.0; 4]);
        let (two, _) = p4.restricted(&Region::new([0, 3]), BoundaryCondition::Dirichlet).unwrap();
        assert!(matches!(ground_state(&two), Err(Error::Disconnected { components: 2 })));
        let per = ground_states_per_component(&two).unwrap();
        assert_eq!(per.len(), 2);
        assert!((per[0].1.lambda1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exterior_lambda1() {
        let p3 = path(3, &[0.0; 3]);
        assert!((lambda1_exterior(&p3, &Region::new([0, 2])).unwrap() - 2.0).abs() < 1e-14);
        assert!(lambda1_exterior(&p3, &Region::new([])).unwrap() >= -1e-14);
        assert!(matches!(lambda1_exterior(&p3, &Region::new([0, 1, 2])), Err(Error::EmptyExterior)));
    }

    #[test]
    fn schur_route_agrees() {
        let mut v = vec![0.0; 41];
        v[..5].iter_mut().for_each(|x| *x = -8.0);
        let g = Arc::new(build_half_line(40, &Profiles::default()).unwrap());
        let b = OperatorBundle::assemble(g, PotentialField::new(v)).unwrap();
        let dense = morse_index(&b, 1e-8).unwrap();
        let k = Region::new(0..8);
        let schur = count_below_with(&b, 0.0, 1e-8, &CountRoute::Schur(k)).unwrap();
        let inert = inertia_count(&b, 0.0, 1e-8).unwrap();
        assert_eq!(dense.count, schur.count);
        assert_eq!(dense.count, inert.count);
        assert!(dense.count >= 1);
    }

    #[test]
    fn csv_format() {
        assert_eq!(eigenvalues_csv(&[0.0, 2.0]), "0.0000000000000000e0\n2.0000000000000000e0\n");
    }
}
