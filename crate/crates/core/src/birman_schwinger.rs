//! The Birman–Schwinger operator `T = L^{-1/2}(−V)L^{-1/2}` and the bound
//! `N_−(L + V) ≤ #{eigenvalues of T ≥ 1}`.
//!
//! `T` only acts on the support `S` of `V`: its nonzero spectrum is the
//! spectrum of `Fᵀ diag(−V_S) F` where `(L⁻¹)_{SS} = F Fᵀ`. The block
//! `(L⁻¹)_{SS}` comes either from the full eigendecomposition of `L`
//! (spectral route) or from sparse Cholesky solves (Green route); the two
//! are independent and are compared by the pipeline.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{PotentialField, Region};
use crate::linalg::{dense_cholesky_factor, dense_eigen, SparseCholesky};
use crate::operator::OperatorBundle;
use crate::parabolicity::sym_inverse_block;
use crate::spectral::{self, Count, CountRoute, DENSE_COUNT_CAP};

pub const DEFAULT_BS_TOL: f64 = 1e-9;
/// Eigenvalues of `L` at or below `TOL_PD · scale` make `L` "not positive
/// definite" for this module.
pub const TOL_PD: f64 = 1e-10;

/// Spectral calculus of a positive definite base, from one full
/// eigendecomposition of its symmetrized matrix.
#[derive(Debug)]
pub struct InvSqrt {
    eigenvalues: Vec<f64>,
    vectors: Mat<f64>,
    scale: f64,
}

impl InvSqrt {
    pub fn new(base: &OperatorBundle) -> Result<Self> {
        let (eigenvalues, vectors) = dense_eigen(&base.sym().to_dense(), true)?;
        let scale = eigenvalues.last().map_or(1.0, |v| v.abs().max(1.0));
        let l1 = eigenvalues.first().copied().unwrap_or(f64::NAN);
        if !(l1 > TOL_PD * scale) {
            return Err(Error::NotPositiveDefinite { eigenvalue: l1 });
        }
        Ok(Self { eigenvalues, vectors: vectors.expect("vectors requested"), scale })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn function_matrix(&self, f: impl Fn(f64) -> f64) -> Mat<f64> {
        let u = &self.vectors;
        let d: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let scaled = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * d[j]);
        scaled * u.transpose()
    }

    /// `R = L^{-1/2}` in the symmetrized representation.
    pub fn matrix(&self) -> Mat<f64> {
        self.function_matrix(|l| 1.0 / l.sqrt())
    }

    /// `L^{1/2}` in the symmetrized representation.
    pub fn sqrt_matrix(&self) -> Mat<f64> {
        self.function_matrix(f64::sqrt)
    }

    /// `L^p x` for a symmetrized-representation vector `x`.
    pub fn apply_power(&self, x: &[f64], p: f64) -> Vec<f64> {
        let u = &self.vectors;
        let n = self.dim();
        let coeffs: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| u[(i, j)] * x[i]).sum::<f64>() * self.eigenvalues[j].powf(p))
            .collect();
        (0..n).map(|i| (0..n).map(|j| u[(i, j)] * coeffs[j]).sum()).collect()
    }

    /// `(L⁻¹)_{KK}` in the symmetrized representation.
    pub fn inverse_block(&self, k: &Region) -> Mat<f64> {
        let u = &self.vectors;
        let idx = k.as_slice();
        let scaled = Mat::from_fn(idx.len(), self.dim(), |a, j| u[(idx[a], j)] / self.eigenvalues[j]);
        let rows = Mat::from_fn(idx.len(), self.dim(), |a, j| u[(idx[a], j)]);
        let mut out = scaled * rows.transpose();
        for i in 0..out.nrows() {
            for j in 0..i {
                let v = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}

pub fn inv_sqrt(base: &OperatorBundle) -> Result<InvSqrt> {
    InvSqrt::new(base)
}

/// Shares eigendecompositions between instances on the same base.
#[derive(Debug, Default)]
pub struct InvSqrtCache {
    entries: Mutex<HashMap<String, Arc<InvSqrt>>>,
}

impl InvSqrtCache {
    pub fn get_or_build(&self, key: &str, base: &OperatorBundle) -> Result<Arc<InvSqrt>> {
        if let Some(hit) = self.entries.lock().expect("cache poisoned").get(key) {
            return Ok(hit.clone());
        }
        let built = Arc::new(InvSqrt::new(base)?);
        self.entries.lock().expect("cache poisoned").insert(key.to_string(), built.clone());
        Ok(built)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BsRoute {
    /// Spectral up to [`DENSE_COUNT_CAP`] vertices, Green above.
    #[default]
    Auto,
    Spectral,
    Green,
}

/// `ρ = magnitude · 1_U`, turning `(L, V)` into `(L + ρ, V − ρ)`.
#[derive(Clone, Debug)]
pub struct ShiftRecord {
    pub rho: PotentialField,
    pub u: Region,
    pub magnitude: f64,
    pub shifted_base: OperatorBundle,
    /// λ₁ of the shifted base when computed densely; positive
    /// definiteness of larger bases is certified by a Cholesky factorization.
    pub lambda1: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftSummary {
    pub u: Vec<String>,
    pub magnitude: f64,
    pub lambda1: Option<f64>,
}

impl ShiftRecord {
    pub fn shifted_potential(&self, v: &PotentialField) -> PotentialField {
        v.minus(&self.rho)
    }

    pub fn summary(&self) -> ShiftSummary {
        let g = self.shifted_base.graph();
        ShiftSummary { u: self.u.iter().map(|&x| g.id(x).to_string()).collect(), magnitude: self.magnitude, lambda1: self.lambda1 }
    }
}

/// Positive definiteness check: `Some(λ₁)` from a dense solve for small
/// bases, `None` when a sparse Cholesky factorization succeeded instead.
fn certify_pd(base: &OperatorBundle) -> Result<Option<f64>> {
    if base.dim() <= DENSE_COUNT_CAP {
        let l1 = spectral::lambda1(base)?;
        if l1 > TOL_PD * base.scale() {
            Ok(Some(l1))
        } else {
            Err(Error::NotPositiveDefinite { eigenvalue: l1 })
        }
    } else {
        SparseCholesky::new(base.sym())?;
        Ok(None)
    }
}

pub fn make_shift(base: &OperatorBundle, u: &Region, magnitude: f64) -> Result<ShiftRecord> {
    if u.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if let Some(&x) = u.iter().find(|&&x| x >= base.dim()) {
        return Err(Error::NotSubset(x));
    }
    if !(magnitude >= 1.0) {
        return Err(Error::InvalidArgument(format!("shift magnitude must be at least 1, got {magnitude}")));
    }
    let mut m = magnitude;
    let mut last = f64::NAN;
    for _ in 0..6 {
        let rho = PotentialField::indicator(base.dim(), u, m);
        let shifted_base = base.with_potential(base.potential().plus(&rho))?;
        match certify_pd(&shifted_base) {
            Ok(lambda1) => {
                return Ok(ShiftRecord { rho, u: u.clone(), magnitude: m, shifted_base, lambda1 });
            }
            Err(Error::NotPositiveDefinite { eigenvalue }) => {
                last = eigenvalue;
                m *= 4.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::ShiftFailed { eigenvalue: last })
}

/// The `(L, V)` split of `H = L + V`. The potential stored in `base` is part
/// of `L`.
#[derive(Clone, Debug)]
pub struct Split {
    pub base: OperatorBundle,
    pub v: PotentialField,
}

impl Split {
    /// `L = Δ_μ + W` from the graph, `V` from the bundle.
    pub fn from_bundle(h: &OperatorBundle) -> Result<Self> {
        Ok(Self { base: OperatorBundle::base(h.graph().clone())?, v: h.potential().clone() })
    }

    pub fn hamiltonian(&self) -> Result<OperatorBundle> {
        self.base.with_potential(self.base.potential().plus(&self.v))
    }
}

#[derive(Clone, Debug)]
pub struct BsOperator {
    pub base: OperatorBundle,
    pub v_used: PotentialField,
    pub shift: Option<ShiftRecord>,
    pub route: BsRoute,
    pub support: Region,
    /// `(S_L⁻¹)_{supp V}` in the symmetrized representation.
    pub green_block: Mat<f64>,
    /// Nonzero part of the spectrum of `T`, ascending.
    pub nonzero_eigenvalues: Vec<f64>,
    inv: Option<Arc<InvSqrt>>,
}

impl BsOperator {
    /// Full ascending spectrum of `T` (zeros filled in).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all = vec![0.0; self.base.dim() - self.nonzero_eigenvalues.len()];
        all.extend_from_slice(&self.nonzero_eigenvalues);
        all.sort_by(f64::total_cmp);
        all
    }

    pub fn inv_sqrt(&self) -> Option<&Arc<InvSqrt>> {
        self.inv.as_ref()
    }

    /// `T = R(−V)R` as a dense matrix, before symmetrization, together with
    /// its relative asymmetry. Spectral route only.
    pub fn matrix_t_raw(&self) -> Option<(Mat<f64>, f64)> {
        let inv = self.inv.as_ref()?;
        let r = inv.matrix();
        let n = r.nrows();
        let v = self.v_used.values();
        let rv = Mat::from_fn(n, n, |i, j| -r[(i, j)] * v[j]);
        let t = rv * &r;
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                num = num.max((t[(i, j)] - t[(j, i)]).abs());
                den = den.max(t[(i, j)].abs());
            }
        }
        Some((t, if den == 0.0 { 0.0 } else { num / den }))
    }

    /// Symmetrized `T`.
    pub fn matrix_t(&self) -> Option<Mat<f64>> {
        let (mut t, _) = self.matrix_t_raw()?;
        for i in 0..t.nrows() {
            for j in 0..i {
                let v = 0.5 * (t[(i, j)] + t[(j, i)]);
                t[(i, j)] = v;
                t[(j, i)] = v;
            }
        }
        Some(t)
    }

    pub fn scale(&self) -> f64 {
        self.nonzero_eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()))
    }

    /// `#{eigenvalues ≥ 1 − tol·scale}` and whether any eigenvalue lies
    /// within that band of 1.
    pub fn count(&self, tol: f64) -> (usize, bool) {
        let band = tol * self.scale();
        let count = self.nonzero_eigenvalues.iter().filter(|&&e| e >= 1.0 - band).count();
        let ambiguous = self.nonzero_eigenvalues.iter().any(|&e| (e - 1.0).abs() <= band);
        (count, ambiguous)
    }
}

fn compressed_spectrum(block: &Mat<f64>, minus_v: &[f64]) -> Result<Vec<f64>> {
    if block.nrows() == 0 {
        return Ok(Vec::new());
    }
    let f = dense_cholesky_factor(block)?;
    let m = block.nrows();
    let scaled = Mat::from_fn(m, m, |i, j| minus_v[i] * f[(i, j)]);
    let mut c = f.transpose() * scaled;
    for i in 0..m {
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(dense_eigen(&c, false)?.0)
}

fn resolve_route(route: BsRoute, n: usize) -> BsRoute {
    match route {
        BsRoute::Auto if n <= DENSE_COUNT_CAP => BsRoute::Spectral,
        BsRoute::Auto => BsRoute::Green,
        r => r,
    }
}

/// Builds `T` for a positive definite `base`. With `use_negative_part` the
/// inserted potential is `−V_−`.
pub fn build_bs(base: &OperatorBundle, v: &PotentialField, use_negative_part: bool) -> Result<BsOperator> {
    build_bs_with(base, v, use_negative_part, BsRoute::Auto, None)
}

/// As [`build_bs`], with an explicit route and optionally a precomputed
/// spectral factor of `base`.
pub fn build_bs_with(
    base: &OperatorBundle,
    v: &PotentialField,
    use_negative_part: bool,
    route: BsRoute,
    inv: Option<Arc<InvSqrt>>,
) -> Result<BsOperator> {
    if v.len() != base.dim() {
        return Err(Error::DimensionMismatch { expected: base.dim(), found: v.len() });
    }
    let v_used = if use_negative_part { v.negative_part().scaled(-1.0) } else { v.clone() };
    let support = v_used.support();
    let route = if inv.is_some() && route == BsRoute::Auto { BsRoute::Spectral } else { resolve_route(route, base.dim()) };
    let (green_block, inv) = match route {
        BsRoute::Spectral => {
            let inv = match inv {
                Some(i) => i,
                None => Arc::new(InvSqrt::new(base)?),
            };
            (inv.inverse_block(&support), Some(inv))
        }
        _ => {
            let block = sym_inverse_block(base.sym(), &support).map_err(|e| match e {
                Error::NotPositiveDefinite { .. } => Error::NotPositiveDefinite { eigenvalue: f64::NAN },
                other => other,
            })?;
            (block, None)
        }
    };
    let minus_v: Vec<f64> = support.iter().map(|&x| -v_used.values()[x]).collect();
    let nonzero_eigenvalues = compressed_spectrum(&green_block, &minus_v)?;
    Ok(BsOperator {
        base: base.clone(),
        v_used,
        shift: None,
        route,
        support,
        green_block,
        nonzero_eigenvalues,
        inv,
    })
}

#[derive(Clone, Debug, Default)]
pub struct BsOptions {
    pub route: BsRoute,
    pub count_route: CountRoute,
    pub use_negative_part: bool,
    /// Added to `U` when the automatic shift is needed; defaults to the
    /// first vertex.
    pub designated_vertex: Option<usize>,
    /// Tolerance for the Morse count of `H`.
    pub morse_tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BsReport {
    pub n_minus: usize,
    pub bs_count: usize,
    pub holds: bool,
    pub tol: f64,
    pub ambiguous: bool,
    pub shift: Option<ShiftSummary>,
    #[serde(skip)]
    pub morse: Count,
    #[serde(skip)]
    pub operator: BsOperator,
}

/// Makes the base positive definite if needed, by the shift with
/// `U = supp V ∪ {designated}` and magnitude `1 + |min V|`.
pub fn ensure_positive_split(split: &Split, designated: Option<usize>) -> Result<(Split, Option<ShiftRecord>)> {
    match certify_pd(&split.base) {
        Ok(_) => Ok((split.clone(), None)),
        Err(Error::NotPositiveDefinite { .. }) => {
            let extra = designated.unwrap_or(0);
            let u = split.v.support().union(&Region::new([extra]));
            let shift = make_shift(&split.base, &u, 1.0 + split.v.min().min(0.0).abs())?;
            let shifted = Split { base: shift.shifted_base.clone(), v: shift.shifted_potential(&split.v) };
            Ok((shifted, Some(shift)))
        }
        Err(e) => Err(e),
    }
}

/// `n_minus(L + V) ≤ #{eig T ≥ 1 − tol}`, shifting first when `L` is not
/// positive definite.
pub fn bs_bound_check(split: &Split, tol: f64, opts: &BsOptions) -> Result<BsReport> {
    let h = split.hamiltonian()?;
    let morse = spectral::count_below_with(&h, 0.0, opts.morse_tol.unwrap_or(spectral::DEFAULT_TOL_ZERO), &opts.count_route)?;
    let (working, shift) = ensure_positive_split(split, opts.designated_vertex)?;
    let mut operator = build_bs_with(&working.base, &working.v, opts.use_negative_part, opts.route, None)?;
    let (bs_count, ambiguous) = operator.count(tol);
    let summary = shift.as_ref().map(ShiftRecord::summary);
    operator.shift = shift;
    Ok(BsReport {
        n_minus: morse.count,
        bs_count,
        holds: morse.count <= bs_count,
        tol,
        ambiguous: ambiguous || morse.ambiguous,
        shift: summary,
        morse,
        operator,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// For `⟨Hu, u⟩ ≤ 0`: with `v = L^{1/2}u`, checks `‖v‖² ≤ ⟨Tv, v⟩`.
pub fn bs_vector_certificate(split: &Split, u: &[f64]) -> Result<Certificate> {
    let inv = InvSqrt::new(&split.base)?;
    bs_vector_certificate_with(split, u, &inv)
}

/// [`bs_vector_certificate`] with a prebuilt `L^{-1/2}` of `split.base`.
pub fn bs_vector_certificate_with(split: &Split, u: &[f64], inv: &InvSqrt) -> Result<Certificate> {
    let h = split.hamiltonian()?;
    if inv.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: inv.dim() });
    }
    if u.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: u.len() });
    }
    let form_value = h.inner(&h.apply(u), u);
    if form_value > 1e-12 * h.scale() * h.inner(u, u) {
        return Err(Error::CertificateInapplicable { form_value });
    }
    let g = split.base.to_sym(u);
    let v = inv.apply_power(&g, 0.5);
    let rv = inv.apply_power(&v, -0.5);
    let vrv: Vec<f64> = rv.iter().zip(split.v.values()).map(|(a, p)| -p * a).collect();
    let tv = inv.apply_power(&vrv, -0.5);
    let lhs: f64 = v.iter().map(|a| a * a).sum();
    let rhs: f64 = tv.iter().zip(&v).map(|(a, b)| a * b).sum();
    let holds = lhs <= rhs + 1e-9 * h.scale().max(inv.scale());
    Ok(Certificate { lhs, rhs, holds })
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelCheck {
    pub kernel_dim: usize,
    pub residuals: Vec<f64>,
    pub shift: Option<ShiftSummary>,
}

/// Zero modes `u` of `H` and the residuals
/// `‖(I + L^{-1/2} V L^{-1/2}) L^{1/2} u‖ / ‖L^{1/2} u‖`.
pub fn kernel_check(split: &Split, tol_zero: f64, designated: Option<usize>) -> Result<KernelCheck> {
    let h = split.hamiltonian()?;
    let (vals, vecs) = dense_eigen(&h.sym().to_dense(), true)?;
    let vecs = vecs.expect("vectors requested");
    let band = tol_zero * h.scale();
    let zero: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs() <= band).collect();
    let (working, shift) = ensure_positive_split(split, designated)?;
    if zero.is_empty() {
        return Ok(KernelCheck { kernel_dim: 0, residuals: Vec::new(), shift: shift.as_ref().map(ShiftRecord::summary) });
    }
    let inv = InvSqrt::new(&working.base)?;
    let residuals = zero
        .iter()
        .map(|&k| {
            let g: Vec<f64> = (0..h.dim()).map(|i| vecs[(i, k)]).collect();
            let w = inv.apply_power(&g, 0.5);
            let rw = inv.apply_power(&w, -0.5);
            let vrw: Vec<f64> = rw.iter().zip(working.v.values()).map(|(a, p)| p * a).collect();
            let t = inv.apply_power(&vrw, -0.5);
            let num: f64 = w.iter().zip(&t).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            num / den
        })
        .collect();
    Ok(KernelCheck { kernel_dim: zero.len(), residuals, shift: shift.as_ref().map(ShiftRecord::summary) })
}
