//! Green kernels on exhaustions and the Dirichlet-form constants
//! `c(probe, level) = inf { q(f) : Σ_probe f² μ = 1, supp f ⊆ level }`.
//!
//! Everything here is about the base `L = Δ_μ + W (+ V)` with a nonnegative
//! zeroth-order part. Kernels follow the convention
//! `(Gf)(x) = Σ_y G(x, y) f(y) μ(y)`, so `G` is the inverse of the form
//! matrix `A + D_μ diag(W + V)`.

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{BoundaryCondition, Exhaustion, PotentialField, Region, Restriction};
use crate::linalg::{dense_eigen, SparseCholesky, SymCsr};
use crate::operator::OperatorBundle;
use crate::spectral::{self, schur_onto};

/// Dense kernels are formed only up to this many vertices.
pub const DENSE_GREEN_CAP: usize = 4000;
pub const DEFAULT_STALL_TOL: f64 = 0.02;
pub const DEFAULT_DECAY_WINDOW: usize = 3;
/// Threshold for counting Birman–Schwinger eigenvalues as `≥ 1`.
pub const TAIL_DELTA: f64 = 1e-6;

/// A Dirichlet restriction known to be positive definite, with its
/// factorization.
pub struct FactoredLevel {
    pub bundle: OperatorBundle,
    pub restriction: Restriction,
    pub chol: SparseCholesky,
}

impl FactoredLevel {
    /// Dirichlet restriction of `bundle` to `region`. The zeroth-order part
    /// must be nonnegative on the region and positive somewhere on each
    /// connected component (counting the mass of cut edges), otherwise the
    /// restriction is singular.
    pub fn new(bundle: &OperatorBundle, region: &Region) -> Result<Self> {
        let graph = bundle.graph();
        for &x in region {
            if x < graph.len() && bundle.potential().values()[x] < 0.0 {
                return Err(Error::NegativePotential { vertex: graph.id(x).to_string() });
            }
        }
        let (sub, restriction) = bundle.restricted(region, BoundaryCondition::Dirichlet)?;
        let total = sub.total_potential();
        for comp in sub.graph().components(&sub.graph().all_vertices()) {
            if comp.iter().all(|&x| total[x] <= 0.0) {
                let (cb, _) = sub.restricted(&comp, BoundaryCondition::Neumann)?;
                let eigenvalue = if cb.dim() <= spectral::DENSE_COUNT_CAP { spectral::lambda1(&cb)? } else { 0.0 };
                return Err(Error::SingularRestriction { eigenvalue });
            }
        }
        let chol = SparseCholesky::new(sub.sym()).map_err(|_| Error::SingularRestriction {
            eigenvalue: spectral::lambda1(&sub).unwrap_or(f64::NAN),
        })?;
        Ok(Self { bundle: sub, restriction, chol })
    }

    pub fn dim(&self) -> usize {
        self.bundle.dim()
    }

    /// `(S⁻¹)_{KK}` in the symmetrized representation, `k` in local indices.
    pub fn sym_inverse_block(&self, k: &Region) -> Mat<f64> {
        let n = self.dim();
        let rhs = Mat::from_fn(n, k.len(), |i, j| if k.as_slice()[j] == i { 1.0 } else { 0.0 });
        let x = self.chol.solve_mat(&rhs);
        let m = k.len();
        let mut out = Mat::zeros(m, m);
        for (a, &i) in k.iter().enumerate() {
            for b in 0..m {
                out[(a, b)] = x[(i, b)];
            }
        }
        symmetrize(&mut out);
        out
    }

    /// Green kernel rows `G(x, ·)` for the local vertices in `rows`.
    pub fn green_rows(&self, rows: &[usize]) -> Mat<f64> {
        let n = self.dim();
        let s = self.bundle.sqrt_measure();
        let rhs = Mat::from_fn(n, rows.len(), |i, j| if rows[j] == i { 1.0 / s[i] } else { 0.0 });
        let x = self.chol.solve_mat(&rhs);
        Mat::from_fn(rows.len(), n, |j, i| x[(i, j)] / s[i])
    }
}

fn symmetrize(m: &mut Mat<f64>) {
    for i in 0..m.nrows() {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Dense Green kernel of the Dirichlet restriction to `region`, indexed by
/// the region's vertices in ascending order.
pub fn green_kernel(bundle: &OperatorBundle, region: &Region) -> Result<Mat<f64>> {
    if region.len() > DENSE_GREEN_CAP {
        return Err(Error::DenseCapExceeded { dim: region.len(), cap: DENSE_GREEN_CAP });
    }
    let level = FactoredLevel::new(bundle, region)?;
    let rows: Vec<usize> = (0..level.dim()).collect();
    let mut g = level.green_rows(&rows);
    symmetrize(&mut g);
    Ok(g)
}

/// `G_region(x, y)` for each pair of parent vertices, without forming the
/// kernel.
pub fn green_values(bundle: &OperatorBundle, region: &Region, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let level = FactoredLevel::new(bundle, region)?;
    green_values_on(&level, pairs)
}

fn green_values_on(level: &FactoredLevel, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let local = |p: usize| {
        level.restriction.parent_index.binary_search(&p).map_err(|_| Error::NotSubset(p))
    };
    let mut rows: Vec<usize> = Vec::new();
    for &(x, _) in pairs {
        let lx = local(x)?;
        if !rows.contains(&lx) {
            rows.push(lx);
        }
    }
    let g = level.green_rows(&rows);
    pairs
        .iter()
        .map(|&(x, y)| {
            let r = rows.iter().position(|&l| l == local(x).unwrap()).unwrap();
            Ok(g[(r, local(y)?)])
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DirichletConstant {
    pub c: f64,
    /// Minimizer on the parent vertex set (zero outside the level),
    /// normalized by `Σ_probe f² μ = 1`.
    pub minimizer: Vec<f64>,
}

/// `inf q(f)` over `f` supported in `level` with unit ν-mass on `probe`:
/// the lowest eigenvalue of the Schur complement of the level form onto the
/// probe, measured against `μ` on the probe.
pub fn dirichlet_constant(bundle: &OperatorBundle, probe: &Region, level: &Region) -> Result<DirichletConstant> {
    if probe.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if !probe.is_subset(level) {
        return Err(Error::InvalidArgument("probe must be contained in the level".into()));
    }
    let (sub, restriction) = bundle.restricted(level, BoundaryCondition::Dirichlet)?;
    let p = restriction.map_region(probe);
    let rest = p.complement(sub.dim());
    let sym = sub.sym();
    let chol = if rest.is_empty() {
        None
    } else {
        let block = sym.principal(&rest);
        Some(SparseCholesky::new(&block).map_err(|_| Error::SingularRestriction {
            eigenvalue: if block.dim() <= spectral::DENSE_COUNT_CAP {
                dense_eigen(&block.to_dense(), false).map(|(v, _)| v[0]).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            },
        })?)
    };
    let schur = match &chol {
        Some(c) => schur_onto(sym, &p, &rest, c),
        None => sym.block(&p, &p),
    };
    let (vals, vecs) = dense_eigen(&schur, true)?;
    let vecs = vecs.expect("vectors requested");
    let c = vals[0].max(0.0);
    // extend the probe eigenvector harmonically and undo the symmetrization
    let mut g = vec![0.0; sub.dim()];
    for (a, &i) in p.iter().enumerate() {
        g[i] = vecs[(a, 0)];
    }
    if let Some(chol) = &chol {
        let mut rhs = vec![0.0; rest.len()];
        let local_rest: Vec<usize> = rest.iter().copied().collect();
        let mut pos = vec![usize::MAX; sub.dim()];
        for (k, &x) in local_rest.iter().enumerate() {
            pos[x] = k;
        }
        for &x in &p {
            let (cols, vals) = sym.row(x);
            for (j, v) in cols.iter().zip(vals) {
                if pos[*j] != usize::MAX {
                    rhs[pos[*j]] -= v * g[x];
                }
            }
        }
        let gr = chol.solve(&rhs);
        for (k, &x) in local_rest.iter().enumerate() {
            g[x] = gr[k];
        }
    }
    let f_local = sub.from_sym(&g);
    let sign = if f_local.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let mut minimizer = vec![0.0; bundle.dim()];
    for (i, &parent) in restriction.parent_index.iter().enumerate() {
        minimizer[parent] = sign * f_local[i];
    }
    Ok(DirichletConstant { c, minimizer })
}

/// `‖L_level^{-1/2} P_K‖`, the square root of the top eigenvalue of the
/// `K × K` block of the inverse.
pub fn restricted_inv_sqrt_norm(bundle: &OperatorBundle, k: &Region, level: &Region) -> Result<f64> {
    if k.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if !k.is_subset(level) {
        return Err(Error::InvalidArgument("K must be contained in the level".into()));
    }
    let fl = FactoredLevel::new(bundle, level)?;
    let block = fl.sym_inverse_block(&fl.restriction.map_region(k));
    let (vals, _) = dense_eigen(&block, false)?;
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Nonparabolic,
    ParabolicSuspected,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `c ≈ a · n^{-p}` in the level size `n`.
    Power,
    /// `1/c ≈ a + b log n`.
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Power exponent `p` or log slope `b`.
    pub rate: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelRecord {
    pub index: usize,
    pub size: usize,
    pub c: f64,
    pub probe_green: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParabolicityVerdict {
    pub verdict: Verdict,
    pub levels: Vec<LevelRecord>,
    pub probe_pairs: Vec<(String, String)>,
    pub c_relative_change: f64,
    pub green_relative_change: f64,
    pub c_monotone: bool,
    pub green_monotone: bool,
    pub fit: Option<DecayFit>,
    pub stall_tol: f64,
    pub decay_window: usize,
    pub notes: Vec<String>,
}

impl ParabolicityVerdict {
    /// `level_index,level_size,c_k,green_0,...`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level_index,level_size,c_k");
        for i in 0..self.probe_pairs.len() {
            out.push_str(&format!(",green_{i}"));
        }
        out.push('\n');
        for l in &self.levels {
            out.push_str(&format!("{},{},{:.16e}", l.index, l.size, l.c));
            for g in &l.probe_green {
                out.push_str(&format!(",{g:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return (my, 0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (my - slope * mx, slope, r2)
}

/// Best decaying fit of `c` against the level sizes, if any reaches
/// `R² ≥ 0.9`.
pub fn fit_decay(sizes: &[usize], c: &[f64]) -> Option<DecayFit> {
    if c.len() < 3 || c.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let ln: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let lc: Vec<f64> = c.iter().map(|v| v.ln()).collect();
    let inv: Vec<f64> = c.iter().map(|v| 1.0 / v).collect();
    let (_, ps, pr) = linear_fit(&ln, &lc);
    let (_, ls, lr) = linear_fit(&ln, &inv);
    let mut cands = Vec::new();
    if ps < 0.0 {
        cands.push(DecayFit { model: DecayModel::Power, rate: -ps, r_squared: pr });
    }
    if ls > 0.0 {
        cands.push(DecayFit { model: DecayModel::Log, rate: ls, r_squared: lr });
    }
    cands
        .into_iter()
        .filter(|f| f.r_squared >= 0.9)
        .max_by(|a, b| a.r_squared.total_cmp(&b.r_squared))
}

fn relative_change(series: &[f64], window: usize) -> f64 {
    let last = series[series.len() - 1];
    let prev = series[series.len() - 1 - window];
    (prev - last).abs() / last.abs().max(f64::MIN_POSITIVE)
}

/// Numerical parabolicity heuristic over an exhaustion.
///
/// Green values are probed at `(p₀, p₀)` and `(p₀, p_last)` for the first
/// and last probe vertices.
pub fn parabolicity_test(
    bundle: &OperatorBundle,
    exhaustion: &Exhaustion,
    probe: &Region,
    stall_tol: f64,
    decay_window: usize,
) -> Result<ParabolicityVerdict> {
    let needed = decay_window + 1;
    if exhaustion.len() < needed {
        return Err(Error::TooFewLevels { needed, got: exhaustion.len() });
    }
    if probe.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if !probe.is_subset(&exhaustion.levels()[0]) {
        return Err(Error::InvalidArgument("probe must be contained in the first level".into()));
    }
    let p0 = probe.as_slice()[0];
    let p1 = *probe.as_slice().last().unwrap();
    let mut pairs = vec![(p0, p0)];
    if p1 != p0 {
        pairs.push((p0, p1));
    }
    let graph = bundle.graph();
    let mut levels = Vec::with_capacity(exhaustion.len());
    for (index, level) in exhaustion.levels().iter().enumerate() {
        let c = dirichlet_constant(bundle, probe, level)?.c;
        let probe_green = green_values(bundle, level, &pairs)?;
        levels.push(LevelRecord { index, size: level.len(), c, probe_green });
    }
    let cs: Vec<f64> = levels.iter().map(|l| l.c).collect();
    let gs: Vec<f64> = levels.iter().map(|l| l.probe_green[0]).collect();
    let c_monotone = cs.windows(2).all(|w| w[1] <= w[0] + 1e-10);
    let green_monotone = levels
        .windows(2)
        .all(|w| w[1].probe_green.iter().zip(&w[0].probe_green).all(|(b, a)| *b >= a - 1e-10));
    let c_rel = relative_change(&cs, decay_window);
    let g_rel = relative_change(&gs, decay_window);
    let c_last = *cs.last().unwrap();
    let sizes: Vec<usize> = levels.iter().map(|l| l.size).collect();
    let fit = fit_decay(&sizes, &cs);

    let c_stalls = c_rel <= stall_tol && c_last > 10.0 * stall_tol;
    let green_cauchy = g_rel <= stall_tol;
    let mut notes = vec![
        "numerical heuristic: finitely many levels cannot decide parabolicity".to_string(),
        format!("criterion sampled on one probe set of {} vertices, not on every compact set", probe.len()),
    ];
    let verdict = if c_stalls && green_cauchy {
        Verdict::Nonparabolic
    } else if c_stalls != green_cauchy && c_last > 10.0 * stall_tol {
        notes.push("c_k and Green probe signals disagree".into());
        Verdict::Inconclusive
    } else if c_last < 10.0 * stall_tol && fit.is_some() {
        Verdict::ParabolicSuspected
    } else {
        Verdict::Inconclusive
    };
    if !c_monotone {
        notes.push("c_k not monotone across levels".into());
    }
    Ok(ParabolicityVerdict {
        verdict,
        levels,
        probe_pairs: pairs.iter().map(|&(a, b)| (graph.id(a).to_string(), graph.id(b).to_string())).collect(),
        c_relative_change: c_rel,
        green_relative_change: g_rel,
        c_monotone,
        green_monotone,
        fit,
        stall_tol,
        decay_window,
        notes,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TailLevel {
    pub size: usize,
    /// Ascending eigenvalues of `T = L^{-1/2}(−V)L^{-1/2}` on the level.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues `≥ 1 − TAIL_DELTA`.
    pub count: usize,
}

/// Per-level spectra of the Birman–Schwinger operator with base `bundle`
/// (its own potential counts as part of the base) and perturbation `v ≤ 0`.
///
/// The nonzero spectrum of `T` is that of `√(−V) (S⁻¹)_{supp V} √(−V)`, so
/// only the support block of the inverse is formed.
pub fn bs_tail_profile(bundle: &OperatorBundle, v: &PotentialField, exhaustion: &Exhaustion) -> Result<Vec<TailLevel>> {
    if v.len() != bundle.dim() {
        return Err(Error::DimensionMismatch { expected: bundle.dim(), found: v.len() });
    }
    if let Some((x, _)) = v.values().iter().enumerate().find(|(_, &a)| a > 0.0) {
        return Err(Error::InvalidArgument(format!("V must be nonpositive; vertex `{}` is positive", bundle.graph().id(x))));
    }
    let support = v.support();
    let first = &exhaustion.levels()[0];
    if let Some(&x) = support.iter().find(|&&x| !first.contains(x)) {
        return Err(Error::SupportEscapesLevel { vertex: bundle.graph().id(x).to_string() });
    }
    exhaustion
        .levels()
        .iter()
        .map(|level| {
            let size = level.len();
            if support.is_empty() {
                return Ok(TailLevel { size, eigenvalues: vec![0.0; size], count: 0 });
            }
            let fl = FactoredLevel::new(bundle, level)?;
            let local = fl.restriction.map_region(&support);
            let block = fl.sym_inverse_block(&local);
            let sv: Vec<f64> = support.iter().map(|&x| (-v.values()[x]).sqrt()).collect();
            let m = Mat::from_fn(sv.len(), sv.len(), |i, j| sv[i] * block[(i, j)] * sv[j]);
            let (vals, _) = dense_eigen(&m, false)?;
            let mut eigenvalues = vec![0.0; size - vals.len()];
            eigenvalues.extend(vals.iter().map(|x| x.max(0.0)));
            eigenvalues.sort_by(f64::total_cmp);
            let count = eigenvalues.iter().filter(|&&x| x >= 1.0 - TAIL_DELTA).count();
            Ok(TailLevel { size, eigenvalues, count })
        })
        .collect()
}

/// `(S⁻¹)_{KK}` of a positive definite symmetric matrix.
pub fn sym_inverse_block(a: &SymCsr, k: &Region) -> Result<Mat<f64>> {
    let chol = SparseCholesky::new(a)?;
    let rhs = Mat::from_fn(a.dim(), k.len(), |i, j| if k.as_slice()[j] == i { 1.0 } else { 0.0 });
    let x = chol.solve_mat(&rhs);
    let mut out = Mat::from_fn(k.len(), k.len(), |a, b| x[(k.as_slice()[a], b)]);
    symmetrize(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::{ball_exhaustion, build_half_line, build_lattice, Edge, Profiles, WeightedGraph};

    fn path(n: usize) -> OperatorBundle {
        let ids = (0..n).map(|i| format!("{i}")).collect();
        let edges = (0..n - 1).map(|i| Edge { u: i, v: i + 1, w: 1.0 }).collect();
        let g = WeightedGraph::new(ids, vec![1.0; n], vec![0.0; n], edges).unwrap();
        OperatorBundle::base(Arc::new(g)).unwrap()
    }

    #[test]
    fn small_green_kernels() {
        let g = green_kernel(&path(3), &Region::new([1])).unwrap();
        assert!((g[(0, 0)] - 0.5).abs() < 1e-15);
        let g = green_kernel(&path(4), &Region::new([1, 2])).unwrap();
        for (i, j, v) in [(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)] {
            assert!((g[(i, j)] - v / 3.0).abs() < 1e-15);
        }
        let p6 = path(6);
        let g1 = green_kernel(&p6, &Region::new([2, 3])).unwrap();
        let g2 = green_kernel(&p6, &Region::new([1, 2, 3, 4])).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(g2[(i + 1, j + 1)] >= g1[(i, j)] - 1e-12);
            }
        }
    }

    #[test]
    fn green_errors() {
        let p3 = path(3);
        assert!(matches!(green_kernel(&p3, &Region::new([0, 1, 2])), Err(Error::SingularRestriction { .. })));
        let neg = p3.with_potential(PotentialField::new(vec![0.0, -1.0, 0.0])).unwrap();
        assert!(matches!(green_kernel(&neg, &Region::new([1])), Err(Error::NegativePotential { .. })));
    }

    #[test]
    fn dirichlet_constant_examples() {
        let p3 = path(3);
        let c = dirichlet_constant(&p3, &Region::new([1]), &Region::new([1])).unwrap();
        assert!((c.c - 2.0).abs() < 1e-14);
        let c = dirichlet_constant(&p3, &Region::new([1]), &Region::new([0, 1, 2])).unwrap();
        assert!(c.c.abs() < 1e-12);
        for k in [1usize, 2, 5, 17] {
            let g = Arc::new(build_half_line(k, &Profiles::default()).unwrap());
            let b = OperatorBundle::base(g).unwrap();
            let level = Region::new(0..k);
            let c = dirichlet_constant(&b, &Region::new([0]), &level).unwrap();
            assert!((c.c - 1.0 / k as f64).abs() < 1e-13, "k={k}: {}", c.c);
            for j in 0..=k {
                assert!((c.minimizer[j] - (k - j) as f64 / k as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inv_sqrt_norm_examples() {
        let g = WeightedGraph::new(vec!["a".into()], vec![1.0], vec![4.0], vec![]).unwrap();
        let b = OperatorBundle::base(Arc::new(g)).unwrap();
        let r = restricted_inv_sqrt_norm(&b, &Region::new([0]), &Region::new([0])).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        let r = restricted_inv_sqrt_norm(&path(4), &Region::new([1]), &Region::new([1, 2])).unwrap();
        assert!((r - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn tail_profile_zero_potential() {
        let g = Arc::new(build_lattice(1, 10, &Profiles::default()).unwrap());
        let b = OperatorBundle::base(g.clone()).unwrap();
        let ex = ball_exhaustion(&g, g.vertex("0").unwrap(), &[2, 4, 6]).unwrap();
        let t = bs_tail_profile(&b, &PotentialField::zeros(g.len()), &ex).unwrap();
        assert!(t.iter().all(|l| l.count == 0 && l.eigenvalues.iter().all(|&x| x == 0.0)));
        let mut v = vec![0.0; g.len()];
        v[0] = -1.0;
        assert!(matches!(
            bs_tail_profile(&b, &PotentialField::new(v), &ex),
            Err(Error::SupportEscapesLevel { .. })
        ));
    }

    #[test]
    fn decay_fit_recognizes_power_law() {
        let sizes: Vec<usize> = (1..8).map(|k| 100 * k + 1).collect();
        let c: Vec<f64> = sizes.iter().map(|&n| 4.0 / n as f64).collect();
        let fit = fit_decay(&sizes, &c).unwrap();
        assert_eq!(fit.model, DecayModel::Power);
        assert!((fit.rate - 1.0).abs() < 1e-12);
        assert!(fit_decay(&sizes, &[1.0; 7]).is_none());
    }
}
