//! The two alternative finiteness arguments (Neumann bracketing and the
//! nonnegative shift) and a CLR-type scaling probe.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{BoundaryCondition, PotentialField, Region};
use crate::operator::OperatorBundle;
use crate::spectral::{self, Count, CountRoute};

#[derive(Clone, Debug, Serialize)]
pub struct BracketResult {
    pub lambda: f64,
    pub n_total: usize,
    pub n_k: usize,
    pub n_complement: usize,
    pub holds: bool,
    pub ambiguous: bool,
}

/// `N_λ(H) ≤ N_λ(H_K^N) + N_λ(H_{M∖K}^N)` with Neumann restrictions.
pub fn bracketing_check(bundle: &OperatorBundle, k: &Region, lambda: f64, tol: f64) -> Result<BracketResult> {
    let n = bundle.dim();
    if k.is_empty() || k.len() >= n {
        return Err(Error::InvalidArgument("K must be a nonempty proper subset".into()));
    }
    if let Some(&x) = k.iter().find(|&&x| x >= n) {
        return Err(Error::NotSubset(x));
    }
    let total = spectral::count_below(bundle, lambda, tol)?;
    let (bk, _) = bundle.restricted(k, BoundaryCondition::Neumann)?;
    let (bc, _) = bundle.restricted(&k.complement(n), BoundaryCondition::Neumann)?;
    let nk = spectral::count_below(&bk, lambda, tol)?;
    let nc = spectral::count_below(&bc, lambda, tol)?;
    Ok(BracketResult {
        lambda,
        n_total: total.count,
        n_k: nk.count,
        n_complement: nc.count,
        holds: total.count <= nk.count + nc.count,
        ambiguous: total.ambiguous || nk.ambiguous || nc.ambiguous,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NonnegShift {
    pub vtilde: PotentialField,
    /// Where `|Hφ|` exceeds the residual threshold.
    pub residual_support: Vec<String>,
    pub residual_threshold: f64,
    /// `λ₁(H + Ṽ)`.
    pub l_check: f64,
}

/// `Ṽ = |Hφ|/φ + margin` where `Hφ` is not negligible, `0` elsewhere, so
/// that `(H + Ṽ)φ ≥ 0`.
///
/// Negligible means `|Hφ(x)| ≤ residual_tol · max(1, max |Hφ|)`.
pub fn nonneg_shift(bundle: &OperatorBundle, phi: &[f64], margin: f64, residual_tol: f64) -> Result<NonnegShift> {
    if phi.len() != bundle.dim() {
        return Err(Error::DimensionMismatch { expected: bundle.dim(), found: phi.len() });
    }
    if let Some((x, &p)) = phi.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
        return Err(Error::NonPositivePhi { vertex: bundle.graph().id(x).to_string(), value: p });
    }
    if !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("margin must be nonnegative, got {margin}")));
    }
    let h_phi = bundle.apply(phi);
    let peak = h_phi.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let residual_threshold = residual_tol * peak;
    let mut support = Vec::new();
    let values: Vec<f64> = h_phi
        .iter()
        .zip(phi)
        .enumerate()
        .map(|(x, (h, p))| {
            if h.abs() > residual_threshold {
                support.push(bundle.graph().id(x).to_string());
                h.abs() / p + margin
            } else {
                0.0
            }
        })
        .collect();
    let vtilde = PotentialField::new(values);
    let shifted = bundle.with_potential(bundle.potential().plus(&vtilde))?;
    let l_check = spectral::lambda1(&shifted)?;
    Ok(NonnegShift { vtilde, residual_support: support, residual_threshold, l_check })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClrProbe {
    pub lambdas: Vec<f64>,
    pub counts: Vec<usize>,
    pub exponent: f64,
    pub monotone: bool,
    pub points_used: usize,
}

/// Slope of `log N_−(H₀ + λV)` against `log λ` over the entries with
/// `N_− ≥ 1`. The base `bundle` must carry no potential of its own beyond
/// `W`; `v ≤ 0`.
pub fn clr_scaling_probe(bundle: &OperatorBundle, v: &PotentialField, lambdas: &[f64], tol: f64) -> Result<ClrProbe> {
    if lambdas.len() < 4 {
        return Err(Error::InvalidArgument("need at least 4 scaling values".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("scaling values must be positive and increasing".into()));
    }
    if lambdas[lambdas.len() - 1] / lambdas[0] < 16.0 {
        return Err(Error::InvalidArgument("scaling values must span a factor of at least 16".into()));
    }
    if v.values().iter().any(|&x| x > 0.0) {
        return Err(Error::InvalidArgument("V must be nonpositive".into()));
    }
    let support = v.support();
    let mut counts = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let h = bundle.with_potential(bundle.potential().plus(&v.scaled(l)))?;
        let c: Count = if support.is_empty() {
            spectral::count_below(&h, 0.0, tol)?
        } else {
            match spectral::count_below_with(&h, 0.0, tol, &CountRoute::Schur(support.clone())) {
                Err(Error::Stability(_)) => spectral::count_below(&h, 0.0, tol)?,
                other => other?,
            }
        };
        counts.push(c.count);
    }
    let pts: Vec<(f64, f64)> =
        lambdas.iter().zip(&counts).filter(|(_, &c)| c >= 1).map(|(l, &c)| (l.ln(), (c as f64).ln())).collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientDepth);
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(ClrProbe {
        lambdas: lambdas.to_vec(),
        monotone: counts.windows(2).all(|w| w[1] >= w[0]),
        counts,
        exponent: sxy / sxx,
        points_used: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::{Edge, WeightedGraph};

    fn path(n: usize) -> OperatorBundle {
        let ids = (0..n).map(|i| format!("{i}")).collect();
        let edges = (0..n - 1).map(|i| Edge { u: i, v: i + 1, w: 1.0 }).collect();
        let g = WeightedGraph::new(ids, vec![1.0; n], vec![0.0; n], edges).unwrap();
        OperatorBundle::base(Arc::new(g)).unwrap()
    }

    #[test]
    fn bracketing_examples() {
        let r = bracketing_check(&path(4), &Region::new([0, 1]), 0.0, 1e-8).unwrap();
        assert_eq!((r.n_total, r.n_k, r.n_complement, r.holds), (0, 0, 0, true));
        let r = bracketing_check(&path(2), &Region::new([0]), 2.5, 1e-8).unwrap();
        assert_eq!((r.n_total, r.n_k, r.n_complement, r.holds), (2, 1, 1, true));
        assert!(bracketing_check(&path(2), &Region::new([0, 1]), 0.0, 1e-8).is_err());
    }

    #[test]
    fn nonneg_shift_on_harmonic_phi() {
        let s = nonneg_shift(&path(5), &[1.0; 5], 0.0, 1e-12).unwrap();
        assert!(s.vtilde.values().iter().all(|&v| v == 0.0));
        assert!(s.l_check.abs() < 1e-12);
        let s = nonneg_shift(&path(5), &[1.0, 3.0, 0.5, 2.0, 1.0], 0.1, 1e-12).unwrap();
        assert!(s.l_check >= -1e-10);
        assert!(nonneg_shift(&path(2), &[1.0, 0.0], 0.0, 1e-12).is_err());
    }

    #[test]
    fn clr_guards() {
        let b = path(10).with_potential(PotentialField::new(vec![1.0; 10])).unwrap();
        let v = PotentialField::indicator(10, &Region::new([5]), -1e-6);
        assert!(matches!(clr_scaling_probe(&b, &v, &[1.0, 2.0, 4.0, 16.0], 1e-8), Err(Error::InsufficientDepth)));
        assert!(matches!(clr_scaling_probe(&b, &v, &[1.0, 2.0, 4.0], 1e-8), Err(Error::InvalidArgument(_))));
        assert!(matches!(clr_scaling_probe(&b, &v, &[1.0, 2.0, 4.0, 8.0], 1e-8), Err(Error::InvalidArgument(_))));
    }
}
