//! Schrödinger operators `H = Δ_μ + W + V` on weighted graphs.
//!
//! Every bundle stores the symmetrized matrix
//!
//! ```text
//! S = D_μ^{-1/2} (A + D_μ diag(W + V)) D_μ^{-1/2}
//! ```
//!
//! where `A` is the conductance Laplacian. `S` is similar to `H` through
//! `f ↦ D_μ^{1/2} f`, which maps the μ-weighted inner product to the
//! Euclidean one, so all eigensolves run on `S`. Vectors "in the ν
//! representation" are ordinary vertex functions; vectors "in the
//! symmetrized representation" carry the extra factor `sqrt(μ)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{restrict, BoundaryCondition, Edge, PotentialField, Region, Restriction, WeightedGraph};
use crate::linalg::SymCsr;

#[derive(Clone, Debug)]
pub struct OperatorBundle {
    graph: Arc<WeightedGraph>,
    potential: PotentialField,
    sym: SymCsr,
    sqrt_mu: Vec<f64>,
}

impl OperatorBundle {
    pub fn assemble(graph: Arc<WeightedGraph>, potential: PotentialField) -> Result<Self> {
        let n = graph.len();
        if potential.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: potential.len() });
        }
        let sqrt_mu: Vec<f64> = graph.mu().iter().map(|m| m.sqrt()).collect();
        let diag: Vec<f64> = (0..n)
            .map(|x| graph.degree(x) / graph.mu()[x] + graph.base_potential()[x] + potential.values()[x])
            .collect();
        let off: Vec<(usize, usize, f64)> = graph
            .edges()
            .iter()
            .map(|e| (e.u, e.v, -e.w / (sqrt_mu[e.u] * sqrt_mu[e.v])))
            .collect();
        let sym = SymCsr::from_parts(&diag, &off);
        Ok(Self { graph, potential, sym, sqrt_mu })
    }

    /// `L = Δ_μ + W` with no perturbation.
    pub fn base(graph: Arc<WeightedGraph>) -> Result<Self> {
        let n = graph.len();
        Self::assemble(graph, PotentialField::zeros(n))
    }

    pub fn with_potential(&self, potential: PotentialField) -> Result<Self> {
        Self::assemble(self.graph.clone(), potential)
    }

    /// Restriction to `region` (potential restricted alongside).
    pub fn restricted(&self, region: &Region, bc: BoundaryCondition) -> Result<(Self, Restriction)> {
        let r = restrict(&self.graph, region, bc)?;
        let v = self.potential.restrict(&r.parent_index);
        let bundle = Self::assemble(Arc::new(r.graph.clone()), v)?;
        Ok((bundle, r))
    }

    pub fn dim(&self) -> usize {
        self.graph.len()
    }

    pub fn graph(&self) -> &Arc<WeightedGraph> {
        &self.graph
    }

    pub fn potential(&self) -> &PotentialField {
        &self.potential
    }

    pub fn sym(&self) -> &SymCsr {
        &self.sym
    }

    pub fn measure(&self) -> &[f64] {
        self.graph.mu()
    }

    pub fn sqrt_measure(&self) -> &[f64] {
        &self.sqrt_mu
    }

    /// `max(1, Gershgorin bound on the spectral radius)`.
    pub fn scale(&self) -> f64 {
        self.sym.norm_bound().max(1.0)
    }

    /// `W + V` per vertex.
    pub fn total_potential(&self) -> Vec<f64> {
        self.graph
            .base_potential()
            .iter()
            .zip(self.potential.values())
            .map(|(w, v)| w + v)
            .collect()
    }

    /// ν representation → symmetrized representation.
    pub fn to_sym(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.sqrt_mu).map(|(a, s)| a * s).collect()
    }

    pub fn from_sym(&self, g: &[f64]) -> Vec<f64> {
        g.iter().zip(&self.sqrt_mu).map(|(a, s)| a / s).collect()
    }

    /// `(Hf)(x) = (1/μ(x)) Σ_y w_xy (f(x) − f(y)) + (W(x) + V(x)) f(x)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let g = &self.graph;
        (0..self.dim())
            .map(|x| {
                let flux: f64 = g.neighbors(x).iter().map(|&(y, w)| w * (f[x] - f[y])).sum();
                flux / g.mu()[x] + (g.base_potential()[x] + self.potential.values()[x]) * f[x]
            })
            .collect()
    }

    /// `⟨f, g⟩_ν = Σ f g μ`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(self.graph.mu()).map(|((a, b), m)| a * b * m).sum()
    }

    /// `⟨Hf, g⟩_ν` evaluated through the symmetrized matrix.
    pub fn form_via_matrix(&self, f: &[f64], g: &[f64]) -> f64 {
        self.sym.quadratic(&self.to_sym(g), &self.to_sym(f))
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: f.len() });
        }
        Ok(())
    }
}

pub fn assemble(graph: &Arc<WeightedGraph>, potential: &PotentialField) -> Result<OperatorBundle> {
    OperatorBundle::assemble(graph.clone(), potential.clone())
}

/// Explicit bilinear form `Σ_edges w (f(x)−f(y))(g(x)−g(y)) + Σ (W+V) f g μ`.
pub fn bilinear_form(bundle: &OperatorBundle, f: &[f64], g: &[f64]) -> Result<f64> {
    bundle.check_len(f)?;
    bundle.check_len(g)?;
    let graph = bundle.graph();
    let edges: f64 = graph.edges().iter().map(|e| e.w * (f[e.u] - f[e.v]) * (g[e.u] - g[e.v])).sum();
    let pot: f64 = bundle
        .total_potential()
        .iter()
        .zip(graph.mu())
        .enumerate()
        .map(|(x, (p, m))| p * f[x] * g[x] * m)
        .sum();
    Ok(edges + pot)
}

/// `q(f) + Σ V f² μ`, i.e. the energy of `H` at `f`.
pub fn quadratic_form(bundle: &OperatorBundle, f: &[f64]) -> Result<f64> {
    bilinear_form(bundle, f, f)
}

/// Ground-state (Doob) transform by a positive function `phi`.
///
/// The new graph has conductances `w φ(x) φ(y)`, measure `μ φ²` and no
/// baseline potential; the whole zeroth-order part moves into
/// `q = (Hφ)/φ`, so the transformed operator is `Δ_{μ̃,w̃} + q`.
#[derive(Clone, Debug)]
pub struct DoobData {
    pub phi: Vec<f64>,
    pub new_graph: Arc<WeightedGraph>,
    pub q_potential: PotentialField,
}

impl DoobData {
    pub fn bundle(&self) -> Result<OperatorBundle> {
        OperatorBundle::assemble(self.new_graph.clone(), self.q_potential.clone())
    }

    /// The L-part `Δ_{μ̃,w̃}` alone.
    pub fn laplacian_bundle(&self) -> Result<OperatorBundle> {
        OperatorBundle::base(self.new_graph.clone())
    }

    /// The unitary `ℓ²(μ̃) → ℓ²(μ)`, `v ↦ φ v`.
    pub fn to_original(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.phi).map(|(a, p)| a * p).collect()
    }

    pub fn from_original(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.phi).map(|(a, p)| a / p).collect()
    }
}

pub fn doob_transform(bundle: &OperatorBundle, phi: &[f64]) -> Result<DoobData> {
    bundle.check_len(phi)?;
    let graph = bundle.graph();
    if let Some((x, &p)) = phi.iter().enumerate().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
        return Err(Error::NonPositivePhi { vertex: graph.id(x).to_string(), value: p });
    }
    let h_phi = bundle.apply(phi);
    let q: Vec<f64> = h_phi.iter().zip(phi).map(|(h, p)| h / p).collect();
    let edges = graph
        .edges()
        .iter()
        .map(|e| Edge { u: e.u, v: e.v, w: e.w * phi[e.u] * phi[e.v] })
        .collect();
    let mu = graph.mu().iter().zip(phi).map(|(m, p)| m * p * p).collect();
    let new_graph = WeightedGraph::new(graph.ids().to_vec(), mu, vec![0.0; graph.len()], edges)?;
    let new_graph = match graph.coords() {
        Some(c) => new_graph.with_coords(c.to_vec()),
        None => new_graph,
    };
    Ok(DoobData { phi: phi.to_vec(), new_graph: Arc::new(new_graph), q_potential: PotentialField::new(q) })
}

/// Worst relative column residual of `φ⁻¹ H (φ e_x)` against `(Δ_{μ̃,w̃} + q) e_x`
/// over all basis vectors `e_x`.
pub fn conjugation_residual(bundle: &OperatorBundle, doob: &DoobData) -> f64 {
    let g = bundle.graph();
    let ng = &doob.new_graph;
    let phi = &doob.phi;
    let total = bundle.total_potential();
    let q = doob.q_potential.values();
    let mut worst: f64 = 0.0;
    for x in 0..g.len() {
        // column x: diagonal plus one entry per neighbour
        let h_diag = g.degree(x) / g.mu()[x] + total[x];
        let t_diag = ng.degree(x) / ng.mu()[x] + q[x];
        let mut diff = (h_diag - t_diag).powi(2);
        let mut norm = h_diag.powi(2);
        for (&(y, w), &(y2, w2)) in g.neighbors(x).iter().zip(ng.neighbors(x)) {
            debug_assert_eq!(y, y2);
            let lhs = -w / g.mu()[y] * phi[x] / phi[y];
            let rhs = -w2 / ng.mu()[y];
            diff += (lhs - rhs).powi(2);
            norm += lhs.powi(2);
        }
        if norm > 0.0 {
            worst = worst.max((diff / norm).sqrt());
        } else {
            worst = worst.max(diff.sqrt());
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SupportCheck {
    pub holds: bool,
    pub exterior_max: f64,
    pub threshold: f64,
}

/// `max_{x ∉ region} |q(x)| <= tol · max(1, max_x |q(x)|)`.
pub fn compact_support_check(q: &PotentialField, region: &Region, tol: f64) -> SupportCheck {
    let inside = region.indicator(q.len());
    let exterior_max = q
        .values()
        .iter()
        .enumerate()
        .filter(|(x, _)| !inside[*x])
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    let threshold = tol * q.max_abs().max(1.0);
    SupportCheck { holds: exterior_max <= threshold, exterior_max, threshold }
}
