//! Weighted graphs as discrete weighted manifolds.
//!
//! A [`WeightedGraph`] carries a vertex measure `mu`, a nonnegative baseline
//! potential `W` and symmetric positive edge conductances. The μ-Laplacian is
//!
//! ```text
//! (Δ_μ f)(x) = (1/μ(x)) Σ_y w_xy (f(x) − f(y))
//! ```
//!
//! which is symmetric in the inner product weighted by `mu`. Regions are
//! sorted vertex index sets; [`restrict`] produces Dirichlet (grounded) or
//! Neumann (decoupled) restrictions.

mod generators;
mod io;
mod potential;
mod region;

pub use generators::{
    build_half_line, build_lattice, build_tree, random_connected, EdgeRule, Profiles,
    RandomGraphSpec, VertexRule, DEFAULT_VERTEX_CAP,
};
pub use io::{GraphDocument, GraphDocumentEdge, GraphDocumentVertex};
pub use potential::PotentialField;
pub use region::{ball_exhaustion, ball_exhaustion_with, BallMetric, Exhaustion, Region};

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    mu: Vec<f64>,
    base_potential: Vec<f64>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    coords: Option<Vec<Vec<i64>>>,
}

impl WeightedGraph {
    /// Validates every invariant: unique ids, `mu > 0`, `W >= 0`, positive
    /// conductances, no self-loops and no repeated unordered pair.
    pub fn new(
        ids: Vec<String>,
        mu: Vec<f64>,
        base_potential: Vec<f64>,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        let n = ids.len();
        if mu.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: mu.len() });
        }
        if base_potential.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: base_potential.len() });
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(id.clone()));
            }
        }
        for (i, &m) in mu.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::ProfileViolation { what: "mu", value: m, location: ids[i].clone() });
            }
        }
        for (i, &w) in base_potential.iter().enumerate() {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidGraph {
                    path: format!("vertex `{}`", ids[i]),
                    message: format!("baseline potential W must be nonnegative, got {w}"),
                });
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for e in edges {
            if e.u >= n || e.v >= n {
                return Err(Error::NotSubset(e.u.max(e.v)));
            }
            if e.u == e.v {
                return Err(Error::InvalidGraph {
                    path: format!("edge `{}`-`{}`", ids[e.u], ids[e.v]),
                    message: "self-loops are not allowed".into(),
                });
            }
            if !(e.w > 0.0 && e.w.is_finite()) {
                return Err(Error::ProfileViolation {
                    what: "conductance",
                    value: e.w,
                    location: format!("{}-{}", ids[e.u], ids[e.v]),
                });
            }
            let (u, v) = if e.u < e.v { (e.u, e.v) } else { (e.v, e.u) };
            if !seen.insert((u, v)) {
                return Err(Error::InvalidGraph {
                    path: format!("edge `{}`-`{}`", ids[u], ids[v]),
                    message: "repeated edge".into(),
                });
            }
            adjacency[u].push((v, e.w));
            adjacency[v].push((u, e.w));
            normalized.push(Edge { u, v, w: e.w });
        }
        for row in &mut adjacency {
            row.sort_by_key(|&(j, _)| j);
        }
        Ok(Self {
            ids,
            index,
            mu,
            base_potential,
            edges: normalized,
            adjacency,
            coords: None,
        })
    }

    pub(crate) fn with_coords(mut self, coords: Vec<Vec<i64>>) -> Self {
        debug_assert_eq!(coords.len(), self.len());
        self.coords = Some(coords);
        self
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn vertex(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Baseline potential `W` of `L = Δ_μ + W`.
    pub fn base_potential(&self) -> &[f64] {
        &self.base_potential
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// Sum of conductances at `x`.
    pub fn degree(&self, x: usize) -> f64 {
        self.adjacency[x].iter().map(|&(_, w)| w).sum()
    }

    /// Integer lattice coordinates when the graph came from a lattice or
    /// half-line generator.
    pub fn coords(&self) -> Option<&[Vec<i64>]> {
        self.coords.as_deref()
    }

    pub fn region_from_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Region> {
        let idx = ids.iter().map(|s| self.vertex(s.as_ref())).collect::<Result<Vec<_>>>()?;
        Ok(Region::new(idx))
    }

    pub fn all_vertices(&self) -> Region {
        Region::full(self.len())
    }

    /// Same vertices and edges with every conductance multiplied by `w_scale`
    /// and every measure by `mu_scale`.
    pub fn rescaled(&self, mu_scale: f64, w_scale: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { u: e.u, v: e.v, w: e.w * w_scale })
            .collect();
        let mu = self.mu.iter().map(|m| m * mu_scale).collect();
        let g = Self::new(self.ids.clone(), mu, self.base_potential.clone(), edges)?;
        Ok(match &self.coords {
            Some(c) => g.with_coords(c.clone()),
            None => g,
        })
    }

    /// Replaces the baseline potential, keeping everything else.
    pub fn with_base_potential(&self, base_potential: Vec<f64>) -> Result<Self> {
        let g = Self::new(self.ids.clone(), self.mu.clone(), base_potential, self.edges.clone())?;
        Ok(match &self.coords {
            Some(c) => g.with_coords(c.clone()),
            None => g,
        })
    }

    /// Hop distances from `source`; unreachable vertices get `usize::MAX`.
    pub fn hop_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adjacency[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Connected components of the subgraph induced on `region`.
    pub fn components(&self, region: &Region) -> Vec<Region> {
        let inside = region.indicator(self.len());
        let mut label = vec![usize::MAX; self.len()];
        let mut out = Vec::new();
        for &start in region.iter() {
            if label[start] != usize::MAX {
                continue;
            }
            let c = out.len();
            let mut members = vec![start];
            label[start] = c;
            let mut head = 0;
            while head < members.len() {
                let x = members[head];
                head += 1;
                for &(y, _) in &self.adjacency[x] {
                    if inside[y] && label[y] == usize::MAX {
                        label[y] = c;
                        members.push(y);
                    }
                }
            }
            out.push(Region::new(members));
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components(&self.all_vertices()).len() <= 1
    }

    /// Vertices outside `region` adjacent to it.
    pub fn outer_boundary(&self, region: &Region) -> Region {
        let inside = region.indicator(self.len());
        let mut out = Vec::new();
        for &x in region.iter() {
            for &(y, _) in &self.adjacency[x] {
                if !inside[y] {
                    out.push(y);
                }
            }
        }
        Region::new(out)
    }

    /// Vertices of `region` adjacent to its complement.
    pub fn inner_boundary(&self, region: &Region) -> Region {
        let inside = region.indicator(self.len());
        Region::new(
            region
                .iter()
                .copied()
                .filter(|&x| self.adjacency[x].iter().any(|&(y, _)| !inside[y])),
        )
    }
}

/// A restricted graph together with the map back to the parent indices.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub graph: WeightedGraph,
    /// `parent_index[i]` is the parent vertex of restricted vertex `i`.
    pub parent_index: Vec<usize>,
    /// Total conductance of edges leaving the region, per restricted vertex.
    pub crossing_conductance: Vec<f64>,
    pub bc: BoundaryCondition,
}

impl Restriction {
    /// Maps a parent region into restricted indices, dropping vertices that
    /// lie outside.
    pub fn map_region(&self, parent: &Region) -> Region {
        let mut lookup = HashMap::with_capacity(self.parent_index.len());
        for (i, &p) in self.parent_index.iter().enumerate() {
            lookup.insert(p, i);
        }
        Region::new(parent.iter().filter_map(|p| lookup.get(p).copied()))
    }

    pub fn restrict_values(&self, parent_values: &[f64]) -> Vec<f64> {
        self.parent_index.iter().map(|&p| parent_values[p]).collect()
    }
}

/// Restricts `graph` to `region`.
///
/// Dirichlet keeps the crossing conductance as extra diagonal mass (it is
/// added to `W` as `crossing / mu`, so `q(f)` picks up `w f(x)^2` for every
/// deleted neighbour). Neumann simply drops crossing edges.
pub fn restrict(graph: &WeightedGraph, region: &Region, bc: BoundaryCondition) -> Result<Restriction> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let n = graph.len();
    if let Some(&bad) = region.iter().find(|&&x| x >= n) {
        return Err(Error::NotSubset(bad));
    }
    let mut new_index = vec![usize::MAX; n];
    for (i, &x) in region.iter().enumerate() {
        new_index[x] = i;
    }
    let parent_index: Vec<usize> = region.iter().copied().collect();
    let mut crossing = vec![0.0; parent_index.len()];
    for (i, &x) in parent_index.iter().enumerate() {
        for &(y, w) in graph.neighbors(x) {
            if new_index[y] == usize::MAX {
                crossing[i] += w;
            }
        }
    }
    let edges = graph
        .edges()
        .iter()
        .filter(|e| new_index[e.u] != usize::MAX && new_index[e.v] != usize::MAX)
        .map(|e| Edge { u: new_index[e.u], v: new_index[e.v], w: e.w })
        .collect();
    let ids = parent_index.iter().map(|&x| graph.id(x).to_string()).collect();
    let mu: Vec<f64> = parent_index.iter().map(|&x| graph.mu()[x]).collect();
    let base: Vec<f64> = parent_index
        .iter()
        .enumerate()
        .map(|(i, &x)| match bc {
            BoundaryCondition::Dirichlet => graph.base_potential()[x] + crossing[i] / mu[i],
            BoundaryCondition::Neumann => graph.base_potential()[x],
        })
        .collect();
    let mut restricted = WeightedGraph::new(ids, mu, base, edges)?;
    if let Some(c) = graph.coords() {
        restricted = restricted.with_coords(parent_index.iter().map(|&x| c[x].clone()).collect());
    }
    Ok(Restriction { graph: restricted, parent_index, crossing_conductance: crossing, bc })
}
