use std::sync::Arc;

use rand::Rng;

use super::{Edge, WeightedGraph};
use crate::error::{Error, Result};

pub const DEFAULT_VERTEX_CAP: usize = 50_000;

/// Per-vertex rule evaluated on lattice coordinates.
pub type VertexRule = Arc<dyn Fn(&[i64]) -> f64 + Send + Sync>;
/// Per-edge rule evaluated on the coordinates of both endpoints.
pub type EdgeRule = Arc<dyn Fn(&[i64], &[i64]) -> f64 + Send + Sync>;

/// Measure, conductance and baseline-potential rules for the canonical
/// generators. Defaults: `mu ≡ 1`, `w ≡ 1`, `W ≡ 0`.
#[derive(Clone)]
pub struct Profiles {
    pub mu: Option<VertexRule>,
    pub w: Option<EdgeRule>,
    pub base_potential: Option<VertexRule>,
    pub vertex_cap: usize,
}

impl Default for Profiles {
    fn default() -> Self {
        Self { mu: None, w: None, base_potential: None, vertex_cap: DEFAULT_VERTEX_CAP }
    }
}

impl std::fmt::Debug for Profiles {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Profiles")
            .field("mu", &self.mu.is_some())
            .field("w", &self.w.is_some())
            .field("base_potential", &self.base_potential.is_some())
            .field("vertex_cap", &self.vertex_cap)
            .finish()
    }
}

impl Profiles {
    pub fn with_mu(mut self, rule: impl Fn(&[i64]) -> f64 + Send + Sync + 'static) -> Self {
        self.mu = Some(Arc::new(rule));
        self
    }

    pub fn with_w(mut self, rule: impl Fn(&[i64], &[i64]) -> f64 + Send + Sync + 'static) -> Self {
        self.w = Some(Arc::new(rule));
        self
    }

    pub fn with_base_potential(mut self, rule: impl Fn(&[i64]) -> f64 + Send + Sync + 'static) -> Self {
        self.base_potential = Some(Arc::new(rule));
        self
    }

    pub fn with_vertex_cap(mut self, cap: usize) -> Self {
        self.vertex_cap = cap;
        self
    }

    fn mu_at(&self, p: &[i64], id: &str) -> Result<f64> {
        let v = self.mu.as_ref().map_or(1.0, |f| f(p));
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::ProfileViolation { what: "mu", value: v, location: id.to_string() });
        }
        Ok(v)
    }

    fn w_at(&self, p: &[i64], q: &[i64], id_p: &str, id_q: &str) -> Result<f64> {
        let v = self.w.as_ref().map_or(1.0, |f| f(p, q));
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::ProfileViolation {
                what: "conductance",
                value: v,
                location: format!("{id_p}-{id_q}"),
            });
        }
        Ok(v)
    }

    fn base_at(&self, p: &[i64], id: &str) -> Result<f64> {
        let v = self.base_potential.as_ref().map_or(0.0, |f| f(p));
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::ProfileViolation { what: "W", value: v, location: id.to_string() });
        }
        Ok(v)
    }
}

fn coord_id(p: &[i64]) -> String {
    p.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

fn from_coords(points: Vec<Vec<i64>>, pairs: Vec<(usize, usize)>, profiles: &Profiles) -> Result<WeightedGraph> {
    let ids: Vec<String> = points.iter().map(|p| coord_id(p)).collect();
    let mu = points.iter().zip(&ids).map(|(p, id)| profiles.mu_at(p, id)).collect::<Result<Vec<_>>>()?;
    let base = points
        .iter()
        .zip(&ids)
        .map(|(p, id)| profiles.base_at(p, id))
        .collect::<Result<Vec<_>>>()?;
    let edges = pairs
        .into_iter()
        .map(|(u, v)| {
            Ok(Edge { u, v, w: profiles.w_at(&points[u], &points[v], &ids[u], &ids[v])? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightedGraph::new(ids, mu, base, edges)?.with_coords(points))
}

/// ℤ^d points with sup-norm at most `radius`, nearest-neighbour edges,
/// enumerated lexicographically (first coordinate slowest).
pub fn build_lattice(dimension: usize, radius: usize, profiles: &Profiles) -> Result<WeightedGraph> {
    if !(1..=4).contains(&dimension) {
        return Err(Error::InvalidArgument(format!("lattice dimension must be in 1..=4, got {dimension}")));
    }
    if radius == 0 {
        return Err(Error::InvalidArgument("lattice radius must be at least 1".into()));
    }
    let side = 2 * radius + 1;
    let count = side
        .checked_pow(dimension as u32)
        .filter(|&c| c <= profiles.vertex_cap)
        .ok_or(Error::VertexCapExceeded { requested: side.saturating_pow(dimension as u32), cap: profiles.vertex_cap })?;
    let r = radius as i64;
    let mut points = Vec::with_capacity(count);
    for linear in 0..count {
        let mut rem = linear;
        let mut p = vec![0i64; dimension];
        for k in (0..dimension).rev() {
            p[k] = (rem % side) as i64 - r;
            rem /= side;
        }
        points.push(p);
    }
    let stride = |k: usize| side.pow((dimension - 1 - k) as u32);
    let mut pairs = Vec::with_capacity(dimension * count);
    for (i, p) in points.iter().enumerate() {
        for k in 0..dimension {
            if p[k] < r {
                pairs.push((i, i + stride(k)));
            }
        }
    }
    from_coords(points, pairs, profiles)
}

/// Path on vertices `0..=length` with consecutive edges.
pub fn build_half_line(length: usize, profiles: &Profiles) -> Result<WeightedGraph> {
    if length == 0 {
        return Err(Error::InvalidArgument("half-line length must be at least 1".into()));
    }
    if length + 1 > profiles.vertex_cap {
        return Err(Error::VertexCapExceeded { requested: length + 1, cap: profiles.vertex_cap });
    }
    let points = (0..=length as i64).map(|j| vec![j]).collect();
    let pairs = (0..length).map(|j| (j, j + 1)).collect();
    from_coords(points, pairs, profiles)
}

/// Rooted regular tree with unit weights, vertices numbered breadth-first.
pub fn build_tree(branching: usize, depth: usize, vertex_cap: usize) -> Result<WeightedGraph> {
    if branching < 2 {
        return Err(Error::InvalidArgument("tree branching must be at least 2".into()));
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("tree depth must be at least 1".into()));
    }
    let mut count: usize = 1;
    let mut level: usize = 1;
    for _ in 0..depth {
        level = level.checked_mul(branching).unwrap_or(usize::MAX);
        count = count.saturating_add(level);
        if count > vertex_cap {
            return Err(Error::VertexCapExceeded { requested: count, cap: vertex_cap });
        }
    }
    let ids = (0..count).map(|i| i.to_string()).collect();
    let edges = (1..count).map(|c| Edge { u: (c - 1) / branching, v: c, w: 1.0 }).collect();
    WeightedGraph::new(ids, vec![1.0; count], vec![0.0; count], edges)
}

/// Seeded random connected graph: a random recursive tree plus extra edges,
/// with measures and conductances drawn uniformly from the given ranges.
#[derive(Clone, Debug)]
pub struct RandomGraphSpec {
    pub vertices: usize,
    pub extra_edges: usize,
    pub mu_range: (f64, f64),
    pub w_range: (f64, f64),
}

pub fn random_connected<R: Rng + ?Sized>(spec: &RandomGraphSpec, rng: &mut R) -> Result<WeightedGraph> {
    let n = spec.vertices;
    if n == 0 {
        return Err(Error::InvalidArgument("random graph needs at least one vertex".into()));
    }
    let draw = |rng: &mut R, (lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };
    let mu = (0..n).map(|_| draw(rng, spec.mu_range)).collect();
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        seen.insert((u, v));
        edges.push(Edge { u, v, w: draw(rng, spec.w_range) });
    }
    let max_edges = n * (n - 1) / 2;
    let mut extra = spec.extra_edges.min(max_edges - edges.len());
    while extra > 0 {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let (u, v) = (a.min(b), a.max(b));
        if seen.insert((u, v)) {
            edges.push(Edge { u, v, w: draw(rng, spec.w_range) });
            extra -= 1;
        }
    }
    let ids = (0..n).map(|i| format!("v{i}")).collect();
    WeightedGraph::new(ids, mu, vec![0.0; n], edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn small_lattices() {
        let p = build_lattice(1, 2, &Profiles::default()).unwrap();
        assert_eq!((p.len(), p.edges().len()), (5, 4));
        assert!(p.edges().iter().all(|e| e.w == 1.0));
        let g = build_lattice(2, 1, &Profiles::default()).unwrap();
        assert_eq!((g.len(), g.edges().len()), (9, 12));
    }

    #[test]
    fn z3_ball_counts() {
        let g = build_lattice(3, 8, &Profiles::default()).unwrap();
        // independent count: pairs of cube points at unit sup/l1 distance
        let side = 17i64;
        let mut brute = 0usize;
        for x in 0..side {
            for y in 0..side {
                for z in 0..side {
                    brute += usize::from(x + 1 < side) + usize::from(y + 1 < side) + usize::from(z + 1 < side);
                }
            }
        }
        assert_eq!(g.len(), 4913);
        assert_eq!(g.edges().len(), brute);
        assert_eq!(brute, 3 * 17 * 17 * 16);
    }

    #[test]
    fn half_line_profiles() {
        let g = build_half_line(3, &Profiles::default()).unwrap();
        assert_eq!(g.len(), 4);
        let g = build_half_line(2, &Profiles::default().with_mu(|p| 2f64.powi(p[0] as i32))).unwrap();
        assert_eq!(g.mu(), &[1.0, 2.0, 4.0]);
        let g = build_half_line(100, &Profiles::default().with_w(|p, q| p[0].min(q[0]) as f64 + 1.0)).unwrap();
        for e in g.edges() {
            assert_eq!(e.w, e.u as f64 + 1.0);
        }
    }

    #[test]
    fn profile_violation_is_reported() {
        let err = build_lattice(1, 3, &Profiles::default().with_mu(|p| p[0] as f64)).unwrap_err();
        assert!(matches!(err, Error::ProfileViolation { what: "mu", .. }));
        let err = build_half_line(3, &Profiles::default().with_w(|_, _| -1.0)).unwrap_err();
        assert!(matches!(err, Error::ProfileViolation { what: "conductance", .. }));
    }

    #[test]
    fn trees() {
        let t = build_tree(2, 2, DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!((t.len(), t.edges().len()), (7, 6));
        assert_eq!(build_tree(3, 1, DEFAULT_VERTEX_CAP).unwrap().len(), 4);
        assert_eq!(build_tree(2, 10, DEFAULT_VERTEX_CAP).unwrap().len(), (1 << 11) - 1);
        assert!(matches!(build_tree(2, 20, DEFAULT_VERTEX_CAP), Err(Error::VertexCapExceeded { .. })));
    }

    #[test]
    fn lattice_cap() {
        let err = build_lattice(3, 30, &Profiles::default()).unwrap_err();
        assert!(matches!(err, Error::VertexCapExceeded { .. }));
        assert!(build_lattice(5, 1, &Profiles::default()).is_err());
    }

    #[test]
    fn random_graph_is_connected_and_deterministic() {
        let spec = RandomGraphSpec { vertices: 40, extra_edges: 30, mu_range: (0.5, 2.0), w_range: (0.5, 2.0) };
        let a = random_connected(&spec, &mut rand_chacha::ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = random_connected(&spec, &mut rand_chacha::ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(a.is_connected());
        assert_eq!(a.edges().len(), 39 + 30);
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.mu(), b.mu());
    }
}
