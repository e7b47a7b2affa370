use serde::{Deserialize, Serialize};

use super::WeightedGraph;
use crate::error::{Error, Result};

/// Sorted, duplicate-free set of vertex indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region(Vec<usize>);

impl Region {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn indicator(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &x in &self.0 {
            mask[x] = true;
        }
        mask
    }

    pub fn complement(&self, n: usize) -> Self {
        let mask = self.indicator(n);
        Self((0..n).filter(|&x| !mask[x]).collect())
    }

    pub fn union(&self, other: &Region) -> Self {
        Self::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.0.iter().all(|&x| other.contains(x))
    }

    /// Strict superset check used by exhaustions.
    pub fn strictly_contains(&self, other: &Region) -> bool {
        self.len() > other.len() && other.is_subset(self)
    }
}

impl<'a> IntoIterator for &'a Region {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Nested regions Ω₁ ⊂ Ω₂ ⊂ … of one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Exhaustion {
    levels: Vec<Region>,
    n_vertices: usize,
}

impl Exhaustion {
    pub fn new(levels: Vec<Region>, n_vertices: usize) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("exhaustion needs at least one level".into()));
        }
        for level in &levels {
            if level.is_empty() {
                return Err(Error::EmptyRegion);
            }
            if let Some(&bad) = level.iter().find(|&&x| x >= n_vertices) {
                return Err(Error::NotSubset(bad));
            }
        }
        for k in 1..levels.len() {
            if !levels[k].strictly_contains(&levels[k - 1]) {
                return Err(Error::NotNested { level: k });
            }
        }
        Ok(Self { levels, n_vertices })
    }

    pub fn levels(&self) -> &[Region] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn last(&self) -> &Region {
        self.levels.last().expect("exhaustion is never empty")
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// True when the last level is the whole vertex set.
    pub fn covers(&self) -> bool {
        self.last().len() == self.n_vertices
    }
}

/// How "balls" are measured for [`ball_exhaustion_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallMetric {
    /// Hop distance in the graph.
    #[default]
    Graph,
    /// Sup-norm of lattice coordinate differences (cubes on ℤ^d).
    SupNorm,
}

/// Graph-distance balls around `center`.
pub fn ball_exhaustion(graph: &WeightedGraph, center: usize, radii: &[usize]) -> Result<Exhaustion> {
    ball_exhaustion_with(graph, center, radii, BallMetric::Graph)
}

pub fn ball_exhaustion_with(
    graph: &WeightedGraph,
    center: usize,
    radii: &[usize],
    metric: BallMetric,
) -> Result<Exhaustion> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("radii list is empty".into()));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("radii must be strictly increasing: {radii:?}")));
    }
    if center >= graph.len() {
        return Err(Error::NotSubset(center));
    }
    let dist: Vec<usize> = match metric {
        BallMetric::Graph => graph.hop_distances(center),
        BallMetric::SupNorm => {
            let coords = graph.coords().ok_or_else(|| {
                Error::InvalidArgument("sup-norm balls need lattice coordinates".into())
            })?;
            let c = &coords[center];
            coords
                .iter()
                .map(|p| p.iter().zip(c).map(|(a, b)| a.abs_diff(*b) as usize).max().unwrap_or(0))
                .collect()
        }
    };
    let levels = radii
        .iter()
        .map(|&r| Region::new((0..graph.len()).filter(|&x| dist[x] <= r)))
        .collect();
    Exhaustion::new(levels, graph.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_half_line, build_lattice, Profiles};

    #[test]
    fn path_balls() {
        let g = build_half_line(4, &Profiles::default()).unwrap();
        let ex = ball_exhaustion(&g, 2, &[1, 2]).unwrap();
        assert_eq!(ex.levels()[0], Region::new([1, 2, 3]));
        assert_eq!(ex.levels()[1], Region::new([0, 1, 2, 3, 4]));
        assert!(ex.covers());
    }

    #[test]
    fn grid_corner_ball() {
        let g = build_lattice(2, 1, &Profiles::default()).unwrap();
        let corner = g.vertex("-1,-1").unwrap();
        let ex = ball_exhaustion(&g, corner, &[1]).unwrap();
        let ids: Vec<&str> = ex.levels()[0].iter().map(|&x| g.id(x)).collect();
        assert_eq!(ids, vec!["-1,-1", "-1,0", "0,-1"]);
    }

    #[test]
    fn cube_ball_sizes_in_z3() {
        let g = build_lattice(3, 8, &Profiles::default()).unwrap();
        let origin = g.vertex("0,0,0").unwrap();
        let cubes = ball_exhaustion_with(&g, origin, &[2, 4, 6], BallMetric::SupNorm).unwrap();
        let sizes: Vec<usize> = cubes.levels().iter().map(Region::len).collect();
        assert_eq!(sizes, vec![125, 729, 2197]);
    }

    #[test]
    fn graph_ball_sizes_in_z3_match_enumeration() {
        let g = build_lattice(3, 8, &Profiles::default()).unwrap();
        let origin = g.vertex("0,0,0").unwrap();
        let balls = ball_exhaustion(&g, origin, &[2, 4, 6]).unwrap();
        let sizes: Vec<usize> = balls.levels().iter().map(Region::len).collect();
        let l1_count = |r: i64| {
            let mut c = 0;
            for x in -r..=r {
                for y in -r..=r {
                    for z in -r..=r {
                        if x.abs() + y.abs() + z.abs() <= r {
                            c += 1;
                        }
                    }
                }
            }
            c
        };
        assert_eq!(sizes, vec![l1_count(2), l1_count(4), l1_count(6)]);
        assert_eq!(sizes, vec![25, 129, 377]);
    }

    #[test]
    fn rejects_bad_radii() {
        let g = build_half_line(10, &Profiles::default()).unwrap();
        assert!(ball_exhaustion(&g, 0, &[]).is_err());
        assert!(ball_exhaustion(&g, 0, &[4, 2]).is_err());
        // radius 12 and 13 both cover the path: not strictly nested
        assert!(matches!(ball_exhaustion(&g, 0, &[12, 13]), Err(Error::NotNested { level: 1 })));
    }
}
