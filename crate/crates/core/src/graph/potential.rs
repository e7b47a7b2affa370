use serde::{Deserialize, Serialize};

use super::{Region, WeightedGraph};
use crate::error::{Error, Result};

/// A per-vertex potential `V`. The support is always recomputed from the
/// values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PotentialField {
    values: Vec<f64>,
}

impl PotentialField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    /// `value` on `region`, zero elsewhere.
    pub fn indicator(n: usize, region: &Region, value: f64) -> Self {
        let mut values = vec![0.0; n];
        for &x in region {
            values[x] = value;
        }
        Self { values }
    }

    pub fn for_graph(graph: &WeightedGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != graph.len() {
            return Err(Error::DimensionMismatch { expected: graph.len(), found: values.len() });
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> Region {
        Region::new(self.values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i))
    }

    /// `V_- = -min(V, 0)`, a nonnegative field.
    pub fn negative_part(&self) -> Self {
        Self { values: self.values.iter().map(|v| (-v).max(0.0)).collect() }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * factor).collect() }
    }

    pub fn plus(&self, other: &PotentialField) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    pub fn minus(&self, other: &PotentialField) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() }
    }

    /// Values on the vertices listed in `parent_index`.
    pub fn restrict(&self, parent_index: &[usize]) -> Self {
        Self { values: parent_index.iter().map(|&p| self.values[p]).collect() }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_tracks_values() {
        let v = PotentialField::new(vec![0.0, -1.0, 0.0, 2.0]);
        assert_eq!(v.support(), Region::new([1, 3]));
        assert_eq!(v.negative_part().values(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(v.min(), -1.0);
        assert_eq!(v.max_abs(), 2.0);
        assert!(PotentialField::zeros(3).support().is_empty());
    }
}
