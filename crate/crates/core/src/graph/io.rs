//! JSON graph documents:
//! `{"vertices":[{"id":str,"mu":num,"W":num}],"edges":[{"u":str,"v":str,"w":num}]}`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Edge, WeightedGraph};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDocumentVertex {
    pub id: String,
    pub mu: f64,
    #[serde(rename = "W")]
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDocumentEdge {
    pub u: String,
    pub v: String,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub vertices: Vec<GraphDocumentVertex>,
    pub edges: Vec<GraphDocumentEdge>,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::InvalidGraph { path: path.into(), message: message.into() }
}

fn field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| invalid(path, format!("missing field `{key}`")))
}

fn number(obj: &Value, key: &str, path: &str) -> Result<f64> {
    field(obj, key, path)?
        .as_f64()
        .ok_or_else(|| invalid(format!("{path}/{key}"), "expected a number"))
}

fn string<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a str> {
    field(obj, key, path)?
        .as_str()
        .ok_or_else(|| invalid(format!("{path}/{key}"), "expected a string"))
}

impl WeightedGraph {
    /// Parses and validates a graph document, reporting the first violation
    /// with a JSON-pointer style path.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)?;
        let vertices = field(&doc, "vertices", "")?
            .as_array()
            .ok_or_else(|| invalid("/vertices", "expected an array"))?;
        let edges = field(&doc, "edges", "")?
            .as_array()
            .ok_or_else(|| invalid("/edges", "expected an array"))?;

        let mut ids = Vec::with_capacity(vertices.len());
        let mut mu = Vec::with_capacity(vertices.len());
        let mut base = Vec::with_capacity(vertices.len());
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            let path = format!("/vertices/{i}");
            let id = string(v, "id", &path)?;
            if index.insert(id.to_string(), i).is_some() {
                return Err(invalid(format!("{path}/id"), format!("duplicate vertex id `{id}`")));
            }
            let m = number(v, "mu", &path)?;
            if !(m > 0.0) {
                return Err(invalid(format!("{path}/mu"), format!("mu must be positive, got {m}")));
            }
            let w = match v.get("W") {
                None => 0.0,
                Some(_) => number(v, "W", &path)?,
            };
            if !(w >= 0.0) {
                return Err(invalid(format!("{path}/W"), format!("W must be nonnegative, got {w}")));
            }
            ids.push(id.to_string());
            mu.push(m);
            base.push(w);
        }

        let mut parsed = Vec::with_capacity(edges.len());
        let mut seen = HashSet::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            let path = format!("/edges/{k}");
            let lookup = |key: &str| -> Result<usize> {
                let id = string(e, key, &path)?;
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| invalid(format!("{path}/{key}"), format!("unknown vertex `{id}`")))
            };
            let u = lookup("u")?;
            let v = lookup("v")?;
            if u == v {
                return Err(invalid(&path, "self-loops are not allowed"));
            }
            let w = number(e, "w", &path)?;
            if !(w > 0.0) {
                return Err(invalid(format!("{path}/w"), format!("conductance must be positive, got {w}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(invalid(&path, "repeated edge"));
            }
            parsed.push(Edge { u, v, w });
        }
        WeightedGraph::new(ids, mu, base, parsed)
    }

    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertices: (0..self.len())
                .map(|i| GraphDocumentVertex {
                    id: self.id(i).to_string(),
                    mu: self.mu()[i],
                    w: self.base_potential()[i],
                })
                .collect(),
            edges: self
                .edges()
                .iter()
                .map(|e| GraphDocumentEdge {
                    u: self.id(e.u).to_string(),
                    v: self.id(e.v).to_string(),
                    w: e.w,
                })
                .collect(),
        }
    }
}
