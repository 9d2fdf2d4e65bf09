//! Finite weighted metric trees.
//!
//! A point lives on an edge at some offset from the edge's `u` endpoint.
//! Geodesics are the unique paths of the underlying graph; vertex-to-vertex
//! distances and first hops are precomputed when the tree is built.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{construction, Result};

/// On-disk description of a tree: named vertices and weighted edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub u: String,
    pub v: String,
    pub length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct MetricTree {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    // (neighbour, edge id)
    adjacency: Vec<Vec<(usize, usize)>>,
    dist: Vec<Vec<f64>>,
    // hop[a][b] = (next vertex, edge id) on the path from a to b
    hop: Vec<Vec<(usize, usize)>>,
}

impl PartialEq for MetricTree {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.edges == other.edges
    }
}

impl MetricTree {
    pub fn from_spec(spec: &TreeSpec) -> Result<Self> {
        let n = spec.vertices.len();
        if n < 2 {
            return Err(construction("tree needs at least two vertices"));
        }
        let mut index = HashMap::new();
        for (i, name) in spec.vertices.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(construction(format!("duplicate vertex {name:?}")));
            }
        }
        if spec.edges.len() + 1 != n {
            return Err(construction(format!(
                "a tree on {n} vertices has {} edges, got {}",
                n - 1,
                spec.edges.len()
            )));
        }
        let mut edges = Vec::with_capacity(spec.edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for (id, e) in spec.edges.iter().enumerate() {
            let u = *index
                .get(&e.u)
                .ok_or_else(|| construction(format!("unknown vertex {:?}", e.u)))?;
            let v = *index
                .get(&e.v)
                .ok_or_else(|| construction(format!("unknown vertex {:?}", e.v)))?;
            if u == v {
                return Err(construction(format!("self-loop at {:?}", e.u)));
            }
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(construction(format!("edge {id} has non-positive length")));
            }
            edges.push(Edge { u, v, length: e.length });
            adjacency[u].push((v, id));
            adjacency[v].push((u, id));
        }

        let mut dist = vec![vec![f64::INFINITY; n]; n];
        let mut parent = vec![vec![(usize::MAX, usize::MAX); n]; n];
        for root in 0..n {
            dist[root][root] = 0.0;
            let mut queue = VecDeque::from([root]);
            while let Some(w) = queue.pop_front() {
                for &(nb, e) in &adjacency[w] {
                    if dist[root][nb].is_infinite() {
                        dist[root][nb] = dist[root][w] + edges[e].length;
                        parent[root][nb] = (w, e);
                        queue.push_back(nb);
                    }
                }
            }
            if dist[root].iter().any(|d| d.is_infinite()) {
                return Err(construction("tree is not connected"));
            }
        }
        // the first hop from a towards b is a's parent in the BFS rooted at b
        let hop = (0..n)
            .map(|a| (0..n).map(|b| parent[b][a]).collect())
            .collect();

        Ok(MetricTree {
            names: spec.vertices.clone(),
            index,
            edges,
            adjacency,
            dist,
            hop,
        })
    }

    /// Center `o` joined to leaves `a`, `b`, `c` by unit edges.
    pub fn tripod() -> Self {
        let spec = TreeSpec {
            vertices: ["o", "a", "b", "c"].iter().map(|s| s.to_string()).collect(),
            edges: ["a", "b", "c"]
                .iter()
                .map(|leaf| EdgeSpec {
                    u: "o".into(),
                    v: leaf.to_string(),
                    length: 1.0,
                })
                .collect(),
        };
        Self::from_spec(&spec).expect("tripod is a valid tree")
    }

    pub fn to_spec(&self) -> TreeSpec {
        TreeSpec {
            vertices: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    u: self.names[e.u].clone(),
                    v: self.names[e.v].clone(),
                    length: e.length,
                })
                .collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn vertex_distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a][b]
    }

    pub fn neighbours(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn diameter(&self) -> f64 {
        self.dist
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0_f64, |m, d| m.max(*d))
    }

    /// A canonical (edge, offset) location of vertex `v`.
    pub fn vertex_location(&self, v: usize) -> (usize, f64) {
        let &(_, e) = self.adjacency[v]
            .iter()
            .min_by_key(|(_, e)| *e)
            .expect("vertex has an incident edge");
        let edge = self.edges[e];
        if edge.u == v {
            (e, 0.0)
        } else {
            (e, edge.length)
        }
    }

    /// The vertex at a location, if the offset sits exactly on an endpoint.
    pub fn vertex_at(&self, edge: usize, offset: f64) -> Option<usize> {
        let e = self.edges[edge];
        if offset == 0.0 {
            Some(e.u)
        } else if offset == e.length {
            Some(e.v)
        } else {
            None
        }
    }

    pub(crate) fn distance_to_vertex(&self, edge: usize, offset: f64, w: usize) -> f64 {
        let e = self.edges[edge];
        (offset + self.dist[e.u][w]).min(e.length - offset + self.dist[e.v][w])
    }

    /// (distance, exit endpoint of p's edge, entry endpoint of q's edge)
    fn route(&self, p: (usize, f64), q: (usize, f64)) -> (f64, usize, usize) {
        let ep = self.edges[p.0];
        let eq = self.edges[q.0];
        let legs_p = [(ep.u, p.1), (ep.v, ep.length - p.1)];
        let legs_q = [(eq.u, q.1), (eq.v, eq.length - q.1)];
        let mut best = (f64::INFINITY, ep.u, eq.u);
        for &(a, da) in &legs_p {
            for &(b, db) in &legs_q {
                let d = da + self.dist[a][b] + db;
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        best
    }

    pub(crate) fn distance(&self, p: (usize, f64), q: (usize, f64)) -> f64 {
        if p.0 == q.0 {
            return (p.1 - q.1).abs();
        }
        self.route(p, q).0
    }

    /// Location at distance `along` from vertex `from` on edge `edge`.
    fn on_edge_from(&self, edge: usize, from: usize, along: f64) -> (usize, f64) {
        let e = self.edges[edge];
        let along = along.clamp(0.0, e.length);
        if e.u == from {
            (edge, along)
        } else {
            (edge, e.length - along)
        }
    }

    /// The point at arclength `s` from `p` on the geodesic towards `q`.
    pub(crate) fn walk(&self, p: (usize, f64), q: (usize, f64), s: f64) -> (usize, f64) {
        if p.0 == q.0 {
            let dir = (q.1 - p.1).signum();
            return (p.0, p.1 + dir * s.min((q.1 - p.1).abs()));
        }
        let (_, a, b) = self.route(p, q);
        let ep = self.edges[p.0];
        let to_a = if a == ep.u { p.1 } else { ep.length - p.1 };
        if s <= to_a {
            return if a == ep.u { (p.0, p.1 - s) } else { (p.0, p.1 + s) };
        }
        let mut rest = s - to_a;
        let mut at = a;
        while at != b {
            let (next, e) = self.hop[at][b];
            let len = self.edges[e].length;
            if rest <= len {
                return self.on_edge_from(e, at, rest);
            }
            rest -= len;
            at = next;
        }
        let eq = self.edges[q.0];
        let to_q = if b == eq.u { q.1 } else { eq.length - q.1 };
        self.on_edge_from(q.0, b, rest.min(to_q))
    }

    /// Walk `len` beyond `y`, moving away from `x`, taking random branches
    /// at vertices. Stops early at a leaf.
    pub(crate) fn extend<R: Rng + ?Sized>(
        &self,
        x: (usize, f64),
        y: (usize, f64),
        len: f64,
        rng: &mut R,
    ) -> (usize, f64) {
        let ey = self.edges[y.0];
        let mut rest = len;
        let (mut at, mut came) = match self.vertex_at(y.0, y.1) {
            Some(v) => (v, usize::MAX),
            None => {
                // continue along the edge, away from x
                let gain_u = self.dist_from_vertex(x, ey.u) - y.1;
                let gain_v = self.dist_from_vertex(x, ey.v) - (ey.length - y.1);
                let (target, room) = if gain_u >= gain_v {
                    (ey.u, y.1)
                } else {
                    (ey.v, ey.length - y.1)
                };
                if rest <= room {
                    let from = if target == ey.u { ey.v } else { ey.u };
                    return self.on_edge_from(y.0, from, ey.length - room + rest);
                }
                rest -= room;
                (target, y.0)
            }
        };
        loop {
            let here = self.dist_from_vertex(x, at);
            let options: Vec<(usize, usize)> = self.adjacency[at]
                .iter()
                .copied()
                .filter(|&(nb, e)| {
                    // the whole edge must lead away from x, not back across it
                    e != came && self.dist_from_vertex(x, nb) >= here + self.edges[e].length * (1.0 - 1e-12)
                })
                .collect();
            if options.is_empty() || rest <= 0.0 {
                return self.vertex_location(at);
            }
            let (nb, e) = options[rng.gen_range(0..options.len())];
            let len_e = self.edges[e].length;
            if rest <= len_e {
                return self.on_edge_from(e, at, rest);
            }
            rest -= len_e;
            came = e;
            at = nb;
        }
    }

    fn dist_from_vertex(&self, p: (usize, f64), w: usize) -> f64 {
        self.distance_to_vertex(p.0, p.1, w)
    }
}
