//! Order parameter, heading span and interaction-graph connectivity.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{pair_distance, SimConfig, SwarmState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("window [{start}, {end}] exceeds trace of length {len}")]
    WindowOutOfRange { start: usize, end: usize, len: usize },
    #[error("graphs in window have different vertex counts")]
    VertexMismatch,
}

/// `φ = |Σ (cos θ_i, sin θ_i)| / n`.
pub fn order_parameter(headings: &[f64]) -> f64 {
    if headings.is_empty() {
        return 0.0;
    }
    let (s, c) = headings
        .iter()
        .fold((0.0, 0.0), |(s, c), th| (s + th.sin(), c + th.cos()));
    (s.hypot(c) / headings.len() as f64).min(1.0)
}

/// Shortest covering arc as `(start, length)`: the arc `[start, start + length]`
/// (taken mod 2π) contains every heading.
pub fn covering_arc(headings: &[f64]) -> (f64, f64) {
    if headings.is_empty() {
        return (0.0, 0.0);
    }
    let mut sorted = headings.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // gap before sorted[0] wraps around from the last heading
    let mut best_gap = sorted[0] + TAU - sorted[n - 1];
    let mut start = sorted[0];
    for w in sorted.windows(2) {
        let gap = w[1] - w[0];
        if gap > best_gap {
            best_gap = gap;
            start = w[1];
        }
    }
    (start, (TAU - best_gap).max(0.0))
}

/// `d_θ`: 2π minus the largest circular gap between sorted headings.
pub fn heading_span(headings: &[f64]) -> f64 {
    covering_arc(headings).1
}

/// Midpoint of the shortest covering arc, wrapped into `[-π, π)`.
pub fn arc_midpoint(headings: &[f64]) -> f64 {
    let (start, len) = covering_arc(headings);
    crate::dynamics::wrap_angle(start + len / 2.0)
}

/// Graph with an edge `j -> i` whenever `j` lies within `r_i` of `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraphSnapshot {
    n: usize,
    /// `incoming[i]` = sorted neighbours `j` of `i` (including `i`).
    incoming: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Weak,
    Strong,
}

impl DirectedGraphSnapshot {
    /// Build from explicit edges `(from, to)`; self-loops are always added.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut incoming: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(j, i) in edges {
            incoming[i].push(j);
        }
        for v in &mut incoming {
            v.sort_unstable();
            v.dedup();
        }
        Self { n, incoming }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.incoming[to].binary_search(&from).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.incoming
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (j, i)))
    }

    /// Edges running between the two agent sets, in either direction.
    pub fn cross_edges(&self, a: &[usize], b: &[usize]) -> usize {
        let mut count = 0;
        for &i in a {
            for &j in b {
                count += self.has_edge(i, j) as usize + self.has_edge(j, i) as usize;
            }
        }
        count
    }

    fn outgoing(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for (j, i) in self.edges() {
            out[j].push(i);
        }
        out
    }
}

pub fn interaction_graph(cfg: &SimConfig, state: &SwarmState) -> DirectedGraphSnapshot {
    let n = state.n();
    let incoming = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| pair_distance(cfg, state.positions[i], state.positions[j]) <= cfg.radius(i))
                .collect()
        })
        .collect();
    DirectedGraphSnapshot { n, incoming }
}

struct UnionFind {
    parent: Vec<usize>,
    components: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            components: n,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
            self.components -= 1;
        }
    }
}

fn reaches_all(adj: &[Vec<usize>], root: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![root];
    seen[root] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == adj.len()
}

pub fn connectivity(g: &DirectedGraphSnapshot, mode: Connectivity) -> bool {
    if g.n <= 1 {
        return true;
    }
    match mode {
        Connectivity::Weak => {
            let mut uf = UnionFind::new(g.n);
            for (j, i) in g.edges() {
                uf.union(j, i);
            }
            uf.components == 1
        }
        // forward reachability from 0 over out-edges and over in-edges
        Connectivity::Strong => reaches_all(&g.outgoing(), 0) && reaches_all(&g.incoming, 0),
    }
}

/// Is the undirected union of `graphs[start..=start + window]` connected?
pub fn window_union_connected(
    graphs: &[DirectedGraphSnapshot],
    start: usize,
    window: usize,
) -> Result<bool, MetricsError> {
    let end = start + window;
    if end >= graphs.len() {
        return Err(MetricsError::WindowOutOfRange {
            start,
            end,
            len: graphs.len(),
        });
    }
    let n = graphs[start].n;
    let mut uf = UnionFind::new(n);
    for g in &graphs[start..=end] {
        if g.n != n {
            return Err(MetricsError::VertexMismatch);
        }
        for (j, i) in g.edges() {
            uf.union(j, i);
        }
    }
    Ok(n <= 1 || uf.components == 1)
}

/// Per-sample metrics of a trace.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub t: Vec<usize>,
    pub phi: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub weak_connected: Vec<bool>,
}

impl MetricSeries {
    pub fn push(&mut self, cfg: &SimConfig, state: &SwarmState) {
        self.t.push(state.t);
        self.phi.push(order_parameter(&state.headings));
        self.d_theta.push(heading_span(&state.headings));
        self.weak_connected
            .push(connectivity(&interaction_graph(cfg, state), Connectivity::Weak));
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Angle `θ` measured as a signed distance from `c` along the circle, in `[-π, π)`.
pub fn angular_offset(theta: f64, c: f64) -> f64 {
    crate::dynamics::wrap_angle(theta - c)
}

/// Largest pairwise circular distance between headings.
pub fn max_pairwise_difference(headings: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for (k, a) in headings.iter().enumerate() {
        for b in &headings[k + 1..] {
            best = best.max(angular_offset(*a, *b).abs());
        }
    }
    best.min(PI)
}
