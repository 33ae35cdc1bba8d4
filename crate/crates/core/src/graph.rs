//! Sparse undirected weighted graphs.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// An undirected weighted edge, stored with `u <= v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    pub fn is_self_loop(&self) -> bool {
        self.u == self.v
    }
}

/// Immutable undirected graph with dense node ids `0..n`.
///
/// Edges are kept once in canonical sorted order; the adjacency index stores
/// both directions (a self-loop appears once in its node's list).
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    self_loops_allowed: bool,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.self_loops_allowed == other.self_loops_allowed
            && self.edges == other.edges
    }
}

impl Graph {
    /// Build a graph from an edge list. Endpoints are canonicalized to
    /// `u <= v`; duplicates, non-positive weights and (unless allowed)
    /// self-loops are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>, self_loops_allowed: bool) -> Result<Self> {
        let mut canon = Vec::new();
        for e in edges {
            let (u, v) = if e.u <= e.v { (e.u, e.v) } else { (e.v, e.u) };
            if v >= n {
                return Err(Error::invalid(format!("edge ({}, {}) out of range for n = {n}", e.u, e.v)));
            }
            if !(e.w.is_finite() && e.w > 0.0) {
                return Err(Error::invalid(format!("edge ({u}, {v}) has non-positive weight {}", e.w)));
            }
            if u == v && !self_loops_allowed {
                return Err(Error::invalid(format!("self-loop on node {u}")));
            }
            canon.push(Edge { u, v, w: e.w });
        }
        canon.sort_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)));
        if let Some(pair) = canon.windows(2).find(|p| (p[0].u, p[0].v) == (p[1].u, p[1].v)) {
            return Err(Error::invalid(format!("duplicate edge ({}, {})", pair[0].u, pair[0].v)));
        }
        Ok(Self::from_canonical(n, canon, self_loops_allowed))
    }

    /// Unit-weight convenience constructor.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, pairs.iter().map(|&(u, v)| Edge { u, v, w: 1.0 }), false)
    }

    fn from_canonical(n: usize, edges: Vec<Edge>, self_loops_allowed: bool) -> Self {
        let mut counts = vec![0usize; n + 1];
        for e in &edges {
            counts[e.u] += 1;
            if !e.is_self_loop() {
                counts[e.v] += 1;
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + counts[i];
        }
        let total = offsets[n];
        let mut targets = vec![0usize; total];
        let mut weights = vec![0.0; total];
        let mut cursor = offsets.clone();
        for e in &edges {
            targets[cursor[e.u]] = e.v;
            weights[cursor[e.u]] = e.w;
            cursor[e.u] += 1;
            if !e.is_self_loop() {
                targets[cursor[e.v]] = e.u;
                weights[cursor[e.v]] = e.w;
                cursor[e.v] += 1;
            }
        }
        Self {
            n,
            edges,
            offsets,
            targets,
            weights,
            self_loops_allowed,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn self_loops_allowed(&self) -> bool {
        self.self_loops_allowed
    }

    /// Neighbors of `v` with edge weights. A self-loop yields `(v, w)` once.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Number of adjacency entries of `v` (a self-loop counts once).
    pub fn adjacency_len(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Weighted degree of every node; a self-loop contributes twice its weight.
    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for e in &self.edges {
            deg[e.u] += e.w;
            deg[e.v] += e.w;
        }
        deg
    }

    /// Sum of edge weights, self-loops counted once.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Random `d`-regular graph from the pairing model; the whole pairing is
    /// redrawn whenever it produces a self-loop or a repeated edge.
    pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Self> {
        if d >= n {
            return Err(Error::invalid(format!("degree {d} must be below node count {n}")));
        }
        if (n * d) % 2 != 0 {
            return Err(Error::invalid(format!("n * d = {} is odd", n * d)));
        }
        const MAX_ATTEMPTS: usize = 1_000_000;
        let mut rng = seed::rng(seed);
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        let mut seen = HashSet::with_capacity(n * d / 2);
        'attempt: for _ in 0..MAX_ATTEMPTS {
            stubs.shuffle(&mut rng);
            seen.clear();
            let mut edges = Vec::with_capacity(n * d / 2);
            for pair in stubs.chunks_exact(2) {
                let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                if u == v || !seen.insert((u, v)) {
                    continue 'attempt;
                }
                edges.push(Edge { u, v, w: 1.0 });
            }
            return Self::new(n, edges, false);
        }
        Err(Error::invalid(format!(
            "no simple {d}-regular graph on {n} nodes after {MAX_ATTEMPTS} pairings"
        )))
    }

    /// Serialize as `n` followed by one `u v w` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.n).unwrap();
        for e in &self.edges {
            writeln!(out, "{} {} {:?}", e.u, e.v, e.w).unwrap();
        }
        out
    }

    /// Parse the edge-list text format. `origin` is only used in error messages.
    pub fn parse_edge_list(text: &str, origin: &Path, self_loops_allowed: bool) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing node count".into()))?;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|e| parse_err(1, format!("bad node count {header:?}: {e}")))?;
        let mut edges = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 && fields.len() != 3 {
                return Err(parse_err(lineno, format!("expected `u v [w]`, got {line:?}")));
            }
            let u: usize = fields[0].parse().map_err(|e| parse_err(lineno, format!("bad node id: {e}")))?;
            let v: usize = fields[1].parse().map_err(|e| parse_err(lineno, format!("bad node id: {e}")))?;
            let w: f64 = match fields.get(2) {
                Some(s) => s.parse().map_err(|e| parse_err(lineno, format!("bad weight: {e}")))?,
                None => 1.0,
            };
            if u >= n || v >= n {
                return Err(parse_err(lineno, format!("node id out of range for n = {n}")));
            }
            if u == v && !self_loops_allowed {
                return Err(parse_err(lineno, format!("self-loop on node {u}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(parse_err(lineno, format!("non-positive weight {w}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(parse_err(lineno, format!("duplicate edge ({u}, {v})")));
            }
            edges.push(Edge { u, v, w });
        }
        Self::new(n, edges, self_loops_allowed)
    }

    pub fn load_edge_list(path: impl AsRef<Path>, self_loops_allowed: bool) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text, path, self_loops_allowed)
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_edge_list()).map_err(|e| Error::io(path, e))
    }
}
