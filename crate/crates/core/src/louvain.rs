//! Louvain community detection and the resulting coarsening hierarchy.
//!
//! Each pass runs greedy local moves on the current graph, then collapses every
//! community into one artificial node. The collapsed graph carries summed
//! inter-community weights and a self-loop holding the intra-community weight,
//! so total edge weight is preserved from level to level.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::seed;

/// Stop a local-move phase once a full pass gains less than this.
pub const MODULARITY_TOLERANCE: f64 = 1e-7;

const GAIN_EPS: f64 = 1e-12;

/// Dense community assignment `node -> 0..k`, every community non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let k = assignment.iter().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; k];
        for &c in &assignment {
            used[c] = true;
        }
        if let Some(c) = used.iter().position(|&u| !u) {
            return Err(Error::invalid(format!("community {c} of 0..{k} is empty")));
        }
        Ok(Self { assignment, k })
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
            k: n,
        }
    }

    /// Renumber arbitrary labels densely in order of first appearance.
    fn relabel(labels: &[usize]) -> Self {
        let mut map = HashMap::new();
        let assignment = labels
            .iter()
            .map(|&c| {
                let next = map.len();
                *map.entry(c).or_insert(next)
            })
            .collect();
        Self { assignment, k: map.len() }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Nodes of each community, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

/// `Σ_c [Σ_in(c)/2m − (Σ_tot(c)/2m)²]` at resolution 1.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64> {
    if p.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: p.len(),
        });
    }
    let two_m = 2.0 * g.total_weight();
    if two_m <= 0.0 {
        return Err(Error::invalid("modularity undefined on a graph without edges"));
    }
    let mut inside = vec![0.0; p.k()];
    let mut total = vec![0.0; p.k()];
    for e in g.edges() {
        let (cu, cv) = (p.community(e.u), p.community(e.v));
        total[cu] += e.w;
        total[cv] += e.w;
        if cu == cv {
            inside[cu] += 2.0 * e.w;
        }
    }
    Ok(inside
        .iter()
        .zip(&total)
        .map(|(&i, &t)| i / two_m - (t / two_m) * (t / two_m))
        .sum())
}

/// Collapse each community into one node.
pub fn coarsen(g: &Graph, p: &Partition) -> Result<Graph> {
    if p.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: p.len(),
        });
    }
    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
    for e in g.edges() {
        let (a, b) = (p.community(e.u), p.community(e.v));
        *acc.entry((a.min(b), a.max(b))).or_insert(0.0) += e.w;
    }
    Graph::new(p.k(), acc.into_iter().map(|((u, v), w)| Edge { u, v, w }), true)
}

/// Outcome of one local-move phase.
struct LocalMoves {
    partition: Partition,
    /// Modularity before the first pass, then after every pass.
    trace: Vec<f64>,
}

fn local_moves(g: &Graph, rng: &mut seed::Rng) -> LocalMoves {
    let n = g.n();
    let two_m = 2.0 * g.total_weight();
    if two_m <= 0.0 {
        return LocalMoves {
            partition: Partition::singletons(n),
            trace: Vec::new(),
        };
    }
    let k = g.degrees();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot = k.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let current = |comm: &[usize]| modularity(g, &Partition::relabel(comm)).expect("graph has edges");
    let mut trace = vec![current(&comm)];
    loop {
        for &i in &order {
            for (j, w) in g.neighbors(i) {
                if j == i {
                    continue;
                }
                let c = comm[j];
                if link[c] == 0.0 {
                    touched.push(c);
                }
                link[c] += w;
            }
            let own = comm[i];
            tot[own] -= k[i];
            let gain = |c: usize, link: &[f64]| link[c] - tot[c] * k[i] / two_m;
            let mut best = own;
            let mut best_gain = gain(own, &link);
            for &c in &touched {
                let g_c = gain(c, &link);
                if g_c > best_gain + GAIN_EPS || ((g_c - best_gain).abs() <= GAIN_EPS && c < best) {
                    best = c;
                    best_gain = g_c;
                }
            }
            tot[best] += k[i];
            comm[i] = best;
            for &c in &touched {
                link[c] = 0.0;
            }
            touched.clear();
        }
        let q = current(&comm);
        let prev = *trace.last().unwrap();
        trace.push(q);
        if q - prev < MODULARITY_TOLERANCE {
            break;
        }
    }
    LocalMoves {
        partition: Partition::relabel(&comm),
        trace,
    }
}

/// One coarsening step of the hierarchy.
#[derive(Debug, Clone)]
pub struct Level {
    /// The compressed graph (self-loops allowed).
    pub graph: Graph,
    /// Partition of the previous level's nodes (the original graph for level 0).
    pub partition: Partition,
    /// Original node ids represented by each artificial node.
    pub members: Vec<Vec<usize>>,
    /// Modularity of the previous graph before and after each local-move pass.
    pub modularity_trace: Vec<f64>,
}

impl Level {
    pub fn size(&self) -> usize {
        self.graph.n()
    }

    /// Artificial node of every original node.
    pub fn membership(&self, original_n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; original_n];
        for (c, nodes) in self.members.iter().enumerate() {
            for &v in nodes {
                out[v] = c;
            }
        }
        out
    }
}

/// Size-decreasing list of coarsened graphs with back-mapping to original nodes.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    original_n: usize,
    levels: Vec<Level>,
}

impl Hierarchy {
    pub fn original_n(&self) -> usize {
        self.original_n
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &Level {
        &self.levels[i]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Level::size).collect()
    }

    pub fn admissible_levels(&self, limit: usize) -> Vec<usize> {
        admissible_levels(&self.sizes(), limit)
    }

    fn push(&mut self, prev_graph: &Graph, partition: Partition, trace: Vec<f64>) -> Result<()> {
        let graph = coarsen(prev_graph, &partition)?;
        let members = match self.levels.last() {
            None => partition.members(),
            Some(prev) => partition
                .members()
                .into_iter()
                .map(|group| {
                    let mut nodes: Vec<usize> = group.iter().flat_map(|&a| prev.members[a].iter().copied()).collect();
                    nodes.sort_unstable();
                    nodes
                })
                .collect(),
        };
        self.levels.push(Level {
            graph,
            partition,
            members,
            modularity_trace: trace,
        });
        Ok(())
    }

    /// Rebuild a hierarchy from per-level partitions (as written by
    /// [`Hierarchy::write_partitions`]).
    pub fn from_partitions(g: &Graph, partitions: Vec<Partition>) -> Result<Self> {
        let mut h = Hierarchy {
            original_n: g.n(),
            levels: Vec::new(),
        };
        let mut current = g.clone();
        for p in partitions {
            if p.len() != current.n() {
                return Err(Error::DimensionMismatch {
                    expected: current.n(),
                    actual: p.len(),
                });
            }
            h.push(&current, p, Vec::new())?;
            current = h.levels.last().unwrap().graph.clone();
        }
        Ok(h)
    }

    /// Write `level_<i>.txt` files of `node community` lines into `dir`.
    pub fn write_partitions(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::new();
        for (i, level) in self.levels.iter().enumerate() {
            let mut text = String::new();
            for (v, &c) in level.partition.assignment().iter().enumerate() {
                writeln!(text, "{v} {c}").unwrap();
            }
            let path = dir.join(format!("level_{i}.txt"));
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            paths.push(path);
        }
        Ok(paths)
    }

    /// Load the `level_<i>.txt` files from `dir` in index order.
    pub fn read_partitions(dir: &Path) -> Result<Vec<Partition>> {
        let mut out = Vec::new();
        for i in 0.. {
            let path = dir.join(format!("level_{i}.txt"));
            if !path.exists() {
                break;
            }
            out.push(read_partition(&path)?);
        }
        Ok(out)
    }
}

pub fn read_partition(path: &Path) -> Result<Partition> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 {
            return Err(err(format!("expected `node community`, got {line:?}")));
        }
        let v: usize = f[0].parse().map_err(|e| err(format!("bad node: {e}")))?;
        let c: usize = f[1].parse().map_err(|e| err(format!("bad community: {e}")))?;
        if v != labels.len() {
            return Err(err(format!("expected node {}, got {v}", labels.len())));
        }
        labels.push(c);
    }
    Partition::new(labels)
}

/// Run Louvain on `g`. The first level is always present (all singletons if no
/// move improves modularity); later levels are added while a pass still
/// merges communities.
pub fn detect(g: &Graph, seed: u64) -> Result<Hierarchy> {
    if g.n() == 0 {
        return Err(Error::invalid("cannot decompose an empty graph"));
    }
    let mut rng = seed::rng(seed);
    let mut h = Hierarchy {
        original_n: g.n(),
        levels: Vec::new(),
    };
    let mut current = g.clone();
    loop {
        let LocalMoves { partition, trace } = local_moves(&current, &mut rng);
        let gain = match (trace.first(), trace.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        };
        let improved = gain >= MODULARITY_TOLERANCE && partition.k() < current.n();
        if !improved {
            if h.levels.is_empty() {
                h.push(&current, Partition::singletons(current.n()), trace)?;
            }
            break;
        }
        h.push(&current, partition, trace)?;
        current = h.levels.last().unwrap().graph.clone();
    }
    Ok(h)
}

/// Indices of levels whose size fits under `limit`, in order. An empty
/// result is logged as a warning.
pub fn admissible_levels(sizes: &[usize], limit: usize) -> Vec<usize> {
    let out: Vec<usize> = sizes
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s <= limit)
        .map(|(i, _)| i)
        .collect();
    if out.is_empty() {
        log::warn!(
            "no hierarchy level fits under the annealer limit {limit} (coarsest has {} nodes)",
            sizes.last().copied().unwrap_or(0)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_triangles(bridge: bool) -> Graph {
        let mut pairs = vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)];
        if bridge {
            pairs.push((2, 3));
        }
        Graph::from_pairs(6, &pairs).unwrap()
    }

    pub(crate) fn two_cliques_with_bridge() -> Graph {
        let mut pairs = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in i + 1..5 {
                    pairs.push((base + i, base + j));
                }
            }
        }
        pairs.push((4, 5));
        Graph::from_pairs(10, &pairs).unwrap()
    }

    #[test]
    fn modularity_examples() {
        let g = two_triangles(false);
        assert_eq!(modularity(&g, &Partition::new(vec![0; 6]).unwrap()).unwrap(), 0.0);
        let split = Partition::new(vec![0, 0, 0, 1, 1, 1]).unwrap();
        assert!((modularity(&g, &split).unwrap() - 0.5).abs() < 1e-15);
        let k4 = Graph::random_regular(4, 3, 0).unwrap();
        // each singleton: −(3/12)², four of them
        let q = modularity(&k4, &Partition::singletons(4)).unwrap();
        assert!((q + 0.25).abs() < 1e-15);
        assert!(modularity(&Graph::new(3, [], false).unwrap(), &Partition::singletons(3)).is_err());
    }

    #[test]
    fn coarsen_examples() {
        let g = two_triangles(true);
        let c = coarsen(&g, &Partition::new(vec![0, 0, 0, 1, 1, 1]).unwrap()).unwrap();
        assert_eq!(c.n(), 2);
        let w: Vec<_> = c.edges().iter().map(|e| (e.u, e.v, e.w)).collect();
        assert_eq!(w, vec![(0, 0, 3.0), (0, 1, 1.0), (1, 1, 3.0)]);

        let id = coarsen(&g, &Partition::singletons(6)).unwrap();
        assert_eq!(id.edges(), g.edges());

        let one = coarsen(&g, &Partition::new(vec![0; 6]).unwrap()).unwrap();
        assert_eq!(one.n(), 1);
        assert_eq!(one.edges(), &[Edge { u: 0, v: 0, w: 7.0 }]);
    }

    #[test]
    fn two_cliques_split_at_top_level() {
        let g = two_cliques_with_bridge();
        // exhaustive check that the clique split is the best two-block partition
        let split = Partition::new((0..10).map(|v| usize::from(v >= 5)).collect()).unwrap();
        let best_q = modularity(&g, &split).unwrap();
        for mask in 1u32..(1 << 10) - 1 {
            let p = Partition::relabel(&(0..10).map(|v| ((mask >> v) & 1) as usize).collect::<Vec<_>>());
            assert!(modularity(&g, &p).unwrap() <= best_q + 1e-12);
        }
        for seed in 0..10 {
            let h = detect(&g, seed).unwrap();
            let top = h.levels().last().unwrap();
            assert_eq!(top.size(), 2, "seed {seed}");
            let mut groups = top.members.clone();
            groups.sort();
            assert_eq!(groups, vec![vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8, 9]]);
        }
    }

    #[test]
    fn edgeless_graph_gives_one_trivial_level() {
        let g = Graph::new(5, [], false).unwrap();
        let h = detect(&g, 3).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.level(0).partition, Partition::singletons(5));
    }

    #[test]
    fn admissible_level_filter() {
        let sizes = [67146, 30935, 14641, 7013];
        assert_eq!(admissible_levels(&sizes, 100_000), vec![0, 1, 2, 3]);
        assert_eq!(admissible_levels(&sizes, 20_000), vec![2, 3]);
        assert!(admissible_levels(&sizes, 1000).is_empty());
    }

    #[test]
    fn partition_rejects_gaps() {
        assert!(Partition::new(vec![0, 2]).is_err());
        assert_eq!(Partition::new(vec![1, 0, 1]).unwrap().k(), 2);
    }

    #[test]
    fn partition_files_round_trip() {
        let g = Graph::random_regular(200, 3, 5).unwrap();
        let h = detect(&g, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        h.write_partitions(dir.path()).unwrap();
        let back = Hierarchy::from_partitions(&g, Hierarchy::read_partitions(dir.path()).unwrap()).unwrap();
        assert_eq!(back.sizes(), h.sizes());
        for (a, b) in back.levels().iter().zip(h.levels()) {
            assert_eq!(a.members, b.members);
            assert_eq!(a.graph, b.graph);
        }
    }

    fn check_hierarchy(g: &Graph, h: &Hierarchy) {
        let mut prev_size = g.n();
        let mut prev_graph = g.clone();
        let mut prev_members: Vec<Vec<usize>> = (0..g.n()).map(|v| vec![v]).collect();
        for (i, level) in h.levels().iter().enumerate() {
            assert!(level.size() <= prev_size);
            if i > 0 {
                assert!(level.size() < prev_size);
            }
            assert_eq!(level.partition.len(), prev_size);
            // original node sets partition V_P
            let mut seen = vec![false; g.n()];
            for nodes in &level.members {
                assert!(!nodes.is_empty());
                for &v in nodes {
                    assert!(!seen[v]);
                    seen[v] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
            // each set is a union of previous-level sets
            for (a, group) in level.partition.members().iter().enumerate() {
                let mut union: Vec<usize> = group.iter().flat_map(|&b| prev_members[b].clone()).collect();
                union.sort_unstable();
                assert_eq!(union, level.members[a]);
            }
            for w in level.modularity_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
            assert!((level.graph.total_weight() - prev_graph.total_weight()).abs() < 1e-9);
            prev_size = level.size();
            prev_graph = level.graph.clone();
            prev_members = level.members.clone();
        }
    }

    #[test]
    fn thousand_node_hierarchy() {
        let g = Graph::random_regular(1000, 3, 7).unwrap();
        let h = detect(&g, 7).unwrap();
        assert!(h.len() >= 2);
        assert!(h.sizes().windows(2).all(|w| w[1] < w[0]));
        assert!(h.sizes()[0] < 1000);
        check_hierarchy(&g, &h);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn hierarchy_invariants(half_n in 10usize..150, d in 2usize..5, seed in any::<u64>()) {
            let g = Graph::random_regular(2 * half_n, d, seed).unwrap();
            let h = detect(&g, seed ^ 0xabc).unwrap();
            check_hierarchy(&g, &h);
            prop_assert_eq!(h.sizes(), detect(&g, seed ^ 0xabc).unwrap().sizes());
        }
    }
}
