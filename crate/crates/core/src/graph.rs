//! Communication topology and the graph quantities the privacy analysis
//! depends on: vertex connectivity, f-admissibility, the signed incidence
//! matrix of the bidirected graph, spanning trees over good agents,
//! privacy-loss detection and doubly stochastic mixing weights.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::Polynomial;

/// Directed communication link `(sender, receiver)`.
pub type DirectedEdge = (usize, usize);

#[derive(Deserialize, Serialize)]
struct TopologyJson {
    nodes: usize,
    edges: Vec<[usize; 2]>,
}

/// Undirected agent graph. Every undirected edge stands for the two directed
/// links between its endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologyJson", into = "TopologyJson")]
pub struct Topology {
    node_count: usize,
    /// Sorted, each pair stored as `(lo, hi)`.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl TryFrom<TopologyJson> for Topology {
    type Error = Error;

    fn try_from(raw: TopologyJson) -> Result<Self> {
        Topology::new(raw.nodes, raw.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<Topology> for TopologyJson {
    fn from(t: Topology) -> Self {
        TopologyJson {
            nodes: t.node_count,
            edges: t.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl Topology {
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidTopology(format!("self-loop at node {a}")));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidTopology(format!(
                    "edge ({a},{b}) references a node outside 0..{node_count}"
                )));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidTopology(format!("duplicate edge ({a},{b})")));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { node_count, edges, adjacency })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
        Self::new(n, edges).expect("complete graph is well formed")
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i))).expect("path graph is well formed")
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Undirected edges as `(lo, hi)` pairs in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Directed links in incidence-column order: every edge oriented
    /// low-to-high first, then the same edges reversed.
    pub fn directed_edges(&self) -> Vec<DirectedEdge> {
        self.edges
            .iter()
            .copied()
            .chain(self.edges.iter().map(|&(a, b)| (b, a)))
            .collect()
    }

    /// Minimum vertex degree.
    pub fn min_degree(&self) -> usize {
        (0..self.node_count).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let all: Vec<usize> = (0..self.node_count).collect();
        self.components(&all).len() <= 1
    }

    /// Connected components of the subgraph induced by `over`, each sorted,
    /// ordered by smallest member.
    pub fn components(&self, over: &[usize]) -> Vec<Vec<usize>> {
        let members: BTreeSet<usize> = over.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in &members {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in self.neighbors(u) {
                    if members.contains(&w) && seen.insert(w) {
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Vertex connectivity via Menger's theorem on the node-split flow network.
    ///
    /// Complete graphs return `S - 1`.
    pub fn vertex_connectivity(&self) -> Result<usize> {
        let n = self.node_count;
        if n < 2 {
            return Ok(0);
        }
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        let mut best = n - 1;
        for s in 0..n {
            for t in s + 1..n {
                if self.has_edge(s, t) {
                    continue;
                }
                best = best.min(self.vertex_disjoint_paths(s, t, best));
                if best == 1 {
                    return Ok(1);
                }
            }
        }
        Ok(best)
    }

    /// Number of internally vertex-disjoint `s`-`t` paths, capped at `limit`.
    fn vertex_disjoint_paths(&self, s: usize, t: usize, limit: usize) -> usize {
        let n = self.node_count;
        let mut net = FlowNetwork::new(2 * n);
        let big = n;
        for v in 0..n {
            let cap = if v == s || v == t { big } else { 1 };
            net.add_arc(2 * v, 2 * v + 1, cap);
        }
        for &(a, b) in &self.edges {
            net.add_arc(2 * a + 1, 2 * b, big);
            net.add_arc(2 * b + 1, 2 * a, big);
        }
        net.max_flow(2 * s + 1, 2 * t, limit)
    }

    /// Edge connectivity from unit-capacity max flow.
    pub fn edge_connectivity(&self) -> Result<usize> {
        let n = self.node_count;
        if n < 2 {
            return Ok(0);
        }
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        let mut best = usize::MAX;
        for t in 1..n {
            let mut net = FlowNetwork::new(n);
            for &(a, b) in &self.edges {
                net.add_arc(a, b, 1);
                net.add_arc(b, a, 1);
            }
            best = best.min(net.max_flow(0, t, best));
        }
        Ok(best)
    }

    /// `kappa(G) > f`.
    pub fn is_f_admissible(&self, f: usize) -> Result<bool> {
        Ok(self.vertex_connectivity()? > f)
    }

    /// Same node ids with every edge touching the coalition removed.
    pub fn delete_adversary_edges(&self, coalition: &BTreeSet<usize>) -> Topology {
        let kept = self
            .edges
            .iter()
            .copied()
            .filter(|(a, b)| !coalition.contains(a) && !coalition.contains(b));
        Topology::new(self.node_count, kept).expect("subgraph of a valid topology")
    }

    /// Nodes not in the coalition, ascending.
    pub fn good_nodes(&self, coalition: &BTreeSet<usize>) -> Vec<usize> {
        (0..self.node_count).filter(|v| !coalition.contains(v)).collect()
    }

    /// BFS spanning tree of the subgraph induced by `over`, rooted at its
    /// smallest node. Edges are returned as `(parent, child)`.
    pub fn spanning_tree(&self, over: &[usize]) -> Result<Vec<(usize, usize)>> {
        let members: BTreeSet<usize> = over.iter().copied().collect();
        let Some(&root) = members.iter().next() else {
            return Ok(Vec::new());
        };
        let mut seen = BTreeSet::from([root]);
        let mut queue = VecDeque::from([root]);
        let mut tree = Vec::with_capacity(members.len().saturating_sub(1));
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if members.contains(&w) && seen.insert(w) {
                    tree.push((u, w));
                    queue.push_back(w);
                }
            }
        }
        if seen.len() != members.len() {
            return Err(Error::NotConnected(members.into_iter().collect()));
        }
        Ok(tree)
    }

    /// Topologies that expose good agents (or groups of them) to the coalition.
    pub fn detect_privacy_failures(&self, coalition: &BTreeSet<usize>) -> FailureReport {
        let f = coalition.len();
        let good = self.good_nodes(coalition);
        let individual = good
            .iter()
            .copied()
            .filter(|&v| self.degree(v) < f + 1)
            .collect();
        let comps = self.delete_adversary_edges(coalition).components(&good);
        let groups = if comps.len() > 1 { comps } else { Vec::new() };
        FailureReport { coalition: coalition.iter().copied().collect(), individual, groups }
    }

    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        IncidenceMatrix::new(self.node_count, self.directed_edges())
    }
}

/// Privacy-loss findings for a coalition.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureReport {
    pub coalition: Vec<usize>,
    /// Good agents with degree below `|coalition| + 1`.
    pub individual: Vec<usize>,
    /// Components of the good subgraph when removing coalition edges splits it.
    pub groups: Vec<Vec<usize>>,
}

impl FailureReport {
    pub fn is_empty(&self) -> bool {
        self.individual.is_empty() && self.groups.is_empty()
    }
}

/// Signed incidence matrix of the bidirected graph, `B = [B_C, -B_C]`.
///
/// The column of link `(I, J)` carries `+1` at the receiver `J` and `-1` at
/// the sender `I`, so `B R` adds received shares and subtracts sent ones.
#[derive(Clone, Debug, PartialEq)]
pub struct IncidenceMatrix {
    rows: usize,
    columns: Vec<DirectedEdge>,
    column_index: BTreeMap<DirectedEdge, usize>,
}

impl IncidenceMatrix {
    pub fn new(rows: usize, columns: Vec<DirectedEdge>) -> Self {
        let column_index = columns.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        Self { rows, columns, column_index }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> &[DirectedEdge] {
        &self.columns
    }

    pub fn column_of(&self, edge: DirectedEdge) -> Option<usize> {
        self.column_index.get(&edge).copied()
    }

    pub fn entry(&self, row: usize, col: usize) -> i8 {
        let (from, to) = self.columns[col];
        if row == to {
            1
        } else if row == from {
            -1
        } else {
            0
        }
    }

    /// Dense real copy, handy for linear solves.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.columns.len(), |r, c| self.entry(r, c) as f64)
    }

    /// Matrix-vector product with a vector of polynomials indexed by column.
    pub fn apply(&self, column_values: &[Polynomial]) -> Vec<Polynomial> {
        assert_eq!(column_values.len(), self.columns.len());
        let mut out = vec![Polynomial::zero(); self.rows];
        for (col, value) in column_values.iter().enumerate() {
            for (row, slot) in out.iter_mut().enumerate() {
                match self.entry(row, col) {
                    1 => *slot += value,
                    -1 => *slot -= value,
                    _ => {}
                }
            }
        }
        out
    }
}

/// Doubly stochastic fusion weights whose sparsity matches the topology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingMatrix {
    entries: Vec<Vec<f64>>,
    eta: f64,
}

pub const STOCHASTIC_TOL: f64 = 1e-12;

impl MixingMatrix {
    /// Validates nonnegativity, unit row and column sums and that the
    /// nonzero pattern equals the diagonal plus the topology's edges.
    pub fn new(entries: Vec<Vec<f64>>, topology: &Topology) -> Result<Self> {
        let n = topology.node_count();
        if entries.len() != n || entries.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMixing(format!("matrix must be {n}x{n}")));
        }
        for (i, row) in entries.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidMixing(format!(
                        "entry [{i}][{j}] = {w} is not a nonnegative number"
                    )));
                }
                let linked = i == j || topology.has_edge(i, j);
                if linked != (w > 0.0) {
                    return Err(Error::InvalidMixing(format!(
                        "sparsity: entry [{i}][{j}] = {w} but nodes are {}linked",
                        if linked { "" } else { "not " }
                    )));
                }
            }
        }
        for i in 0..n {
            let row: f64 = entries[i].iter().sum();
            if (row - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidMixing(format!(
                    "not doubly stochastic: row {i} sums to {row}"
                )));
            }
            let col: f64 = entries.iter().map(|r| r[i]).sum();
            if (col - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidMixing(format!(
                    "not doubly stochastic: column {i} sums to {col}"
                )));
            }
        }
        let eta = entries
            .iter()
            .flatten()
            .copied()
            .filter(|&w| w > 0.0)
            .fold(f64::INFINITY, f64::min);
        Ok(Self { entries, eta })
    }

    /// Metropolis-Hastings weights: `1 / (1 + max(deg I, deg J))` on edges,
    /// remainder on the diagonal.
    pub fn metropolis(topology: &Topology) -> Result<Self> {
        if !topology.is_connected() {
            return Err(Error::Disconnected);
        }
        let n = topology.node_count();
        let mut entries = vec![vec![0.0; n]; n];
        for &(a, b) in topology.edges() {
            let w = 1.0 / (1 + topology.degree(a).max(topology.degree(b))) as f64;
            entries[a][b] = w;
            entries[b][a] = w;
        }
        for (i, row) in entries.iter_mut().enumerate() {
            let off: f64 = row.iter().sum();
            row[i] = 1.0 - off;
        }
        Self::new(entries, topology)
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i]
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    /// Smallest nonzero weight.
    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Unit-capacity style flow network solved with BFS augmenting paths.
struct FlowNetwork {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<usize>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        Self { head: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new() }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: usize) {
        self.head[from].push(self.to.len());
        self.to.push(to);
        self.cap.push(cap);
        self.head[to].push(self.to.len());
        self.to.push(from);
        self.cap.push(0);
    }

    /// Max flow from `s` to `t`, stopping early once `limit` is reached.
    fn max_flow(&mut self, s: usize, t: usize, limit: usize) -> usize {
        let mut flow = 0;
        while flow < limit {
            let mut via = vec![usize::MAX; self.head.len()];
            let mut queue = VecDeque::from([s]);
            let mut reached = false;
            'bfs: while let Some(u) = queue.pop_front() {
                for &arc in &self.head[u] {
                    let w = self.to[arc];
                    if self.cap[arc] > 0 && w != s && via[w] == usize::MAX {
                        via[w] = arc;
                        if w == t {
                            reached = true;
                            break 'bfs;
                        }
                        queue.push_back(w);
                    }
                }
            }
            if !reached {
                break;
            }
            let mut bottleneck = usize::MAX;
            let mut v = t;
            while v != s {
                let arc = via[v];
                bottleneck = bottleneck.min(self.cap[arc]);
                v = self.to[arc ^ 1];
            }
            let mut v = t;
            while v != s {
                let arc = via[v];
                self.cap[arc] -= bottleneck;
                self.cap[arc ^ 1] += bottleneck;
                v = self.to[arc ^ 1];
            }
            flow += bottleneck;
        }
        flow.min(limit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    /// Smallest vertex subset whose removal disconnects the graph (or leaves
    /// a single vertex), found by exhaustive search.
    fn brute_force_connectivity(g: &Topology) -> usize {
        let n = g.node_count();
        for k in 0..n {
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let rest: Vec<usize> = (0..n).filter(|v| mask & (1 << v) == 0).collect();
                if rest.len() <= 1 || g.components(&rest).len() > 1 {
                    return k;
                }
            }
        }
        n - 1
    }

    fn random_connected(rng: &mut ChaCha8Rng, n: usize) -> Topology {
        loop {
            let p = rng.gen_range(0.2..0.9);
            let edges: Vec<_> = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .filter(|_| rng.gen_bool(p))
                .collect();
            let g = Topology::new(n, edges).unwrap();
            if g.is_connected() {
                return g;
            }
        }
    }

    fn fig4a() -> Topology {
        Topology::new(5, [(0, 1), (0, 2), (1, 2), (1, 4), (2, 4), (2, 3)]).unwrap()
    }

    fn fig4b() -> Topology {
        Topology::new(6, [(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4), (3, 5), (4, 5)]).unwrap()
    }

    #[test]
    fn rejects_malformed_edges() {
        assert!(Topology::new(3, [(1, 1)]).is_err());
        assert!(Topology::new(3, [(0, 3)]).is_err());
        assert!(Topology::new(3, [(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn connectivity_examples() {
        assert_eq!(Topology::complete(3).vertex_connectivity().unwrap(), 2);
        assert_eq!(Topology::path(3).vertex_connectivity().unwrap(), 1);
        assert_eq!(Topology::complete(6).vertex_connectivity().unwrap(), 5);
        let split = Topology::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(split.vertex_connectivity(), Err(Error::Disconnected)));
    }

    #[test]
    fn admissibility_examples() {
        assert!(Topology::complete(3).is_f_admissible(1).unwrap());
        assert!(!Topology::path(3).is_f_admissible(1).unwrap());
        assert!(!fig4a().is_f_admissible(1).unwrap());
    }

    #[test]
    fn min_degree_examples() {
        assert_eq!(Topology::complete(3).min_degree(), 2);
        let star = Topology::new(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(star.min_degree(), 1);
    }

    #[test]
    fn incidence_of_single_edge() {
        let b = Topology::path(2).incidence_matrix();
        assert_eq!(b.columns(), &[(0, 1), (1, 0)]);
        assert_eq!((b.entry(0, 0), b.entry(1, 0)), (-1, 1));
        assert_eq!((b.entry(0, 1), b.entry(1, 1)), (1, -1));
    }

    #[test]
    fn incidence_of_triangle() {
        let b = Topology::complete(3).incidence_matrix();
        assert_eq!(b.rows(), 3);
        assert_eq!(b.columns().len(), 6);
        for c in 0..6 {
            assert_eq!((0..3).map(|r| b.entry(r, c) as i32).sum::<i32>(), 0);
        }
        // B_C first, then its negation
        for c in 0..3 {
            for r in 0..3 {
                assert_eq!(b.entry(r, c), -b.entry(r, c + 3));
            }
        }
    }

    #[test]
    fn incidence_rows_match_direct_share_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(2..8);
            let g = random_connected(&mut rng, n);
            let b = g.incidence_matrix();
            let shares: Vec<Polynomial> = b
                .columns()
                .iter()
                .map(|_| Polynomial::random(3, 5.0, true, &mut rng))
                .collect();
            let rows = b.apply(&shares);
            for (i, row) in rows.iter().enumerate() {
                let mut direct = Polynomial::zero();
                for (col, &(_, to)) in b.columns().iter().enumerate() {
                    if to == i {
                        direct += &shares[col];
                    }
                }
                for (col, &(from, _)) in b.columns().iter().enumerate() {
                    if from == i {
                        direct -= &shares[col];
                    }
                }
                assert_eq!(row, &direct);
            }
        }
    }

    #[test]
    fn delete_adversary_edges_examples() {
        let g = Topology::complete(3).delete_adversary_edges(&set(&[0]));
        assert_eq!(g.edges(), &[(1, 2)]);
        assert_eq!(g.degree(0), 0);
    }

    #[test]
    fn good_subgraph_stays_connected_under_admissibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let n = rng.gen_range(3..8);
            let g = random_connected(&mut rng, n);
            let kappa = g.vertex_connectivity().unwrap();
            for f in 0..kappa.min(n - 1) {
                for mask in 0u32..(1 << n) {
                    if mask.count_ones() as usize > f {
                        continue;
                    }
                    let coalition: BTreeSet<usize> = (0..n).filter(|v| mask & (1 << v) != 0).collect();
                    let good = g.good_nodes(&coalition);
                    let cut = g.delete_adversary_edges(&coalition);
                    assert_eq!(cut.components(&good).len(), 1, "{g:?} {coalition:?}");
                }
            }
        }
    }

    #[test]
    fn spanning_tree_examples() {
        let t = Topology::complete(3).spanning_tree(&[0, 1, 2]).unwrap();
        assert_eq!(t, vec![(0, 1), (0, 2)]);
        let split = Topology::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(split.spanning_tree(&[0, 1, 2, 3]), Err(Error::NotConnected(_))));
        assert!(Topology::path(4).spanning_tree(&[0, 2]).is_err());
    }

    #[test]
    fn failure_report_examples() {
        let a = fig4a().detect_privacy_failures(&set(&[2]));
        assert_eq!(a.individual, vec![3]);
        let b = fig4b().detect_privacy_failures(&set(&[2]));
        assert!(b.individual.is_empty());
        assert_eq!(b.groups, vec![vec![0, 1], vec![3, 4, 5]]);
        assert!(Topology::complete(3).detect_privacy_failures(&set(&[0])).is_empty());
    }

    #[test]
    fn failure_report_json() {
        let b = fig4b().detect_privacy_failures(&set(&[2]));
        let v: serde_json::Value = serde_json::to_value(&b).unwrap();
        assert_eq!(v["groups"], serde_json::json!([[0, 1], [3, 4, 5]]));
        assert_eq!(v["individual"], serde_json::json!([]));
    }

    #[test]
    fn metropolis_examples() {
        let k3 = MixingMatrix::metropolis(&Topology::complete(3)).unwrap();
        for row in k3.entries() {
            for &w in row {
                assert!((w - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let pair = MixingMatrix::metropolis(&Topology::path(2)).unwrap();
        assert_eq!(pair.entries(), &[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert_eq!(pair.eta(), 0.5);
    }

    #[test]
    fn explicit_matrix_validation() {
        let k3 = Topology::complete(3);
        let weights = vec![vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25], vec![0.25, 0.25, 0.5]];
        assert_eq!(MixingMatrix::new(weights, &k3).unwrap().eta(), 0.25);
        let skewed = vec![vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25], vec![0.25, 0.5, 0.25]];
        let err = MixingMatrix::new(skewed, &k3).unwrap_err().to_string();
        assert!(err.contains("doubly stochastic"), "{err}");
        let p3 = Topology::path(3);
        let dense = vec![vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25], vec![0.25, 0.25, 0.5]];
        assert!(MixingMatrix::new(dense, &p3).unwrap_err().to_string().contains("sparsity"));
    }

    #[test]
    fn topology_json_shape() {
        let g: Topology = serde_json::from_str(r#"{"nodes":3,"edges":[[1,2],[0,1]]}"#).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(
            serde_json::to_string(&g).unwrap(),
            r#"{"nodes":3,"edges":[[0,1],[1,2]]}"#
        );
        assert!(serde_json::from_str::<Topology>(r#"{"nodes":2,"edges":[[0,0]]}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn connectivity_matches_brute_force_and_whitney(seed in any::<u64>(), n in 2usize..=7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_connected(&mut rng, n);
            let kappa = g.vertex_connectivity().unwrap();
            prop_assert_eq!(kappa, brute_force_connectivity(&g));
            let lambda = g.edge_connectivity().unwrap();
            prop_assert!(kappa <= lambda && lambda <= g.min_degree());
        }

        #[test]
        fn spanning_tree_is_a_tree(seed in any::<u64>(), n in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_connected(&mut rng, n);
            let all: Vec<usize> = (0..n).collect();
            let tree = g.spanning_tree(&all).unwrap();
            prop_assert_eq!(tree.len(), n - 1);
            let t = Topology::new(n, tree.iter().copied()).unwrap();
            prop_assert!(t.is_connected());
            for &(a, b) in &tree {
                prop_assert!(g.has_edge(a, b));
            }
        }

        #[test]
        fn metropolis_is_doubly_stochastic(seed in any::<u64>(), n in 2usize..=9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_connected(&mut rng, n);
            let b = MixingMatrix::metropolis(&g).unwrap();
            for i in 0..n {
                let row: f64 = b.row(i).iter().sum();
                let col: f64 = (0..n).map(|r| b.row(r)[i]).sum();
                prop_assert!((row - 1.0).abs() <= 1e-12 && (col - 1.0).abs() <= 1e-12);
            }
        }
    }
}
