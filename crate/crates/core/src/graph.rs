//! Fixed physical fiber topology and hop-count shortest-path routing.
//!
//! The physical graph is undirected; every undirected link is a fiber pair,
//! one wavelength pool per direction. Shortest paths use unit weights and
//! break ties toward the lexicographically smallest node sequence, which a
//! breadth-first search over ascending neighbor lists yields directly.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Upper bound on pairing attempts before regular-graph generation gives up.
pub const MAX_GENERATION_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no {degree}-regular graph on {nodes} nodes (need degree >= 2, degree < nodes, nodes*degree even)")]
    Infeasible { nodes: usize, degree: usize },
    #[error(
        "no connected simple {degree}-regular graph on {nodes} nodes after {attempts} attempts"
    )]
    GenerationFailed {
        nodes: usize,
        degree: usize,
        attempts: usize,
    },
    #[error("link ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("link ({0}, {1}) appears more than once")]
    DuplicateLink(usize, usize),
    #[error("link ({u}, {v}) references a node outside 0..{nodes}")]
    NodeOutOfRange { u: usize, v: usize, nodes: usize },
    #[error("topology is not connected")]
    Disconnected,
    #[error("topology needs at least one node and one wavelength per fiber")]
    Empty,
    #[error("edge list line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected, connected fiber graph with a per-direction wavelength budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalTopology {
    node_count: usize,
    wavelengths_per_fiber: u32,
    /// Links as `(u, v)` with `u < v`, sorted.
    links: Vec<(usize, usize)>,
    /// Ascending neighbor lists.
    adjacency: Vec<Vec<usize>>,
    link_index: HashMap<(usize, usize), usize>,
}

impl PhysicalTopology {
    pub fn new(
        node_count: usize,
        links: impl IntoIterator<Item = (usize, usize)>,
        wavelengths_per_fiber: u32,
    ) -> Result<Self, GraphError> {
        if node_count == 0 || wavelengths_per_fiber == 0 {
            return Err(GraphError::Empty);
        }
        let mut normalized = Vec::new();
        for (u, v) in links {
            if u >= node_count || v >= node_count {
                return Err(GraphError::NodeOutOfRange {
                    u,
                    v,
                    nodes: node_count,
                });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u, v));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateLink(w[0].0, w[0].1));
        }

        let mut adjacency = vec![Vec::new(); node_count];
        let mut link_index = HashMap::with_capacity(normalized.len());
        for (idx, &(u, v)) in normalized.iter().enumerate() {
            adjacency[u].push(v);
            adjacency[v].push(u);
            link_index.insert((u, v), idx);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let topo = Self {
            node_count,
            wavelengths_per_fiber,
            links: normalized,
            adjacency,
            link_index,
        };
        if !is_connected(&topo.adjacency) {
            return Err(GraphError::Disconnected);
        }
        Ok(topo)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn wavelengths_per_fiber(&self) -> u32 {
        self.wavelengths_per_fiber
    }

    /// Same fiber graph with a different per-direction wavelength budget.
    pub fn with_wavelengths(mut self, wavelengths_per_fiber: u32) -> Result<Self, GraphError> {
        if wavelengths_per_fiber == 0 {
            return Err(GraphError::Empty);
        }
        self.wavelengths_per_fiber = wavelengths_per_fiber;
        Ok(self)
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Number of directed fibers: two per undirected link.
    pub fn directed_fiber_count(&self) -> usize {
        2 * self.links.len()
    }

    /// Identifier of the directed fiber `u -> v`, if the link exists.
    pub fn directed_fiber(&self, u: usize, v: usize) -> Option<usize> {
        let idx = *self.link_index.get(&(u.min(v), u.max(v)))?;
        Some(2 * idx + usize::from(u > v))
    }

    /// Writes the `n m W` header followed by one `u v` line per link.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<(), GraphError> {
        writeln!(
            out,
            "{} {} {}",
            self.node_count,
            self.links.len(),
            self.wavelengths_per_fiber
        )?;
        for &(u, v) in &self.links {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self, GraphError> {
        let mut lines = input
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

        let (line_no, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            reason: "missing `n m W` header".into(),
        })?;
        let header = parse_fields::<3>(&header?, line_no)?;
        let [n, m, w] = header;
        let w = u32::try_from(w).map_err(|_| GraphError::Parse {
            line: line_no,
            reason: "wavelength count out of range".into(),
        })?;

        let mut links = Vec::with_capacity(m);
        for (line_no, line) in lines {
            let [u, v] = parse_fields::<2>(&line?, line_no)?;
            links.push((u, v));
        }
        if links.len() != m {
            return Err(GraphError::Parse {
                line: line_no,
                reason: format!("header declares {m} links, found {}", links.len()),
            });
        }
        Self::new(n, links, w)
    }
}

fn parse_fields<const N: usize>(line: &str, line_no: usize) -> Result<[usize; N], GraphError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != N {
        return Err(GraphError::Parse {
            line: line_no,
            reason: format!("expected {N} fields, found {}", fields.len()),
        });
    }
    let mut out = [0usize; N];
    for (slot, field) in out.iter_mut().zip(fields) {
        *slot = field.parse().map_err(|_| GraphError::Parse {
            line: line_no,
            reason: format!("`{field}` is not a non-negative integer"),
        })?;
    }
    Ok(out)
}

fn is_connected(adjacency: &[Vec<usize>]) -> bool {
    if adjacency.is_empty() {
        return true;
    }
    let tree = ShortestPathTree::from_source(adjacency, 0);
    tree.reached() == adjacency.len()
}

/// Uniform random `degree`-regular connected graph via the pairing model.
///
/// Stub pairings that produce a self-loop, a parallel link or a disconnected
/// graph are rejected and redrawn from the same seeded stream.
pub fn generate_regular_topology(
    nodes: usize,
    degree: usize,
    wavelengths_per_fiber: u32,
    seed: u64,
) -> Result<PhysicalTopology, GraphError> {
    if degree < 2 || degree >= nodes || !(nodes * degree).is_multiple_of(2) {
        return Err(GraphError::Infeasible { nodes, degree });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..nodes)
        .flat_map(|v| std::iter::repeat_n(v, degree))
        .collect();

    for _ in 0..MAX_GENERATION_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let links: Vec<(usize, usize)> = stubs.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        match PhysicalTopology::new(nodes, links, wavelengths_per_fiber) {
            Ok(topo) => return Ok(topo),
            Err(
                GraphError::SelfLoop(..) | GraphError::DuplicateLink(..) | GraphError::Disconnected,
            ) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(GraphError::GenerationFailed {
        nodes,
        degree,
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

/// Breadth-first shortest-path tree from one source.
///
/// With ascending neighbor lists, the parent pointers encode, for every
/// reached node, the lexicographically smallest minimum-hop path.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    source: usize,
    parent: Vec<usize>,
    distance: Vec<usize>,
    /// Reached nodes in BFS order, source first.
    order: Vec<usize>,
}

impl ShortestPathTree {
    pub const UNREACHED: usize = usize::MAX;

    pub fn from_source(adjacency: &[Vec<usize>], source: usize) -> Self {
        let n = adjacency.len();
        let mut parent = vec![Self::UNREACHED; n];
        let mut distance = vec![Self::UNREACHED; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::with_capacity(n);
        distance[source] = 0;
        parent[source] = source;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &adjacency[u] {
                if distance[v] == Self::UNREACHED {
                    distance[v] = distance[u] + 1;
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        Self {
            source,
            parent,
            distance,
            order,
        }
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn reached(&self) -> usize {
        self.order.len()
    }

    /// Hop count to `node`, or `None` when unreachable.
    pub fn distance(&self, node: usize) -> Option<usize> {
        let d = self.distance[node];
        (d != Self::UNREACHED).then_some(d)
    }

    /// Parent of `node` on its tree path; the source is its own parent.
    pub fn parent(&self, node: usize) -> Option<usize> {
        let p = self.parent[node];
        (p != Self::UNREACHED).then_some(p)
    }

    pub fn bfs_order(&self) -> &[usize] {
        &self.order
    }

    pub fn path_to(&self, dst: usize) -> Option<Vec<usize>> {
        let hops = self.distance(dst)?;
        let mut path = Vec::with_capacity(hops + 1);
        let mut node = dst;
        path.push(node);
        while node != self.source {
            node = self.parent[node];
            path.push(node);
        }
        path.reverse();
        Some(path)
    }
}

/// Minimum-hop path from `src` to `dst`, lexicographically smallest among
/// ties. `adjacency` must list neighbors in ascending order.
pub fn shortest_path(adjacency: &[Vec<usize>], src: usize, dst: usize) -> Option<Vec<usize>> {
    ShortestPathTree::from_source(adjacency, src).path_to(dst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphStats {
    pub avg_path_length: f64,
    pub clustering_coefficient: f64,
    pub diameter: usize,
    pub degree: f64,
}

pub fn graph_stats(topo: &PhysicalTopology) -> Result<GraphStats, GraphError> {
    let adj = topo.adjacency();
    let n = adj.len();
    let mut hop_sum = 0usize;
    let mut pairs = 0usize;
    let mut diameter = 0usize;
    for src in 0..n {
        let tree = ShortestPathTree::from_source(adj, src);
        if tree.reached() != n {
            return Err(GraphError::Disconnected);
        }
        for dst in (0..n).filter(|&d| d != src) {
            let d = tree.distance[dst];
            hop_sum += d;
            pairs += 1;
            diameter = diameter.max(d);
        }
    }

    let mut clustering = 0.0;
    for (v, neighbors) in adj.iter().enumerate() {
        let k = neighbors.len();
        if k < 2 {
            continue;
        }
        let mut closed = 0usize;
        for (a_pos, &a) in neighbors.iter().enumerate() {
            for &b in &neighbors[a_pos + 1..] {
                if adj[a].binary_search(&b).is_ok() {
                    closed += 1;
                }
            }
        }
        debug_assert!(neighbors.binary_search(&v).is_err());
        clustering += 2.0 * closed as f64 / (k * (k - 1)) as f64;
    }

    let degree_sum: usize = adj.iter().map(Vec::len).sum();
    Ok(GraphStats {
        avg_path_length: if pairs == 0 {
            0.0
        } else {
            hop_sum as f64 / pairs as f64
        },
        clustering_coefficient: clustering / n as f64,
        diameter,
        degree: degree_sum as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> PhysicalTopology {
        PhysicalTopology::new(n, (0..n).map(|i| (i, (i + 1) % n)), 1).unwrap()
    }

    fn complete(n: usize) -> PhysicalTopology {
        let links = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        PhysicalTopology::new(n, links, 1).unwrap()
    }

    #[test]
    fn two_regular_on_four_nodes_is_the_cycle() {
        for seed in 0..20 {
            let topo = generate_regular_topology(4, 2, 1, seed).unwrap();
            assert_eq!(topo.links().len(), 4);
            assert!((0..4).all(|v| topo.degree(v) == 2));
            // a connected 2-regular graph on 4 nodes has no chords, so it is C4
            assert_eq!(graph_stats(&topo).unwrap().diameter, 2);
        }
    }

    #[test]
    fn two_regular_on_three_nodes_is_the_triangle() {
        let topo = generate_regular_topology(3, 2, 1, 7).unwrap();
        assert_eq!(topo.links(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn infeasible_parameters_are_rejected() {
        assert!(matches!(
            generate_regular_topology(5, 3, 1, 0),
            Err(GraphError::Infeasible { .. })
        ));
        assert!(matches!(
            generate_regular_topology(4, 4, 1, 0),
            Err(GraphError::Infeasible { .. })
        ));
        assert!(matches!(
            generate_regular_topology(10, 1, 1, 0),
            Err(GraphError::Infeasible { .. })
        ));
    }

    #[test]
    fn generation_is_deterministic_under_seed() {
        let a = generate_regular_topology(30, 4, 8, 99).unwrap();
        let b = generate_regular_topology(30, 4, 8, 99).unwrap();
        let c = generate_regular_topology(30, 4, 8, 100).unwrap();
        assert_eq!(a.links(), b.links());
        assert_ne!(a.links(), c.links());
    }

    #[test]
    fn construction_rejects_bad_links() {
        assert!(matches!(
            PhysicalTopology::new(3, [(0, 0), (1, 2)], 1),
            Err(GraphError::SelfLoop(0, 0))
        ));
        assert!(matches!(
            PhysicalTopology::new(3, [(0, 1), (1, 0), (1, 2)], 1),
            Err(GraphError::DuplicateLink(0, 1))
        ));
        assert!(matches!(
            PhysicalTopology::new(4, [(0, 1), (2, 3)], 1),
            Err(GraphError::Disconnected)
        ));
        assert!(matches!(
            PhysicalTopology::new(3, [(0, 5)], 1),
            Err(GraphError::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn cycle_tie_breaks_lexicographically() {
        let topo = cycle(4);
        assert_eq!(shortest_path(topo.adjacency(), 0, 2), Some(vec![0, 1, 2]));
        assert_eq!(shortest_path(topo.adjacency(), 2, 0), Some(vec![2, 1, 0]));
        assert_eq!(shortest_path(topo.adjacency(), 0, 1), Some(vec![0, 1]));
    }

    #[test]
    fn unreachable_on_directed_adjacency() {
        let adj = vec![vec![1], vec![], vec![0]];
        assert_eq!(shortest_path(&adj, 1, 0), None);
        assert_eq!(shortest_path(&adj, 2, 1), Some(vec![2, 0, 1]));
    }

    #[test]
    fn stats_of_small_graphs() {
        let tri = graph_stats(&complete(3)).unwrap();
        assert_eq!(tri.avg_path_length, 1.0);
        assert_eq!(tri.clustering_coefficient, 1.0);
        assert_eq!(tri.diameter, 1);

        // 12 ordered pairs of C4: 8 at distance 1, 4 at distance 2
        let c4 = graph_stats(&cycle(4)).unwrap();
        assert!((c4.avg_path_length - 16.0 / 12.0).abs() < 1e-15);
        assert_eq!(c4.clustering_coefficient, 0.0);
        assert_eq!(c4.diameter, 2);
        assert_eq!(c4.degree, 2.0);
    }

    #[test]
    fn complete_graph_stats_are_unit() {
        for n in 3..9 {
            let s = graph_stats(&complete(n)).unwrap();
            assert_eq!(
                (s.avg_path_length, s.clustering_coefficient, s.diameter),
                (1.0, 1.0, 1)
            );
        }
    }

    #[test]
    fn directed_fibers_are_distinct_per_direction() {
        let topo = cycle(4);
        let fwd = topo.directed_fiber(0, 1).unwrap();
        let back = topo.directed_fiber(1, 0).unwrap();
        assert_ne!(fwd, back);
        assert_eq!(fwd / 2, back / 2);
        assert_eq!(topo.directed_fiber(0, 2), None);
        assert_eq!(topo.directed_fiber_count(), 8);
    }

    #[test]
    fn edge_list_round_trip() {
        let topo = generate_regular_topology(12, 3, 5, 3).unwrap();
        let mut buf = Vec::new();
        topo.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("12 18 5\n"));
        let back = PhysicalTopology::read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(back, topo);
    }

    #[test]
    fn edge_list_errors_carry_line_numbers() {
        let err = PhysicalTopology::read_edge_list("3 2 1\n0 1\n1 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }), "{err}");
        let err = PhysicalTopology::read_edge_list("3 3 1\n0 1\n1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, GraphError::Parse { .. }), "{err}");
    }
}
