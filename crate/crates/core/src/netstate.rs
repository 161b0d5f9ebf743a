//! Live virtual topology over a fixed fiber graph.
//!
//! Lightpaths are unidirectional, carry capacity 1.0 and consume one
//! transmitter at the source, one receiver at the destination and one
//! wavelength on every directed fiber of their physical route. Nodes have
//! wavelength converters, so only per-fiber wavelength counts matter.

use std::fmt;
use std::io::Write;
use std::ops::AddAssign;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{PhysicalTopology, ShortestPathTree};
use crate::traffic::TrafficMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("pair {pair} cannot be established: resources exhausted")]
    Infeasible { pair: usize },
    #[error("pair {pair} has no lightpath to remove")]
    NoLightpath { pair: usize },
    #[error("resource counter underflow at {what} {index}")]
    Underflow { what: &'static str, index: usize },
    #[error("resource audit failed: {0}")]
    Audit(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("the physical topology does not route {src} -> {dst}")]
    PhysicallyUnreachable { src: usize, dst: usize },
}

/// Number of directed node pairs, `n (n - 1)`.
pub fn pair_count(nodes: usize) -> usize {
    nodes * nodes.saturating_sub(1)
}

/// Source-major index of the directed pair `src -> dst`.
pub fn pair_index(nodes: usize, src: usize, dst: usize) -> usize {
    debug_assert!(src != dst && src < nodes && dst < nodes);
    src * (nodes - 1) + if dst < src { dst } else { dst - 1 }
}

pub fn pair_nodes(nodes: usize, index: usize) -> (usize, usize) {
    let src = index / (nodes - 1);
    let offset = index % (nodes - 1);
    (src, if offset < src { offset } else { offset + 1 })
}

/// One bit per directed pair: set when the pair has a lightpath.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TopologyBits(Vec<bool>);

impl TopologyBits {
    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> bool {
        self.0[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.0[index] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// Hex string, four bits per digit, first bit in the high position.
    pub fn to_hex(&self) -> String {
        self.0
            .chunks(4)
            .map(|chunk| {
                let nibble = chunk
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << (3 - i)));
                char::from_digit(nibble, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(hex: &str, len: usize) -> Option<Self> {
        if hex.len() != len.div_ceil(4) {
            return None;
        }
        let mut bits = Vec::with_capacity(len);
        for c in hex.chars() {
            let nibble = c.to_digit(16)?;
            for shift in (0..4).rev() {
                if bits.len() < len {
                    bits.push(nibble >> shift & 1 == 1);
                }
            }
        }
        Some(Self(bits))
    }
}

impl fmt::Debug for TopologyBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TopologyBits({}; {})", self.len(), self.to_hex())
    }
}

/// Lightpath counts for the transition `before -> after`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoundDelta {
    pub established: usize,
    pub removed: usize,
}

impl RoundDelta {
    pub fn total_changes(&self) -> usize {
        self.established + self.removed
    }
}

impl AddAssign for RoundDelta {
    fn add_assign(&mut self, rhs: Self) {
        self.established += rhs.established;
        self.removed += rhs.removed;
    }
}

pub fn diff(before: &TopologyBits, after: &TopologyBits) -> Result<RoundDelta, NetError> {
    if before.len() != after.len() {
        return Err(NetError::LengthMismatch {
            expected: before.len(),
            actual: after.len(),
        });
    }
    let mut delta = RoundDelta::default();
    for (&b, &a) in before.as_slice().iter().zip(after.as_slice()) {
        match (b, a) {
            (false, true) => delta.established += 1,
            (true, false) => delta.removed += 1,
            _ => {}
        }
    }
    Ok(delta)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhysicalRoute {
    pub nodes: Vec<usize>,
    pub fibers: Vec<usize>,
}

/// Physical shortest route for every directed pair, computed once.
#[derive(Debug, Clone)]
pub struct RouteTable {
    topology: PhysicalTopology,
    routes: Vec<Arc<PhysicalRoute>>,
}

impl RouteTable {
    pub fn build(topology: PhysicalTopology) -> Result<Self, NetError> {
        let n = topology.node_count();
        let mut routes = Vec::with_capacity(pair_count(n));
        for src in 0..n {
            let tree = ShortestPathTree::from_source(topology.adjacency(), src);
            for dst in (0..n).filter(|&d| d != src) {
                let nodes = tree
                    .path_to(dst)
                    .ok_or(NetError::PhysicallyUnreachable { src, dst })?;
                let fibers = nodes
                    .windows(2)
                    .map(|w| {
                        topology
                            .directed_fiber(w[0], w[1])
                            .expect("path follows links")
                    })
                    .collect();
                routes.push(Arc::new(PhysicalRoute { nodes, fibers }));
            }
        }
        Ok(Self { topology, routes })
    }

    pub fn topology(&self) -> &PhysicalTopology {
        &self.topology
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }

    pub fn pair_count(&self) -> usize {
        self.routes.len()
    }

    pub fn route(&self, pair: usize) -> &Arc<PhysicalRoute> {
        &self.routes[pair]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceBudget {
    pub tx_per_node: u32,
    pub rx_per_node: u32,
}

impl Default for ResourceBudget {
    fn default() -> Self {
        Self {
            tx_per_node: 16,
            rx_per_node: 16,
        }
    }
}

impl ResourceBudget {
    /// Physical ceiling on simultaneous lightpaths.
    pub fn max_lightpaths(&self, nodes: usize) -> usize {
        nodes * self.tx_per_node.min(self.rx_per_node) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourcePool {
    pub budget: ResourceBudget,
    pub wavelengths_per_fiber: u32,
    pub tx_used: Vec<u32>,
    pub rx_used: Vec<u32>,
    pub wavelengths_used: Vec<u32>,
}

impl ResourcePool {
    fn new(
        nodes: usize,
        fibers: usize,
        budget: ResourceBudget,
        wavelengths_per_fiber: u32,
    ) -> Self {
        Self {
            budget,
            wavelengths_per_fiber,
            tx_used: vec![0; nodes],
            rx_used: vec![0; nodes],
            wavelengths_used: vec![0; fibers],
        }
    }
}

/// Lightpaths per directed pair plus the physical route each one occupies.
///
/// Controllers driven by the bit-vector only ever hold zero or one lightpath
/// per pair; the greedy heuristic may stack several on a heavy pair.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualTopology {
    node_count: usize,
    counts: Vec<u16>,
    routes: Vec<Option<Arc<PhysicalRoute>>>,
    total: usize,
}

impl VirtualTopology {
    pub fn empty(node_count: usize) -> Self {
        let pairs = pair_count(node_count);
        Self {
            node_count,
            counts: vec![0; pairs],
            routes: vec![None; pairs],
            total: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn pair_count(&self) -> usize {
        self.counts.len()
    }

    pub fn lightpaths(&self, pair: usize) -> u16 {
        self.counts[pair]
    }

    pub fn has_lightpath(&self, pair: usize) -> bool {
        self.counts[pair] > 0
    }

    pub fn total_lightpaths(&self) -> usize {
        self.total
    }

    pub fn route(&self, pair: usize) -> Option<&PhysicalRoute> {
        self.routes[pair].as_deref()
    }

    pub fn bits(&self) -> TopologyBits {
        TopologyBits::from_bools(self.counts.iter().map(|&c| c > 0).collect())
    }

    /// Ascending out-neighbor lists of the directed lightpath graph.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.node_count;
        (0..n)
            .map(|src| {
                (0..n)
                    .filter(|&dst| dst != src && self.counts[pair_index(n, src, dst)] > 0)
                    .collect()
            })
            .collect()
    }

    fn add(&mut self, pair: usize, route: &Arc<PhysicalRoute>) {
        if self.counts[pair] == 0 {
            self.routes[pair] = Some(Arc::clone(route));
        }
        self.counts[pair] += 1;
        self.total += 1;
    }

    fn drop_one(&mut self, pair: usize) {
        self.counts[pair] -= 1;
        if self.counts[pair] == 0 {
            self.routes[pair] = None;
        }
        self.total -= 1;
    }
}

/// Per-lightpath loads produced by routing a traffic matrix over a VT.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationReport {
    /// Carried traffic per pair, shared evenly among that pair's lightpaths.
    pub pair_load: Vec<f64>,
    /// Lightpath count per pair at the time of routing.
    pub lightpaths: Vec<u16>,
    /// Controller-facing maximum utilization (see [`route_traffic`]).
    pub u_max: f64,
    /// Largest per-lightpath load actually measured.
    pub measured_u_max: f64,
    pub unroutable_fraction: f64,
    /// Mean per-lightpath load over established lightpaths.
    pub mean_utilization: f64,
}

impl UtilizationReport {
    pub fn per_lightpath_load(&self, pair: usize) -> Option<f64> {
        let c = self.lightpaths[pair];
        (c > 0).then(|| self.pair_load[pair] / f64::from(c))
    }

    pub fn per_lightpath_loads(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.pair_load.len()).filter_map(|p| self.per_lightpath_load(p).map(|l| (p, l)))
    }
}

/// Routes every demand on its minimum-hop lightpath path.
///
/// Demands without any virtual route are counted in `unroutable_fraction`;
/// when that fraction is positive `u_max` reports at least 1.0 so a
/// disconnected topology never looks better than a saturated one.
pub fn route_traffic(vt: &VirtualTopology, traffic: &TrafficMatrix) -> UtilizationReport {
    let n = vt.node_count();
    assert_eq!(n, traffic.node_count(), "traffic and topology sizes differ");
    let adjacency = vt.adjacency();
    let mut pair_load = vec![0.0; vt.pair_count()];
    let mut subtree = vec![0.0; n];
    let mut unroutable = 0.0;

    for src in 0..n {
        let tree = ShortestPathTree::from_source(&adjacency, src);
        for dst in (0..n).filter(|&d| d != src) {
            let demand = traffic.get(src, dst);
            if tree.distance(dst).is_some() {
                subtree[dst] = demand;
            } else {
                unroutable += demand;
            }
        }
        for &v in tree.bfs_order().iter().skip(1).rev() {
            let parent = tree.parent(v).expect("reached node has a parent");
            pair_load[pair_index(n, parent, v)] += subtree[v];
            if parent != src {
                subtree[parent] += subtree[v];
            }
            subtree[v] = 0.0;
        }
    }

    let mut measured_u_max = 0.0f64;
    let mut load_sum = 0.0;
    for (pair, &count) in vt.counts.iter().enumerate() {
        if count > 0 {
            measured_u_max = measured_u_max.max(pair_load[pair] / f64::from(count));
            load_sum += pair_load[pair];
        }
    }
    let total = traffic.total();
    let unroutable_fraction = if total > 0.0 { unroutable / total } else { 0.0 };
    let u_max = if unroutable > 0.0 {
        measured_u_max.max(1.0)
    } else {
        measured_u_max
    };
    UtilizationReport {
        pair_load,
        lightpaths: vt.counts.clone(),
        u_max,
        measured_u_max,
        unroutable_fraction,
        mean_utilization: if vt.total > 0 {
            load_sum / vt.total as f64
        } else {
            0.0
        },
    }
}

/// Virtual topology plus the resources it holds on one physical network.
#[derive(Debug, Clone)]
pub struct NetworkState {
    routes: Arc<RouteTable>,
    vt: VirtualTopology,
    pool: ResourcePool,
}

impl NetworkState {
    pub fn new(routes: Arc<RouteTable>, budget: ResourceBudget) -> Self {
        let topo = routes.topology();
        let pool = ResourcePool::new(
            topo.node_count(),
            topo.directed_fiber_count(),
            budget,
            topo.wavelengths_per_fiber(),
        );
        Self {
            vt: VirtualTopology::empty(topo.node_count()),
            routes,
            pool,
        }
    }

    pub fn routes(&self) -> &Arc<RouteTable> {
        &self.routes
    }

    pub fn vt(&self) -> &VirtualTopology {
        &self.vt
    }

    pub fn pool(&self) -> &ResourcePool {
        &self.pool
    }

    pub fn budget(&self) -> ResourceBudget {
        self.pool.budget
    }

    pub fn node_count(&self) -> usize {
        self.vt.node_count
    }

    pub fn pair_count(&self) -> usize {
        self.vt.pair_count()
    }

    /// True when one more lightpath for `pair` fits every resource budget.
    pub fn can_establish(&self, pair: usize) -> bool {
        let (src, dst) = pair_nodes(self.node_count(), pair);
        let pool = &self.pool;
        pool.tx_used[src] < pool.budget.tx_per_node
            && pool.rx_used[dst] < pool.budget.rx_per_node
            && self
                .routes
                .route(pair)
                .fibers
                .iter()
                .all(|&f| pool.wavelengths_used[f] < pool.wavelengths_per_fiber)
    }

    /// Adds one lightpath for `pair` along its physical shortest route.
    pub fn establish(&mut self, pair: usize) -> Result<(), NetError> {
        if !self.can_establish(pair) {
            return Err(NetError::Infeasible { pair });
        }
        let (src, dst) = pair_nodes(self.node_count(), pair);
        let route = Arc::clone(self.routes.route(pair));
        self.pool.tx_used[src] += 1;
        self.pool.rx_used[dst] += 1;
        for &f in &route.fibers {
            self.pool.wavelengths_used[f] += 1;
        }
        self.vt.add(pair, &route);
        Ok(())
    }

    /// Removes one lightpath of `pair` and releases its resources.
    pub fn remove(&mut self, pair: usize) -> Result<(), NetError> {
        if !self.vt.has_lightpath(pair) {
            return Err(NetError::NoLightpath { pair });
        }
        let (src, dst) = pair_nodes(self.node_count(), pair);
        let route = Arc::clone(self.vt.routes[pair].as_ref().expect("set bit has a route"));
        release(&mut self.pool.tx_used, src, "tx")?;
        release(&mut self.pool.rx_used, dst, "rx")?;
        for &f in &route.fibers {
            release(&mut self.pool.wavelengths_used, f, "fiber")?;
        }
        self.vt.drop_one(pair);
        Ok(())
    }

    /// One step of the threshold rule: establish a wanted, unset pair when
    /// it fits; clear every lightpath of an unwanted pair; otherwise no-op.
    pub fn apply_decision(&mut self, pair: usize, want: bool) -> Result<RoundDelta, NetError> {
        let mut delta = RoundDelta::default();
        let present = self.vt.lightpaths(pair);
        if want && present == 0 && self.can_establish(pair) {
            self.establish(pair)?;
            delta.established = 1;
        } else if !want && present > 0 {
            for _ in 0..present {
                self.remove(pair)?;
            }
            delta.removed = usize::from(present);
        }
        Ok(delta)
    }

    /// Drives the live state to `target` (removals first, so every
    /// establishment lands on resources the target already proved feasible).
    pub fn transition_to(&mut self, target: &VirtualTopology) -> Result<RoundDelta, NetError> {
        if target.pair_count() != self.pair_count() {
            return Err(NetError::LengthMismatch {
                expected: self.pair_count(),
                actual: target.pair_count(),
            });
        }
        let mut delta = RoundDelta::default();
        for pair in 0..self.pair_count() {
            let (have, want) = (self.vt.lightpaths(pair), target.lightpaths(pair));
            for _ in want..have {
                self.remove(pair)?;
                delta.removed += 1;
            }
        }
        for pair in 0..self.pair_count() {
            let (have, want) = (self.vt.lightpaths(pair), target.lightpaths(pair));
            for _ in have..want {
                self.establish(pair)?;
                delta.established += 1;
            }
        }
        Ok(delta)
    }

    /// Recounts every resource from the lightpath set and compares it with
    /// the tracked counters.
    pub fn audit(&self) -> Result<(), NetError> {
        let n = self.node_count();
        let mut tx = vec![0u32; n];
        let mut rx = vec![0u32; n];
        let mut wl = vec![0u32; self.pool.wavelengths_used.len()];
        let mut total = 0usize;
        for pair in 0..self.pair_count() {
            let count = self.vt.lightpaths(pair);
            match (&self.vt.routes[pair], count) {
                (None, 0) => continue,
                (Some(route), c) if c > 0 => {
                    let (src, dst) = pair_nodes(n, pair);
                    if route.nodes.first() != Some(&src) || route.nodes.last() != Some(&dst) {
                        return Err(NetError::Audit(format!(
                            "pair {pair} route endpoints differ"
                        )));
                    }
                    tx[src] += u32::from(c);
                    rx[dst] += u32::from(c);
                    for &f in &route.fibers {
                        wl[f] += u32::from(c);
                    }
                    total += usize::from(c);
                }
                _ => return Err(NetError::Audit(format!("pair {pair} route/count mismatch"))),
            }
        }
        let budget = self.pool.budget;
        if tx != self.pool.tx_used || rx != self.pool.rx_used {
            return Err(NetError::Audit(
                "transceiver counters differ from recount".into(),
            ));
        }
        if wl != self.pool.wavelengths_used {
            return Err(NetError::Audit(
                "wavelength counters differ from recount".into(),
            ));
        }
        if total != self.vt.total {
            return Err(NetError::Audit(
                "lightpath total differs from recount".into(),
            ));
        }
        if tx.iter().any(|&t| t > budget.tx_per_node)
            || rx.iter().any(|&r| r > budget.rx_per_node)
            || wl.iter().any(|&w| w > self.pool.wavelengths_per_fiber)
        {
            return Err(NetError::Audit("a resource exceeds its budget".into()));
        }
        Ok(())
    }

    /// Text snapshot: header, hex bit-vector, then one line per lightpath
    /// pair as `src dst count node...`.
    pub fn write_snapshot<W: Write>(&self, round: usize, mut out: W) -> std::io::Result<()> {
        let bits = self.vt.bits();
        writeln!(out, "round {round}")?;
        writeln!(out, "pairs {}", bits.len())?;
        writeln!(out, "bits {}", bits.to_hex())?;
        writeln!(out, "routes {}", bits.count_ones())?;
        for pair in bits.iter_ones() {
            let (src, dst) = pair_nodes(self.node_count(), pair);
            let route = self.vt.route(pair).expect("set bit has a route");
            write!(out, "{src} {dst} {}", self.vt.lightpaths(pair))?;
            for node in &route.nodes {
                write!(out, " {node}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn release(counters: &mut [u32], index: usize, what: &'static str) -> Result<(), NetError> {
    let slot = &mut counters[index];
    *slot = slot
        .checked_sub(1)
        .ok_or(NetError::Underflow { what, index })?;
    Ok(())
}
