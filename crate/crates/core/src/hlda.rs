//! Greedy traffic-descending logical topology design and its capped
//! variant.
//!
//! Placement repeatedly serves the largest residual demand: a lightpath is
//! added for that pair when resources and the cap allow, the residual drops
//! by one lightpath capacity (clamped at zero), and the pair re-enters the
//! queue while demand remains. A pair that no longer fits is dropped for
//! good, since placement only ever consumes resources. Leftover
//! transceivers may then go to uniformly random feasible pairs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use ordered_float::OrderedFloat;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::metrics::RoundMetrics;
use crate::netstate::{
    pair_index, NetError, NetworkState, ResourceBudget, RouteTable, VirtualTopology,
};
use crate::traffic::TrafficMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HldaConfig {
    /// Cap on total lightpaths; `None` leaves only the resource limits.
    pub max_lightpaths: Option<usize>,
    pub fill_leftover: bool,
}

impl Default for HldaConfig {
    fn default() -> Self {
        Self {
            max_lightpaths: None,
            fill_leftover: true,
        }
    }
}

/// Builds a virtual topology from scratch for `traffic`.
pub fn hlda_build(
    traffic: &TrafficMatrix,
    routes: &Arc<RouteTable>,
    budget: ResourceBudget,
    config: HldaConfig,
    seed: u64,
) -> VirtualTopology {
    let n = routes.node_count();
    assert_eq!(traffic.node_count(), n, "traffic and topology sizes differ");
    let mut state = NetworkState::new(Arc::clone(routes), budget);
    let cap = config.max_lightpaths.unwrap_or(usize::MAX);

    // ties in residual demand go to the lower pair index
    let mut queue: BinaryHeap<(OrderedFloat<f64>, Reverse<usize>)> = traffic
        .off_diagonal()
        .filter(|&(_, _, d)| d > 0.0)
        .map(|(i, j, d)| (OrderedFloat(d), Reverse(pair_index(n, i, j))))
        .collect();

    while let Some((OrderedFloat(residual), Reverse(pair))) = queue.pop() {
        if state.vt().total_lightpaths() >= cap {
            break;
        }
        if !state.can_establish(pair) {
            continue;
        }
        state.establish(pair).expect("checked feasibility");
        let left = (residual - 1.0).max(0.0);
        if left > 0.0 {
            queue.push((OrderedFloat(left), Reverse(pair)));
        }
    }

    if config.fill_leftover {
        let mut order: Vec<usize> = (0..state.pair_count()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for pair in order {
            if state.vt().total_lightpaths() >= cap {
                break;
            }
            if !state.vt().has_lightpath(pair) && state.can_establish(pair) {
                state.establish(pair).expect("checked feasibility");
            }
        }
    }
    state.vt().clone()
}

/// Rebuilds from scratch every round and moves the live state onto the
/// new design.
#[derive(Debug, Clone)]
pub struct HldaController {
    config: HldaConfig,
    seed: u64,
    round: usize,
}

impl HldaController {
    /// `seed` drives leftover filling; it stays fixed across rounds so an
    /// unchanged traffic matrix reproduces the same design.
    pub fn new(config: HldaConfig, seed: u64) -> Self {
        Self {
            config,
            seed,
            round: 0,
        }
    }

    pub fn config(&self) -> &HldaConfig {
        &self.config
    }

    pub fn round(
        &mut self,
        net: &mut NetworkState,
        traffic: &TrafficMatrix,
    ) -> Result<RoundMetrics, NetError> {
        self.round += 1;
        let target = hlda_build(traffic, net.routes(), net.budget(), self.config, self.seed);
        let delta = net.transition_to(&target)?;
        Ok(RoundMetrics::measure(
            self.round,
            net.vt(),
            traffic,
            delta,
            None,
        ))
    }
}
