use std::sync::Arc;

use proptest::prelude::*;
use vtrlab::graph::{generate_regular_topology, PhysicalTopology};
use vtrlab::netstate::{
    diff, pair_count, pair_index, pair_nodes, NetworkState, ResourceBudget, RouteTable,
    TopologyBits,
};

fn cycle4(wavelengths: u32) -> Arc<RouteTable> {
    let topo = PhysicalTopology::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)], wavelengths).unwrap();
    Arc::new(RouteTable::build(topo).unwrap())
}

/// Feasibility recomputed from scratch: free ports at both ends and a free
/// wavelength on every directed hop of the pair's route.
fn brute_force_feasible(net: &NetworkState, pair: usize) -> bool {
    let n = net.node_count();
    let budget = net.budget();
    let topo = net.routes().topology();
    let mut tx = vec![0u32; n];
    let mut rx = vec![0u32; n];
    let mut hops = std::collections::HashMap::new();
    for p in 0..net.pair_count() {
        let c = u32::from(net.vt().lightpaths(p));
        if c == 0 {
            continue;
        }
        let (s, d) = pair_nodes(n, p);
        tx[s] += c;
        rx[d] += c;
        for w in net.vt().route(p).unwrap().nodes.windows(2) {
            *hops.entry((w[0], w[1])).or_insert(0u32) += c;
        }
    }
    let (s, d) = pair_nodes(n, pair);
    let route = net.routes().route(pair);
    tx[s] < budget.tx_per_node
        && rx[d] < budget.rx_per_node
        && route
            .nodes
            .windows(2)
            .all(|w| hops.get(&(w[0], w[1])).copied().unwrap_or(0) < topo.wavelengths_per_fiber())
}

#[test]
fn single_wavelength_cycle_feasibility_matches_enumeration() {
    // every order of establishing up to three lightpaths on the 4-cycle
    let routes = cycle4(1);
    let budget = ResourceBudget {
        tx_per_node: 2,
        rx_per_node: 2,
    };
    let pairs = pair_count(4);
    for a in 0..pairs {
        for b in 0..pairs {
            for c in 0..pairs {
                let mut net = NetworkState::new(Arc::clone(&routes), budget);
                for p in [a, b, c] {
                    assert_eq!(
                        net.can_establish(p),
                        brute_force_feasible(&net, p),
                        "after prefix, pair {p}"
                    );
                    if net.can_establish(p) {
                        net.establish(p).unwrap();
                    }
                }
                for q in 0..pairs {
                    assert_eq!(net.can_establish(q), brute_force_feasible(&net, q));
                }
            }
        }
    }
    // 0->1 holds fiber 0->1, so 3->1 routed 3-0-1 is blocked
    let mut net = NetworkState::new(Arc::clone(&routes), ResourceBudget::default());
    net.establish(pair_index(4, 0, 1)).unwrap();
    assert_eq!(net.routes().route(pair_index(4, 3, 1)).nodes, vec![3, 0, 1]);
    assert!(!net.can_establish(pair_index(4, 3, 1)));
    assert!(net.can_establish(pair_index(4, 1, 0)));
}

#[test]
fn rotational_sweep_fills_every_transceiver() {
    let n = 100;
    let topo = generate_regular_topology(n, 4, 1024, 3).unwrap();
    let mut net = NetworkState::new(
        Arc::new(RouteTable::build(topo).unwrap()),
        ResourceBudget::default(),
    );
    // offsets 1..=99 from every node: each node sources and sinks one per offset
    for offset in 1..n {
        for i in 0..n {
            net.apply_decision(pair_index(n, i, (i + offset) % n), true)
                .unwrap();
        }
    }
    assert_eq!(net.vt().total_lightpaths(), 1600);
    net.audit().unwrap();
}

#[test]
fn index_order_sweep_stays_within_the_transceiver_limit() {
    let n = 100;
    let topo = generate_regular_topology(n, 4, 16, 3).unwrap();
    let mut net = NetworkState::new(
        Arc::new(RouteTable::build(topo).unwrap()),
        ResourceBudget::default(),
    );
    let mut established = 0;
    for pair in 0..pair_count(n) {
        established += net.apply_decision(pair, true).unwrap().established;
    }
    assert_eq!(established, net.vt().total_lightpaths());
    assert!(established <= 1600);
    assert!(established >= 1200, "{established}");
    net.audit().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn any_operation_sequence_conserves_resources(ops in prop::collection::vec((0usize..90, any::<bool>()), 0..200)) {
        let topo = generate_regular_topology(10, 3, 3, 8).unwrap();
        let routes = Arc::new(RouteTable::build(topo).unwrap());
        let budget = ResourceBudget { tx_per_node: 4, rx_per_node: 4 };
        let mut net = NetworkState::new(Arc::clone(&routes), budget);
        let initial = net.pool().clone();
        for (pair, want) in ops {
            net.apply_decision(pair, want).unwrap();
            net.audit().unwrap();
        }
        let held: Vec<usize> = (0..90).filter(|&p| net.vt().has_lightpath(p)).collect();
        for p in held.into_iter().rev() {
            net.remove(p).unwrap();
        }
        prop_assert_eq!(net.pool(), &initial);
        prop_assert_eq!(net.vt().total_lightpaths(), 0);
    }

    #[test]
    fn diff_matches_hamming_decomposition(a in prop::collection::vec(any::<bool>(), 9900), b in prop::collection::vec(any::<bool>(), 9900)) {
        let d = diff(&TopologyBits::from_bools(a.clone()), &TopologyBits::from_bools(b.clone())).unwrap();
        let hamming = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        let ones_a = a.iter().filter(|&&x| x).count() as i64;
        let ones_b = b.iter().filter(|&&x| x).count() as i64;
        prop_assert_eq!(d.total_changes(), hamming);
        prop_assert_eq!(d.established as i64 - d.removed as i64, ones_b - ones_a);
    }

    #[test]
    fn hex_encoding_round_trips(bits in prop::collection::vec(any::<bool>(), 0..300)) {
        let t = TopologyBits::from_bools(bits.clone());
        prop_assert_eq!(TopologyBits::from_hex(&t.to_hex(), bits.len()), Some(t));
    }
}
