use std::sync::Arc;

use proptest::prelude::*;
use vtrlab::graph::{shortest_path, PhysicalTopology, ShortestPathTree};
use vtrlab::netstate::{pair_index, route_traffic, NetworkState, ResourceBudget, RouteTable};
use vtrlab::traffic::TrafficMatrix;

/// Every simple path from `src` to `dst`, by exhaustive depth-first search.
fn all_simple_paths(adj: &[Vec<usize>], src: usize, dst: usize) -> Vec<Vec<usize>> {
    fn walk(
        adj: &[Vec<usize>],
        path: &mut Vec<usize>,
        seen: &mut [bool],
        dst: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        let at = *path.last().unwrap();
        if at == dst {
            out.push(path.clone());
            return;
        }
        for &next in &adj[at] {
            if !seen[next] {
                seen[next] = true;
                path.push(next);
                walk(adj, path, seen, dst, out);
                path.pop();
                seen[next] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut seen = vec![false; adj.len()];
    seen[src] = true;
    walk(adj, &mut vec![src], &mut seen, dst, &mut out);
    out
}

/// Minimum-hop path with the smallest node sequence, by enumeration.
fn oracle_path(adj: &[Vec<usize>], src: usize, dst: usize) -> Option<Vec<usize>> {
    all_simple_paths(adj, src, dst)
        .into_iter()
        .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)))
}

fn random_digraph(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        let (a, b) = (a % n, b % n);
        if a != b && !adj[a].contains(&b) {
            adj[a].push(b);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bfs_paths_match_enumeration(n in 2usize..9, edges in prop::collection::vec((0usize..12, 0usize..12), 0..30)) {
        let adj = random_digraph(n, &edges);
        for src in 0..n {
            let tree = ShortestPathTree::from_source(&adj, src);
            for dst in 0..n {
                let expected = oracle_path(&adj, src, dst);
                prop_assert_eq!(tree.distance(dst), expected.as_ref().map(|p| p.len() - 1));
                prop_assert_eq!(shortest_path(&adj, src, dst), expected);
            }
        }
    }

    #[test]
    fn bfs_lengths_match_floyd_warshall(n in 2usize..13, edges in prop::collection::vec((0usize..13, 0usize..13), 0..60)) {
        let adj = random_digraph(n, &edges);
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (u, list) in adj.iter().enumerate() {
            d[u][u] = 0;
            for &v in list {
                d[u][v] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
                }
            }
        }
        for src in 0..n {
            let tree = ShortestPathTree::from_source(&adj, src);
            for dst in 0..n {
                let want = (d[src][dst] < inf).then_some(d[src][dst]);
                prop_assert_eq!(tree.distance(dst), want);
            }
        }
    }

    #[test]
    fn traffic_loads_match_per_demand_enumeration(
        pairs in prop::collection::vec(0usize..56, 0..40),
        demands in prop::collection::vec(0.0f64..1.0, 56),
    ) {
        let n = 8;
        let links: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let topo = PhysicalTopology::new(n, links, 64).unwrap();
        let mut net = NetworkState::new(Arc::new(RouteTable::build(topo).unwrap()), ResourceBudget { tx_per_node: 7, rx_per_node: 7 });
        for p in pairs {
            if !net.vt().has_lightpath(p) {
                net.establish(p).unwrap();
            }
        }
        let mut k = 0;
        let traffic = TrafficMatrix::from_fn(n, |_, _| { k += 1; demands[k - 1] });
        let report = route_traffic(net.vt(), &traffic);

        let adj = net.vt().adjacency();
        let mut load = vec![0.0; 56];
        let mut unroutable = 0.0;
        for (s, d, demand) in traffic.off_diagonal() {
            match oracle_path(&adj, s, d) {
                Some(path) => {
                    for w in path.windows(2) {
                        load[pair_index(n, w[0], w[1])] += demand;
                    }
                }
                None => unroutable += demand,
            }
        }
        for p in 0..56 {
            prop_assert!((report.pair_load[p] - load[p]).abs() < 1e-12);
        }
        let measured = load.iter().copied().fold(0.0, f64::max);
        prop_assert!((report.measured_u_max - measured).abs() < 1e-12);
        prop_assert!((report.unroutable_fraction - unroutable / traffic.total()).abs() < 1e-12);
        if unroutable > 0.0 {
            prop_assert!(report.u_max >= 1.0);
        }
    }

    #[test]
    fn u_max_is_monotone_in_each_demand(
        pairs in prop::collection::vec(0usize..30, 8..30),
        base in 0.0f64..0.5,
        entry in 0usize..30,
        bump in 0.0f64..2.0,
    ) {
        let n = 6;
        let links: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let topo = PhysicalTopology::new(n, links, 64).unwrap();
        let mut net = NetworkState::new(Arc::new(RouteTable::build(topo).unwrap()), ResourceBudget::default());
        for p in pairs {
            if !net.vt().has_lightpath(p) {
                net.establish(p).unwrap();
            }
        }
        let traffic = TrafficMatrix::from_fn(n, |_, _| base);
        let (s, d) = vtrlab::netstate::pair_nodes(n, entry);
        let mut heavier = traffic.clone();
        heavier.set(s, d, base + bump);
        prop_assert!(route_traffic(net.vt(), &heavier).u_max >= route_traffic(net.vt(), &traffic).u_max);
    }
}
