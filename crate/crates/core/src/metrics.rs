use crate::asb::compute_activity;
use crate::netstate::{route_traffic, RoundDelta, VirtualTopology};
use crate::traffic::TrafficMatrix;

/// Per-round record shared by every controller.
///
/// `u_max`, `v_g` and `unroutable_fraction` describe the topology in place
/// at the end of the round under that round's traffic.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub u_max: f64,
    pub v_g: f64,
    pub established: usize,
    pub removed: usize,
    pub total_lightpaths: usize,
    pub unroutable_fraction: f64,
    /// Mean noise mean applied this round; `None` for controllers without one.
    pub mu_mean: Option<f64>,
}

impl RoundMetrics {
    pub fn measure(
        round: usize,
        vt: &VirtualTopology,
        traffic: &TrafficMatrix,
        delta: RoundDelta,
        mu_mean: Option<f64>,
    ) -> Self {
        let report = route_traffic(vt, traffic);
        Self {
            round,
            u_max: report.u_max,
            v_g: compute_activity(report.u_max),
            established: delta.established,
            removed: delta.removed,
            total_lightpaths: vt.total_lightpaths(),
            unroutable_fraction: report.unroutable_fraction,
            mu_mean,
        }
    }

    pub fn changes(&self) -> usize {
        self.established + self.removed
    }
}
