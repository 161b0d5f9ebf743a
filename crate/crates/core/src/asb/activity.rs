/// Steepness of the activity sigmoid around the 0.5 utilization midpoint.
pub const ACTIVITY_GAIN: f64 = 50.0;

/// Network activity from the utilization of the most loaded lightpath:
/// `1 / (1 + exp(50 (u_max - 0.5)))`.
pub fn compute_activity(u_max: f64) -> f64 {
    1.0 / (1.0 + (ACTIVITY_GAIN * (u_max - 0.5)).exp())
}

/// Activity of the previous and current round.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActivityTracker {
    previous: Option<f64>,
    current: Option<f64>,
}

impl ActivityTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tracker that already remembers a previous value.
    pub fn with_previous(previous: f64) -> Self {
        Self {
            previous: None,
            current: Some(previous),
        }
    }

    pub fn push(&mut self, v_g: f64) {
        self.previous = self.current;
        self.current = Some(v_g);
    }

    pub fn previous(&self) -> Option<f64> {
        self.previous
    }

    pub fn current(&self) -> Option<f64> {
        self.current
    }

    /// True when activity moved from below `threshold` to above it between
    /// the last two rounds.
    pub fn crossed_upward(&self, threshold: f64) -> bool {
        matches!((self.previous, self.current), (Some(p), Some(c)) if p < threshold && c > threshold)
    }
}
