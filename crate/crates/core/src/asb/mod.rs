//! Attractor-selection virtual topology controller.
//!
//! Each round: measure the most loaded lightpath and turn it into activity
//! `V_G`; store the live topology as an attractor when activity crosses
//! `t_max` upward; recall the memory signal; pick the noise mean; update the
//! expression levels; then sweep the pairs, establishing expressed ones that
//! fit and removing unexpressed ones.

mod activity;
mod analysis;
mod dynamics;
mod memory;

pub use activity::{compute_activity, ActivityTracker, ACTIVITY_GAIN};
pub use analysis::{
    branch_switch, mu_opt, solve_mu_for_probability, transition_matrix, TransitionMatrix,
    DEFAULT_SWITCH_GAIN,
};
pub use dynamics::{ExpressionState, NoiseMean, UpdateMode, EXPRESSION_THRESHOLD};
pub use memory::{sigmoid, AttractorMemory, MemoryConfig, WeightNormalization};

use rand::Rng;
use thiserror::Error;

use crate::metrics::RoundMetrics;
use crate::netstate::{route_traffic, NetError, NetworkState, RoundDelta};
use crate::traffic::TrafficMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum AsbError {
    #[error("pattern length {actual} does not match memory length {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("target probability {0} must lie strictly between 0 and 1")]
    ProbabilityOutOfRange(f64),
    #[error("invalid controller setting: {0}")]
    InvalidConfig(String),
}

/// How the noise mean is chosen each round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuMode {
    Fixed(f64),
    /// Per-pair optimal mean from the previous and target bits.
    Optimal,
    /// Establishment probability pinned to the per-node resource share;
    /// established pairs follow the optimal mean.
    ResourceAware,
}

/// Order of the establish/remove sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PassOrder {
    /// One pass in pair order, establish-or-remove per pair.
    #[default]
    Single,
    /// All removals first, then all establishments.
    TwoPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialMemory {
    /// `capacity` random patterns at the resource-feasible density.
    #[default]
    Random,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsbConfig {
    pub t_max: f64,
    pub mu_mode: MuMode,
    pub update_mode: UpdateMode,
    pub pass_order: PassOrder,
    pub memory: MemoryConfig,
    pub initial_memory: InitialMemory,
    pub switch_gain: f64,
}

impl Default for AsbConfig {
    fn default() -> Self {
        Self {
            t_max: 0.5,
            mu_mode: MuMode::Fixed(0.0),
            update_mode: UpdateMode::Replacement,
            pass_order: PassOrder::Single,
            memory: MemoryConfig::default(),
            initial_memory: InitialMemory::Random,
            switch_gain: DEFAULT_SWITCH_GAIN,
        }
    }
}

impl AsbConfig {
    pub fn validate(&self) -> Result<(), AsbError> {
        if !(self.t_max > 0.0 && self.t_max < 1.0) {
            return Err(AsbError::InvalidConfig(format!(
                "t_max {} outside (0, 1)",
                self.t_max
            )));
        }
        if let MuMode::Fixed(mu) = self.mu_mode {
            if !mu.is_finite() {
                return Err(AsbError::InvalidConfig("mu must be finite".into()));
            }
        }
        if self.memory.capacity == 0 {
            return Err(AsbError::InvalidConfig(
                "attractor capacity must be positive".into(),
            ));
        }
        if self.switch_gain.is_nan() || self.switch_gain <= 0.0 {
            return Err(AsbError::InvalidConfig(
                "switch gain must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Probability that a random pair can get a lightpath given per-node ports
/// and per-fiber wavelengths, kept strictly inside (0, 1).
pub fn resource_share(nodes: usize, ports: u32, wavelengths: u32) -> f64 {
    let p = f64::from(ports.min(wavelengths)) / (nodes.saturating_sub(1).max(1)) as f64;
    p.clamp(1e-9, 1.0 - 1e-9)
}

#[derive(Debug, Clone)]
pub struct AsbController {
    config: AsbConfig,
    memory: AttractorMemory,
    expression: ExpressionState,
    tracker: ActivityTracker,
    resource_share: f64,
    mu: Vec<f64>,
    round: usize,
}

/// What one controller round did besides the shared metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct AsbRound {
    pub metrics: RoundMetrics,
    /// Activity the controller acted on (topology from the previous round).
    pub observed_v_g: f64,
    pub stored_attractor: bool,
}

impl AsbController {
    /// Fresh controller: random or empty memory, uniform expression levels.
    pub fn new<R: Rng + ?Sized>(
        config: AsbConfig,
        net: &NetworkState,
        rng: &mut R,
    ) -> Result<Self, AsbError> {
        config.validate()?;
        let pairs = net.pair_count();
        let budget = net.budget();
        let share = resource_share(
            net.node_count(),
            budget.tx_per_node.min(budget.rx_per_node),
            net.pool().wavelengths_per_fiber,
        );
        let memory = match config.initial_memory {
            InitialMemory::Random => {
                AttractorMemory::seeded_random(config.memory, pairs, share, rng)
            }
            InitialMemory::Empty => AttractorMemory::new(config.memory, pairs),
        };
        let expression = ExpressionState::uniform(pairs, rng);
        Ok(Self::from_parts(config, memory, expression, share))
    }

    pub fn from_parts(
        config: AsbConfig,
        memory: AttractorMemory,
        expression: ExpressionState,
        resource_share: f64,
    ) -> Self {
        assert_eq!(
            memory.pattern_len(),
            expression.len(),
            "memory and expression lengths"
        );
        Self {
            config,
            memory,
            expression,
            tracker: ActivityTracker::new(),
            resource_share,
            mu: Vec::new(),
            round: 0,
        }
    }

    pub fn with_tracker(mut self, tracker: ActivityTracker) -> Self {
        self.tracker = tracker;
        self
    }

    pub fn config(&self) -> &AsbConfig {
        &self.config
    }

    pub fn memory(&self) -> &AttractorMemory {
        &self.memory
    }

    pub fn expression(&self) -> &ExpressionState {
        &self.expression
    }

    pub fn tracker(&self) -> &ActivityTracker {
        &self.tracker
    }

    /// Per-pair noise means of the last round; empty in fixed mode.
    pub fn last_mu(&self) -> &[f64] {
        &self.mu
    }

    /// Stores `bits` when activity crossed `t_max` upward this round.
    pub fn maybe_store_attractor(&mut self, net: &NetworkState) -> bool {
        if self.tracker.crossed_upward(self.config.t_max) {
            self.memory
                .store(net.vt().bits())
                .expect("live topology matches memory length");
            true
        } else {
            false
        }
    }

    fn select_mu(&mut self, memory_signal: &[f64], v_g: f64) -> Option<f64> {
        let gain = self.config.switch_gain;
        let x = &self.expression;
        match self.config.mu_mode {
            MuMode::Fixed(mu) => {
                self.mu.clear();
                return Some(mu);
            }
            MuMode::Optimal => {
                self.mu.clear();
                self.mu.extend(
                    memory_signal.iter().enumerate().map(|(i, &m)| {
                        mu_opt(x.is_expressed(i), m > EXPRESSION_THRESHOLD, v_g, gain)
                    }),
                );
            }
            MuMode::ResourceAware => {
                let share = self.resource_share;
                self.mu.clear();
                self.mu
                    .extend(memory_signal.iter().enumerate().map(|(i, &m)| {
                        let target = m > EXPRESSION_THRESHOLD;
                        if x.is_expressed(i) {
                            mu_opt(true, target, v_g, gain)
                        } else {
                            solve_mu_for_probability(share, v_g, f64::from(u8::from(target)))
                                .expect("share is inside (0, 1)")
                        }
                    }));
            }
        }
        if self.mu.is_empty() {
            None
        } else {
            Some(self.mu.iter().sum::<f64>() / self.mu.len() as f64)
        }
    }

    fn update_lightpaths(&self, net: &mut NetworkState) -> Result<RoundDelta, NetError> {
        let x = self.expression.as_slice();
        let mut delta = RoundDelta::default();
        match self.config.pass_order {
            PassOrder::Single => {
                for (pair, &xi) in x.iter().enumerate() {
                    if xi > EXPRESSION_THRESHOLD {
                        delta += net.apply_decision(pair, true)?;
                    } else if xi < EXPRESSION_THRESHOLD {
                        delta += net.apply_decision(pair, false)?;
                    }
                }
            }
            PassOrder::TwoPhase => {
                for (pair, &xi) in x.iter().enumerate() {
                    if xi < EXPRESSION_THRESHOLD {
                        delta += net.apply_decision(pair, false)?;
                    }
                }
                for (pair, &xi) in x.iter().enumerate() {
                    if xi > EXPRESSION_THRESHOLD {
                        delta += net.apply_decision(pair, true)?;
                    }
                }
            }
        }
        Ok(delta)
    }

    /// One full controller round against `traffic`.
    pub fn round<R: Rng + ?Sized>(
        &mut self,
        net: &mut NetworkState,
        traffic: &TrafficMatrix,
        rng: &mut R,
    ) -> Result<AsbRound, NetError> {
        self.round += 1;
        let observed = route_traffic(net.vt(), traffic);
        let v_g = compute_activity(observed.u_max);
        self.tracker.push(v_g);
        let stored_attractor = self.maybe_store_attractor(net);

        let memory_signal = self.memory.signal(self.expression.as_slice());
        let mu_mean = self.select_mu(&memory_signal, v_g);
        let noise = if self.mu.is_empty() {
            NoiseMean::Scalar(mu_mean.unwrap_or(0.0))
        } else {
            NoiseMean::PerPair(&self.mu)
        };
        self.expression
            .update(&memory_signal, v_g, noise, self.config.update_mode, rng);

        let delta = self.update_lightpaths(net)?;
        Ok(AsbRound {
            metrics: RoundMetrics::measure(self.round, net.vt(), traffic, delta, mu_mean),
            observed_v_g: v_g,
            stored_attractor,
        })
    }
}
