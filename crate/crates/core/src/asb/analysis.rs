//! Closed-form lightpath transition probabilities for the replacement
//! update and the noise means derived from them.
//!
//! Under `x' = V_G m + eta` with `eta ~ N(mu, 1)`, a pair is wanted next
//! round with probability `Phi(V_G m + mu - 0.5)`, independent of its
//! current state.

use statrs::distribution::{ContinuousCDF, Normal};

use super::AsbError;

/// Default gain of the switch that turns the transition branches of the
/// optimal noise mean off once activity passes 0.5.
pub const DEFAULT_SWITCH_GAIN: f64 = 2000.0;

fn standard_normal() -> Normal {
    Normal::standard()
}

/// Row-stochastic matrix of per-round lightpath state changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl TransitionMatrix {
    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.p00, self.p01], [self.p10, self.p11]]
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.rows()
            .iter()
            .flatten()
            .zip(other.rows().iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Transition probabilities for a pair whose memory signal is `m_repr`.
pub fn transition_matrix(v_g: f64, m_repr: f64, mu: f64) -> TransitionMatrix {
    let up = standard_normal().cdf(v_g * m_repr + mu - 0.5);
    TransitionMatrix {
        p00: 1.0 - up,
        p01: up,
        p10: 1.0 - up,
        p11: up,
    }
}

/// Noise mean that makes the establishment probability `p_target`.
pub fn solve_mu_for_probability(p_target: f64, v_g: f64, m_repr: f64) -> Result<f64, AsbError> {
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(AsbError::ProbabilityOutOfRange(p_target));
    }
    Ok(0.5 - v_g * m_repr + standard_normal().inverse_cdf(p_target))
}

/// Switch factor `f(0.5 - V_G)`: ~1 below activity 0.5, ~0 above it.
pub fn branch_switch(v_g: f64, gain: f64) -> f64 {
    1.0 / (1.0 + (-gain * (0.5 - v_g)).exp())
}

/// Optimal noise mean for a pair going from `prev_bit` to `target_bit`:
///
/// ```text
/// 0.5 (1-p)(1-t) + 0.5 p t + (0.5 + V_G) p (1-t) f(0.5-V_G) + (0.5 - V_G)(1-p) t f(0.5-V_G)
/// ```
pub fn mu_opt(prev_bit: bool, target_bit: bool, v_g: f64, switch_gain: f64) -> f64 {
    let p = f64::from(u8::from(prev_bit));
    let t = f64::from(u8::from(target_bit));
    let s = branch_switch(v_g, switch_gain);
    0.5 * (1.0 - p) * (1.0 - t)
        + 0.5 * p * t
        + (0.5 + v_g) * p * (1.0 - t) * s
        + (0.5 - v_g) * (1.0 - p) * t * s
}
