use rand::Rng;
use rand_distr::StandardNormal;

/// Threshold above which a pair wants a lightpath.
pub const EXPRESSION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateMode {
    /// `x' = clamp(V_G m + eta)`.
    #[default]
    Replacement,
    /// `x' = clamp(x + (m - x) V_G + eta)`.
    Relaxation,
}

/// Noise means for one update: shared or one per pair.
#[derive(Debug, Clone, Copy)]
pub enum NoiseMean<'a> {
    Scalar(f64),
    PerPair(&'a [f64]),
}

impl NoiseMean<'_> {
    fn at(&self, i: usize) -> f64 {
        match self {
            NoiseMean::Scalar(mu) => *mu,
            NoiseMean::PerPair(mus) => mus[i],
        }
    }
}

/// Expression level per potential lightpath, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionState(Vec<f64>);

impl ExpressionState {
    pub fn uniform<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.random::<f64>()).collect())
    }

    /// Clamps every entry into `[0, 1]`.
    pub fn from_values(mut values: Vec<f64>) -> Self {
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_expressed(&self, i: usize) -> bool {
        self.0[i] > EXPRESSION_THRESHOLD
    }

    /// One stochastic step; draws exactly one standard normal per pair, in
    /// pair order.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        memory_signal: &[f64],
        v_g: f64,
        mu: NoiseMean<'_>,
        mode: UpdateMode,
        rng: &mut R,
    ) {
        assert_eq!(memory_signal.len(), self.0.len(), "memory signal length");
        if let NoiseMean::PerPair(mus) = mu {
            assert_eq!(mus.len(), self.0.len(), "noise mean length");
        }
        for (i, x) in self.0.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let eta = mu.at(i) + z;
            let next = match mode {
                UpdateMode::Replacement => v_g * memory_signal[i] + eta,
                UpdateMode::Relaxation => *x + (memory_signal[i] - *x) * v_g + eta,
            };
            *x = next.clamp(0.0, 1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn expressed_fraction(v_g: f64, m: f64, mu: f64, mode: UpdateMode) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let len = 100_000;
        let mut x = ExpressionState::uniform(len, &mut rng);
        x.update(&vec![m; len], v_g, NoiseMean::Scalar(mu), mode, &mut rng);
        (0..len).filter(|&i| x.is_expressed(i)).count() as f64 / len as f64
    }

    #[test]
    fn pure_noise_expresses_about_31_percent() {
        let p = expressed_fraction(0.0, 0.7, 0.0, UpdateMode::Replacement);
        assert!((p - 0.3085).abs() < 0.005, "{p}");
    }

    #[test]
    fn half_mean_noise_is_balanced() {
        let p = expressed_fraction(0.0, 0.0, 0.5, UpdateMode::Replacement);
        assert!((p - 0.5).abs() < 0.005, "{p}");
    }

    #[test]
    fn memory_dominated_retention() {
        // P(1 + eta > 0.5) = Phi(0.5)
        let p = expressed_fraction(1.0, 1.0, 0.0, UpdateMode::Replacement);
        assert!((p - 0.6915).abs() < 0.005, "{p}");
    }

    #[test]
    fn values_stay_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut x = ExpressionState::uniform(5000, &mut rng);
        for mode in [UpdateMode::Replacement, UpdateMode::Relaxation] {
            for _ in 0..5 {
                x.update(&[0.9; 5000], 0.8, NoiseMean::Scalar(2.0), mode, &mut rng);
                assert!(x.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn seeded_updates_repeat() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut x = ExpressionState::uniform(64, &mut rng);
            let mus: Vec<f64> = (0..64).map(|i| i as f64 / 64.0).collect();
            x.update(
                &[0.3; 64],
                0.4,
                NoiseMean::PerPair(&mus),
                UpdateMode::Relaxation,
                &mut rng,
            );
            x
        };
        assert_eq!(run(), run());
    }
}
