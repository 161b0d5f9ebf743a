//! Hebbian auto-associative memory over topology bit-vectors.
//!
//! The weight operator is `W = sum_a s_a * a a^T` over the stored
//! attractors, with `s_a = alpha / max(1, |a|)` under per-attractor
//! normalization or `s_a = alpha` raw. At 9900 pairs a dense `W` would hold
//! ~98M entries, so recall evaluates `W x` as `sum_a s_a a (a . x)` and a
//! FIFO eviction is just dropping that attractor's term.

use rand::Rng;

use super::AsbError;
use crate::netstate::TopologyBits;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightNormalization {
    /// Each outer product scaled by `1 / max(1, ones(a))`.
    PerAttractor,
    /// Plain `alpha * a a^T`.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryConfig {
    pub capacity: usize,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub normalization: WeightNormalization,
    /// Drop the `i == j` Hebbian terms.
    pub zero_diagonal: bool,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        Self {
            capacity: 5,
            alpha: 1.0,
            beta: 10.0,
            theta: 0.5,
            normalization: WeightNormalization::PerAttractor,
            zero_diagonal: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Attractor {
    bits: TopologyBits,
    ones: Vec<usize>,
    scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttractorMemory {
    config: MemoryConfig,
    pattern_len: usize,
    slots: Vec<Option<Attractor>>,
    next_slot: usize,
}

impl AttractorMemory {
    pub fn new(config: MemoryConfig, pattern_len: usize) -> Self {
        assert!(config.capacity > 0, "memory needs at least one slot");
        Self {
            config,
            pattern_len,
            slots: vec![None; config.capacity],
            next_slot: 0,
        }
    }

    /// Memory filled with `capacity` random patterns, each bit set with
    /// probability `density`.
    pub fn seeded_random<R: Rng + ?Sized>(
        config: MemoryConfig,
        pattern_len: usize,
        density: f64,
        rng: &mut R,
    ) -> Self {
        let mut memory = Self::new(config, pattern_len);
        let density = density.clamp(0.0, 1.0);
        for _ in 0..config.capacity {
            let bits = TopologyBits::from_bools(
                (0..pattern_len).map(|_| rng.random_bool(density)).collect(),
            );
            memory.store(bits).expect("pattern length matches");
        }
        memory
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.config
    }

    pub fn pattern_len(&self) -> usize {
        self.pattern_len
    }

    pub fn len(&self) -> usize {
        self.slots.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// FIFO cursor: the slot the next stored attractor overwrites.
    pub fn next_slot(&self) -> usize {
        self.next_slot
    }

    /// Stored attractors, oldest first.
    pub fn attractors(&self) -> impl Iterator<Item = &TopologyBits> {
        let k = self.slots.len();
        (self.next_slot..k)
            .chain(0..self.next_slot)
            .filter_map(|s| self.slots[s].as_ref().map(|a| &a.bits))
    }

    /// Stores `pattern` in the cursor slot, returning the evicted attractor.
    pub fn store(&mut self, pattern: TopologyBits) -> Result<Option<TopologyBits>, AsbError> {
        if pattern.len() != self.pattern_len {
            return Err(AsbError::LengthMismatch {
                expected: self.pattern_len,
                actual: pattern.len(),
            });
        }
        let ones: Vec<usize> = pattern.iter_ones().collect();
        let scale = match self.config.normalization {
            WeightNormalization::PerAttractor => self.config.alpha / ones.len().max(1) as f64,
            WeightNormalization::Raw => self.config.alpha,
        };
        let evicted = self.slots[self.next_slot].replace(Attractor {
            bits: pattern,
            ones,
            scale,
        });
        self.next_slot = (self.next_slot + 1) % self.slots.len();
        Ok(evicted.map(|a| a.bits))
    }

    /// Entry `W[i][j]` of the implied weight matrix.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if self.config.zero_diagonal && i == j {
            return 0.0;
        }
        self.slots
            .iter()
            .flatten()
            .filter(|a| a.bits.get(i) && a.bits.get(j))
            .map(|a| a.scale)
            .sum()
    }

    /// `W x`, evaluated without materializing `W`.
    pub fn recall_input(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.pattern_len, "expression length");
        let mut z = vec![0.0; self.pattern_len];
        for a in self.slots.iter().flatten() {
            let overlap: f64 = a.ones.iter().map(|&j| x[j]).sum();
            let term = a.scale * overlap;
            if self.config.zero_diagonal {
                for &i in &a.ones {
                    z[i] += term - a.scale * x[i];
                }
            } else {
                for &i in &a.ones {
                    z[i] += term;
                }
            }
        }
        z
    }

    /// Memory signal `f(W x)` with `f(z) = 1 / (1 + exp(-beta (z - theta)))`.
    pub fn signal(&self, x: &[f64]) -> Vec<f64> {
        let MemoryConfig { beta, theta, .. } = self.config;
        let mut z = self.recall_input(x);
        for v in &mut z {
            *v = sigmoid(beta, theta, *v);
        }
        z
    }
}

pub fn sigmoid(beta: f64, theta: f64, z: f64) -> f64 {
    1.0 / (1.0 + (-beta * (z - theta)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(v: &[u8]) -> TopologyBits {
        TopologyBits::from_bools(v.iter().map(|&b| b == 1).collect())
    }

    fn dense_signal(memory: &AttractorMemory, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let cfg = memory.config();
        (0..n)
            .map(|i| {
                let z: f64 = (0..n).map(|j| memory.weight(i, j) * x[j]).sum();
                sigmoid(cfg.beta, cfg.theta, z)
            })
            .collect()
    }

    #[test]
    fn empty_memory_signals_sigmoid_of_zero() {
        let memory = AttractorMemory::new(MemoryConfig::default(), 30);
        let expected = 1.0 / (1.0 + 5f64.exp());
        for m in memory.signal(&[0.7; 30]) {
            assert!((m - expected).abs() < 1e-15);
            assert!((m - 0.006_692_850_924_284_856).abs() < 1e-15);
        }
    }

    #[test]
    fn fifo_keeps_the_latest_k() {
        let config = MemoryConfig {
            capacity: 3,
            ..MemoryConfig::default()
        };
        let mut memory = AttractorMemory::new(config, 4);
        let patterns: Vec<_> = (0..4u8).map(|i| bits(&[i & 1, i >> 1 & 1, 1, 0])).collect();
        for p in &patterns {
            memory.store(p.clone()).unwrap();
        }
        let stored: Vec<_> = memory.attractors().cloned().collect();
        assert_eq!(stored, patterns[1..].to_vec());
        assert_eq!(memory.next_slot(), 1);
    }

    #[test]
    fn raw_hebbian_weights_are_outer_products() {
        // six pairs at n = 3
        let config = MemoryConfig {
            normalization: WeightNormalization::Raw,
            ..MemoryConfig::default()
        };
        let mut memory = AttractorMemory::new(config, 6);
        memory.store(bits(&[1, 1, 0, 0, 0, 0])).unwrap();
        memory.store(bits(&[1, 0, 0, 0, 0, 0])).unwrap();
        assert_eq!(memory.weight(0, 1), 1.0);
        assert_eq!(memory.weight(1, 0), 1.0);
        assert_eq!(memory.weight(0, 0), 2.0);
        assert_eq!(memory.weight(1, 1), 1.0);
        assert_eq!(memory.weight(0, 2), 0.0);
    }

    #[test]
    fn normalized_weights_scale_by_attractor_size() {
        let mut memory = AttractorMemory::new(MemoryConfig::default(), 6);
        memory.store(bits(&[1, 1, 0, 0, 0, 0])).unwrap();
        memory.store(bits(&[1, 0, 0, 0, 0, 0])).unwrap();
        assert_eq!(memory.weight(0, 1), 0.5);
        assert_eq!(memory.weight(0, 0), 1.5);
    }

    #[test]
    fn zero_diagonal_option() {
        let config = MemoryConfig {
            zero_diagonal: true,
            ..MemoryConfig::default()
        };
        let mut memory = AttractorMemory::new(config, 6);
        memory.store(bits(&[1, 1, 1, 0, 0, 0])).unwrap();
        assert_eq!(memory.weight(2, 2), 0.0);
        let x = [0.9, 0.1, 0.4, 0.3, 0.0, 1.0];
        let dense = dense_signal(&memory, &x);
        for (a, b) in memory.signal(&x).iter().zip(&dense) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn recall_of_a_stored_topology_is_a_fixed_point() {
        let a = bits(&[1, 0, 1, 1, 0, 0]);
        let mut memory = AttractorMemory::new(MemoryConfig::default(), 6);
        memory.store(a.clone()).unwrap();
        let x: Vec<f64> = a
            .as_slice()
            .iter()
            .map(|&b| f64::from(u8::from(b)))
            .collect();
        let m = memory.signal(&x);
        for (i, &mi) in m.iter().enumerate() {
            if a.get(i) {
                assert!(mi > 0.99, "{mi}");
            } else {
                assert!(mi < 0.01, "{mi}");
            }
        }
    }

    #[test]
    fn matrix_free_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for len in [12, 30, 42] {
            let memory =
                AttractorMemory::seeded_random(MemoryConfig::default(), len, 0.4, &mut rng);
            let x: Vec<f64> = (0..len).map(|_| rng.random()).collect();
            let dense = dense_signal(&memory, &x);
            for (a, b) in memory.signal(&x).iter().zip(&dense) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mut memory = AttractorMemory::new(MemoryConfig::default(), 6);
        assert!(matches!(
            memory.store(TopologyBits::zeros(5)),
            Err(AsbError::LengthMismatch {
                expected: 6,
                actual: 5
            })
        ));
    }
}
