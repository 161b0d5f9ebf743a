//! Log-normal traffic matrices and load calibration.
//!
//! Demands are in units of lightpath capacity. A matrix is calibrated by a
//! single scale factor so that routing it over a reference virtual topology
//! yields a target mean lightpath utilization.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use thiserror::Error;

use crate::netstate::{route_traffic, VirtualTopology};

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("traffic matrix needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("log-normal sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("target load must lie in [0, 1], got {0}")]
    InvalidLoad(f64),
    #[error("reference topology leaves {fraction:.6} of the demand unroutable")]
    Unroutable { fraction: f64 },
    #[error("matrix carries no traffic over the reference topology")]
    NoTraffic,
    #[error("size mismatch: matrix has {matrix} nodes, topology has {topology}")]
    SizeMismatch { matrix: usize, topology: usize },
    #[error("traffic csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense `n x n` demand matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMatrix {
    nodes: usize,
    demands: Vec<f64>,
}

impl TrafficMatrix {
    pub fn zeros(nodes: usize) -> Self {
        Self {
            nodes,
            demands: vec![0.0; nodes * nodes],
        }
    }

    /// Builds a matrix from `f(src, dst)`; the diagonal is never evaluated.
    pub fn from_fn(nodes: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nodes);
        for i in 0..nodes {
            for j in (0..nodes).filter(|&j| j != i) {
                m.demands[i * nodes + j] = f(i, j);
            }
        }
        m
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn get(&self, src: usize, dst: usize) -> f64 {
        self.demands[src * self.nodes + dst]
    }

    /// Sets an off-diagonal demand. Panics on a diagonal or negative entry.
    pub fn set(&mut self, src: usize, dst: usize, demand: f64) {
        assert!(src != dst, "diagonal demands are always zero");
        assert!(demand >= 0.0, "demands are non-negative");
        self.demands[src * self.nodes + dst] = demand;
    }

    pub fn total(&self) -> f64 {
        self.demands.iter().sum()
    }

    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.nodes;
        (0..n).flat_map(move |i| {
            (0..n)
                .filter(move |&j| j != i)
                .map(move |j| (i, j, self.demands[i * n + j]))
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            nodes: self.nodes,
            demands: self.demands.iter().map(|d| d * factor).collect(),
        }
    }

    /// Relabels nodes: demand `(i, j)` moves to `(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.nodes);
        for (i, j, d) in self.off_diagonal() {
            out.demands[perm[i] * self.nodes + perm[j]] = d;
        }
        out
    }

    pub fn max_demand(&self) -> f64 {
        self.demands.iter().copied().fold(0.0, f64::max)
    }

    /// Writes `n` comma-separated rows of `n` plain decimals.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TrafficError> {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        for row in self.demands.chunks(self.nodes) {
            writer
                .write_record(row.iter().map(|d| d.to_string()))
                .map_err(|e| TrafficError::Csv(e.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, TrafficError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut demands = Vec::new();
        let mut rows = 0usize;
        for record in reader.records() {
            let record = record.map_err(|e| TrafficError::Csv(e.to_string()))?;
            for field in &record {
                let value: f64 = field.parse().map_err(|_| {
                    TrafficError::Csv(format!("row {}: `{field}` is not a number", rows + 1))
                })?;
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(TrafficError::Csv(format!(
                        "row {}: negative or non-finite demand",
                        rows + 1
                    )));
                }
                demands.push(value);
            }
            rows += 1;
        }
        if demands.len() != rows * rows {
            return Err(TrafficError::Csv(format!(
                "expected a square matrix, got {rows} rows and {} entries",
                demands.len()
            )));
        }
        if rows < 2 {
            return Err(TrafficError::TooFewNodes(rows));
        }
        if (0..rows).any(|i| demands[i * rows + i] != 0.0) {
            return Err(TrafficError::Csv("diagonal entries must be zero".into()));
        }
        Ok(Self {
            nodes: rows,
            demands,
        })
    }
}

/// Unit-mean log-normal demands: the underlying normal has mean
/// `-sigma^2 / 2` and standard deviation `sigma`.
pub fn generate_lognormal_matrix(
    nodes: usize,
    sigma: f64,
    seed: u64,
) -> Result<TrafficMatrix, TrafficError> {
    if nodes < 2 {
        return Err(TrafficError::TooFewNodes(nodes));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(TrafficError::InvalidSigma(sigma));
    }
    let dist = LogNormal::new(-0.5 * sigma * sigma, sigma)
        .map_err(|_| TrafficError::InvalidSigma(sigma))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(TrafficMatrix::from_fn(nodes, |_, _| dist.sample(&mut rng)))
}

/// Scales `matrix` so its mean lightpath utilization over `reference`
/// equals `load`. Utilization is linear in the scale, so one routing pass
/// gives the factor.
pub fn calibrate(
    matrix: &TrafficMatrix,
    reference: &VirtualTopology,
    load: f64,
) -> Result<TrafficMatrix, TrafficError> {
    if !(0.0..=1.0).contains(&load) {
        return Err(TrafficError::InvalidLoad(load));
    }
    if matrix.node_count() != reference.node_count() {
        return Err(TrafficError::SizeMismatch {
            matrix: matrix.node_count(),
            topology: reference.node_count(),
        });
    }
    let report = route_traffic(reference, matrix);
    if report.unroutable_fraction > 0.0 {
        return Err(TrafficError::Unroutable {
            fraction: report.unroutable_fraction,
        });
    }
    if load == 0.0 {
        return Ok(TrafficMatrix::zeros(matrix.node_count()));
    }
    if report.mean_utilization.is_nan() || report.mean_utilization <= 0.0 {
        return Err(TrafficError::NoTraffic);
    }
    Ok(matrix.scaled(load / report.mean_utilization))
}
