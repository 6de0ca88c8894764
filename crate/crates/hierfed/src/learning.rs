//! Fixed-point federated least squares through the private round.
//!
//! Real-valued gradients are scaled by a power of two, rounded, and mapped
//! into F_q with negatives represented as q - |v|. Field aggregation of the
//! quantized gradients is exact, so the privately aggregated trajectory is
//! bit-identical to a plaintext fixed-point trajectory; privacy costs no
//! accuracy beyond the quantization itself.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::field::{FieldConfig, FieldVector};
use crate::protocol::{ProtocolError, RoundPlan};
use crate::topology::Topology;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("scale must be a positive power of two, got {0}")]
    BadScale(u64),
    #[error("clip must be positive and finite, got {0}")]
    BadClip(f64),
    #[error("summing {n_summands} quantized values needs {required} < (q-1)/2 = {half}")]
    FieldTooSmallForSum {
        n_summands: usize,
        required: u64,
        half: u64,
    },
    #[error("value {value} at index {index} exceeds the clip bound {clip}")]
    ClipExceeded {
        index: usize,
        value: f64,
        clip: f64,
    },
    #[error("entry at index {index} lies outside the representable sum range; wraparound")]
    Wraparound { index: usize },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dataset needs at least one sample")]
    EmptyDataset,
    #[error("expected {expected} client datasets, got {got}")]
    DatasetCount { expected: usize, got: usize },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Fixed-point encoding parameters: v maps to round(v * scale) in F_q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationConfig {
    pub field: FieldConfig,
    pub scale: u64,
    pub clip: f64,
}

impl QuantizationConfig {
    pub fn new(field: FieldConfig, scale: u64, clip: f64) -> Result<Self, LearnError> {
        if scale == 0 || !scale.is_power_of_two() {
            return Err(LearnError::BadScale(scale));
        }
        if !(clip.is_finite() && clip > 0.0) {
            return Err(LearnError::BadClip(clip));
        }
        let cfg = Self { field, scale, clip };
        cfg.check_headroom(1)?;
        Ok(cfg)
    }

    /// Summing `n_summands` quantized values must stay inside the centered
    /// lift range (-(q-1)/2, (q-1)/2].
    pub fn check_headroom(&self, n_summands: usize) -> Result<(), LearnError> {
        let half = (self.field.modulus() - 1) / 2;
        let required = (n_summands as f64) * (self.scale as f64) * self.clip;
        if !(required < half as f64) {
            return Err(LearnError::FieldTooSmallForSum {
                n_summands,
                required: required as u64,
                half,
            });
        }
        Ok(())
    }

    fn sum_bound(&self, n_summands: usize) -> f64 {
        // each summand carries up to 1/2 rounding on top of scale*clip
        (n_summands as f64) * ((self.scale as f64) * self.clip + 0.5)
    }
}

/// Element-wise fixed-point encoding of a real vector into F_q.
pub fn quantize(v: &[f64], cfg: &QuantizationConfig) -> Result<FieldVector, LearnError> {
    let q = cfg.field.modulus();
    let mut out = cfg.field.zeros(0);
    for (index, &x) in v.iter().enumerate() {
        if !(x.is_finite() && x.abs() <= cfg.clip) {
            return Err(LearnError::ClipExceeded {
                index,
                value: x,
                clip: cfg.clip,
            });
        }
        let scaled = (x * cfg.scale as f64).round() as i64;
        let residue = if scaled >= 0 {
            scaled as u64
        } else {
            q - scaled.unsigned_abs()
        };
        out.push(cfg.field.element(residue)).expect("same field");
    }
    Ok(out)
}

/// Centered lift back to the reals, checking that every entry is inside the
/// range reachable by a sum of `n_summands` clipped values.
pub fn dequantize(
    v: &FieldVector,
    n_summands: usize,
    cfg: &QuantizationConfig,
) -> Result<Vec<f64>, LearnError> {
    let q = cfg.field.modulus();
    let half = (q - 1) / 2;
    let bound = cfg.sum_bound(n_summands);
    let mut out = Vec::with_capacity(v.len());
    for (index, &value) in v.values().iter().enumerate() {
        let lifted: i64 = if value <= half {
            value as i64
        } else {
            -((q - value) as i64)
        };
        if (lifted.abs() as f64) > bound {
            return Err(LearnError::Wraparound { index });
        }
        out.push(lifted as f64 / cfg.scale as f64);
    }
    Ok(out)
}

/// Linear predictor with its gradient-descent step size.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub eta: f64,
}

/// One client's local samples: rows of features with matching labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl ClientDataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, LearnError> {
        if x.is_empty() {
            return Err(LearnError::EmptyDataset);
        }
        if x.len() != y.len() {
            return Err(LearnError::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let d = x[0].len();
        for row in &x {
            if row.len() != d {
                return Err(LearnError::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
        }
        Ok(Self { x, y })
    }

    pub fn n_samples(&self) -> usize {
        self.x.len()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }
}

/// Squared-error gradient over the client's samples:
/// sum_s x_s (x_s . w - y_s).
pub fn local_gradient(model: &LinearModel, data: &ClientDataset) -> Result<Vec<f64>, LearnError> {
    let d = model.w.len();
    if data.dim() != d {
        return Err(LearnError::DimensionMismatch {
            expected: d,
            got: data.dim(),
        });
    }
    let mut grad = vec![0.0; d];
    for (row, &label) in data.x.iter().zip(&data.y) {
        let residual: f64 = row.iter().zip(&model.w).map(|(x, w)| x * w).sum::<f64>() - label;
        for (g, x) in grad.iter_mut().zip(row) {
            *g += x * residual;
        }
    }
    Ok(grad)
}

/// Total squared-error loss 1/2 sum (x . w - y)^2 across all clients.
pub fn squared_error_loss(w: &[f64], datasets: &[ClientDataset]) -> f64 {
    let mut loss = 0.0;
    for data in datasets {
        for (row, &label) in data.x.iter().zip(&data.y) {
            let residual: f64 = row.iter().zip(w).map(|(x, v)| x * v).sum::<f64>() - label;
            loss += 0.5 * residual * residual;
        }
    }
    loss
}

/// How the quantized gradients are summed each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    /// Through the full private round.
    Private,
    /// Plain field summation; the oracle the private path must match.
    Plaintext,
}

/// Model state after each iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub iter: usize,
    pub loss: f64,
    pub w: Vec<f64>,
}

/// Runs `iters` synchronized gradient-descent steps where each step
/// aggregates the clients' quantized gradients and applies
/// w <- w - (eta / M) * sum_i grad_i. Returns the trajectory including the
/// initial model.
pub fn train(
    topology: &Topology,
    datasets: &[ClientDataset],
    model0: &LinearModel,
    cfg: &QuantizationConfig,
    iters: usize,
    seed: u64,
    mode: AggregationMode,
) -> Result<Vec<TrajectoryPoint>, LearnError> {
    let n = topology.n_clients();
    if datasets.len() != n {
        return Err(LearnError::DatasetCount {
            expected: n,
            got: datasets.len(),
        });
    }
    let d = model0.w.len();
    for data in datasets {
        if data.dim() != d {
            return Err(LearnError::DimensionMismatch {
                expected: d,
                got: data.dim(),
            });
        }
    }
    cfg.check_headroom(n)?;
    let plan = RoundPlan::new(topology, cfg.field, d)?;
    let total_samples: usize = datasets.iter().map(|ds| ds.n_samples()).sum();
    let step = model0.eta / total_samples as f64;

    let mut seed_rng = ChaCha20Rng::seed_from_u64(seed);
    let mut model = model0.clone();
    let mut trajectory = Vec::with_capacity(iters + 1);
    trajectory.push(TrajectoryPoint {
        iter: 0,
        loss: squared_error_loss(&model.w, datasets),
        w: model.w.clone(),
    });

    for iter in 1..=iters {
        let mut quantized = Vec::with_capacity(n);
        for data in datasets {
            let grad = local_gradient(&model, data)?;
            quantized.push(quantize(&grad, cfg)?);
        }
        let round_seed = seed_rng.gen::<u64>();
        let aggregate = match mode {
            AggregationMode::Private => {
                let draws = plan.sample_draws(round_seed);
                plan.execute(&quantized, &draws)?.aggregate
            }
            AggregationMode::Plaintext => {
                let mut sum = cfg.field.zeros(d);
                for g in &quantized {
                    sum.add_assign_checked(g).map_err(ProtocolError::from)?;
                }
                sum
            }
        };
        let gradient_sum = dequantize(&aggregate, n, cfg)?;
        for (w, g) in model.w.iter_mut().zip(&gradient_sum) {
            *w -= step * g;
        }
        trajectory.push(TrajectoryPoint {
            iter,
            loss: squared_error_loss(&model.w, datasets),
            w: model.w.clone(),
        });
    }
    Ok(trajectory)
}

/// CSV export: `iter,loss,w_0,...,w_{d-1}`.
pub fn write_trajectory_csv<W: Write>(
    trajectory: &[TrajectoryPoint],
    mut w: W,
) -> io::Result<()> {
    let d = trajectory.first().map_or(0, |p| p.w.len());
    let header: Vec<String> = (0..d).map(|j| format!("w_{j}")).collect();
    writeln!(w, "iter,loss,{}", header.join(","))?;
    for point in trajectory {
        let ws: Vec<String> = point.w.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{},{}", point.iter, point.loss, ws.join(","))?;
    }
    Ok(())
}

/// Deterministic noise-free regression data for demos and tests: features
/// uniform in [-1, 1], labels from a hidden weight vector.
pub fn synthetic_regression(
    n_clients: usize,
    samples_per_client: usize,
    d: usize,
    seed: u64,
) -> Vec<ClientDataset> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let w_true: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (0..n_clients)
        .map(|_| {
            let x: Vec<Vec<f64>> = (0..samples_per_client)
                .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let y: Vec<f64> = x
                .iter()
                .map(|row| row.iter().zip(&w_true).map(|(a, b)| a * b).sum())
                .collect();
            ClientDataset::new(x, y).expect("generated data is well-formed")
        })
        .collect()
}
