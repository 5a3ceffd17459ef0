//! L1-regularized stochastic steepest-descent training with error
//! back-propagation, plus dataset normalization.
//!
//! Each step picks one sample, computes the per-unit error terms by
//! back-propagation, and moves every weight by
//! `-eta * (delta_j * o_i + lambda * sgn(w))` and every bias by
//! `-eta * delta_j`. The step size decays as `eta0 * a1*n1 / (a1*n1 + 5t)`,
//! so the schedule starts at `eta0` and behaves like `1/t` for large `t`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{
    forward, training_error, Dataset, DimRange, LayerTopology, NetworkParams, NormInfo,
};

/// Sample-selection policy during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Each step draws a uniformly random sample index.
    UniformRandom,
    /// Deterministic round-robin over classes: sample 1 of class 1..K, then
    /// sample 2 of class 1..K, and so on, wrapping at the end. Requires the
    /// dataset to be laid out class-major (all of class 1 first) with equal
    /// class sizes.
    ClassCyclic { classes: usize },
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// L1 penalty weight (lambda).
    pub lasso_weight: f64,
    /// Convergence stabilizer added to the sigmoid derivative (epsilon_1).
    pub stabilizer: f64,
    /// Mean iterations per dataset (a_1); total steps = epochs * samples.
    pub epochs: usize,
    /// Base step size (eta_0).
    pub base_step: f64,
    pub seed: u64,
    pub sampling: Sampling,
    /// Bounds the input data was normalized onto.
    pub x_bounds: (f64, f64),
    /// Bounds the output data was normalized onto.
    pub y_bounds: (f64, f64),
    /// Error-trace stride in steps; defaults to one pass over the dataset.
    pub trace_stride: Option<u64>,
    /// Also evaluate the test error at every trace point.
    pub eval_test: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lasso_weight: 0.0,
            stabilizer: 0.001,
            epochs: 1,
            base_step: 0.7,
            seed: 0,
            sampling: Sampling::UniformRandom,
            x_bounds: (-1.0, 1.0),
            y_bounds: (0.01, 0.99),
            trace_stride: None,
            eval_test: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lasso_weight < 0.0 {
            return Err(Error::config("lasso_weight must be >= 0"));
        }
        if self.stabilizer < 0.0 {
            return Err(Error::config("stabilizer must be >= 0"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        if !(self.base_step > 0.0) {
            return Err(Error::config("base_step must be > 0"));
        }
        if self.x_bounds.0 >= self.x_bounds.1 || self.y_bounds.0 >= self.y_bounds.1 {
            return Err(Error::config("normalization bounds must satisfy min < max"));
        }
        if let Sampling::ClassCyclic { classes } = self.sampling {
            if classes == 0 {
                return Err(Error::config("class count must be >= 1"));
            }
        }
        Ok(())
    }
}

/// Training / test error measured at points along a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: u64,
    pub train_error: f64,
    pub test_error: Option<f64>,
}

/// Error history of one training run; steps strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorTrace {
    pub entries: Vec<TraceEntry>,
}

/// Decayed step size `eta0 * a1*n1 / (a1*n1 + 5t)`.
fn step_size(base: f64, step: u64, epochs: usize, samples: usize) -> f64 {
    let a1n1 = (epochs * samples) as f64;
    base * a1n1 / (a1n1 + 5.0 * step as f64)
}

/// Step size at step `t` with the standard base of 0.7: strictly decreasing,
/// equal to 0.7 at `t = 0`.
pub fn learning_rate(step: u64, epochs: usize, samples: usize) -> f64 {
    step_size(0.7, step, epochs, samples)
}

#[inline]
fn sgn(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Dataset index visited at step `t` under class-cyclic ordering with a
/// class-major layout.
fn cyclic_index(step: u64, classes: usize, total: usize) -> usize {
    let per_class = total / classes;
    let pos = (step % total as u64) as usize;
    let class = pos % classes;
    let index = pos / classes;
    class * per_class + index
}

/// One stochastic update on sample `(x, y)` with step size `eta`, applied in
/// place. The error terms are computed against the pre-update weights, then
/// all weights and biases move at once.
pub fn backprop_update(
    params: &mut NetworkParams,
    x: &[f64],
    y: &[f64],
    eta: f64,
    lambda: f64,
    stabilizer: f64,
) -> Result<()> {
    let depth = params.topology().depth();
    if y.len() != params.topology().output_dim() {
        return Err(Error::data(format!(
            "target has dimension {}, network expects {}",
            y.len(),
            params.topology().output_dim()
        )));
    }
    let activations = forward(params, x)?.into_layers();

    // deltas[d-1] holds the error terms of layer d (1-based); layer 1 has none.
    let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); depth];
    let out = &activations[depth - 1];
    deltas[depth - 1] = out
        .iter()
        .zip(y.iter())
        .map(|(&o, &t)| (o - t) * (o * (1.0 - o) + stabilizer))
        .collect();
    for d in (1..depth - 1).rev() {
        // deltas for layer d+1 (0-based index d), pulled back through the
        // weights leaving layer d+1.
        let next = &deltas[d + 1];
        let w = params.weights_from(d + 1);
        let o = &activations[d];
        deltas[d] = (0..o.len())
            .map(|j| {
                let mut s = 0.0;
                let row = w.row(j);
                for (k, &dk) in next.iter().enumerate() {
                    s += dk * row[k];
                }
                s * (o[j] * (1.0 - o[j]) + stabilizer)
            })
            .collect();
    }

    for d in 1..depth {
        let prev = &activations[d - 1];
        let delta = std::mem::take(&mut deltas[d]);
        let w = params.weights_from_mut(d);
        for (i, &oi) in prev.iter().enumerate() {
            let row = w.row_mut(i);
            for (j, &dj) in delta.iter().enumerate() {
                row[j] -= eta * (dj * oi + lambda * sgn(row[j]));
            }
        }
        let b = params.biases_from_mut(d);
        for (j, &dj) in delta.iter().enumerate() {
            b[j] -= eta * dj;
        }
    }
    Ok(())
}

/// Runs exactly `epochs * n` stochastic updates and returns the trained
/// parameters with the recorded error trace. A fixed seed gives a bit-identical
/// result on the same platform.
pub fn train(
    params: NetworkParams,
    train_data: &Dataset,
    test_data: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<(NetworkParams, ErrorTrace)> {
    config.validate()?;
    let n = train_data.len();
    if train_data.input_dim() != params.topology().input_dim()
        || train_data.output_dim() != params.topology().output_dim()
    {
        return Err(Error::data(format!(
            "dataset dimensions {}x{} do not match topology {}x{}",
            train_data.input_dim(),
            train_data.output_dim(),
            params.topology().input_dim(),
            params.topology().output_dim()
        )));
    }
    if let Sampling::ClassCyclic { classes } = config.sampling {
        if n % classes != 0 {
            return Err(Error::data(format!(
                "class-cyclic sampling needs equal class sizes: {n} samples over {classes} classes"
            )));
        }
    }

    let mut params = params;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total = (config.epochs * n) as u64;
    let stride = config.trace_stride.unwrap_or(n as u64).max(1);

    let mut trace = ErrorTrace::default();
    let record = |params: &NetworkParams, step: u64, trace: &mut ErrorTrace| -> Result<()> {
        let e = training_error(params, train_data)?;
        if !e.is_finite() {
            return Err(Error::numerical(format!(
                "training error became non-finite at step {step}"
            )));
        }
        let g = match (config.eval_test, test_data) {
            (true, Some(test)) => Some(training_error(params, test)?),
            _ => None,
        };
        trace.entries.push(TraceEntry {
            step,
            train_error: e,
            test_error: g,
        });
        Ok(())
    };

    record(&params, 0, &mut trace)?;
    for t in 0..total {
        let idx = match config.sampling {
            Sampling::UniformRandom => rng.random_range(0..n),
            Sampling::ClassCyclic { classes } => cyclic_index(t, classes, n),
        };
        let eta = step_size(config.base_step, t, config.epochs, n);
        backprop_update(
            &mut params,
            train_data.input(idx),
            train_data.target(idx),
            eta,
            config.lasso_weight,
            config.stabilizer,
        )?;
        let done = t + 1;
        if done % stride == 0 || done == total {
            record(&params, done, &mut trace)?;
        }
    }
    Ok((params, trace))
}

/// Draws every weight and bias i.i.d. from a zero-mean normal with variance
/// 0.5.
pub fn init_params(topology: &LayerTopology, seed: u64) -> NetworkParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.5f64.sqrt()).unwrap();
    let mut params = NetworkParams::zeros(topology.clone());
    for d in 1..topology.depth() {
        let rows = topology.size(d);
        let cols = topology.size(d + 1);
        for i in 0..rows {
            for j in 0..cols {
                params.weights_from_mut(d).set(i, j, normal.sample(&mut rng));
            }
        }
        for j in 0..cols {
            params.biases_from_mut(d)[j] = normal.sample(&mut rng);
        }
    }
    params
}

fn observed_ranges(samples: &[Vec<f64>]) -> Vec<DimRange> {
    let dims = samples[0].len();
    (0..dims)
        .map(|d| {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for s in samples {
                min = min.min(s[d]);
                max = max.max(s[d]);
            }
            DimRange { min, max }
        })
        .collect()
}

/// Per-dimension affine normalization: observed input ranges map onto
/// `x_bounds`, observed output ranges onto `y_bounds`. Constant dimensions map
/// to the midpoint of the target interval.
pub fn normalize_dataset(
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    x_bounds: (f64, f64),
    y_bounds: (f64, f64),
) -> Result<(Dataset, NormInfo)> {
    if inputs.is_empty() {
        return Err(Error::data("cannot normalize an empty sample list"));
    }
    if x_bounds.0 >= x_bounds.1 || y_bounds.0 >= y_bounds.1 {
        return Err(Error::config("normalization bounds must satisfy min < max"));
    }
    let norm = NormInfo {
        input_ranges: observed_ranges(inputs),
        output_ranges: observed_ranges(targets),
        x_bounds,
        y_bounds,
    };
    let ds = normalize_with(&norm, inputs, targets)?;
    Ok((ds, norm))
}

/// Normalizes samples with an existing transform, e.g. a test split with the
/// training set's ranges.
pub fn normalize_with(norm: &NormInfo, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Dataset> {
    let nx: Vec<Vec<f64>> = inputs
        .iter()
        .map(|s| {
            s.iter()
                .zip(norm.input_ranges.iter())
                .map(|(&v, &r)| NormInfo::normalize_value(r, norm.x_bounds, v))
                .collect()
        })
        .collect();
    let ny: Vec<Vec<f64>> = targets
        .iter()
        .map(|s| {
            s.iter()
                .zip(norm.output_ranges.iter())
                .map(|(&v, &r)| NormInfo::normalize_value(r, norm.y_bounds, v))
                .collect()
        })
        .collect();
    Ok(Dataset::new(nx, ny)?.with_norm(norm.clone()))
}
