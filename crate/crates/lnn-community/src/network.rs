//! Layered sigmoid network: topology, parameters, forward evaluation, and the
//! error/objective functions that training minimizes.
//!
//! Layers are numbered `1..=depth`; layer 1 is the input layer and layer
//! `depth` the output layer. Every non-input unit applies the logistic
//! sigmoid to a weighted sum of the previous layer plus a bias. Weights
//! between layer `d` and `d+1` live in `weights[d-1]` (shape
//! `size(d) x size(d+1)`), and the bias applied to unit `j` of layer `d+1`
//! lives in `biases[d-1][j]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Unit counts per layer, input layer first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerTopology {
    sizes: Vec<usize>,
}

impl LayerTopology {
    /// At least two layers, every layer non-empty.
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::config(format!(
                "topology needs at least 2 layers, got {}",
                sizes.len()
            )));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::config("every layer must have at least one unit"));
        }
        Ok(LayerTopology { sizes })
    }

    pub fn depth(&self) -> usize {
        self.sizes.len()
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Unit count of `layer` (1-based).
    pub fn size(&self, layer: usize) -> usize {
        self.sizes[layer - 1]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
}

/// Connection weights and biases of a layered network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    topology: LayerTopology,
    /// `weights[d-1]` connects layer `d` to layer `d+1`.
    weights: Vec<Matrix>,
    /// `biases[d-1][j]` is added to unit `j` of layer `d+1`.
    biases: Vec<Vec<f64>>,
}

impl NetworkParams {
    /// All-zero parameters for the given topology.
    pub fn zeros(topology: LayerTopology) -> Self {
        let weights = (0..topology.depth() - 1)
            .map(|d| Matrix::zeros(topology.sizes[d], topology.sizes[d + 1]))
            .collect();
        let biases = (1..topology.depth())
            .map(|d| vec![0.0; topology.sizes[d]])
            .collect();
        NetworkParams {
            topology,
            weights,
            biases,
        }
    }

    /// Validates shapes against the topology and that all entries are finite.
    pub fn new(topology: LayerTopology, weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Self> {
        let depth = topology.depth();
        if weights.len() != depth - 1 || biases.len() != depth - 1 {
            return Err(Error::data(format!(
                "expected {} weight matrices and bias vectors, got {} and {}",
                depth - 1,
                weights.len(),
                biases.len()
            )));
        }
        for d in 0..depth - 1 {
            if weights[d].rows() != topology.sizes[d] || weights[d].cols() != topology.sizes[d + 1] {
                return Err(Error::data(format!(
                    "weight matrix {} has shape {}x{}, expected {}x{}",
                    d + 1,
                    weights[d].rows(),
                    weights[d].cols(),
                    topology.sizes[d],
                    topology.sizes[d + 1]
                )));
            }
            if biases[d].len() != topology.sizes[d + 1] {
                return Err(Error::data(format!(
                    "bias vector {} has length {}, expected {}",
                    d + 1,
                    biases[d].len(),
                    topology.sizes[d + 1]
                )));
            }
            if weights[d].data().iter().any(|v| !v.is_finite())
                || biases[d].iter().any(|v| !v.is_finite())
            {
                return Err(Error::numerical(format!(
                    "non-finite parameter between layers {} and {}",
                    d + 1,
                    d + 2
                )));
            }
        }
        Ok(NetworkParams {
            topology,
            weights,
            biases,
        })
    }

    pub fn topology(&self) -> &LayerTopology {
        &self.topology
    }

    /// Weight matrix between layer `d` and `d+1` (1-based, `1 <= d < depth`).
    pub fn weights_from(&self, d: usize) -> &Matrix {
        &self.weights[d - 1]
    }

    /// Bias vector applied at layer `d+1` (1-based source depth `d`).
    pub fn biases_from(&self, d: usize) -> &[f64] {
        &self.biases[d - 1]
    }

    /// Mutable access to the weights between layer `d` and `d+1`; entries
    /// must stay finite.
    pub fn weights_from_mut(&mut self, d: usize) -> &mut Matrix {
        &mut self.weights[d - 1]
    }

    pub fn biases_from_mut(&mut self, d: usize) -> &mut Vec<f64> {
        &mut self.biases[d - 1]
    }

    /// Sum of |w| over every connection weight (biases excluded).
    pub fn weight_l1_norm(&self) -> f64 {
        self.weights
            .iter()
            .map(|m| m.data().iter().map(|v| v.abs()).sum::<f64>())
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.weights
            .iter()
            .all(|m| m.data().iter().all(|v| v.is_finite()))
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }
}

/// Per-layer unit outputs of one forward pass; `layer(1)` is the raw input.
#[derive(Debug, Clone)]
pub struct ActivationRecord {
    layers: Vec<Vec<f64>>,
}

impl ActivationRecord {
    /// Outputs of `layer` (1-based).
    pub fn layer(&self, layer: usize) -> &[f64] {
        &self.layers[layer - 1]
    }

    /// Output-layer activations, the network prediction.
    pub fn output(&self) -> &[f64] {
        self.layers.last().unwrap()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub(crate) fn into_layers(self) -> Vec<Vec<f64>> {
        self.layers
    }
}

/// Logistic sigmoid, computed on the branch whose `exp` argument is
/// non-positive so it never overflows for finite input.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Forward pass recording every layer's outputs.
pub fn forward(params: &NetworkParams, input: &[f64]) -> Result<ActivationRecord> {
    if input.len() != params.topology.input_dim() {
        return Err(Error::data(format!(
            "input has dimension {}, network expects {}",
            input.len(),
            params.topology.input_dim()
        )));
    }
    let depth = params.topology.depth();
    let mut layers = Vec::with_capacity(depth);
    layers.push(input.to_vec());
    for d in 0..depth - 1 {
        let prev = &layers[d];
        layers.push(next_layer(&params.weights[d], &params.biases[d], prev));
    }
    Ok(ActivationRecord { layers })
}

/// One layer transition: `sigmoid(W^T prev + bias)`.
pub(crate) fn next_layer(weights: &Matrix, biases: &[f64], prev: &[f64]) -> Vec<f64> {
    let mut out = biases.to_vec();
    for (i, &o) in prev.iter().enumerate() {
        let row = weights.row(i);
        for (j, acc) in out.iter_mut().enumerate() {
            *acc += row[j] * o;
        }
    }
    for v in out.iter_mut() {
        *v = sigmoid(*v);
    }
    out
}

/// Mean squared Euclidean prediction error over the dataset:
/// `(1/n) * sum_n ||y_n - f(x_n)||^2`.
pub fn training_error(params: &NetworkParams, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::data("cannot evaluate error on an empty dataset"));
    }
    let mut total = 0.0;
    for (x, y) in dataset.iter() {
        let pred = forward(params, x)?;
        let out = pred.output();
        let mut norm = 0.0;
        for (p, t) in out.iter().zip(y.iter()) {
            let d = t - p;
            norm += d * d;
        }
        total += norm;
    }
    Ok(total / dataset.len() as f64)
}

/// The same mean squared error evaluated on a held-out set, approximating the
/// expected prediction error on unseen data.
pub fn generalization_error(params: &NetworkParams, test_dataset: &Dataset) -> Result<f64> {
    training_error(params, test_dataset)
}

/// L1-penalized objective `(n/2) * E + lambda * sum |w|`; biases are not
/// penalized.
pub fn objective(params: &NetworkParams, dataset: &Dataset, lambda: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::config(format!("lambda must be >= 0, got {lambda}")));
    }
    let err = training_error(params, dataset)?;
    Ok(dataset.len() as f64 / 2.0 * err + lambda * params.weight_l1_norm())
}

/// Observed raw range of one data dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimRange {
    pub min: f64,
    pub max: f64,
}

/// Affine normalization metadata: the observed per-dimension ranges plus the
/// target bounds the data was mapped onto. Enough to invert the mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormInfo {
    pub input_ranges: Vec<DimRange>,
    pub output_ranges: Vec<DimRange>,
    pub x_bounds: (f64, f64),
    pub y_bounds: (f64, f64),
}

impl NormInfo {
    /// Map a raw value of dimension range `r` onto `[lo, hi]`; constant
    /// dimensions go to the midpoint. Values inside the observed range are
    /// clamped so rounding never puts them outside the target interval.
    pub fn normalize_value(r: DimRange, bounds: (f64, f64), v: f64) -> f64 {
        let (lo, hi) = bounds;
        if r.max > r.min {
            let mapped = lo + (v - r.min) * (hi - lo) / (r.max - r.min);
            if v >= r.min && v <= r.max {
                mapped.clamp(lo, hi)
            } else {
                mapped
            }
        } else {
            (lo + hi) / 2.0
        }
    }

    /// Inverse of [`NormInfo::normalize_value`]; a constant dimension maps
    /// back to its single observed value.
    pub fn invert_value(r: DimRange, bounds: (f64, f64), v: f64) -> f64 {
        let (lo, hi) = bounds;
        if r.max > r.min {
            r.min + (v - lo) * (r.max - r.min) / (hi - lo)
        } else {
            r.min
        }
    }

    pub fn invert_output(&self, dim: usize, v: f64) -> f64 {
        Self::invert_value(self.output_ranges[dim], self.y_bounds, v)
    }

    pub fn invert_input(&self, dim: usize, v: f64) -> f64 {
        Self::invert_value(self.input_ranges[dim], self.x_bounds, v)
    }
}

/// A list of (input, target) sample pairs with uniform dimensions, plus the
/// normalization metadata when the data has been normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    norm: Option<NormInfo>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::data(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.is_empty() {
            return Err(Error::data("dataset has no samples"));
        }
        let m = inputs[0].len();
        let n = targets[0].len();
        if inputs.iter().any(|x| x.len() != m) || targets.iter().any(|y| y.len() != n) {
            return Err(Error::data("samples have inconsistent dimensions"));
        }
        Ok(Dataset {
            inputs,
            targets,
            norm: None,
        })
    }

    pub(crate) fn with_norm(mut self, norm: NormInfo) -> Self {
        self.norm = Some(norm);
        self
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.targets[0].len()
    }

    pub fn input(&self, n: usize) -> &[f64] {
        &self.inputs[n]
    }

    pub fn target(&self, n: usize) -> &[f64] {
        &self.targets[n]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.inputs
            .iter()
            .map(Vec::as_slice)
            .zip(self.targets.iter().map(Vec::as_slice))
    }

    pub fn norm_info(&self) -> Option<&NormInfo> {
        self.norm.as_ref()
    }
}
