//! Signed binary adjacency matrices for one focal layer.
//!
//! For a focal layer `d`, the connection pattern toward the input-side layer
//! is captured by `A+` / `A-` (entry 1 where the incoming weight is `>= xi`
//! resp. `<= -xi`) and toward the output-side layer by `B+` / `B-`. The input
//! layer has no A side and the output layer no B side; those matrices are
//! zero-width. Before feeding the EM estimator the 1/0 entries are softened
//! to 0.99/0.01.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::NetworkParams;

/// The four signed adjacency matrices of one focal layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedBipartiteAdjacency {
    /// Focal layer depth (1-based).
    pub layer: usize,
    /// Unit count of the focal layer.
    focal_units: usize,
    /// `A+`, shape input-side units x focal units.
    pub in_pos: Matrix,
    /// `A-`, same shape as `A+`.
    pub in_neg: Matrix,
    /// `B+`, shape focal units x output-side units.
    pub out_pos: Matrix,
    /// `B-`, same shape as `B+`.
    pub out_neg: Matrix,
    softened: bool,
}

impl SignedBipartiteAdjacency {
    pub fn focal_units(&self) -> usize {
        self.focal_units
    }

    /// Units of the input-side adjacent layer (0 for the input layer).
    pub fn input_side_units(&self) -> usize {
        self.in_pos.rows()
    }

    /// Units of the output-side adjacent layer (0 for the output layer).
    pub fn output_side_units(&self) -> usize {
        self.out_pos.cols()
    }

    pub fn is_softened(&self) -> bool {
        self.softened
    }

    /// Remaps every entry 1 -> 0.99 and 0 -> 0.01. Softening twice is an
    /// error.
    pub fn soften(self) -> Result<Self> {
        if self.softened {
            return Err(Error::data("adjacency is already softened"));
        }
        let remap = |v: f64| if v == 1.0 { 0.99 } else { 0.01 };
        Ok(SignedBipartiteAdjacency {
            layer: self.layer,
            focal_units: self.focal_units,
            in_pos: self.in_pos.map(remap),
            in_neg: self.in_neg.map(remap),
            out_pos: self.out_pos.map(remap),
            out_neg: self.out_neg.map(remap),
            softened: true,
        })
    }
}

fn threshold_pair(weights: &Matrix, xi: f64) -> (Matrix, Matrix) {
    let pos = weights.map(|w| if w >= xi { 1.0 } else { 0.0 });
    let neg = weights.map(|w| if w <= -xi { 1.0 } else { 0.0 });
    (pos, neg)
}

/// Thresholds the trained weights around focal layer `d` (1-based) into the
/// four signed binary matrices.
pub fn extract(params: &NetworkParams, layer: usize, xi: f64) -> Result<SignedBipartiteAdjacency> {
    if !(xi > 0.0) {
        return Err(Error::config(format!("threshold xi must be > 0, got {xi}")));
    }
    let depth = params.topology().depth();
    if layer < 1 || layer > depth {
        return Err(Error::config(format!(
            "layer {layer} out of range 1..={depth}"
        )));
    }
    let k0 = params.topology().size(layer);
    let (in_pos, in_neg) = if layer > 1 {
        threshold_pair(params.weights_from(layer - 1), xi)
    } else {
        (Matrix::zeros(0, k0), Matrix::zeros(0, k0))
    };
    let (out_pos, out_neg) = if layer < depth {
        threshold_pair(params.weights_from(layer), xi)
    } else {
        (Matrix::zeros(k0, 0), Matrix::zeros(k0, 0))
    };
    Ok(SignedBipartiteAdjacency {
        layer,
        focal_units: k0,
        in_pos,
        in_neg,
        out_pos,
        out_neg,
        softened: false,
    })
}
