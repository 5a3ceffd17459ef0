//! Community role quantification by mean-substitution perturbation.
//!
//! The effect of input dimension `i` on a community is the RMS fluctuation of
//! the community's unit outputs when dimension `i` is replaced by its
//! training-set mean in every sample:
//!
//! ```text
//! v_in[i] = sqrt( (1/n) * sum_{k in members} sum_n (o[n][k] - z[n][k])^2 )
//! ```
//!
//! where `z` is the perturbed forward pass. Note the sum over members is not
//! divided by the community size; effects of disjoint communities therefore
//! add in quadrature. The effect of a community on output dimension `j` is
//! the RMS fluctuation of the network output when the member activations are
//! replaced by their training-set means and propagated forward:
//!
//! ```text
//! v_out[j] = sqrt( (1/n) * sum_n (y[n][j] - z[n][j])^2 )
//! ```
//!
//! with `y` the unperturbed network output. Sums over samples run in
//! ascending sample order and member sums in ascending unit order, so results
//! do not depend on how the work is scheduled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::CommunityAssignment;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{forward, next_layer, Dataset, NetworkParams};

/// Role of one community: its members and its input/output effect vectors.
/// `input_effect` is absent for the input layer, `output_effect` for the
/// output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityRole {
    /// Layer depth (1-based).
    pub layer: usize,
    /// Community index (0-based).
    pub community: usize,
    pub members: Vec<usize>,
    pub input_effect: Option<Vec<f64>>,
    pub output_effect: Option<Vec<f64>>,
}

/// Roles of every community in one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRoles {
    pub layer: usize,
    pub roles: Vec<CommunityRole>,
}

/// Roles of every community in every layer for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleReport {
    pub layers: Vec<LayerRoles>,
    pub sample_count: usize,
    pub dataset_label: String,
}

/// Per-dimension arithmetic mean of the inputs. A dimension whose values are
/// all identical returns that exact value, so substituting it is a bit-exact
/// no-op.
pub fn input_mean_vector(dataset: &Dataset) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::data("cannot average an empty dataset"));
    }
    Ok(column_means(
        (0..dataset.len()).map(|n| dataset.input(n)),
        dataset.input_dim(),
        dataset.len(),
    ))
}

fn column_means<'a>(rows: impl Iterator<Item = &'a [f64]>, dims: usize, count: usize) -> Vec<f64> {
    let mut sums = vec![0.0; dims];
    let mut first: Vec<f64> = Vec::new();
    let mut constant = vec![true; dims];
    for row in rows {
        if first.is_empty() {
            first = row.to_vec();
        }
        for d in 0..dims {
            sums[d] += row[d];
            constant[d] &= row[d] == first[d];
        }
    }
    (0..dims)
        .map(|d| {
            if constant[d] {
                first[d]
            } else {
                sums[d] / count as f64
            }
        })
        .collect()
}

fn check_members(members: &[usize], layer_size: usize) -> Result<Vec<usize>> {
    if members.is_empty() {
        return Err(Error::data("community member set is empty"));
    }
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if *sorted.last().unwrap() >= layer_size {
        return Err(Error::data(format!(
            "member index {} out of range for layer of {} units",
            sorted.last().unwrap(),
            layer_size
        )));
    }
    Ok(sorted)
}

/// Per-unit squared-deviation sums at every non-input layer when input
/// dimension `i` is replaced by its mean: `sums[d-2].get(i, k)` holds
/// `sum_n (o[n][k] - z[n][k])^2` at depth `d`. Shared by `input_effect` and
/// `role_report`; parallel over input dimensions.
fn input_substitution_sums(
    params: &NetworkParams,
    dataset: &Dataset,
    base: &[Vec<Vec<f64>>],
    means: &[f64],
) -> Result<Vec<Matrix>> {
    let depth = params.topology().depth();
    let m = dataset.input_dim();
    let per_dim: Result<Vec<Vec<Vec<f64>>>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut sums: Vec<Vec<f64>> = (2..=depth)
                .map(|d| vec![0.0; params.topology().size(d)])
                .collect();
            for n in 0..dataset.len() {
                let mut perturbed = dataset.input(n).to_vec();
                perturbed[i] = means[i];
                let z = forward(params, &perturbed)?.into_layers();
                for d in 2..=depth {
                    let o = &base[n][d - 1];
                    let zd = &z[d - 1];
                    let acc = &mut sums[d - 2];
                    for k in 0..acc.len() {
                        let diff = o[k] - zd[k];
                        acc[k] += diff * diff;
                    }
                }
            }
            Ok(sums)
        })
        .collect();
    let per_dim = per_dim?;
    Ok((2..=depth)
        .map(|d| {
            Matrix::from_fn(m, params.topology().size(d), |i, k| per_dim[i][d - 2][k])
        })
        .collect())
}

fn base_activations(params: &NetworkParams, dataset: &Dataset) -> Result<Vec<Vec<Vec<f64>>>> {
    (0..dataset.len())
        .into_par_iter()
        .map(|n| Ok(forward(params, dataset.input(n))?.into_layers()))
        .collect()
}

fn effect_from_sums(sums: &Matrix, members: &[usize], count: usize) -> Vec<f64> {
    (0..sums.rows())
        .map(|i| {
            let total: f64 = members.iter().map(|&k| sums.get(i, k)).sum();
            (total / count as f64).sqrt()
        })
        .collect()
}

/// Effect of every input dimension on the given community at depth `d`
/// (`2 <= d <= depth`).
pub fn input_effect(
    params: &NetworkParams,
    dataset: &Dataset,
    layer: usize,
    members: &[usize],
) -> Result<Vec<f64>> {
    let depth = params.topology().depth();
    if layer < 2 || layer > depth {
        return Err(Error::data(format!(
            "input effects are defined for layers 2..={depth}, got {layer}"
        )));
    }
    let members = check_members(members, params.topology().size(layer))?;
    let means = input_mean_vector(dataset)?;
    let base = base_activations(params, dataset)?;
    let sums = input_substitution_sums(params, dataset, &base, &means)?;
    Ok(effect_from_sums(&sums[layer - 2], &members, dataset.len()))
}

/// Mean activation of every unit in `layer` over the dataset; for the input
/// layer these are the input-dimension means. Constant units return their
/// exact value.
fn layer_means(base: &[Vec<Vec<f64>>], layer: usize) -> Vec<f64> {
    let dims = base[0][layer - 1].len();
    column_means(
        base.iter().map(|layers| layers[layer - 1].as_slice()),
        dims,
        base.len(),
    )
}

fn output_effect_inner(
    params: &NetworkParams,
    base: &[Vec<Vec<f64>>],
    means: &[f64],
    layer: usize,
    members: &[usize],
) -> Vec<f64> {
    let depth = params.topology().depth();
    let out_dim = params.topology().output_dim();
    let mut acc = vec![0.0; out_dim];
    for layers in base {
        let mut cur = layers[layer - 1].clone();
        for &k in members {
            cur[k] = means[k];
        }
        for d in layer..depth {
            cur = next_layer(params.weights_from(d), params.biases_from(d), &cur);
        }
        let y = &layers[depth - 1];
        for j in 0..out_dim {
            let diff = y[j] - cur[j];
            acc[j] += diff * diff;
        }
    }
    acc.iter()
        .map(|&v| (v / base.len() as f64).sqrt())
        .collect()
}

/// Effect of the given community at depth `d` (`1 <= d <= depth-1`) on every
/// output dimension.
pub fn output_effect(
    params: &NetworkParams,
    dataset: &Dataset,
    layer: usize,
    members: &[usize],
) -> Result<Vec<f64>> {
    let depth = params.topology().depth();
    if layer < 1 || layer >= depth {
        return Err(Error::data(format!(
            "output effects are defined for layers 1..={}, got {layer}",
            depth - 1
        )));
    }
    let members = check_members(members, params.topology().size(layer))?;
    let base = base_activations(params, dataset)?;
    let means = layer_means(&base, layer);
    Ok(output_effect_inner(params, &base, &means, layer, &members))
}

/// Computes both effect vectors for every community in every layer. Input-
/// layer communities carry only output effects and output-layer communities
/// only input effects; a community with no members gets zero vectors.
pub fn role_report(
    params: &NetworkParams,
    dataset: &Dataset,
    assignments: &[CommunityAssignment],
    dataset_label: &str,
) -> Result<RoleReport> {
    let depth = params.topology().depth();
    if assignments.len() != depth {
        return Err(Error::data(format!(
            "expected one assignment per layer ({depth}), got {}",
            assignments.len()
        )));
    }
    for (idx, a) in assignments.iter().enumerate() {
        if a.layer != idx + 1 {
            return Err(Error::data(format!(
                "assignment {idx} is for layer {}, expected {}",
                a.layer,
                idx + 1
            )));
        }
        if a.communities.len() != params.topology().size(a.layer) {
            return Err(Error::data(format!(
                "assignment for layer {} covers {} units, layer has {}",
                a.layer,
                a.communities.len(),
                params.topology().size(a.layer)
            )));
        }
    }

    let means = input_mean_vector(dataset)?;
    let base = base_activations(params, dataset)?;
    let input_sums = input_substitution_sums(params, dataset, &base, &means)?;
    let n = dataset.len();
    let m = dataset.input_dim();
    let out_dim = params.topology().output_dim();

    let mut layers = Vec::with_capacity(depth);
    for d in 1..=depth {
        let assignment = &assignments[d - 1];
        let cc = assignment.community_count();
        let unit_means = if d < depth { layer_means(&base, d) } else { Vec::new() };
        let roles: Vec<CommunityRole> = (0..cc)
            .into_par_iter()
            .map(|c| {
                let members = assignment.members(c);
                let input_effect = if d >= 2 {
                    Some(if members.is_empty() {
                        vec![0.0; m]
                    } else {
                        effect_from_sums(&input_sums[d - 2], &members, n)
                    })
                } else {
                    None
                };
                let output_effect = if d < depth {
                    Some(if members.is_empty() {
                        vec![0.0; out_dim]
                    } else {
                        output_effect_inner(params, &base, &unit_means, d, &members)
                    })
                } else {
                    None
                };
                CommunityRole {
                    layer: d,
                    community: c,
                    members,
                    input_effect,
                    output_effect,
                }
            })
            .collect();
        layers.push(LayerRoles { layer: d, roles });
    }
    Ok(RoleReport {
        layers,
        sample_count: n,
        dataset_label: dataset_label.to_string(),
    })
}
