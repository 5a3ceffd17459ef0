//! Layer-wise community detection by EM over the signed adjacency matrices.
//!
//! Each unit `k` of the focal layer carries a hidden community label. Given
//! the label `c`, every potential edge toward an adjacent-layer unit is an
//! independent Bernoulli draw: `tau_in_pos[c][i]` is the probability of a
//! positive connection to input-side unit `i`, and so on for the other three
//! edge kinds. The prior over labels is `prior[c]`.
//!
//! The E-step computes responsibilities
//!
//! ```text
//! r[k][c] = prior[c] * prod_i  tau+^A+  (1-tau+)^(1-A+) * (tau- terms)
//!                    * prod_j  tau'+^B+ (1-tau'+)^(1-B+) * (tau'- terms)
//! q[k][c] = r[k][c] / sum_s r[k][s]
//! ```
//!
//! and the M-step the closed-form maximizers
//!
//! ```text
//! prior[c] = sum_k q[k][c] / k0
//! tau[c][i] = sum_k A[i][k] q[k][c] / sum_k q[k][c]
//! ```
//!
//! Softened adjacency entries (0.99 / 0.01) are used directly as the
//! exponents and M-step weights, which keeps every tau inside [0.01, 0.99]
//! and every logarithm finite. The E-step runs in log space with
//! log-sum-exp row normalization since a layer may contribute hundreds of
//! Bernoulli factors.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjacency::{extract, SignedBipartiteAdjacency};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::NetworkParams;

/// Community-priors, edge probabilities, and responsibilities for one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityModel {
    /// Community priors, sums to 1.
    pub prior: Vec<f64>,
    /// Positive-edge probabilities toward the input side, communities x units.
    pub tau_in_pos: Matrix,
    pub tau_in_neg: Matrix,
    /// Positive-edge probabilities toward the output side.
    pub tau_out_pos: Matrix,
    pub tau_out_neg: Matrix,
    /// Responsibilities q, focal units x communities; rows sum to 1.
    pub resp: Matrix,
}

impl CommunityModel {
    pub fn communities(&self) -> usize {
        self.prior.len()
    }
}

/// EM settings: community count `C`, iterations `a_2`, restarts `a_3`.
/// Ties (between restarts and within a unit's responsibilities) always break
/// toward the lowest index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmConfig {
    pub communities: usize,
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            communities: 3,
            iterations: 200,
            restarts: 300,
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.communities == 0 {
            return Err(Error::config("community count must be >= 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("EM iteration count must be >= 1"));
        }
        if self.restarts == 0 {
            return Err(Error::config("restart count must be >= 1"));
        }
        Ok(())
    }
}

/// E-step output: log responsibilities before and after row normalization.
#[derive(Debug, Clone)]
pub struct Responsibilities {
    /// `ln r[k][c]`.
    pub log_r: Matrix,
    /// Row-normalized responsibilities.
    pub q: Matrix,
    /// `ln sum_c r[k][c]` per unit.
    row_log_sums: Vec<f64>,
}

impl Responsibilities {
    /// Observed-data log-likelihood `sum_k ln sum_c r[k][c]`.
    pub fn observed_log_likelihood(&self) -> f64 {
        self.row_log_sums.iter().sum()
    }
}

/// One EM run: the final model plus the per-iteration observed-data
/// log-likelihood (non-decreasing) and the final expected log-likelihood used
/// to rank restarts.
#[derive(Debug, Clone)]
pub struct EmRun {
    pub model: CommunityModel,
    pub observed_log_likelihood: Vec<f64>,
    pub expected_log_likelihood: f64,
    /// Number of empty-community repairs that happened across all M-steps.
    pub repairs: usize,
}

/// Hard community labels for one layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommunityAssignment {
    /// Focal layer depth (1-based).
    pub layer: usize,
    /// Community index (0-based) per unit.
    pub communities: Vec<usize>,
    /// Expected log-likelihood of the winning restart.
    pub expected_log_likelihood: f64,
    /// Winning model, including the soft responsibilities.
    pub model: CommunityModel,
}

impl CommunityAssignment {
    pub fn community_count(&self) -> usize {
        self.model.communities()
    }

    /// Unit indices (ascending) of community `c`.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.communities
            .iter()
            .enumerate()
            .filter(|(_, &g)| g == c)
            .map(|(k, _)| k)
            .collect()
    }
}

fn require_softened(adj: &SignedBipartiteAdjacency) -> Result<()> {
    if !adj.is_softened() {
        return Err(Error::data("adjacency must be softened before EM"));
    }
    Ok(())
}

fn check_model_shape(model: &CommunityModel, adj: &SignedBipartiteAdjacency) -> Result<()> {
    let cc = model.communities();
    let (i0, j0, k0) = (
        adj.input_side_units(),
        adj.output_side_units(),
        adj.focal_units(),
    );
    let ok = model.tau_in_pos.rows() == cc
        && model.tau_in_pos.cols() == i0
        && model.tau_in_neg.rows() == cc
        && model.tau_in_neg.cols() == i0
        && model.tau_out_pos.rows() == cc
        && model.tau_out_pos.cols() == j0
        && model.tau_out_neg.rows() == cc
        && model.tau_out_neg.cols() == j0
        && model.resp.rows() == k0
        && model.resp.cols() == cc;
    if !ok {
        return Err(Error::data("community model does not match adjacency shape"));
    }
    Ok(())
}

fn log_tables(tau: &Matrix) -> (Matrix, Matrix) {
    (tau.map(f64::ln), tau.map(|v| (1.0 - v).ln()))
}

/// E-step: responsibilities of every unit under the current model, computed
/// in log space with log-sum-exp normalization.
pub fn responsibilities(
    model: &CommunityModel,
    adj: &SignedBipartiteAdjacency,
) -> Result<Responsibilities> {
    require_softened(adj)?;
    check_model_shape(model, adj)?;
    let k0 = adj.focal_units();
    let cc = model.communities();
    let i0 = adj.input_side_units();
    let j0 = adj.output_side_units();

    let (ltp, lt1p) = log_tables(&model.tau_in_pos);
    let (ltn, lt1n) = log_tables(&model.tau_in_neg);
    let (lop, lo1p) = log_tables(&model.tau_out_pos);
    let (lon, lo1n) = log_tables(&model.tau_out_neg);
    let log_prior: Vec<f64> = model.prior.iter().map(|&p| p.ln()).collect();

    let mut log_r = Matrix::zeros(k0, cc);
    for k in 0..k0 {
        for c in 0..cc {
            let mut s = log_prior[c];
            for i in 0..i0 {
                let ap = adj.in_pos.get(i, k);
                let an = adj.in_neg.get(i, k);
                s += ap * ltp.get(c, i) + (1.0 - ap) * lt1p.get(c, i);
                s += an * ltn.get(c, i) + (1.0 - an) * lt1n.get(c, i);
            }
            for j in 0..j0 {
                let bp = adj.out_pos.get(k, j);
                let bn = adj.out_neg.get(k, j);
                s += bp * lop.get(c, j) + (1.0 - bp) * lo1p.get(c, j);
                s += bn * lon.get(c, j) + (1.0 - bn) * lo1n.get(c, j);
            }
            log_r.set(k, c, s);
        }
    }

    let mut q = Matrix::zeros(k0, cc);
    let mut row_log_sums = Vec::with_capacity(k0);
    for k in 0..k0 {
        let row = log_r.row(k);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::numerical(format!(
                "all responsibilities of unit {k} vanished; model is corrupted"
            )));
        }
        let sum_exp: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let lse = max + sum_exp.ln();
        for c in 0..cc {
            q.set(k, c, (log_r.get(k, c) - lse).exp());
        }
        row_log_sums.push(lse);
    }
    Ok(Responsibilities {
        log_r,
        q,
        row_log_sums,
    })
}

/// M-step output; `repaired` lists communities that had no responsibility
/// mass and were reset to the global edge frequencies.
#[derive(Debug, Clone)]
pub struct MStepResult {
    pub prior: Vec<f64>,
    pub tau_in_pos: Matrix,
    pub tau_in_neg: Matrix,
    pub tau_out_pos: Matrix,
    pub tau_out_neg: Matrix,
    pub repaired: Vec<usize>,
}

const EMPTY_COMMUNITY_MASS: f64 = 1e-12;

/// M-step: closed-form maximizers of the expected log-likelihood for a fixed
/// `q`. An empty community (responsibility mass below 1e-12) gets its tau row
/// reset to the global column means and a prior of 1e-12 before the prior is
/// renormalized.
pub fn m_step(q: &Matrix, adj: &SignedBipartiteAdjacency) -> Result<MStepResult> {
    require_softened(adj)?;
    let k0 = adj.focal_units();
    let cc = q.cols();
    if q.rows() != k0 {
        return Err(Error::data(format!(
            "q has {} rows, adjacency has {} focal units",
            q.rows(),
            k0
        )));
    }
    for k in 0..k0 {
        let sum: f64 = q.row(k).iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::data(format!("q row {k} sums to {sum}, expected 1")));
        }
    }

    let mass: Vec<f64> = (0..cc)
        .map(|c| (0..k0).map(|k| q.get(k, c)).sum())
        .collect();
    let repaired: Vec<usize> = (0..cc)
        .filter(|&c| mass[c] < EMPTY_COMMUNITY_MASS)
        .collect();

    // tau[c][i] = sum_k A[i][k] q[k][c] / mass[c]; input-side matrices are
    // indexed (i, k), output-side (k, j).
    let weighted_in = |a: &Matrix| -> Matrix {
        Matrix::from_fn(cc, a.rows(), |c, i| {
            if mass[c] < EMPTY_COMMUNITY_MASS {
                (0..k0).map(|k| a.get(i, k)).sum::<f64>() / k0 as f64
            } else {
                (0..k0).map(|k| a.get(i, k) * q.get(k, c)).sum::<f64>() / mass[c]
            }
        })
    };
    let weighted_out = |b: &Matrix| -> Matrix {
        Matrix::from_fn(cc, b.cols(), |c, j| {
            if mass[c] < EMPTY_COMMUNITY_MASS {
                (0..k0).map(|k| b.get(k, j)).sum::<f64>() / k0 as f64
            } else {
                (0..k0).map(|k| b.get(k, j) * q.get(k, c)).sum::<f64>() / mass[c]
            }
        })
    };

    let mut prior: Vec<f64> = (0..cc)
        .map(|c| {
            if mass[c] < EMPTY_COMMUNITY_MASS {
                EMPTY_COMMUNITY_MASS
            } else {
                mass[c] / k0 as f64
            }
        })
        .collect();
    let total: f64 = prior.iter().sum();
    for p in prior.iter_mut() {
        *p /= total;
    }

    Ok(MStepResult {
        prior,
        tau_in_pos: weighted_in(&adj.in_pos),
        tau_in_neg: weighted_in(&adj.in_neg),
        tau_out_pos: weighted_out(&adj.out_pos),
        tau_out_neg: weighted_out(&adj.out_neg),
        repaired,
    })
}

/// Expected complete-data log-likelihood of the model's responsibilities
/// under its parameters. Terms with `q[k][c] == 0` contribute nothing, even
/// when the matching prior is zero.
pub fn expected_log_likelihood(
    model: &CommunityModel,
    adj: &SignedBipartiteAdjacency,
) -> Result<f64> {
    require_softened(adj)?;
    check_model_shape(model, adj)?;
    let k0 = adj.focal_units();
    let cc = model.communities();
    let i0 = adj.input_side_units();
    let j0 = adj.output_side_units();

    let (ltp, lt1p) = log_tables(&model.tau_in_pos);
    let (ltn, lt1n) = log_tables(&model.tau_in_neg);
    let (lop, lo1p) = log_tables(&model.tau_out_pos);
    let (lon, lo1n) = log_tables(&model.tau_out_neg);

    let mut total = 0.0;
    for k in 0..k0 {
        for c in 0..cc {
            let w = model.resp.get(k, c);
            if w == 0.0 {
                continue;
            }
            let mut s = model.prior[c].ln();
            for i in 0..i0 {
                let ap = adj.in_pos.get(i, k);
                let an = adj.in_neg.get(i, k);
                s += ap * ltp.get(c, i) + (1.0 - ap) * lt1p.get(c, i);
                s += an * ltn.get(c, i) + (1.0 - an) * lt1n.get(c, i);
            }
            for j in 0..j0 {
                let bp = adj.out_pos.get(k, j);
                let bn = adj.out_neg.get(k, j);
                s += bp * lop.get(c, j) + (1.0 - bp) * lo1p.get(c, j);
                s += bn * lon.get(c, j) + (1.0 - bn) * lo1n.get(c, j);
            }
            total += w * s;
        }
    }
    Ok(total)
}

/// Rows drawn i.i.d. uniform on the simplex (normalized unit exponentials).
fn init_responsibilities(k0: usize, communities: usize, rng: &mut impl Rng) -> Matrix {
    let mut q = Matrix::from_fn(k0, communities, |_, _| {
        let u: f64 = rng.random();
        -(1.0 - u).ln()
    });
    for k in 0..k0 {
        let row = q.row_mut(k);
        let sum: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    q
}

/// One EM run: random simplex initialization of `q`, then `iterations`
/// alternations of M-step and E-step. The observed-data log-likelihood is
/// recorded after every E-step.
pub fn run_em(
    adj: &SignedBipartiteAdjacency,
    communities: usize,
    iterations: usize,
    rng: &mut impl Rng,
) -> Result<EmRun> {
    require_softened(adj)?;
    if communities == 0 || iterations == 0 {
        return Err(Error::config("communities and iterations must be >= 1"));
    }
    let mut q = init_responsibilities(adj.focal_units(), communities, rng);
    let mut observed = Vec::with_capacity(iterations);
    let mut repairs = 0;
    let mut model = None;
    for _ in 0..iterations {
        let m = m_step(&q, adj)?;
        repairs += m.repaired.len();
        let mut current = CommunityModel {
            prior: m.prior,
            tau_in_pos: m.tau_in_pos,
            tau_in_neg: m.tau_in_neg,
            tau_out_pos: m.tau_out_pos,
            tau_out_neg: m.tau_out_neg,
            resp: q,
        };
        let resp = responsibilities(&current, adj)?;
        observed.push(resp.observed_log_likelihood());
        current.resp = resp.q.clone();
        q = resp.q;
        model = Some(current);
    }
    let model = model.expect("at least one iteration");
    let expected = expected_log_likelihood(&model, adj)?;
    Ok(EmRun {
        model,
        observed_log_likelihood: observed,
        expected_log_likelihood: expected,
        repairs,
    })
}

/// RNG stream for one restart, derived from the seed, the focal layer, and
/// the restart index so layers and restarts never share a stream.
fn restart_rng(seed: u64, layer: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((layer as u64) << 32) | restart as u64);
    rng
}

/// Runs `restarts` independent EM runs and keeps the one with the maximum
/// expected log-likelihood at the final iteration (ties break toward the
/// lowest restart index), then assigns each unit its argmax community (ties
/// toward the lowest community index).
pub fn detect(adj: &SignedBipartiteAdjacency, config: &EmConfig) -> Result<CommunityAssignment> {
    config.validate()?;
    require_softened(adj)?;
    let runs: Result<Vec<EmRun>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(config.seed, adj.layer, r);
            run_em(adj, config.communities, config.iterations, &mut rng)
        })
        .collect();
    let runs = runs?;

    let mut best = 0;
    for i in 1..runs.len() {
        if runs[i].expected_log_likelihood > runs[best].expected_log_likelihood {
            best = i;
        }
    }
    let run = &runs[best];
    if !run.expected_log_likelihood.is_finite() {
        return Err(Error::numerical(
            "no restart produced a finite expected log-likelihood",
        ));
    }

    let communities = (0..run.model.resp.rows())
        .map(|k| {
            let row = run.model.resp.row(k);
            let mut arg = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[arg] {
                    arg = c;
                }
            }
            arg
        })
        .collect();
    Ok(CommunityAssignment {
        layer: adj.layer,
        communities,
        expected_log_likelihood: run.expected_log_likelihood,
        model: run.model.clone(),
    })
}

/// Extract, soften, and detect for every layer `1..=depth`.
pub fn detect_all_layers(
    params: &NetworkParams,
    xi: f64,
    config: &EmConfig,
) -> Result<Vec<CommunityAssignment>> {
    (1..=params.topology().depth())
        .map(|layer| {
            let adj = extract(params, layer, xi)?.soften()?;
            detect(&adj, config)
        })
        .collect()
}
