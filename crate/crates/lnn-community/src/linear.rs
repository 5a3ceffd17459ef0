//! Ordinary least-squares baseline for the time-series task.
//!
//! The design matrix is the inputs with an appended intercept column; the
//! coefficients minimize the mean squared prediction error. The solve goes
//! through an SVD so rank-deficient designs (heavily collinear lag windows)
//! get the minimum-norm solution.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datagen::{window_timeseries, TimeSeries};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::Dataset;

/// Linear predictor `y = x * coefficients + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Input dim x output dim.
    pub coefficients: Matrix,
    pub intercept: Vec<f64>,
    /// Window size the model was fitted with, when it came from a sweep.
    pub window: Option<usize>,
}

/// Least-squares fit with intercept; rank-deficient designs are solved in the
/// minimum-norm sense.
pub fn fit_linear(dataset: &Dataset) -> Result<LinearModel> {
    let n = dataset.len();
    let m = dataset.input_dim();
    let out = dataset.output_dim();

    let design = DMatrix::from_fn(n, m + 1, |r, c| {
        if c < m {
            dataset.input(r)[c]
        } else {
            1.0
        }
    });
    let rhs = DMatrix::from_fn(n, out, |r, c| dataset.target(r)[c]);

    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if !max_sv.is_finite() {
        return Err(Error::numerical("SVD of the design matrix failed"));
    }
    let eps = max_sv * f64::EPSILON * (n.max(m + 1) as f64);
    let beta = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::numerical(format!("least-squares solve failed: {e}")))?;

    let coefficients = Matrix::from_fn(m, out, |i, j| beta[(i, j)]);
    let intercept = (0..out).map(|j| beta[(m, j)]).collect();
    Ok(LinearModel {
        coefficients,
        intercept,
        window: None,
    })
}

pub fn predict_linear(model: &LinearModel, x: &[f64]) -> Vec<f64> {
    let out = model.intercept.len();
    let mut y = model.intercept.clone();
    for (i, &xi) in x.iter().enumerate() {
        let row = model.coefficients.row(i);
        for j in 0..out {
            y[j] += row[j] * xi;
        }
    }
    y
}

/// Mean squared Euclidean prediction error, the same contract as the network
/// training error.
pub fn training_error(model: &LinearModel, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::data("cannot evaluate error on an empty dataset"));
    }
    let mut total = 0.0;
    for (x, y) in dataset.iter() {
        let pred = predict_linear(model, x);
        for (p, t) in pred.iter().zip(y.iter()) {
            let d = t - p;
            total += d * d;
        }
    }
    Ok(total / dataset.len() as f64)
}

/// Training error evaluated on a held-out set.
pub fn generalization_error(model: &LinearModel, test_dataset: &Dataset) -> Result<f64> {
    training_error(model, test_dataset)
}

/// One row of a window sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSweepEntry {
    pub window: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub train_error: f64,
    pub generalization_error: f64,
}

/// Splits windowed samples chronologically (first 80% train, rest test).
pub fn chronological_split(
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
) -> Result<(Dataset, Dataset)> {
    let n = inputs.len();
    if n < 2 {
        return Err(Error::data("need at least 2 samples to split"));
    }
    let n_train = ((n as f64 * 0.8).floor() as usize).clamp(1, n - 1);
    let (train_x, test_x) = inputs.split_at(n_train);
    let (train_y, test_y) = targets.split_at(n_train);
    Ok((
        Dataset::new(train_x.to_vec(), train_y.to_vec())?,
        Dataset::new(test_x.to_vec(), test_y.to_vec())?,
    ))
}

/// Re-windows the series for every requested window size, fits on the
/// chronological training split, and reports both errors.
pub fn sweep_window(series: &TimeSeries, windows: &[usize]) -> Result<Vec<WindowSweepEntry>> {
    let mut rows = Vec::with_capacity(windows.len());
    for &window in windows {
        let (inputs, targets) = window_timeseries(series, window)?;
        let (train, test) = chronological_split(inputs, targets)?;
        let mut model = fit_linear(&train)?;
        model.window = Some(window);
        rows.push(WindowSweepEntry {
            window,
            train_samples: train.len(),
            test_samples: test.len(),
            train_error: training_error(&model, &train)?,
            generalization_error: generalization_error(&model, &test)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_seasonal_series, SeasonalConfig};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_exact_linear_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let coef = [[2.0, -1.0], [0.5, 3.0], [-2.5, 0.25]];
        let intercept = [1.0, -0.5];
        let inputs: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let targets: Vec<Vec<f64>> = inputs
            .iter()
            .map(|x| {
                (0..2)
                    .map(|j| intercept[j] + (0..3).map(|i| coef[i][j] * x[i]).sum::<f64>())
                    .collect()
            })
            .collect();
        let ds = Dataset::new(inputs, targets).unwrap();
        let model = fit_linear(&ds).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!((model.coefficients.get(i, j) - coef[i][j]).abs() < 1e-8);
            }
        }
        for j in 0..2 {
            assert!((model.intercept[j] - intercept[j]).abs() < 1e-8);
        }
        assert!(training_error(&model, &ds).unwrap() < 1e-12);
    }

    #[test]
    fn constant_targets_give_zero_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inputs: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let targets = vec![vec![7.5]; 30];
        let ds = Dataset::new(inputs, targets).unwrap();
        let model = fit_linear(&ds).unwrap();
        assert!(model.coefficients.data().iter().all(|v| v.abs() < 1e-10));
        assert!((model.intercept[0] - 7.5).abs() < 1e-10);
    }

    #[test]
    fn matches_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inputs: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..5).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let targets: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..2).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let ds = Dataset::new(inputs.clone(), targets.clone()).unwrap();
        let model = fit_linear(&ds).unwrap();

        // beta = (X^T X)^-1 X^T Y on the intercept-augmented design.
        let x = DMatrix::from_fn(50, 6, |r, c| if c < 5 { inputs[r][c] } else { 1.0 });
        let y = DMatrix::from_fn(50, 2, |r, c| targets[r][c]);
        let xtx = x.transpose() * &x;
        let beta = xtx.try_inverse().unwrap() * x.transpose() * y;
        for i in 0..5 {
            for j in 0..2 {
                assert!((model.coefficients.get(i, j) - beta[(i, j)]).abs() < 1e-8);
            }
        }
        for j in 0..2 {
            assert!((model.intercept[j] - beta[(5, j)]).abs() < 1e-8);
        }
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inputs: Vec<Vec<f64>> = (0..25)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let targets: Vec<Vec<f64>> = (0..25)
            .map(|_| vec![rng.random_range(-1.0..1.0)])
            .collect();
        let ds = Dataset::new(inputs.clone(), targets.clone()).unwrap();
        let model = fit_linear(&ds).unwrap();
        let residuals: Vec<f64> = (0..25)
            .map(|r| targets[r][0] - predict_linear(&model, &inputs[r])[0])
            .collect();
        for c in 0..4 {
            let dot: f64 = (0..25)
                .map(|r| {
                    let col = if c < 3 { inputs[r][c] } else { 1.0 };
                    col * residuals[r]
                })
                .sum();
            assert!(dot.abs() < 1e-8, "column {c}: {dot}");
        }
    }

    #[test]
    fn zero_coefficients_predict_intercept() {
        let model = LinearModel {
            coefficients: Matrix::zeros(3, 2),
            intercept: vec![0.25, -1.0],
            window: None,
        };
        assert_eq!(predict_linear(&model, &[5.0, -3.0, 100.0]), vec![0.25, -1.0]);
    }

    #[test]
    fn deterministic_linear_recurrence_is_predicted_exactly() {
        // v[t+1] = 0.8 v[t] + 5, a noiseless AR(1); any window >= 1 makes the
        // target an exact linear function of the newest month. The lag
        // columns are perfectly collinear, exercising the minimum-norm path.
        let mut values = vec![vec![10.0]];
        for t in 1..80 {
            let prev: f64 = values[t - 1][0];
            values.push(vec![0.8 * prev + 5.0]);
        }
        let series = TimeSeries {
            labels: vec!["v".into()],
            values,
        };
        for window in [1, 3, 6] {
            let rows = sweep_window(&series, &[window]).unwrap();
            assert_eq!(rows.len(), 1);
            assert!(
                rows[0].generalization_error < 1e-10,
                "window {window}: {}",
                rows[0].generalization_error
            );
        }
    }

    #[test]
    fn training_error_non_increasing_in_window_on_same_rows() {
        let series = gen_seasonal_series(120, 2, &SeasonalConfig::default(), 6);
        let max_window = 6;
        // Same target months for every window: targets from month max_window
        // on; window w uses the last w months before the target.
        let mut prev = f64::INFINITY;
        for w in 1..=max_window {
            let mut inputs = Vec::new();
            let mut targets = Vec::new();
            for t in max_window..series.months() {
                let mut x = Vec::new();
                for m in t - w..t {
                    x.extend_from_slice(&series.values[m]);
                }
                inputs.push(x);
                targets.push(series.values[t].clone());
            }
            let ds = Dataset::new(inputs, targets).unwrap();
            let model = fit_linear(&ds).unwrap();
            let err = training_error(&model, &ds).unwrap();
            assert!(err <= prev + 1e-10, "window {w}: {err} > {prev}");
            prev = err;
        }
    }

    #[test]
    fn sweep_rejects_oversized_window() {
        let series = gen_seasonal_series(20, 1, &SeasonalConfig::default(), 7);
        assert!(sweep_window(&series, &[20]).is_err());
        assert!(sweep_window(&series, &[25]).is_err());
    }

    #[test]
    fn sweep_is_deterministic() {
        let series = gen_seasonal_series(100, 2, &SeasonalConfig::default(), 8);
        let a = sweep_window(&series, &[6, 12, 18]).unwrap();
        let b = sweep_window(&series, &[6, 12, 18]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }
}
