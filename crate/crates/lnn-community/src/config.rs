//! Experiment configuration: one JSON document holding every hyperparameter
//! under a key that pairs its conventional symbol with a long name
//! (`lambda_lasso`, `a1_train_epochs`, `xi_weight_threshold`, ...), so a
//! config file can be read side by side with the usual notation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::SeasonalConfig;
use crate::error::{Error, Result};
use crate::trainer::{Sampling, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Ground-truth modular network and regression data drawn from it.
    Synthetic,
    /// Sliding-window prediction on a (generated or user-supplied) series.
    Timeseries,
    /// 10-class diagram image classification.
    Diagrams,
    /// User-supplied dataset CSV.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSettings {
    /// n1: number of training samples.
    pub n1_samples: usize,
    pub modules: usize,
    pub units_per_module: usize,
    pub hidden_layers: usize,
    pub input_variance: f64,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramSettings {
    /// n1: training samples per class.
    pub n1_per_class: usize,
    pub jitter_std: f64,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeseriesSettings {
    pub window_months: usize,
    /// Source CSV; when absent a seasonal series is generated instead.
    pub csv_path: Option<PathBuf>,
    pub months: usize,
    pub columns: usize,
    pub seasonal: SeasonalConfig,
}

/// Full description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,

    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// a1: mean training iterations per dataset.
    pub a1_train_epochs: usize,
    /// eta: base step size.
    pub eta0_step_size: f64,
    /// lambda: L1 penalty weight.
    pub lambda_lasso: f64,
    /// epsilon_1: back-propagation stabilizer.
    pub epsilon1_stabilizer: f64,
    /// xi: weight-removal threshold for adjacency extraction.
    pub xi_weight_threshold: f64,
    /// C: communities per layer.
    pub c_communities: usize,
    /// a2: EM iterations.
    pub a2_em_iterations: usize,
    /// a3: community detection restarts.
    pub a3_em_restarts: usize,

    pub sampling: Sampling,
    /// Hidden layer sizes for the non-synthetic kinds (the synthetic network
    /// shape comes from its module settings).
    pub hidden_sizes: Vec<usize>,
    /// Hold out a tail split and record its error along the training trace.
    pub eval_test: bool,
    pub test_fraction: f64,

    pub synthetic: SyntheticSettings,
    pub diagrams: DiagramSettings,
    pub timeseries: TimeseriesSettings,
    pub custom_data_csv: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Standard settings for each experiment kind.
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut config = ExperimentConfig {
            kind,
            seed: 0,
            out_dir: None,
            x_min: -1.0,
            x_max: 1.0,
            y_min: 0.01,
            y_max: 0.99,
            a1_train_epochs: 2000,
            eta0_step_size: 0.7,
            lambda_lasso: 9.0e-7,
            epsilon1_stabilizer: 0.001,
            xi_weight_threshold: 0.3,
            c_communities: 3,
            a2_em_iterations: 200,
            a3_em_restarts: 300,
            sampling: Sampling::UniformRandom,
            hidden_sizes: vec![30, 30],
            eval_test: false,
            test_fraction: 0.2,
            synthetic: SyntheticSettings {
                n1_samples: 5000,
                modules: 3,
                units_per_module: 15,
                hidden_layers: 2,
                input_variance: 3.0,
                noise_variance: 0.05,
            },
            diagrams: DiagramSettings {
                n1_per_class: 1000,
                jitter_std: 0.07,
                noise_variance: 0.1,
            },
            timeseries: TimeseriesSettings {
                window_months: 36,
                csv_path: None,
                months: 541,
                columns: 3,
                seasonal: SeasonalConfig::default(),
            },
            custom_data_csv: None,
        };
        match kind {
            ExperimentKind::Synthetic => {}
            ExperimentKind::Timeseries => {
                config.a1_train_epochs = 100;
                config.lambda_lasso = 1.1e-5;
                config.xi_weight_threshold = 5.0e-3;
                config.c_communities = 3;
                config.eval_test = true;
            }
            ExperimentKind::Diagrams => {
                config.a1_train_epochs = 500;
                config.lambda_lasso = 4.0e-5;
                config.xi_weight_threshold = 5.0e-4;
                config.c_communities = 10;
                config.hidden_sizes = vec![50, 50];
                config.sampling = Sampling::ClassCyclic { classes: 10 };
            }
            ExperimentKind::Custom => {
                config.a1_train_epochs = 100;
                config.lambda_lasso = 1.0e-5;
                config.xi_weight_threshold = 1.0e-3;
            }
        }
        config
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hash of the canonical JSON form, recorded in manifests and model
    /// provenance.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json().as_bytes());
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::config("normalization bounds must satisfy min < max"));
        }
        if !(self.xi_weight_threshold > 0.0) {
            return Err(Error::config(format!(
                "xi_weight_threshold must be > 0, got {}",
                self.xi_weight_threshold
            )));
        }
        if self.lambda_lasso < 0.0 {
            return Err(Error::config("lambda_lasso must be >= 0"));
        }
        if self.epsilon1_stabilizer < 0.0 {
            return Err(Error::config("epsilon1_stabilizer must be >= 0"));
        }
        if !(self.eta0_step_size > 0.0) {
            return Err(Error::config("eta0_step_size must be > 0"));
        }
        if self.a1_train_epochs == 0 || self.a2_em_iterations == 0 || self.a3_em_restarts == 0 {
            return Err(Error::config("a1, a2, and a3 must all be >= 1"));
        }
        if self.c_communities == 0 {
            return Err(Error::config("c_communities must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(Error::config("test_fraction must be in [0, 1)"));
        }
        match self.kind {
            ExperimentKind::Synthetic => {
                if self.synthetic.n1_samples == 0
                    || self.synthetic.modules == 0
                    || self.synthetic.units_per_module == 0
                {
                    return Err(Error::config("synthetic sizes must be >= 1"));
                }
            }
            ExperimentKind::Diagrams => {
                if self.diagrams.n1_per_class == 0 {
                    return Err(Error::config("diagrams.n1_per_class must be >= 1"));
                }
                if self.hidden_sizes.is_empty() {
                    return Err(Error::config("diagrams need at least one hidden layer"));
                }
            }
            ExperimentKind::Timeseries => {
                if self.timeseries.window_months == 0 {
                    return Err(Error::config("window_months must be >= 1"));
                }
                if self.timeseries.csv_path.is_none()
                    && (self.timeseries.months <= self.timeseries.window_months
                        || self.timeseries.columns == 0)
                {
                    return Err(Error::config(
                        "generated series needs months > window and columns >= 1",
                    ));
                }
            }
            ExperimentKind::Custom => {
                if self.custom_data_csv.is_none() {
                    return Err(Error::config("custom experiments need custom_data_csv"));
                }
            }
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lasso_weight: self.lambda_lasso,
            stabilizer: self.epsilon1_stabilizer,
            epochs: self.a1_train_epochs,
            base_step: self.eta0_step_size,
            seed: self.seed.wrapping_add(3),
            sampling: self.sampling,
            x_bounds: (self.x_min, self.x_max),
            y_bounds: (self.y_min, self.y_max),
            trace_stride: None,
            eval_test: self.eval_test,
        }
    }

    pub fn em_config(&self) -> crate::community::EmConfig {
        crate::community::EmConfig {
            communities: self.c_communities,
            iterations: self.a2_em_iterations,
            restarts: self.a3_em_restarts,
            seed: self.seed.wrapping_add(4),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_match_standard_settings() {
        for kind in [
            ExperimentKind::Synthetic,
            ExperimentKind::Timeseries,
            ExperimentKind::Diagrams,
        ] {
            ExperimentConfig::preset(kind).validate().unwrap();
        }
        let synthetic = ExperimentConfig::preset(ExperimentKind::Synthetic);
        assert_eq!(synthetic.a1_train_epochs, 2000);
        assert_eq!(synthetic.lambda_lasso, 9.0e-7);
        assert_eq!(synthetic.xi_weight_threshold, 0.3);
        assert_eq!(synthetic.c_communities, 3);
        assert_eq!(synthetic.a2_em_iterations, 200);
        assert_eq!(synthetic.a3_em_restarts, 300);
        assert_eq!((synthetic.x_min, synthetic.x_max), (-1.0, 1.0));
        assert_eq!((synthetic.y_min, synthetic.y_max), (0.01, 0.99));
        assert_eq!(synthetic.synthetic.n1_samples, 5000);

        let timeseries = ExperimentConfig::preset(ExperimentKind::Timeseries);
        assert_eq!(timeseries.a1_train_epochs, 100);
        assert_eq!(timeseries.lambda_lasso, 1.1e-5);
        assert_eq!(timeseries.xi_weight_threshold, 5.0e-3);
        assert_eq!(timeseries.timeseries.window_months, 36);

        let diagrams = ExperimentConfig::preset(ExperimentKind::Diagrams);
        assert_eq!(diagrams.a1_train_epochs, 500);
        assert_eq!(diagrams.lambda_lasso, 4.0e-5);
        assert_eq!(diagrams.xi_weight_threshold, 5.0e-4);
        assert_eq!(diagrams.c_communities, 10);
        assert_eq!(diagrams.sampling, Sampling::ClassCyclic { classes: 10 });
    }

    #[test]
    fn json_round_trip_preserves_hash() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let config = ExperimentConfig::preset(ExperimentKind::Diagrams);
        config.save(&path).unwrap();
        let loaded = ExperimentConfig::load(&path).unwrap();
        assert_eq!(loaded, config);
        assert_eq!(loaded.hash(), config.hash());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut config = ExperimentConfig::preset(ExperimentKind::Synthetic);
        config.xi_weight_threshold = 0.0;
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::preset(ExperimentKind::Synthetic);
        config.x_min = 2.0;
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::preset(ExperimentKind::Custom);
        assert!(config.validate().is_err());
        config.custom_data_csv = Some("data.csv".into());
        config.validate().unwrap();
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let text = r#"{"kind": "synthetic", "no_such_key": 1}"#;
        let err = serde_json::from_str::<ExperimentConfig>(text);
        assert!(err.is_err());
    }
}
