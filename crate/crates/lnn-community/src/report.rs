//! Experiment orchestration: runs the full generate / normalize / train /
//! detect / analyze pipeline and emits every artifact (CSV, JSON, SVG) plus a
//! manifest of their hashes. Outputs carry no timestamps, so a rerun with the
//! same config and seed is byte-identical at any thread count.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adjacency::extract;
use crate::archive::{ModelArchive, Provenance};
use crate::community::{detect, CommunityAssignment};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::datagen::{
    dataset_csv_string, diagram_templates, gen_diagram_dataset, gen_ground_truth,
    gen_seasonal_series, gen_synthetic_dataset, load_timeseries_csv, pgm_string,
    read_dataset_csv, timeseries_csv_string, window_timeseries, DiagramConfig,
    GroundTruthNetwork, DIAGRAM_CLASSES, DIAGRAM_SIDE,
};
use crate::error::{Error, Result};
use crate::eval::matched_accuracy;
use crate::linear::{fit_linear, sweep_window, training_error as linear_error};
use crate::network::LayerTopology;
use crate::roles::{role_report, RoleReport};
use crate::svg::{heatmap_svg, network_svg};
use crate::trainer::{init_params, normalize_dataset, normalize_with, train, ErrorTrace, Sampling};

/// One emitted file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything a run produced, with content hashes; written as
/// `manifest.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub artifacts: Vec<ArtifactEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes artifacts under a root directory and records their hashes.
pub struct ArtifactWriter {
    root: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl ArtifactWriter {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(ArtifactWriter {
            root,
            entries: Vec::new(),
        })
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.entries.push(ArtifactEntry {
            path: rel.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    /// Finalizes the run: writes `manifest.json` listing every artifact
    /// (sorted by path) and returns the manifest.
    pub fn finish(mut self, config_hash: String, seed: u64) -> Result<Manifest> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            config_hash,
            seed,
            artifacts: self.entries,
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.root.join("manifest.json");
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

/// Labeled CSV matrix: header row of column labels, then one labeled row per
/// line. Used for adjacency, responsibility, role, and coefficient exports.
pub fn matrix_csv(row_labels: &[String], col_labels: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push(',');
    out.push_str(&col_labels.join(","));
    out.push('\n');
    for (label, row) in row_labels.iter().zip(rows.iter()) {
        out.push_str(label);
        for v in row {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`matrix_csv`]: (col_labels, row_labels, rows).
pub fn parse_matrix_csv(text: &str) -> Result<(Vec<String>, Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::data("empty matrix CSV"))?;
    let col_labels: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let mut row_labels = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        row_labels.push(cells.next().unwrap_or("").to_string());
        let row: std::result::Result<Vec<f64>, _> = cells.map(str::parse).collect();
        rows.push(row.map_err(|e| Error::data(format!("matrix CSV row {}: {e}", i + 1)))?);
    }
    Ok((col_labels, row_labels, rows))
}

/// `communities.json` schema: per layer, the winning likelihood and each
/// unit's hard community (1-based) with its responsibility row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentFile {
    pub layers: Vec<AssignmentLayer>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentLayer {
    pub layer: usize,
    pub communities: usize,
    pub expected_log_likelihood: f64,
    pub units: Vec<AssignmentUnit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentUnit {
    pub unit_index: usize,
    /// 1-based community id.
    pub community: usize,
    pub q_row: Vec<f64>,
}

impl AssignmentFile {
    pub fn from_assignments(assignments: &[CommunityAssignment]) -> Self {
        AssignmentFile {
            layers: assignments
                .iter()
                .map(|a| AssignmentLayer {
                    layer: a.layer,
                    communities: a.community_count(),
                    expected_log_likelihood: a.expected_log_likelihood,
                    units: a
                        .communities
                        .iter()
                        .enumerate()
                        .map(|(k, &c)| AssignmentUnit {
                            unit_index: k,
                            community: c + 1,
                            q_row: a.model.resp.row(k).to_vec(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// 0-based labels per layer, for rendering and accuracy scoring.
    pub fn labels_per_layer(&self) -> Vec<Vec<usize>> {
        self.layers
            .iter()
            .map(|l| l.units.iter().map(|u| u.community - 1).collect())
            .collect()
    }
}

struct StageData {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    test_inputs: Vec<Vec<f64>>,
    test_targets: Vec<Vec<f64>>,
    ground_truth: Option<GroundTruthNetwork>,
    input_labels: Vec<String>,
    output_labels: Vec<String>,
    topology: LayerTopology,
}

fn tail_split(
    inputs: &mut Vec<Vec<f64>>,
    targets: &mut Vec<Vec<f64>>,
    fraction: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = inputs.len();
    if fraction <= 0.0 || n < 2 {
        return (Vec::new(), Vec::new());
    }
    let n_test = ((n as f64 * fraction).floor() as usize).clamp(1, n - 1);
    let test_x = inputs.split_off(n - n_test);
    let test_y = targets.split_off(n - n_test);
    (test_x, test_y)
}

/// Splits the tail of every class block, preserving the class-major layout
/// and equal class sizes of the remaining training set.
fn per_class_tail_split(
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    classes: usize,
    fraction: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let per_class = inputs.len() / classes;
    let n_test = if fraction <= 0.0 || per_class < 2 {
        0
    } else {
        ((per_class as f64 * fraction).floor() as usize).clamp(1, per_class - 1)
    };
    let keep = per_class - n_test;
    let mut train_x = Vec::new();
    let mut train_y = Vec::new();
    let mut test_x = Vec::new();
    let mut test_y = Vec::new();
    for (i, (x, y)) in inputs.into_iter().zip(targets).enumerate() {
        if i % per_class < keep {
            train_x.push(x);
            train_y.push(y);
        } else {
            test_x.push(x);
            test_y.push(y);
        }
    }
    (train_x, train_y, test_x, test_y)
}

fn stage_data(config: &ExperimentConfig, writer: &mut ArtifactWriter) -> Result<StageData> {
    match config.kind {
        ExperimentKind::Synthetic => {
            let s = &config.synthetic;
            let gt = gen_ground_truth(s.modules, s.units_per_module, s.hidden_layers, config.seed);
            let (mut inputs, mut targets) = gen_synthetic_dataset(
                &gt.params,
                s.n1_samples,
                s.input_variance,
                s.noise_variance,
                config.seed.wrapping_add(1),
            )?;
            let (test_inputs, test_targets) = if config.eval_test {
                tail_split(&mut inputs, &mut targets, config.test_fraction)
            } else {
                (Vec::new(), Vec::new())
            };
            let width = s.modules * s.units_per_module;
            let topology = gt.params.topology().clone();
            writer.write(
                "ground_truth.json",
                &serde_json::to_string_pretty(&gt).expect("ground truth serializes"),
            )?;
            Ok(StageData {
                inputs,
                targets,
                test_inputs,
                test_targets,
                ground_truth: Some(gt),
                input_labels: (0..width).map(|i| format!("x{i}")).collect(),
                output_labels: (0..width).map(|j| format!("y{j}")).collect(),
                topology,
            })
        }
        ExperimentKind::Timeseries => {
            let t = &config.timeseries;
            let series = match &t.csv_path {
                Some(path) => load_timeseries_csv(path)?,
                None => gen_seasonal_series(t.months, t.columns, &t.seasonal, config.seed),
            };
            writer.write("series.csv", &timeseries_csv_string(&series))?;
            let (mut inputs, mut targets) = window_timeseries(&series, t.window_months)?;
            let (test_inputs, test_targets) = if config.eval_test {
                tail_split(&mut inputs, &mut targets, config.test_fraction)
            } else {
                (Vec::new(), Vec::new())
            };
            let window = t.window_months;
            let input_labels = (0..window)
                .flat_map(|m| {
                    let lag = window - m;
                    series
                        .labels
                        .iter()
                        .map(move |l| format!("{l}(-{lag})"))
                        .collect::<Vec<_>>()
                })
                .collect();
            let mut sizes = vec![window * series.columns()];
            sizes.extend(&config.hidden_sizes);
            sizes.push(series.columns());
            Ok(StageData {
                inputs,
                targets,
                test_inputs,
                test_targets,
                ground_truth: None,
                input_labels,
                output_labels: series.labels.clone(),
                topology: LayerTopology::new(sizes)?,
            })
        }
        ExperimentKind::Diagrams => {
            let d = &config.diagrams;
            let diagram_config = DiagramConfig {
                jitter_std: d.jitter_std,
                noise_variance: d.noise_variance,
            };
            let (inputs, targets) =
                gen_diagram_dataset(d.n1_per_class, &diagram_config, config.seed.wrapping_add(1))?;
            for class in 0..DIAGRAM_CLASSES {
                let image = &inputs[class * d.n1_per_class];
                writer.write(
                    &format!("samples/class{:02}.pgm", class + 1),
                    &pgm_string(image, DIAGRAM_SIDE, DIAGRAM_SIDE)?,
                )?;
            }
            let (inputs, targets, test_inputs, test_targets) = if config.eval_test {
                per_class_tail_split(inputs, targets, DIAGRAM_CLASSES, config.test_fraction)
            } else {
                (inputs, targets, Vec::new(), Vec::new())
            };
            let mut sizes = vec![DIAGRAM_SIDE * DIAGRAM_SIDE];
            sizes.extend(&config.hidden_sizes);
            sizes.push(DIAGRAM_CLASSES);
            let input_labels = (0..DIAGRAM_SIDE * DIAGRAM_SIDE)
                .map(|i| format!("px{}_{}", i / DIAGRAM_SIDE, i % DIAGRAM_SIDE))
                .collect();
            let output_labels = diagram_templates().iter().map(|t| t.name.to_string()).collect();
            Ok(StageData {
                inputs,
                targets,
                test_inputs,
                test_targets,
                ground_truth: None,
                input_labels,
                output_labels,
                topology: LayerTopology::new(sizes)?,
            })
        }
        ExperimentKind::Custom => {
            let path = config
                .custom_data_csv
                .as_ref()
                .ok_or_else(|| Error::config("custom experiments need custom_data_csv"))?;
            let (mut inputs, mut targets) = read_dataset_csv(path)?;
            let (test_inputs, test_targets) = if config.eval_test {
                tail_split(&mut inputs, &mut targets, config.test_fraction)
            } else {
                (Vec::new(), Vec::new())
            };
            let m = inputs
                .first()
                .ok_or_else(|| Error::data("custom dataset is empty"))?
                .len();
            let n = targets[0].len();
            let mut sizes = vec![m];
            sizes.extend(&config.hidden_sizes);
            sizes.push(n);
            Ok(StageData {
                inputs,
                targets,
                test_inputs,
                test_targets,
                ground_truth: None,
                input_labels: (0..m).map(|i| format!("x{i}")).collect(),
                output_labels: (0..n).map(|j| format!("y{j}")).collect(),
                topology: LayerTopology::new(sizes)?,
            })
        }
    }
}

fn error_trace_csv(trace: &ErrorTrace) -> String {
    let has_test = trace.entries.iter().any(|e| e.test_error.is_some());
    let mut out = String::from(if has_test {
        "step,train_error,test_error\n"
    } else {
        "step,train_error\n"
    });
    for e in &trace.entries {
        out.push_str(&format!("{},{}", e.step, e.train_error));
        if has_test {
            match e.test_error {
                Some(g) => out.push_str(&format!(",{g}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

fn community_labels(count: usize) -> Vec<String> {
    (1..=count).map(|c| format!("com{c}")).collect()
}

fn write_role_artifacts(
    writer: &mut ArtifactWriter,
    report: &RoleReport,
    input_labels: &[String],
    output_labels: &[String],
) -> Result<()> {
    writer.write(
        "roles/report.json",
        &serde_json::to_string_pretty(report).expect("report serializes"),
    )?;
    for layer in &report.layers {
        let d = layer.layer;
        let com_labels = community_labels(layer.roles.len());
        if layer.roles.iter().all(|r| r.input_effect.is_some()) && !layer.roles.is_empty() {
            let rows: Vec<Vec<f64>> = layer
                .roles
                .iter()
                .map(|r| r.input_effect.clone().unwrap())
                .collect();
            let csv = matrix_csv(&com_labels, input_labels, &rows);
            writer.write(&format!("roles/layer{d}_input_effect.csv"), &csv)?;
            let svg = heatmap_svg(
                &format!("Input-dimension effects on layer {d} communities"),
                &com_labels,
                input_labels,
                &rows,
            );
            writer.write(&format!("roles/layer{d}_input_effect.svg"), &svg)?;
        }
        if layer.roles.iter().all(|r| r.output_effect.is_some()) && !layer.roles.is_empty() {
            let rows: Vec<Vec<f64>> = layer
                .roles
                .iter()
                .map(|r| r.output_effect.clone().unwrap())
                .collect();
            let csv = matrix_csv(&com_labels, output_labels, &rows);
            writer.write(&format!("roles/layer{d}_output_effect.csv"), &csv)?;
            let svg = heatmap_svg(
                &format!("Layer {d} community effects on output dimensions"),
                &com_labels,
                output_labels,
                &rows,
            );
            writer.write(&format!("roles/layer{d}_output_effect.svg"), &svg)?;
        }
    }
    Ok(())
}

fn run_pipeline(config: &ExperimentConfig, out_dir: &Path) -> Result<Manifest> {
    let config_hash = config.hash();
    let mut writer = ArtifactWriter::new(out_dir)?;
    writer.write("config.json", &config.to_json())?;

    // Data stage.
    let stage = stage_data(config, &mut writer)?;
    writer.write("dataset.csv", &dataset_csv_string(&stage.inputs, &stage.targets)?)?;
    if !stage.test_inputs.is_empty() {
        writer.write(
            "dataset_test.csv",
            &dataset_csv_string(&stage.test_inputs, &stage.test_targets)?,
        )?;
    }

    // Normalization; the test split reuses the training transforms.
    let (train_ds, norm) = normalize_dataset(
        &stage.inputs,
        &stage.targets,
        (config.x_min, config.x_max),
        (config.y_min, config.y_max),
    )?;
    let test_ds = if stage.test_inputs.is_empty() {
        None
    } else {
        Some(normalize_with(&norm, &stage.test_inputs, &stage.test_targets)?)
    };

    // Training.
    if let Sampling::ClassCyclic { classes } = config.sampling {
        if train_ds.len() % classes != 0 {
            return Err(Error::config(format!(
                "class-cyclic sampling needs {} training samples divisible by {classes}",
                train_ds.len()
            )));
        }
    }
    let initial = init_params(&stage.topology, config.seed.wrapping_add(2));
    let (trained, trace) = train(initial, &train_ds, test_ds.as_ref(), &config.train_config())?;
    let archive = ModelArchive::from_params(
        &trained,
        Some(&norm),
        Provenance::new(config_hash.clone(), config.seed),
    );
    writer.write(
        "model.json",
        &serde_json::to_string_pretty(&archive).expect("archive serializes"),
    )?;
    writer.write("error_trace.csv", &error_trace_csv(&trace))?;

    // Adjacency extraction and community detection, layer by layer.
    let em_config = config.em_config();
    let depth = stage.topology.depth();
    let mut assignments = Vec::with_capacity(depth);
    for layer in 1..=depth {
        let adj = extract(&trained, layer, config.xi_weight_threshold)?;
        let unit_labels = |n: usize, prefix: &str| -> Vec<String> {
            (0..n).map(|i| format!("{prefix}{i}")).collect()
        };
        let focal = unit_labels(adj.focal_units(), "u");
        if adj.input_side_units() > 0 {
            let t_labels = unit_labels(adj.input_side_units(), "t");
            for (name, m) in [("in_pos", &adj.in_pos), ("in_neg", &adj.in_neg)] {
                writer.write(
                    &format!("adjacency/layer{layer}_{name}.csv"),
                    &matrix_csv(&t_labels, &focal, &m.to_rows()),
                )?;
            }
        }
        if adj.output_side_units() > 0 {
            let v_labels = unit_labels(adj.output_side_units(), "v");
            for (name, m) in [("out_pos", &adj.out_pos), ("out_neg", &adj.out_neg)] {
                writer.write(
                    &format!("adjacency/layer{layer}_{name}.csv"),
                    &matrix_csv(&focal, &v_labels, &m.to_rows()),
                )?;
            }
        }
        let assignment = detect(&adj.soften()?, &em_config)?;
        writer.write(
            &format!("communities/layer{layer}_q.csv"),
            &matrix_csv(
                &focal,
                &community_labels(assignment.community_count()),
                &assignment.model.resp.to_rows(),
            ),
        )?;
        assignments.push(assignment);
    }
    let assignment_file = AssignmentFile::from_assignments(&assignments);
    writer.write(
        "communities.json",
        &serde_json::to_string_pretty(&assignment_file).expect("assignments serialize"),
    )?;

    // Figures.
    let labels = assignment_file.labels_per_layer();
    writer.write(
        "figures/network.svg",
        &network_svg(&trained, None, config.xi_weight_threshold),
    )?;
    writer.write(
        "figures/communities.svg",
        &network_svg(&trained, Some(&labels), config.xi_weight_threshold),
    )?;

    // Role analysis on the (normalized) training data.
    let kind_label = format!("{:?}", config.kind).to_lowercase();
    let report = role_report(&trained, &train_ds, &assignments, &kind_label)?;
    write_role_artifacts(&mut writer, &report, &stage.input_labels, &stage.output_labels)?;

    // Recovery score against the generating modular structure.
    if let Some(gt) = &stage.ground_truth {
        #[derive(Serialize)]
        struct LayerAccuracy {
            layer: usize,
            accuracy: f64,
        }
        let scores: Result<Vec<LayerAccuracy>> = assignments
            .iter()
            .map(|a| {
                Ok(LayerAccuracy {
                    layer: a.layer,
                    accuracy: matched_accuracy(&a.communities, &gt.module_labels)?,
                })
            })
            .collect();
        writer.write(
            "accuracy.json",
            &serde_json::to_string_pretty(&scores?).expect("accuracy serializes"),
        )?;
    }

    writer.finish(config_hash, config.seed)
}

/// Runs the whole pipeline into `out_dir` with the given worker count
/// (0 = rayon default). Results are identical for any thread count.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, threads: usize) -> Result<Manifest> {
    config.validate()?;
    if threads == 0 {
        run_pipeline(config, out_dir)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::config(format!("could not build thread pool: {e}")))?;
        pool.install(|| run_pipeline(config, out_dir))
    }
}

/// Regenerates the SVG figures of an artifact directory from its CSV/JSON
/// outputs; returns the files written.
pub fn render_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let config = ExperimentConfig::load(dir.join("config.json"))?;
    let (params, _, _) = crate::archive::load_model(dir.join("model.json"))?;

    let figures = dir.join("figures");
    fs::create_dir_all(&figures).map_err(|e| Error::io(&figures, e))?;
    let network_path = figures.join("network.svg");
    fs::write(
        &network_path,
        network_svg(&params, None, config.xi_weight_threshold),
    )
    .map_err(|e| Error::io(&network_path, e))?;
    written.push(network_path);

    let communities_path = dir.join("communities.json");
    if communities_path.exists() {
        let text = fs::read_to_string(&communities_path).map_err(|e| Error::io(&communities_path, e))?;
        let assignment_file: AssignmentFile = serde_json::from_str(&text)
            .map_err(|e| Error::data(format!("communities.json: {e}")))?;
        let labels = assignment_file.labels_per_layer();
        let path = figures.join("communities.svg");
        fs::write(
            &path,
            network_svg(&params, Some(&labels), config.xi_weight_threshold),
        )
        .map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    let roles_dir = dir.join("roles");
    if roles_dir.is_dir() {
        let mut names: Vec<PathBuf> = fs::read_dir(&roles_dir)
            .map_err(|e| Error::io(&roles_dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        names.sort();
        for csv_path in names {
            let text = fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
            let (col_labels, row_labels, rows) = parse_matrix_csv(&text)?;
            let stem = csv_path.file_stem().unwrap().to_string_lossy().to_string();
            let svg_path = roles_dir.join(format!("{stem}.svg"));
            fs::write(&svg_path, heatmap_svg(&stem, &row_labels, &col_labels, &rows))
                .map_err(|e| Error::io(&svg_path, e))?;
            written.push(svg_path);
        }
    }
    Ok(written)
}

/// Window-sweep artifacts for the linear baseline: the error table, the
/// best-window coefficient matrix (CSV + heatmap), and the fitted model.
pub fn write_baseline_artifacts(
    series: &crate::datagen::TimeSeries,
    windows: &[usize],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if windows.is_empty() {
        return Err(Error::config("window list is empty"));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let rows = sweep_window(series, windows)?;
    let mut written = Vec::new();

    let mut sweep_csv = String::from(
        "window,train_samples,test_samples,train_error,generalization_error\n",
    );
    for r in &rows {
        sweep_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.window, r.train_samples, r.test_samples, r.train_error, r.generalization_error
        ));
    }
    let sweep_path = out_dir.join("sweep.csv");
    fs::write(&sweep_path, sweep_csv).map_err(|e| Error::io(&sweep_path, e))?;
    written.push(sweep_path);

    let best = rows
        .iter()
        .min_by(|a, b| {
            a.generalization_error
                .partial_cmp(&b.generalization_error)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.window.cmp(&b.window))
        })
        .expect("nonempty sweep");
    let (inputs, targets) = window_timeseries(series, best.window)?;
    let (train, _) = crate::linear::chronological_split(inputs, targets)?;
    let mut model = fit_linear(&train)?;
    model.window = Some(best.window);
    let _ = linear_error(&model, &train)?;

    let col_labels: Vec<String> = (0..best.window)
        .flat_map(|m| {
            let lag = best.window - m;
            series
                .labels
                .iter()
                .map(move |l| format!("{l}(-{lag})"))
                .collect::<Vec<_>>()
        })
        .collect();
    let coef_rows: Vec<Vec<f64>> = (0..series.columns())
        .map(|j| {
            (0..train.input_dim())
                .map(|i| model.coefficients.get(i, j))
                .collect()
        })
        .collect();
    let coef_csv = matrix_csv(&series.labels, &col_labels, &coef_rows);
    let coef_path = out_dir.join("coefficients.csv");
    fs::write(&coef_path, coef_csv).map_err(|e| Error::io(&coef_path, e))?;
    written.push(coef_path);

    let svg = heatmap_svg(
        &format!("Linear coefficients, {}-month window", best.window),
        &series.labels,
        &col_labels,
        &coef_rows,
    );
    let svg_path = out_dir.join("coefficients.svg");
    fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;
    written.push(svg_path);

    let model_json = serde_json::to_string_pretty(&model).expect("model serializes");
    let model_path = out_dir.join("linear_model.json");
    fs::write(&model_path, model_json).map_err(|e| Error::io(&model_path, e))?;
    written.push(model_path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    fn tiny_synthetic_config(seed: u64) -> ExperimentConfig {
        let mut config = ExperimentConfig::preset(ExperimentKind::Synthetic);
        config.seed = seed;
        config.synthetic.n1_samples = 60;
        config.synthetic.modules = 2;
        config.synthetic.units_per_module = 3;
        config.synthetic.hidden_layers = 1;
        config.a1_train_epochs = 3;
        config.c_communities = 2;
        config.a2_em_iterations = 10;
        config.a3_em_restarts = 3;
        config
    }

    #[test]
    fn pipeline_emits_expected_artifacts_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_synthetic_config(1);
        let manifest = run_experiment(&config, dir.path(), 1).unwrap();
        let paths: Vec<&str> = manifest.artifacts.iter().map(|a| a.path.as_str()).collect();
        for expected in [
            "config.json",
            "dataset.csv",
            "ground_truth.json",
            "model.json",
            "error_trace.csv",
            "communities.json",
            "accuracy.json",
            "figures/network.svg",
            "figures/communities.svg",
        ] {
            assert!(paths.contains(&expected), "missing {expected}: {paths:?}");
        }
        assert!(dir.path().join("manifest.json").is_file());
        // Every artifact hash matches the file on disk.
        for entry in &manifest.artifacts {
            let bytes = std::fs::read(dir.path().join(&entry.path)).unwrap();
            assert_eq!(sha256_hex(&bytes), entry.sha256, "{}", entry.path);
        }
        let sorted: Vec<&str> = {
            let mut v = paths.clone();
            v.sort();
            v
        };
        assert_eq!(paths, sorted, "manifest entries must be sorted");
    }

    #[test]
    fn rerun_and_thread_count_do_not_change_bytes() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let config = tiny_synthetic_config(7);
        let a = run_experiment(&config, dir_a.path(), 1).unwrap();
        let b = run_experiment(&config, dir_b.path(), 4).unwrap();
        assert_eq!(a, b);
        let manifest_a = std::fs::read(dir_a.path().join("manifest.json")).unwrap();
        let manifest_b = std::fs::read(dir_b.path().join("manifest.json")).unwrap();
        assert_eq!(manifest_a, manifest_b);
    }

    #[test]
    fn render_regenerates_figures() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_synthetic_config(3);
        run_experiment(&config, dir.path(), 1).unwrap();
        let before = std::fs::read(dir.path().join("figures/communities.svg")).unwrap();
        std::fs::remove_file(dir.path().join("figures/communities.svg")).unwrap();
        let written = render_dir(dir.path()).unwrap();
        assert!(written.iter().any(|p| p.ends_with("communities.svg")));
        let after = std::fs::read(dir.path().join("figures/communities.svg")).unwrap();
        assert_eq!(before, after, "render must reproduce the original figure");
    }

    #[test]
    fn matrix_csv_round_trip() {
        let rows = vec![vec![1.5, -0.25], vec![0.0, 42.0]];
        let text = matrix_csv(
            &["a".into(), "b".into()],
            &["c1".into(), "c2".into()],
            &rows,
        );
        let (cols, row_labels, parsed) = parse_matrix_csv(&text).unwrap();
        assert_eq!(cols, vec!["c1", "c2"]);
        assert_eq!(row_labels, vec!["a", "b"]);
        assert_eq!(parsed, rows);
    }

    #[test]
    fn baseline_artifacts_complete() {
        let dir = tempfile::tempdir().unwrap();
        let series = crate::datagen::gen_seasonal_series(
            80,
            2,
            &crate::datagen::SeasonalConfig::default(),
            5,
        );
        let written = write_baseline_artifacts(&series, &[3, 6, 9], dir.path()).unwrap();
        assert_eq!(written.len(), 4);
        let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(sweep.lines().count(), 4);
        assert!(dir.path().join("coefficients.svg").is_file());
    }

    #[test]
    fn invalid_config_fails_before_compute() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_synthetic_config(1);
        config.xi_weight_threshold = -1.0;
        let err = run_experiment(&config, dir.path(), 1).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!dir.path().join("config.json").exists());
    }
}
