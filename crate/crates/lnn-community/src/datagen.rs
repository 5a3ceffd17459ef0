//! Dataset generators: ground-truth modular networks, 10-class diagram
//! images, seasonal time series, plus the CSV/PGM plumbing around them.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{forward, LayerTopology, NetworkParams};

/// A network assembled block-diagonally from independent identical
/// sub-networks; every cross-module weight is exactly zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthNetwork {
    pub params: NetworkParams,
    /// Module id per unit; the same labeling applies to every layer.
    pub module_labels: Vec<usize>,
    pub modules: usize,
    pub units_per_module: usize,
}

/// Draws the ground-truth parameters: per module, weights i.i.d. N(0, 1) with
/// entries of magnitude 1 or smaller deleted, and biases i.i.d. N(0, 0.5).
pub fn gen_ground_truth(
    modules: usize,
    units_per_module: usize,
    hidden_layers: usize,
    seed: u64,
) -> GroundTruthNetwork {
    assert!(modules >= 1 && units_per_module >= 1);
    let depth = hidden_layers + 2;
    let width = modules * units_per_module;
    let topology = LayerTopology::new(vec![width; depth]).unwrap();
    let mut params = NetworkParams::zeros(topology);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight_dist = Normal::new(0.0, 1.0).unwrap();
    let bias_dist = Normal::new(0.0, 0.5f64.sqrt()).unwrap();
    for m in 0..modules {
        let base = m * units_per_module;
        for d in 1..depth {
            for i in 0..units_per_module {
                for j in 0..units_per_module {
                    let w: f64 = weight_dist.sample(&mut rng);
                    let w = if w.abs() <= 1.0 { 0.0 } else { w };
                    params.weights_from_mut(d).set(base + i, base + j, w);
                }
            }
            for j in 0..units_per_module {
                params.biases_from_mut(d)[base + j] = bias_dist.sample(&mut rng);
            }
        }
    }
    let module_labels = (0..width).map(|u| u / units_per_module).collect();
    GroundTruthNetwork {
        params,
        module_labels,
        modules,
        units_per_module,
    }
}

/// Regression samples from a generating network: inputs i.i.d. normal with
/// the given variance, targets the network output plus i.i.d. output noise.
pub fn gen_synthetic_dataset(
    params: &NetworkParams,
    samples: usize,
    input_variance: f64,
    noise_variance: f64,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_dist = Normal::new(0.0, input_variance.sqrt())
        .map_err(|e| Error::config(format!("bad input variance: {e}")))?;
    let noise_dist = if noise_variance > 0.0 {
        Some(
            Normal::new(0.0, noise_variance.sqrt())
                .map_err(|e| Error::config(format!("bad noise variance: {e}")))?,
        )
    } else {
        None
    };
    let m = params.topology().input_dim();
    let mut inputs = Vec::with_capacity(samples);
    let mut targets = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x: Vec<f64> = (0..m).map(|_| x_dist.sample(&mut rng)).collect();
        let mut y = forward(params, &x)?.output().to_vec();
        if let Some(noise) = &noise_dist {
            for v in y.iter_mut() {
                *v += noise.sample(&mut rng);
            }
        }
        inputs.push(x);
        targets.push(y);
    }
    Ok((inputs, targets))
}

pub const DIAGRAM_CLASSES: usize = 10;
pub const DIAGRAM_SIDE: usize = 20;
const DIAGRAM_SCALE: f64 = 19.999;

/// Mean point coordinates in the unit square and the point pairs to connect
/// for one diagram class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagramTemplate {
    /// Class id, 1-based.
    pub class_id: usize,
    pub name: &'static str,
    pub points: Vec<(f64, f64)>,
    pub segments: Vec<(usize, usize)>,
}

/// The ten diagram classes.
pub fn diagram_templates() -> Vec<DiagramTemplate> {
    vec![
        DiagramTemplate {
            class_id: 1,
            name: "Rectangle",
            points: vec![(0.2, 0.2), (0.2, 0.8), (0.8, 0.8), (0.8, 0.2)],
            segments: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
        },
        DiagramTemplate {
            class_id: 2,
            name: "Heart",
            points: vec![
                (0.1, 0.5),
                (0.3, 0.8),
                (0.5, 0.6),
                (0.7, 0.8),
                (0.9, 0.5),
                (0.5, 0.2),
            ],
            segments: vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)],
        },
        DiagramTemplate {
            class_id: 3,
            name: "Triangle",
            points: vec![(0.5, 0.2), (0.8, 0.8), (0.2, 0.8)],
            segments: vec![(0, 1), (1, 2), (2, 0)],
        },
        DiagramTemplate {
            class_id: 4,
            name: "Cross",
            points: vec![(0.2, 0.2), (0.8, 0.8), (0.2, 0.8), (0.8, 0.2)],
            segments: vec![(0, 1), (2, 3)],
        },
        DiagramTemplate {
            class_id: 5,
            name: "Line",
            points: vec![(0.2, 0.8), (0.8, 0.2)],
            segments: vec![(0, 1)],
        },
        DiagramTemplate {
            class_id: 6,
            name: "Diamond",
            points: vec![(0.5, 0.9), (0.9, 0.5), (0.5, 0.1), (0.1, 0.5)],
            segments: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
        },
        DiagramTemplate {
            class_id: 7,
            name: "Arrow",
            points: vec![(0.4, 0.9), (0.1, 0.5), (0.4, 0.1), (0.9, 0.5)],
            segments: vec![(0, 1), (1, 2), (1, 3)],
        },
        DiagramTemplate {
            class_id: 8,
            name: "Ribbon",
            points: vec![(0.2, 0.2), (0.8, 0.8), (0.8, 0.2), (0.2, 0.8)],
            segments: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
        },
        DiagramTemplate {
            class_id: 9,
            name: "Face",
            points: vec![
                (0.3, 0.8),
                (0.3, 0.6),
                (0.7, 0.8),
                (0.7, 0.6),
                (0.2, 0.3),
                (0.8, 0.3),
            ],
            segments: vec![(0, 1), (2, 3), (4, 5)],
        },
        DiagramTemplate {
            class_id: 10,
            name: "Two lines",
            points: vec![(0.2, 0.2), (0.8, 0.2), (0.2, 0.8), (0.8, 0.8)],
            segments: vec![(0, 1), (2, 3)],
        },
    ]
}

/// Jitter and noise settings for the diagram generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramConfig {
    /// Standard deviation of the per-coordinate point jitter.
    pub jitter_std: f64,
    /// Variance of the per-pixel additive noise.
    pub noise_variance: f64,
}

impl Default for DiagramConfig {
    fn default() -> Self {
        DiagramConfig {
            jitter_std: 0.07,
            noise_variance: 0.1,
        }
    }
}

/// Liang-Barsky clip of segment `a -> b` to the square `[0, max]^2`.
fn clip_segment(a: (f64, f64), b: (f64, f64), max: f64) -> Option<((f64, f64), (f64, f64))> {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-dx, a.0),
        (dx, max - a.0),
        (-dy, a.1),
        (dy, max - a.1),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                if r > t1 {
                    return None;
                }
                if r > t0 {
                    t0 = r;
                }
            } else {
                if r < t0 {
                    return None;
                }
                if r < t1 {
                    t1 = r;
                }
            }
        }
    }
    Some((
        (a.0 + t0 * dx, a.1 + t0 * dy),
        (a.0 + t1 * dx, a.1 + t1 * dy),
    ))
}

/// Marks every grid cell the segment passes through (Amanatides-Woo walk in
/// continuous pixel coordinates). Exact corner crossings move diagonally, so
/// cells touched only at a point are not marked.
fn raster_segment(image: &mut [f64], a: (f64, f64), b: (f64, f64)) {
    let Some((a, b)) = clip_segment(a, b, DIAGRAM_SCALE) else {
        return;
    };
    let side = DIAGRAM_SIDE as i64;
    let cell = |v: f64| (v.floor() as i64).clamp(0, side - 1);
    let (mut cx, mut cy) = (cell(a.0), cell(a.1));
    let (ex, ey) = (cell(b.0), cell(b.1));
    let mark = |x: i64, y: i64, image: &mut [f64]| {
        image[(y * side + x) as usize] = 1.0;
    };
    mark(cx, cy, image);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let t_delta_x = if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY };
    let mut t_max_x = if dx != 0.0 {
        let boundary = if dx > 0.0 { (cx + 1) as f64 } else { cx as f64 };
        (boundary - a.0) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy != 0.0 {
        let boundary = if dy > 0.0 { (cy + 1) as f64 } else { cy as f64 };
        (boundary - a.1) / dy
    } else {
        f64::INFINITY
    };
    let mut guard = 0;
    while (cx, cy) != (ex, ey) && guard <= 2 * side + 2 {
        guard += 1;
        if t_max_x == t_max_y {
            cx += step_x;
            cy += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            cx += step_x;
            t_max_x += t_delta_x;
        } else {
            cy += step_y;
            t_max_y += t_delta_y;
        }
        if cx < 0 || cy < 0 || cx >= side || cy >= side {
            break;
        }
        mark(cx, cy, image);
    }
}

fn gen_diagram_with(
    template: &DiagramTemplate,
    config: &DiagramConfig,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let jitter = if config.jitter_std > 0.0 {
        Some(Normal::new(0.0, config.jitter_std).unwrap())
    } else {
        None
    };
    let points: Vec<(f64, f64)> = template
        .points
        .iter()
        .map(|&(mx, my)| match &jitter {
            Some(d) => (mx + d.sample(rng), my + d.sample(rng)),
            None => (mx, my),
        })
        .collect();
    let mut image = vec![0.0; DIAGRAM_SIDE * DIAGRAM_SIDE];
    for &(i, j) in &template.segments {
        let a = (points[i].0 * DIAGRAM_SCALE, points[i].1 * DIAGRAM_SCALE);
        let b = (points[j].0 * DIAGRAM_SCALE, points[j].1 * DIAGRAM_SCALE);
        raster_segment(&mut image, a, b);
    }
    if config.noise_variance > 0.0 {
        let noise = Normal::new(0.0, config.noise_variance.sqrt()).unwrap();
        for v in image.iter_mut() {
            *v += noise.sample(rng);
        }
    }
    image
}

/// One 20x20 diagram image as a flat row-major vector (row = vertical pixel
/// coordinate). The template points are jittered, connected segments are
/// rasterized onto a binary image, then pixel noise is added without
/// re-clipping.
pub fn gen_diagram(class_id: usize, config: &DiagramConfig, seed: u64) -> Result<Vec<f64>> {
    if class_id < 1 || class_id > DIAGRAM_CLASSES {
        return Err(Error::config(format!(
            "diagram class {class_id} out of range 1..={DIAGRAM_CLASSES}"
        )));
    }
    let templates = diagram_templates();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(gen_diagram_with(&templates[class_id - 1], config, &mut rng))
}

/// Class-major diagram dataset: all samples of class 1 first, then class 2,
/// and so on. Inputs are flattened images, targets one-hot vectors of length
/// 10. Each sample owns an RNG stream derived from (seed, sample index).
pub fn gen_diagram_dataset(
    per_class: usize,
    config: &DiagramConfig,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if per_class == 0 {
        return Err(Error::config("per_class must be >= 1"));
    }
    let templates = diagram_templates();
    let mut inputs = Vec::with_capacity(DIAGRAM_CLASSES * per_class);
    let mut targets = Vec::with_capacity(DIAGRAM_CLASSES * per_class);
    for class in 0..DIAGRAM_CLASSES {
        for s in 0..per_class {
            let global = class * per_class + s;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(global as u64);
            inputs.push(gen_diagram_with(&templates[class], config, &mut rng));
            let mut one_hot = vec![0.0; DIAGRAM_CLASSES];
            one_hot[class] = 1.0;
            targets.push(one_hot);
        }
    }
    Ok((inputs, targets))
}

/// A months x columns table of values with column labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub labels: Vec<String>,
    /// One row per month.
    pub values: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn months(&self) -> usize {
        self.values.len()
    }

    pub fn columns(&self) -> usize {
        self.labels.len()
    }
}

/// Sliding-window samples: the target of each sample is one month of all
/// columns, the input the preceding `window` months laid out month-major,
/// oldest first. The input index of (lag `n`, column `f`) is
/// `(window - n) * columns + f`.
pub fn window_timeseries(
    series: &TimeSeries,
    window: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if window == 0 {
        return Err(Error::config("window must be >= 1"));
    }
    let t = series.months();
    if t <= window {
        return Err(Error::data(format!(
            "series has {t} months, need more than the window of {window}"
        )));
    }
    let f = series.columns();
    let mut inputs = Vec::with_capacity(t - window);
    let mut targets = Vec::with_capacity(t - window);
    for target_month in window..t {
        let mut x = Vec::with_capacity(window * f);
        for month in target_month - window..target_month {
            x.extend_from_slice(&series.values[month]);
        }
        inputs.push(x);
        targets.push(series.values[target_month].clone());
    }
    Ok((inputs, targets))
}

/// Shape of the generated stand-in series: per-column annual sinusoid plus
/// linear trend plus AR(1) noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonalConfig {
    pub period: f64,
    pub base: f64,
    pub trend: f64,
    pub amplitude: f64,
    pub ar_coeff: f64,
    pub noise_std: f64,
}

impl Default for SeasonalConfig {
    fn default() -> Self {
        SeasonalConfig {
            period: 12.0,
            base: 100.0,
            trend: 0.05,
            amplitude: 8.0,
            ar_coeff: 0.5,
            noise_std: 1.0,
        }
    }
}

/// Synthetic seasonal series with `columns` columns labeled `series1`,
/// `series2`, ...
pub fn gen_seasonal_series(
    months: usize,
    columns: usize,
    config: &SeasonalConfig,
    seed: u64,
) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, config.noise_std.max(0.0)).unwrap();
    let labels = (1..=columns).map(|f| format!("series{f}")).collect();
    let mut ar = vec![0.0; columns];
    let mut values = Vec::with_capacity(months);
    for t in 0..months {
        let mut row = Vec::with_capacity(columns);
        for f in 0..columns {
            if config.noise_std > 0.0 {
                ar[f] = config.ar_coeff * ar[f] + noise.sample(&mut rng);
            }
            let phase = f as f64 * config.period / columns.max(1) as f64;
            let seasonal = config.amplitude * (1.0 + 0.3 * f as f64)
                * (2.0 * std::f64::consts::PI * (t as f64 + phase) / config.period).sin();
            row.push(config.base + 10.0 * f as f64 + config.trend * t as f64 + seasonal + ar[f]);
        }
        values.push(row);
    }
    TimeSeries { labels, values }
}

/// Reads a header row plus numeric rows. Ragged rows and non-numeric cells
/// are reported with their position.
pub fn load_timeseries_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => Error::data(format!("{}: {e}", path.display())),
        })?;
    let labels: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(format!("{}: bad header: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut values = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::data(format!("{}: data row {}: {e}", path.display(), row_idx + 1)))?;
        let mut row = Vec::with_capacity(labels.len());
        for (col_idx, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::data(format!(
                    "{}: data row {}, column {} ({}): not a number: {cell:?}",
                    path.display(),
                    row_idx + 1,
                    col_idx + 1,
                    labels.get(col_idx).map(String::as_str).unwrap_or("?")
                ))
            })?;
            row.push(v);
        }
        values.push(row);
    }
    if values.is_empty() {
        return Err(Error::data(format!("{}: no data rows", path.display())));
    }
    Ok(TimeSeries { labels, values })
}

pub fn timeseries_csv_string(series: &TimeSeries) -> String {
    let mut out = String::new();
    out.push_str(&series.labels.join(","));
    out.push('\n');
    for row in &series.values {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_timeseries_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, timeseries_csv_string(series)).map_err(|e| Error::io(path, e))
}

/// One row per sample, inputs then targets, header `x0..x{M-1},y0..y{N-1}`.
pub fn dataset_csv_string(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<String> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::data("dataset rows are empty or mismatched"));
    }
    let m = inputs[0].len();
    let n = targets[0].len();
    let mut header: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
    header.extend((0..n).map(|j| format!("y{j}")));
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for (x, y) in inputs.iter().zip(targets.iter()) {
        let cells: Vec<String> = x.iter().chain(y.iter()).map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Writes the dataset CSV format to a file.
pub fn write_dataset_csv(
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dataset_csv_string(inputs, targets)?).map_err(|e| Error::io(path, e))
}

/// Reads the dataset CSV format back; the split between inputs and targets
/// comes from the `x*` / `y*` header names.
pub fn read_dataset_csv(path: impl AsRef<Path>) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let series = load_timeseries_csv(&path)?;
    let m = series.labels.iter().take_while(|l| l.starts_with('x')).count();
    let n = series.labels.len() - m;
    if m == 0 || n == 0 || !series.labels[m..].iter().all(|l| l.starts_with('y')) {
        return Err(Error::data(format!(
            "{}: header must be x0..x{{M-1}},y0..y{{N-1}}",
            path.as_ref().display()
        )));
    }
    let mut inputs = Vec::with_capacity(series.values.len());
    let mut targets = Vec::with_capacity(series.values.len());
    for row in series.values {
        inputs.push(row[..m].to_vec());
        targets.push(row[m..].to_vec());
    }
    Ok((inputs, targets))
}

/// Plain-text PGM of one grayscale image; values are clamped to [0, 1] and
/// scaled to 0..=255.
pub fn pgm_string(image: &[f64], width: usize, height: usize) -> Result<String> {
    if image.len() != width * height {
        return Err(Error::data(format!(
            "image has {} pixels, expected {}x{}",
            image.len(),
            width,
            height
        )));
    }
    let mut out = format!("P2\n{width} {height}\n255\n");
    for row in image.chunks(width) {
        let cells: Vec<String> = row
            .iter()
            .map(|&v| format!("{}", (v.clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_pgm(image: &[f64], width: usize, height: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, pgm_string(image, width, height)?).map_err(|e| Error::io(path, e))
}
