//! Command-line surface over the lnn-community pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lnn_community::adjacency::extract;
use lnn_community::archive::{load_model, save_model, Provenance};
use lnn_community::community::{detect, CommunityAssignment, CommunityModel, EmConfig};
use lnn_community::config::{ExperimentConfig, ExperimentKind};
use lnn_community::datagen::{
    gen_diagram_dataset, gen_ground_truth, gen_seasonal_series, gen_synthetic_dataset,
    load_timeseries_csv, read_dataset_csv, write_dataset_csv, write_pgm, write_timeseries_csv,
    DiagramConfig, SeasonalConfig, DIAGRAM_SIDE,
};
use lnn_community::error::{Error, Result};
use lnn_community::matrix::Matrix;
use lnn_community::network::LayerTopology;
use lnn_community::report::{
    matrix_csv, render_dir, run_experiment, write_baseline_artifacts, AssignmentFile,
};
use lnn_community::roles::role_report;
use lnn_community::svg::heatmap_svg;
use lnn_community::trainer::{init_params, normalize_dataset, normalize_with, train, Sampling, TrainConfig};

#[derive(Parser)]
#[command(
    name = "lnncom",
    version,
    about = "Train sparse sigmoid networks, detect layer-wise communities, and quantify their roles"
)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "lnncom-out")]
    out_dir: PathBuf,
    /// Worker threads; any value gives identical results.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Synthetic,
    Timeseries,
    Diagrams,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Synthetic => ExperimentKind::Synthetic,
            KindArg::Timeseries => ExperimentKind::Timeseries,
            KindArg::Diagrams => ExperimentKind::Diagrams,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKindArg {
    Synthetic,
    Diagrams,
    Seasonal,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: data, training, detection, roles, figures.
    Run(RunArgs),
    /// Write a preset config file for later editing.
    InitConfig(InitConfigArgs),
    /// Generate a dataset without training anything.
    GenData(GenDataArgs),
    /// Train a network on a dataset CSV.
    Train(TrainArgs),
    /// Detect communities in every layer of a saved model.
    Detect(DetectArgs),
    /// Compute the community role report for a saved model.
    Roles(RolesArgs),
    /// Linear least-squares window sweep over a series.
    Baseline(BaselineArgs),
    /// Regenerate the SVG figures of an artifact directory.
    Render(RenderArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file; mutually exclusive with --kind.
    #[arg(long, conflicts_with = "kind")]
    config: Option<PathBuf>,
    /// Use the preset configuration for this experiment kind.
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
}

#[derive(Args)]
struct InitConfigArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Where to write the config (default: <out-dir>/config.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, value_enum)]
    kind: DataKindArg,
    /// Synthetic: total samples.
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 3)]
    modules: usize,
    #[arg(long, default_value_t = 15)]
    module_units: usize,
    #[arg(long, default_value_t = 2)]
    hidden_layers: usize,
    /// Diagrams: samples per class.
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    /// Diagrams: also write one PGM sample per class.
    #[arg(long, default_value_t = false)]
    pgm_samples: bool,
    /// Seasonal: series length in months.
    #[arg(long, default_value_t = 541)]
    months: usize,
    /// Seasonal: number of columns.
    #[arg(long, default_value_t = 3)]
    columns: usize,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset CSV (x0..,y0.. header).
    #[arg(long)]
    data: PathBuf,
    /// Optional held-out dataset CSV evaluated along the trace.
    #[arg(long)]
    test_data: Option<PathBuf>,
    /// Hidden layer sizes, comma separated.
    #[arg(long, default_value = "30,30")]
    hidden: String,
    /// a1: mean iterations per dataset.
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// lambda: L1 penalty weight.
    #[arg(long, default_value_t = 1.0e-5)]
    lasso: f64,
    /// epsilon_1: derivative stabilizer.
    #[arg(long, default_value_t = 0.001)]
    stabilizer: f64,
    /// eta: base step size.
    #[arg(long, default_value_t = 0.7)]
    eta: f64,
    /// "uniform" or "cyclic:<classes>".
    #[arg(long, default_value = "uniform")]
    sampling: String,
    #[arg(long, default_value_t = -1.0)]
    x_min: f64,
    #[arg(long, default_value_t = 1.0)]
    x_max: f64,
    #[arg(long, default_value_t = 0.01)]
    y_min: f64,
    #[arg(long, default_value_t = 0.99)]
    y_max: f64,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    model: PathBuf,
    /// xi: weight-removal threshold.
    #[arg(long)]
    xi: f64,
    /// C: communities per layer.
    #[arg(long, default_value_t = 3)]
    communities: usize,
    /// a2: EM iterations.
    #[arg(long, default_value_t = 200)]
    em_iters: usize,
    /// a3: restarts.
    #[arg(long, default_value_t = 300)]
    restarts: usize,
}

#[derive(Args)]
struct RolesArgs {
    #[arg(long)]
    model: PathBuf,
    /// The raw dataset CSV the model was trained on.
    #[arg(long)]
    data: PathBuf,
    /// communities.json from `detect` or `run`.
    #[arg(long)]
    assignments: PathBuf,
}

#[derive(Args)]
struct BaselineArgs {
    /// Series CSV; when absent a seasonal series is generated.
    #[arg(long)]
    series: Option<PathBuf>,
    #[arg(long, default_value_t = 541)]
    months: usize,
    #[arg(long, default_value_t = 3)]
    columns: usize,
    /// Windows: "a:b" for a range or a comma-separated list.
    #[arg(long, default_value = "1:60")]
    windows: String,
}

#[derive(Args)]
struct RenderArgs {
    /// Artifact directory produced by `run`.
    #[arg(long)]
    dir: PathBuf,
}

fn parse_hidden(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::config(format!("bad hidden size {s:?}")))
        })
        .collect()
}

fn parse_sampling(spec: &str) -> Result<Sampling> {
    if spec == "uniform" {
        return Ok(Sampling::UniformRandom);
    }
    if let Some(classes) = spec.strip_prefix("cyclic:") {
        let classes = classes
            .parse::<usize>()
            .map_err(|_| Error::config(format!("bad class count in {spec:?}")))?;
        return Ok(Sampling::ClassCyclic { classes });
    }
    Err(Error::config(format!(
        "sampling must be \"uniform\" or \"cyclic:<classes>\", got {spec:?}"
    )))
}

fn parse_windows(spec: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = spec.split_once(':') {
        let lo: usize = a
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("bad window range {spec:?}")))?;
        let hi: usize = b
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("bad window range {spec:?}")))?;
        if lo == 0 || hi < lo {
            return Err(Error::config(format!("bad window range {spec:?}")));
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::config(format!("bad window {s:?}")))
        })
        .collect()
}

fn ensure_out_dir(dir: &PathBuf) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn cmd_run(cli: &Cli, args: &RunArgs) -> Result<()> {
    let mut config = match (&args.config, args.kind) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(kind)) => ExperimentConfig::preset(kind.into()),
        (None, None) => {
            return Err(Error::config("run needs either --config or --kind"));
        }
    };
    if args.config.is_none() || cli.seed != 0 {
        config.seed = cli.seed;
    }
    let out_dir = config.out_dir.clone().unwrap_or_else(|| cli.out_dir.clone());
    let manifest = run_experiment(&config, &out_dir, cli.threads)?;
    println!(
        "run complete: {} artifacts in {}",
        manifest.artifacts.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_init_config(cli: &Cli, args: &InitConfigArgs) -> Result<()> {
    ensure_out_dir(&cli.out_dir)?;
    let mut config = ExperimentConfig::preset(args.kind.into());
    config.seed = cli.seed;
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| cli.out_dir.join("config.json"));
    config.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_gen_data(cli: &Cli, args: &GenDataArgs) -> Result<()> {
    ensure_out_dir(&cli.out_dir)?;
    match args.kind {
        DataKindArg::Synthetic => {
            let gt = gen_ground_truth(args.modules, args.module_units, args.hidden_layers, cli.seed);
            let (inputs, targets) =
                gen_synthetic_dataset(&gt.params, args.samples, 3.0, 0.05, cli.seed.wrapping_add(1))?;
            let data_path = cli.out_dir.join("dataset.csv");
            write_dataset_csv(&inputs, &targets, &data_path)?;
            let gt_path = cli.out_dir.join("ground_truth.json");
            std::fs::write(&gt_path, serde_json::to_string_pretty(&gt).unwrap())
                .map_err(|e| Error::io(&gt_path, e))?;
            println!("wrote {} and {}", data_path.display(), gt_path.display());
        }
        DataKindArg::Diagrams => {
            let config = DiagramConfig::default();
            let (inputs, targets) =
                gen_diagram_dataset(args.per_class, &config, cli.seed.wrapping_add(1))?;
            let data_path = cli.out_dir.join("dataset.csv");
            write_dataset_csv(&inputs, &targets, &data_path)?;
            if args.pgm_samples {
                for class in 0..10 {
                    let image = &inputs[class * args.per_class];
                    write_pgm(
                        image,
                        DIAGRAM_SIDE,
                        DIAGRAM_SIDE,
                        cli.out_dir.join(format!("class{:02}.pgm", class + 1)),
                    )?;
                }
            }
            println!("wrote {}", data_path.display());
        }
        DataKindArg::Seasonal => {
            let series =
                gen_seasonal_series(args.months, args.columns, &SeasonalConfig::default(), cli.seed);
            let path = cli.out_dir.join("series.csv");
            write_timeseries_csv(&series, &path)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    ensure_out_dir(&cli.out_dir)?;
    let (inputs, targets) = read_dataset_csv(&args.data)?;
    let (ds, norm) = normalize_dataset(
        &inputs,
        &targets,
        (args.x_min, args.x_max),
        (args.y_min, args.y_max),
    )?;
    let test_ds = match &args.test_data {
        Some(path) => {
            let (ti, tt) = read_dataset_csv(path)?;
            Some(normalize_with(&norm, &ti, &tt)?)
        }
        None => None,
    };
    let mut sizes = vec![ds.input_dim()];
    sizes.extend(parse_hidden(&args.hidden)?);
    sizes.push(ds.output_dim());
    let topology = LayerTopology::new(sizes)?;

    let config = TrainConfig {
        lasso_weight: args.lasso,
        stabilizer: args.stabilizer,
        epochs: args.epochs,
        base_step: args.eta,
        seed: cli.seed.wrapping_add(3),
        sampling: parse_sampling(&args.sampling)?,
        x_bounds: (args.x_min, args.x_max),
        y_bounds: (args.y_min, args.y_max),
        trace_stride: None,
        eval_test: test_ds.is_some(),
    };
    let initial = init_params(&topology, cli.seed.wrapping_add(2));
    let (trained, trace) = train(initial, &ds, test_ds.as_ref(), &config)?;

    let model_path = cli.out_dir.join("model.json");
    save_model(&trained, Some(&norm), Provenance::new("cli-train", cli.seed), &model_path)?;
    let mut trace_csv = String::from("step,train_error,test_error\n");
    for e in &trace.entries {
        trace_csv.push_str(&format!(
            "{},{},{}\n",
            e.step,
            e.train_error,
            e.test_error.map(|g| g.to_string()).unwrap_or_default()
        ));
    }
    let trace_path = cli.out_dir.join("error_trace.csv");
    std::fs::write(&trace_path, trace_csv).map_err(|e| Error::io(&trace_path, e))?;
    let last = trace.entries.last().unwrap();
    println!(
        "trained {} steps, final training error {:.6}; wrote {}",
        last.step,
        last.train_error,
        model_path.display()
    );
    Ok(())
}

fn cmd_detect(cli: &Cli, args: &DetectArgs) -> Result<()> {
    ensure_out_dir(&cli.out_dir)?;
    let (params, _, _) = load_model(&args.model)?;
    let em = EmConfig {
        communities: args.communities,
        iterations: args.em_iters,
        restarts: args.restarts,
        seed: cli.seed.wrapping_add(4),
    };
    let depth = params.topology().depth();
    let mut assignments = Vec::with_capacity(depth);
    let adj_dir = cli.out_dir.join("adjacency");
    std::fs::create_dir_all(&adj_dir).map_err(|e| Error::io(&adj_dir, e))?;
    let run_layer = |layer: usize| -> Result<CommunityAssignment> {
        let adj = extract(&params, layer, args.xi)?;
        let labels = |n: usize, p: &str| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let focal = labels(adj.focal_units(), "u");
        if adj.input_side_units() > 0 {
            for (name, m) in [("in_pos", &adj.in_pos), ("in_neg", &adj.in_neg)] {
                let path = adj_dir.join(format!("layer{layer}_{name}.csv"));
                std::fs::write(
                    &path,
                    matrix_csv(&labels(adj.input_side_units(), "t"), &focal, &m.to_rows()),
                )
                .map_err(|e| Error::io(&path, e))?;
            }
        }
        if adj.output_side_units() > 0 {
            for (name, m) in [("out_pos", &adj.out_pos), ("out_neg", &adj.out_neg)] {
                let path = adj_dir.join(format!("layer{layer}_{name}.csv"));
                std::fs::write(
                    &path,
                    matrix_csv(&focal, &labels(adj.output_side_units(), "v"), &m.to_rows()),
                )
                .map_err(|e| Error::io(&path, e))?;
            }
        }
        detect(&adj.soften()?, &em)
    };
    let threads = cli.threads;
    let result: Result<()> = with_pool(threads, || {
        for layer in 1..=depth {
            let assignment = run_layer(layer)?;
            let q_path = cli.out_dir.join(format!("communities/layer{layer}_q.csv"));
            if let Some(parent) = q_path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let com_labels: Vec<String> =
                (1..=args.communities).map(|c| format!("com{c}")).collect();
            let focal: Vec<String> = (0..assignment.communities.len())
                .map(|i| format!("u{i}"))
                .collect();
            std::fs::write(
                &q_path,
                matrix_csv(&focal, &com_labels, &assignment.model.resp.to_rows()),
            )
            .map_err(|e| Error::io(&q_path, e))?;
            assignments.push(assignment);
        }
        Ok(())
    });
    result?;
    let file = AssignmentFile::from_assignments(&assignments);
    let path = cli.out_dir.join("communities.json");
    std::fs::write(&path, serde_json::to_string_pretty(&file).unwrap())
        .map_err(|e| Error::io(&path, e))?;
    for a in &assignments {
        println!(
            "layer {}: log-likelihood {:.4}, sizes {:?}",
            a.layer,
            a.expected_log_likelihood,
            (0..a.community_count())
                .map(|c| a.members(c).len())
                .collect::<Vec<_>>()
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_roles(cli: &Cli, args: &RolesArgs) -> Result<()> {
    ensure_out_dir(&cli.out_dir)?;
    let (params, norm, _) = load_model(&args.model)?;
    let norm = norm.ok_or_else(|| {
        Error::data("model carries no normalization info; retrain with the CLI or pipeline")
    })?;
    let (inputs, targets) = read_dataset_csv(&args.data)?;
    let ds = normalize_with(&norm, &inputs, &targets)?;

    let text = std::fs::read_to_string(&args.assignments)
        .map_err(|e| Error::io(&args.assignments, e))?;
    let file: AssignmentFile = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("{}: {e}", args.assignments.display())))?;
    let assignments: Vec<CommunityAssignment> = file
        .layers
        .iter()
        .map(|l| {
            let units = l.units.len();
            let mut resp = Matrix::zeros(units, l.communities);
            for u in &l.units {
                for (c, &v) in u.q_row.iter().enumerate() {
                    resp.set(u.unit_index, c, v);
                }
            }
            CommunityAssignment {
                layer: l.layer,
                communities: l.units.iter().map(|u| u.community - 1).collect(),
                expected_log_likelihood: l.expected_log_likelihood,
                model: CommunityModel {
                    prior: vec![1.0 / l.communities as f64; l.communities],
                    tau_in_pos: Matrix::zeros(l.communities, 0),
                    tau_in_neg: Matrix::zeros(l.communities, 0),
                    tau_out_pos: Matrix::zeros(l.communities, 0),
                    tau_out_neg: Matrix::zeros(l.communities, 0),
                    resp,
                },
            }
        })
        .collect();

    let report = with_pool(cli.threads, || role_report(&params, &ds, &assignments, "cli"))?;
    let roles_dir = cli.out_dir.join("roles");
    std::fs::create_dir_all(&roles_dir).map_err(|e| Error::io(&roles_dir, e))?;
    let in_labels: Vec<String> = (0..ds.input_dim()).map(|i| format!("x{i}")).collect();
    let out_labels: Vec<String> = (0..ds.output_dim()).map(|j| format!("y{j}")).collect();
    for layer in &report.layers {
        let com_labels: Vec<String> = (1..=layer.roles.len()).map(|c| format!("com{c}")).collect();
        if !layer.roles.is_empty() && layer.roles.iter().all(|r| r.input_effect.is_some()) {
            let rows: Vec<Vec<f64>> = layer
                .roles
                .iter()
                .map(|r| r.input_effect.clone().unwrap())
                .collect();
            let base = roles_dir.join(format!("layer{}_input_effect", layer.layer));
            std::fs::write(base.with_extension("csv"), matrix_csv(&com_labels, &in_labels, &rows))
                .map_err(|e| Error::io(&base, e))?;
            std::fs::write(
                base.with_extension("svg"),
                heatmap_svg(
                    &format!("Input-dimension effects on layer {} communities", layer.layer),
                    &com_labels,
                    &in_labels,
                    &rows,
                ),
            )
            .map_err(|e| Error::io(&base, e))?;
        }
        if !layer.roles.is_empty() && layer.roles.iter().all(|r| r.output_effect.is_some()) {
            let rows: Vec<Vec<f64>> = layer
                .roles
                .iter()
                .map(|r| r.output_effect.clone().unwrap())
                .collect();
            let base = roles_dir.join(format!("layer{}_output_effect", layer.layer));
            std::fs::write(base.with_extension("csv"), matrix_csv(&com_labels, &out_labels, &rows))
                .map_err(|e| Error::io(&base, e))?;
            std::fs::write(
                base.with_extension("svg"),
                heatmap_svg(
                    &format!("Layer {} community effects on output dimensions", layer.layer),
                    &com_labels,
                    &out_labels,
                    &rows,
                ),
            )
            .map_err(|e| Error::io(&base, e))?;
        }
    }
    let report_path = roles_dir.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| Error::io(&report_path, e))?;
    println!("wrote role report under {}", roles_dir.display());
    Ok(())
}

fn cmd_baseline(cli: &Cli, args: &BaselineArgs) -> Result<()> {
    let series = match &args.series {
        Some(path) => load_timeseries_csv(path)?,
        None => gen_seasonal_series(args.months, args.columns, &SeasonalConfig::default(), cli.seed),
    };
    let windows = parse_windows(&args.windows)?;
    let written = write_baseline_artifacts(&series, &windows, &cli.out_dir)?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads == 0 {
        return f();
    }
    let pool = rayon_pool(threads)?;
    pool.install(f)
}

fn rayon_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("could not build thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(args) => cmd_run(cli, args),
        Command::InitConfig(args) => cmd_init_config(cli, args),
        Command::GenData(args) => cmd_gen_data(cli, args),
        Command::Train(args) => with_pool(cli.threads, || cmd_train(cli, args)),
        Command::Detect(args) => cmd_detect(cli, args),
        Command::Roles(args) => cmd_roles(cli, args),
        Command::Baseline(args) => cmd_baseline(cli, args),
        Command::Render(args) => {
            let written = render_dir(&args.dir)?;
            for p in &written {
                println!("rendered {}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
