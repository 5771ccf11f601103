//! `geolag`: run the spatial-lag modeling pipeline or any one of its stages.
//!
//! Every subcommand except `bench-index` reads an optional JSON config and
//! applies its flags on top. Exit codes: 0 success, 2 configuration error,
//! 3 stage failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geolag::eval::{MetricsReport, SplitSpec};
use geolag::features::FeatureSetKind;
use geolag::ingest::SynthConfig;
use geolag::models::Task;
use geolag::pipeline::{
    run_pipeline, FileInputs, InputConfig, PipelineConfig, Run, Stage, OUTPUT_ROOT_ENV,
};
use geolag::spatial_index::{benchmark_index, DEFAULT_RADIUS_M};
use geolag::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_STAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "geolag", version, about = "Spatial-lag features and out-of-time model comparison for parcel sales")]
struct Cli {
    /// Log filter, e.g. `info` or `geolag=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Pipeline config JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory that relative run directories resolve against.
    #[arg(long, env = OUTPUT_ROOT_ENV)]
    output_root: Option<PathBuf>,
    /// Master seed; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Neighbor radius in meters; overrides `radius_m`.
    #[arg(long)]
    radius: Option<f64>,
    /// Grid cell side in meters; overrides `cell_size_m`.
    #[arg(long)]
    cell_size: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic parcel and sales city.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_parcels: Option<usize>,
        #[arg(long)]
        n_years: Option<usize>,
    },
    /// Join sales onto parcel-years and apply the global filters.
    Ingest {
        #[command(flatten)]
        common: Common,
        /// Parcel file; switches the input to files.
        #[arg(long, requires = "sales")]
        parcels: Option<PathBuf>,
        #[arg(long, requires = "parcels")]
        sales: Option<PathBuf>,
        #[arg(long, requires = "parcels")]
        aliases: Option<PathBuf>,
        /// Column mapping JSON for the parcel and sale files.
        #[arg(long, requires = "parcels")]
        mapping: Option<PathBuf>,
    },
    /// Build the fixed-radius neighbor graph over the panel.
    Index {
        #[command(flatten)]
        common: Common,
    },
    /// Build feature matrices from the panel (and graph, for spatial).
    Features {
        #[command(flatten)]
        common: Common,
        /// base, zone, spatial or all.
        #[arg(long, default_value = "all")]
        kind: String,
    },
    /// Fit a stage's models on the training years.
    Train {
        #[command(flatten)]
        common: Common,
        /// 1 (random forest screen) or 2 (full grid on the subset).
        #[arg(long, default_value = "2")]
        stage: Stage,
    },
    /// Score a stage's saved models on the validation and test years.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "2")]
        stage: Stage,
    },
    /// Time the grid search against brute force on uniform points.
    BenchIndex {
        /// Comma-separated ascending point counts.
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,50000")]
        n: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_RADIUS_M)]
        radius: f64,
        /// Grid cell side; the radius when omitted.
        #[arg(long)]
        cell_size: Option<f64>,
        /// Side of the square the points are drawn in, in meters.
        #[arg(long, default_value_t = 20_000.0)]
        extent: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Timing CSV path.
        #[arg(long, default_value = "bench_index.csv")]
        out: PathBuf,
    },
    /// Run every stage: synth or ingest, index, features, stage 1, stage 2.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(String),
    Stage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e.to_string()),
            other => Failure::Stage(other.to_string()),
        }
    }
}

/// Config file (or defaults) with the common flags applied, plus the run
/// directory.
fn load_config(common: &Common) -> Result<(PipelineConfig, PathBuf), Failure> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(r) = common.radius {
        config.radius_m = r;
    }
    if let Some(c) = common.cell_size {
        config.cell_size_m = Some(c);
    }
    let dir = config.resolve_output_dir(common.out.as_deref(), common.output_root.as_deref());
    Ok((config, dir))
}

fn open_run(config: PipelineConfig, dir: PathBuf) -> Result<Run, Failure> {
    Ok(Run::new(config, dir)?)
}

fn feature_kinds(kind: &str) -> Result<Vec<FeatureSetKind>, Failure> {
    if kind == "all" {
        return Ok(FeatureSetKind::ALL.to_vec());
    }
    kind.parse::<FeatureSetKind>()
        .map(|k| vec![k])
        .map_err(|e| Failure::Config(format!("--kind: {e}")))
}

fn print_report(title: &str, report: &MetricsReport) {
    let SplitSpec { train_start, train_end, validation_year, test_year } = report.split;
    println!("{title}: train {train_start}-{train_end}, validation {validation_year}, test {test_year}");
    println!("{:<15} {:<8} {:<14} {:>12} {:>12}", "task", "features", "learner", "validation", "test");
    for c in &report.cells {
        let metric = |p: &Option<geolag::eval::PartitionMetrics>| {
            p.as_ref()
                .and_then(|m| m.headline(c.task))
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into())
        };
        let name = match c.task {
            Task::Classification => "auc",
            Task::Regression => "rmse",
        };
        println!(
            "{:<15} {:<8} {:<14} {:>12} {:>12}{}",
            format!("{} ({name})", c.task),
            c.feature_set.to_string(),
            c.learner.to_string(),
            metric(&c.validation),
            metric(&c.test),
            c.error.as_ref().map(|e| format!("  failed: {e}")).unwrap_or_default()
        );
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Synth { common, n_parcels, n_years } => {
            let (mut config, dir) = load_config(&common)?;
            if n_parcels.is_some() || n_years.is_some() {
                let mut synth = match config.input {
                    InputConfig::Synth(s) => s,
                    InputConfig::Files(_) => SynthConfig::default(),
                };
                synth.n_parcels = n_parcels.unwrap_or(synth.n_parcels);
                synth.n_years = n_years.unwrap_or(synth.n_years);
                config.input = InputConfig::Synth(synth);
            }
            let run = open_run(config, dir)?;
            let city = run.synth()?;
            println!(
                "wrote {} parcel rows and {} sales under {}",
                city.parcels.len(),
                city.sales.len(),
                run.layout.root().display()
            );
        }
        Command::Ingest { common, parcels, sales, aliases, mapping } => {
            let (mut config, dir) = load_config(&common)?;
            if let (Some(parcels), Some(sales)) = (parcels, sales) {
                config.input = InputConfig::Files(FileInputs { parcels, sales, aliases, mapping });
            }
            let run = open_run(config, dir)?;
            let panel = run.ingest(None)?;
            println!("wrote {} panel rows to {}", panel.len(), run.layout.panel().display());
        }
        Command::Index { common } => {
            let (config, dir) = load_config(&common)?;
            let run = open_run(config, dir)?;
            let panel = run.load_panel()?;
            let graph = run.index(&panel)?;
            println!("wrote {} edges to {}", graph.edge_count(), run.layout.graph().display());
        }
        Command::Features { common, kind } => {
            let kinds = feature_kinds(&kind)?;
            let (config, dir) = load_config(&common)?;
            let run = open_run(config, dir)?;
            let panel = run.load_panel()?;
            let graph = if kinds.contains(&FeatureSetKind::Spatial) {
                Some(run.load_graph()?)
            } else {
                None
            };
            for k in kinds {
                let m = run.features(k, &panel, graph.as_ref())?;
                println!("{k}: {} rows x {} columns -> {}", m.n_rows(), m.n_cols(), run.layout.features(k).display());
            }
        }
        Command::Train { common, stage } => {
            let (config, dir) = load_config(&common)?;
            let run = open_run(config, dir)?;
            let data = stage_data(&run, stage)?;
            let cells = run.train(stage, &data)?;
            let failed = cells.iter().filter(|c| c.model.is_err()).count();
            println!("{}: fitted {} cells, {failed} failed", stage.name(), cells.len() - failed);
        }
        Command::Evaluate { common, stage } => {
            let (config, dir) = load_config(&common)?;
            let run = open_run(config, dir)?;
            let data = stage_data(&run, stage)?;
            let cells = run.load_trained(stage)?;
            let comparison = run.evaluate(stage, cells, &data)?;
            print_report(stage.name(), &comparison.report);
        }
        Command::BenchIndex { n, radius, cell_size, extent, seed, out } => {
            if !(radius > 0.0 && extent > 0.0) {
                return Err(Failure::Config("--radius and --extent must be positive".into()));
            }
            let table = benchmark_index(&n, radius, cell_size.unwrap_or(radius), extent, seed)?;
            table.write_csv(&out)?;
            for r in &table.rows {
                println!("n={:<8} grid {:>10.4}s  brute {:>10.4}s  edges {}", r.n, r.grid_seconds, r.brute_seconds, r.edges);
            }
            println!("wrote {}", out.display());
        }
        Command::Pipeline { common } => {
            let (config, dir) = load_config(&common)?;
            let summary = run_pipeline(config, &dir)?;
            if let Some(r) = &summary.stage1 {
                print_report("stage1", r);
            }
            print_report("stage2", &summary.stage2);
            println!("artifacts in {} (config {})", summary.root.display(), &summary.config_hash[..12]);
        }
    }
    Ok(())
}

fn stage_data(run: &Run, stage: Stage) -> Result<geolag::pipeline::StageData, Failure> {
    let panel = run.load_panel()?;
    let matrices = FeatureSetKind::ALL
        .iter()
        .map(|&k| run.load_features(k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(run.stage_data(stage, &panel, &matrices)?)
}

fn init_logging(filter: &str) {
    let _ = env_logger::Builder::new()
        .parse_filters(filter)
        .format_timestamp(None)
        .try_init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli.log);
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Stage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_STAGE)
        }
    }
}
