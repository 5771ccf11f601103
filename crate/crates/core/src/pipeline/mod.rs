//! Two-stage batch driver: synth or ingest, index, features, then train and
//! evaluate a random-forest screen over the full panel (stage 1) and the
//! full learner grid over a category and borough subset (stage 2).
//!
//! Each stage reads its inputs from and writes its outputs to a fixed
//! [`Layout`] under the run directory, so any stage can be rerun alone.
//! JSON artifacts are wrapped in [`Stamped`] with the config hash and seed;
//! CSV artifacts are listed in the run manifest, which is stamped the same
//! way. Wall-clock times appear only in `runtime_seconds` report fields
//! and in `timings.json`.

mod config;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use config::{
    FileInputs, InputConfig, PipelineConfig, Stage1Config, DEFAULT_OUTPUT_DIR, OUTPUT_ROOT_ENV,
};

use crate::error::{Error, Result};
use crate::eval::{
    rank_by_segment, score_cells, train_cells, write_roc_points, CellStatus, CompareOptions,
    Comparison, MetricsReport, ModelPredictions, RankingTable, SplitSpec, TrainedCell,
    TrainedCellRecord,
};
use crate::features::{
    build_features, make_labels, ColumnManifest, FeatureMatrix, FeatureSetKind, Labels,
};
use crate::ingest::io::{
    read_aliases, read_json, read_panel, read_parcels, read_sales, write_aliases, write_json,
    write_panel, write_parcels, write_sales, ColumnMapping,
};
use crate::ingest::{
    build_panel, panel_years, subset_stage2, synth_city, AliasTable, IngestReport,
    PropertyYearRecord, SynthCity,
};
use crate::models::{LearnerKind, Task, TrainedModel, MODEL_FORMAT_VERSION};
use crate::spatial_index::{graph_for_panel, GridStats, KeyedGraph};

pub const CRATE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Random forest on every feature set over the full panel.
    Stage1,
    /// Every learner on every feature set over the subset panel.
    Stage2,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Stage1 => "stage1",
            Stage::Stage2 => "stage2",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "stage1" => Ok(Stage::Stage1),
            "2" | "stage2" => Ok(Stage::Stage2),
            other => Err(Error::InvalidInput(format!("unknown stage {other:?}, expected 1 or 2"))),
        }
    }
}

/// Artifact paths under a run directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn parcels(&self) -> PathBuf {
        self.root.join("raw").join("parcels.csv")
    }

    pub fn sales(&self) -> PathBuf {
        self.root.join("raw").join("sales.csv")
    }

    pub fn aliases(&self) -> PathBuf {
        self.root.join("raw").join("aliases.csv")
    }

    pub fn synth_summary(&self) -> PathBuf {
        self.root.join("raw").join("synth.json")
    }

    pub fn panel(&self) -> PathBuf {
        self.root.join("panel.csv")
    }

    pub fn ingest_report(&self) -> PathBuf {
        self.root.join("ingest_report.json")
    }

    pub fn graph(&self) -> PathBuf {
        self.root.join("graph.csv")
    }

    pub fn graph_meta(&self) -> PathBuf {
        self.root.join("graph.json")
    }

    pub fn features(&self, kind: FeatureSetKind) -> PathBuf {
        self.root.join("features").join(format!("{kind}.csv"))
    }

    pub fn feature_manifest(&self, kind: FeatureSetKind) -> PathBuf {
        self.root.join("features").join(format!("{kind}.json"))
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.root.join(stage.name())
    }

    pub fn model(&self, stage: Stage, task: Task, set: FeatureSetKind, learner: LearnerKind) -> PathBuf {
        self.stage_dir(stage)
            .join("models")
            .join(format!("{}.json", TrainedCell::file_stem(task, set, learner)))
    }

    pub fn train_summary(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join("train_summary.json")
    }

    pub fn metrics_json(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join("metrics.json")
    }

    pub fn metrics_csv(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join("metrics.csv")
    }

    pub fn roc(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join("roc.csv")
    }

    pub fn rankings(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join("rankings.json")
    }

    pub fn importance(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join("importance.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn timings(&self) -> PathBuf {
        self.root.join("timings.json")
    }

    pub fn failure_marker(&self) -> PathBuf {
        self.root.join("FAILED")
    }
}

/// A JSON artifact body tagged with the run identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub data: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub parcel_rows: usize,
    pub sales: usize,
    pub aliases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub radius_m: f64,
    pub cell_size_m: f64,
    pub points: usize,
    pub edges: usize,
    pub stats: GridStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub task: Task,
    pub feature_set: FeatureSetKind,
    pub learner: LearnerKind,
    pub all_zero: bool,
    /// `(column, scaled score)` from most to least important.
    pub ranked: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: RunStatus,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub radius_m: f64,
    pub cell_size_m: f64,
    pub split: Option<SplitSpec>,
    pub model_format_version: u32,
    pub stages_completed: Vec<String>,
    /// Files present under the run directory, relative and sorted.
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Rows, labels and segments a stage models.
#[derive(Debug, Clone)]
pub struct StageData {
    pub matrices: Vec<FeatureMatrix>,
    pub labels: Labels,
    /// `{borough}_{category}` per row.
    pub segments: Vec<String>,
    pub spec: SplitSpec,
}

/// What [`run_pipeline`] hands back besides the files it wrote.
#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub root: PathBuf,
    pub config_hash: String,
    pub stage1: Option<MetricsReport>,
    pub stage2: MetricsReport,
}

fn missing(path: PathBuf, hint: &str) -> Error {
    Error::MissingArtifact {
        path,
        hint: hint.to_string(),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(())
}

/// Stage runner bound to one validated config and run directory.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: PipelineConfig,
    pub hash: String,
    pub layout: Layout,
}

impl Run {
    pub fn new(config: PipelineConfig, root: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(root);
        std::fs::create_dir_all(layout.root()).map_err(|e| Error::io(layout.root(), e))?;
        Ok(Run {
            hash: config.hash(),
            config,
            layout,
        })
    }

    fn write_stamped<T: Serialize>(&self, path: &Path, data: T) -> Result<()> {
        ensure_parent(path)?;
        write_json(
            path,
            &Stamped {
                config_hash: self.hash.clone(),
                seed: self.config.seed,
                version: CRATE_VERSION.to_string(),
                data,
            },
        )
    }

    /// Reads a stamped artifact; one written under another config is
    /// accepted with a warning.
    fn read_stamped<T: DeserializeOwned>(&self, path: &Path, hint: &str) -> Result<T> {
        if !path.exists() {
            return Err(missing(path.to_path_buf(), hint));
        }
        let s: Stamped<T> = read_json(path)?;
        if s.config_hash != self.hash {
            log::warn!("{} was written under config {}", path.display(), s.config_hash);
        }
        Ok(s.data)
    }

    /// Generates the synthetic city and writes the raw input files.
    pub fn synth(&self) -> Result<SynthCity> {
        let InputConfig::Synth(cfg) = &self.config.input else {
            return Err(Error::config("input", "the synth stage needs a synthetic input"));
        };
        let city = synth_city(cfg, self.config.seed)?;
        ensure_parent(&self.layout.parcels())?;
        write_parcels(&self.layout.parcels(), &city.parcels)?;
        write_sales(&self.layout.sales(), &city.sales)?;
        write_aliases(&self.layout.aliases(), &city.aliases)?;
        self.write_stamped(
            &self.layout.synth_summary(),
            SynthSummary {
                parcel_rows: city.parcels.len(),
                sales: city.sales.len(),
                aliases: city.aliases.len(),
            },
        )?;
        Ok(city)
    }

    fn read_inputs(&self) -> Result<SynthCity> {
        let (parcels, sales, aliases, mapping) = match &self.config.input {
            InputConfig::Synth(_) => {
                let hint = "run `synth` first";
                for p in [self.layout.parcels(), self.layout.sales(), self.layout.aliases()] {
                    if !p.exists() {
                        return Err(missing(p, hint));
                    }
                }
                (self.layout.parcels(), self.layout.sales(), Some(self.layout.aliases()), None)
            }
            InputConfig::Files(f) => (f.parcels.clone(), f.sales.clone(), f.aliases.clone(), f.mapping.clone()),
        };
        let mapping = match mapping {
            Some(p) => ColumnMapping::load(&p)?,
            None => ColumnMapping::default(),
        };
        Ok(SynthCity {
            parcels: read_parcels(&parcels, &mapping)?,
            sales: read_sales(&sales, &mapping)?,
            aliases: match aliases {
                Some(p) => read_aliases(&p)?,
                None => AliasTable::new(),
            },
        })
    }

    /// Joins and filters the inputs into the panel. Uses `city` when given,
    /// otherwise reads the configured input files.
    pub fn ingest(&self, city: Option<&SynthCity>) -> Result<Vec<PropertyYearRecord>> {
        let owned;
        let city = match city {
            Some(c) => c,
            None => {
                owned = self.read_inputs()?;
                &owned
            }
        };
        let (panel, report): (Vec<PropertyYearRecord>, IngestReport) =
            build_panel(&city.parcels, &city.sales, &city.aliases);
        log::info!(
            "panel: {} rows, {} unmatched sales, retention {:.3}",
            panel.len(),
            report.join.unmatched_sales,
            report.filter.retention()
        );
        write_panel(&self.layout.panel(), &panel)?;
        self.write_stamped(&self.layout.ingest_report(), report)?;
        Ok(panel)
    }

    pub fn load_panel(&self) -> Result<Vec<PropertyYearRecord>> {
        let path = self.layout.panel();
        if !path.exists() {
            return Err(missing(path, "run `ingest` first"));
        }
        read_panel(&path)
    }

    /// Builds and writes the neighbor graph over the panel's parcels.
    pub fn index(&self, panel: &[PropertyYearRecord]) -> Result<KeyedGraph> {
        let cell = self.config.cell_size();
        let (graph, stats) = graph_for_panel(panel, self.config.radius_m, cell)?;
        graph.write_csv(&self.layout.graph())?;
        let points = crate::spatial_index::parcel_locations(panel).len();
        self.write_stamped(
            &self.layout.graph_meta(),
            GraphMeta {
                radius_m: self.config.radius_m,
                cell_size_m: cell,
                points,
                edges: graph.edge_count(),
                stats,
            },
        )?;
        log::info!("graph: {points} points, {} edges", graph.edge_count());
        Ok(graph)
    }

    pub fn load_graph(&self) -> Result<KeyedGraph> {
        let hint = "run `index` first to build the neighbor graph";
        let meta: GraphMeta = self.read_stamped(&self.layout.graph_meta(), hint)?;
        if meta.radius_m != self.config.radius_m {
            return Err(Error::InvalidInput(format!(
                "graph was built with radius {} m but the config asks for {} m; rerun `index`",
                meta.radius_m, self.config.radius_m
            )));
        }
        let path = self.layout.graph();
        if !path.exists() {
            return Err(missing(path, hint));
        }
        KeyedGraph::read_csv(&path, meta.radius_m)
    }

    /// Builds and writes one feature matrix. Spatial features need `graph`.
    pub fn features(
        &self,
        kind: FeatureSetKind,
        panel: &[PropertyYearRecord],
        graph: Option<&KeyedGraph>,
    ) -> Result<FeatureMatrix> {
        let m = build_features(kind, panel, graph)?;
        let path = self.layout.features(kind);
        ensure_parent(&path)?;
        m.write_csv(&path)?;
        self.write_stamped(&self.layout.feature_manifest(kind), m.manifest())?;
        log::info!("{kind} features: {} rows x {} columns", m.n_rows(), m.n_cols());
        Ok(m)
    }

    pub fn load_features(&self, kind: FeatureSetKind) -> Result<FeatureMatrix> {
        let hint = format!("run `features --kind {kind}` first");
        let manifest: ColumnManifest = self.read_stamped(&self.layout.feature_manifest(kind), &hint)?;
        let path = self.layout.features(kind);
        if !path.exists() {
            return Err(missing(path, &hint));
        }
        FeatureMatrix::read_csv(&path, &manifest)
    }

    /// Selects the stage's rows. Features are always computed on the full
    /// panel so stage-2 spatial lags still see every neighbor.
    pub fn stage_data(
        &self,
        stage: Stage,
        panel: &[PropertyYearRecord],
        matrices: &[FeatureMatrix],
    ) -> Result<StageData> {
        let spec = match self.config.split {
            Some(s) => s,
            None => SplitSpec::trailing(&panel_years(panel))?,
        };
        let rows: Vec<PropertyYearRecord> = match stage {
            Stage::Stage1 => panel.to_vec(),
            Stage::Stage2 => subset_stage2(panel, &self.config.stage2)?,
        };
        let keep: BTreeSet<(crate::ingest::BblKey, i32)> = rows.iter().map(|r| r.key()).collect();
        let matrices: Vec<FeatureMatrix> = matrices
            .iter()
            .map(|m| m.filter_rows(|k| keep.contains(&(k.bbl, k.year))))
            .collect();
        let segments = rows
            .iter()
            .map(|r| format!("{}_{}", r.parcel.borough, r.parcel.category().unwrap_or('?')))
            .collect();
        Ok(StageData {
            matrices,
            labels: make_labels(&rows),
            segments,
            spec,
        })
    }

    fn stage_grid(&self, stage: Stage) -> (&'static [LearnerKind], crate::models::LearnerConfig) {
        match stage {
            Stage::Stage1 => (&[LearnerKind::RandomForest], self.config.stage1_learners()),
            Stage::Stage2 => (&LearnerKind::ALL, self.config.learners.clone()),
        }
    }

    /// Fits the stage's cells on the training years and writes the models
    /// plus a summary that records failed cells.
    pub fn train(&self, stage: Stage, data: &StageData) -> Result<Vec<TrainedCell>> {
        let (learners, config) = self.stage_grid(stage);
        let opts = CompareOptions {
            learners,
            tasks: &Task::ALL,
            config: &config,
            spec: data.spec,
            seed: self.config.seed,
            importance: self.config.importance,
        };
        let cells = train_cells(&data.matrices, &data.labels, &opts)?;
        for cell in &cells {
            if let Ok(model) = &cell.model {
                let path = self.layout.model(stage, cell.task, cell.feature_set, cell.learner);
                ensure_parent(&path)?;
                model.save(&path)?;
            }
        }
        let records: Vec<TrainedCellRecord> = cells.iter().map(TrainedCell::record).collect();
        self.write_stamped(&self.layout.train_summary(stage), records)?;
        Ok(cells)
    }

    pub fn load_trained(&self, stage: Stage) -> Result<Vec<TrainedCell>> {
        let hint = format!("run `train --stage {}` first", &stage.name()[5..]);
        let records: Vec<TrainedCellRecord> = self.read_stamped(&self.layout.train_summary(stage), &hint)?;
        records
            .into_iter()
            .map(|r| {
                let model = match r.status {
                    CellStatus::Ok => {
                        let path = self.layout.model(stage, r.task, r.feature_set, r.learner);
                        if !path.exists() {
                            return Err(missing(path, &hint));
                        }
                        Ok(TrainedModel::load(&path)?)
                    }
                    CellStatus::Failed => Err(r.error.clone().unwrap_or_default()),
                };
                Ok(TrainedCell {
                    task: r.task,
                    feature_set: r.feature_set,
                    learner: r.learner,
                    model,
                    runtime_seconds: r.runtime_seconds,
                })
            })
            .collect()
    }

    /// Scores trained cells and writes the metric report, ROC points,
    /// segment rankings and importances.
    pub fn evaluate(&self, stage: Stage, cells: Vec<TrainedCell>, data: &StageData) -> Result<Comparison> {
        let comparison = score_cells(
            cells,
            &data.matrices,
            &data.labels,
            data.spec,
            self.config.seed,
            self.config.importance,
        )?;
        self.write_stamped(&self.layout.metrics_json(stage), &comparison.report)?;
        comparison.report.write_csv(&self.layout.metrics_csv(stage))?;
        write_roc_points(&self.layout.roc(stage), &comparison, &data.labels)?;
        self.write_stamped(&self.layout.rankings(stage), segment_rankings(stage, &comparison, data)?)?;
        if self.config.importance {
            let entries: Vec<ImportanceEntry> = comparison
                .report
                .cells
                .iter()
                .zip(&comparison.outcomes)
                .filter_map(|(c, o)| {
                    let imp = o.importance.as_ref()?;
                    Some(ImportanceEntry {
                        task: c.task,
                        feature_set: c.feature_set,
                        learner: c.learner,
                        all_zero: imp.all_zero,
                        ranked: imp.ranked(),
                    })
                })
                .collect();
            self.write_stamped(&self.layout.importance(stage), entries)?;
        }
        Ok(comparison)
    }

    /// Relative paths of every file under the run directory, sorted.
    fn artifact_list(&self) -> Result<Vec<String>> {
        fn walk(dir: &Path, root: &Path, out: &mut Vec<String>) -> Result<()> {
            let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
            for entry in entries {
                let entry = entry.map_err(|e| Error::io(dir, e))?;
                let path = entry.path();
                if path.is_dir() {
                    walk(&path, root, out)?;
                } else if let Ok(rel) = path.strip_prefix(root) {
                    out.push(rel.to_string_lossy().replace('\\', "/"));
                }
            }
            Ok(())
        }
        let mut out = Vec::new();
        walk(self.layout.root(), self.layout.root(), &mut out)?;
        out.retain(|p| p != "manifest.json");
        out.sort();
        Ok(out)
    }

    pub fn write_manifest(
        &self,
        status: RunStatus,
        failed_stage: Option<&str>,
        error: Option<String>,
        completed: &[String],
    ) -> Result<()> {
        let manifest = RunManifest {
            status,
            failed_stage: failed_stage.map(str::to_string),
            error,
            radius_m: self.config.radius_m,
            cell_size_m: self.config.cell_size(),
            split: self.config.split,
            model_format_version: MODEL_FORMAT_VERSION,
            stages_completed: completed.to_vec(),
            artifacts: self.artifact_list()?,
        };
        self.write_stamped(&self.layout.manifest(), manifest)
    }
}

/// Ranks the stage's models within each borough and category segment on
/// the test year. Stage-1 models are named by feature set, stage-2 models
/// by feature set and learner.
fn segment_rankings(stage: Stage, comparison: &Comparison, data: &StageData) -> Result<Vec<RankingTable>> {
    let mut tables = Vec::new();
    for task in Task::ALL {
        let predictions: Vec<ModelPredictions> = comparison
            .report
            .cells
            .iter()
            .zip(&comparison.outcomes)
            .filter(|(c, _)| c.task == task && c.status == CellStatus::Ok)
            .map(|(c, o)| ModelPredictions {
                name: match stage {
                    Stage::Stage1 => c.feature_set.to_string(),
                    Stage::Stage2 => format!("{}_{}", c.feature_set, c.learner),
                },
                scores: o.predictions.clone(),
            })
            .collect();
        if predictions.len() < 2 {
            log::warn!("{} {task}: fewer than two fitted models, no ranking", stage.name());
            continue;
        }
        let observed = match task {
            Task::Classification => &data.labels.sold,
            Task::Regression => &data.labels.sale_psf,
        };
        tables.push(rank_by_segment(
            task,
            &predictions,
            observed,
            comparison.partition.test.indices(),
            &data.segments,
        )?);
    }
    Ok(tables)
}

/// Runs every stage in order under `root`. On failure the artifacts written
/// so far are kept, a `FAILED` marker names the stage, and the error is
/// returned.
pub fn run_pipeline(config: PipelineConfig, root: impl Into<PathBuf>) -> Result<PipelineSummary> {
    let run = Run::new(config, root)?;
    let marker = run.layout.failure_marker();
    if marker.exists() {
        std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    let mut completed: Vec<String> = Vec::new();
    let mut timings: Vec<StageTiming> = Vec::new();
    let result = drive(&run, &mut completed, &mut timings);
    write_json(&run.layout.timings(), &timings)?;
    match result {
        Ok(summary) => {
            run.write_manifest(RunStatus::Ok, None, None, &completed)?;
            Ok(summary)
        }
        Err((stage, e)) => {
            log::error!("stage {stage} failed: {e}");
            std::fs::write(&marker, format!("stage: {stage}\nerror: {e}\n"))
                .map_err(|io| Error::io(&marker, io))?;
            run.write_manifest(RunStatus::Failed, Some(&stage), Some(e.to_string()), &completed)?;
            Err(e)
        }
    }
}

fn drive(
    run: &Run,
    completed: &mut Vec<String>,
    timings: &mut Vec<StageTiming>,
) -> std::result::Result<PipelineSummary, (String, Error)> {
    fn step<T>(
        name: &str,
        completed: &mut Vec<String>,
        timings: &mut Vec<StageTiming>,
        f: impl FnOnce() -> Result<T>,
    ) -> std::result::Result<T, (String, Error)> {
        let started = Instant::now();
        let out = f().map_err(|e| (name.to_string(), e))?;
        timings.push(StageTiming {
            stage: name.to_string(),
            seconds: started.elapsed().as_secs_f64(),
        });
        completed.push(name.to_string());
        Ok(out)
    }

    let city = match run.config.input {
        InputConfig::Synth(_) => Some(step("synth", completed, timings, || run.synth())?),
        InputConfig::Files(_) => None,
    };
    let panel = step("ingest", completed, timings, || run.ingest(city.as_ref()))?;
    drop(city);
    let graph = step("index", completed, timings, || run.index(&panel))?;
    let matrices = step("features", completed, timings, || {
        FeatureSetKind::ALL
            .iter()
            .map(|&k| run.features(k, &panel, Some(&graph)))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut stage1 = None;
    if run.config.stage1.enabled {
        let data = step("stage1_select", completed, timings, || {
            run.stage_data(Stage::Stage1, &panel, &matrices)
        })?;
        let cells = step("stage1_train", completed, timings, || run.train(Stage::Stage1, &data))?;
        let c = step("stage1_evaluate", completed, timings, || {
            run.evaluate(Stage::Stage1, cells, &data)
        })?;
        stage1 = Some(c.report);
    }
    let data = step("stage2_select", completed, timings, || {
        run.stage_data(Stage::Stage2, &panel, &matrices)
    })?;
    let cells = step("stage2_train", completed, timings, || run.train(Stage::Stage2, &data))?;
    let c = step("stage2_evaluate", completed, timings, || {
        run.evaluate(Stage::Stage2, cells, &data)
    })?;
    Ok(PipelineSummary {
        root: run.layout.root().to_path_buf(),
        config_hash: run.hash.clone(),
        stage1,
        stage2: c.report,
    })
}
