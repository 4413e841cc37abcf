//! Suite configuration, experiment records and the resumable runner.

use std::collections::{BTreeMap, HashSet};
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::methods::{fit_method, inapplicable_reason, Method};
use super::metrics::{performance_profiles, rrmse, wilcoxon_one_sided, PerformanceProfile, Score};
use super::metrics::{pareto_points, ParetoPoint};
use super::svg;
use crate::datasets::{generate_replicate, DatasetName, DatasetSpec};
use crate::error::{Error, Result};
use crate::gp::FitOptions;
use crate::optimize::{OptMode, OptSettings};

/// Significance level used to merge AUC-adjacent methods.
pub const WILCOXON_ALPHA: f64 = 0.05;

pub const RECORDS_FILE: &str = "records.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub method: String,
    pub dataset: String,
    pub train_size: usize,
    pub replicate: usize,
    pub rrmse: f64,
    pub fit_seconds: f64,
    pub n_params: usize,
    pub opt_mode: OptMode,
    pub status: String,
}

pub const STATUS_OK: &str = "ok";

impl ExperimentRecord {
    pub fn key(&self) -> RecordKey {
        (
            self.method.clone(),
            self.dataset.clone(),
            self.train_size,
            self.replicate,
            self.opt_mode,
        )
    }
}

pub type RecordKey = (String, String, usize, usize, OptMode);

pub fn write_records(path: impl AsRef<Path>, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSection {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Added to every dataset's base seed.
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_replicates() -> usize {
    50
}
fn default_jobs() -> usize {
    1
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            output_dir: default_output_dir(),
            replicates: default_replicates(),
            jobs: default_jobs(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default)]
    pub mode: Option<OptMode>,
    pub n_restarts: Option<usize>,
    pub max_fun_evals: Option<usize>,
    pub max_iters: Option<usize>,
    pub tolerance: Option<f64>,
    pub line_search_steps: Option<usize>,
}

impl OptimizerSection {
    pub fn settings(&self) -> OptSettings {
        let mut s = OptSettings::for_mode(self.mode.unwrap_or(OptMode::Long));
        if let Some(n) = self.n_restarts {
            s.n_restarts = n;
        }
        if self.max_fun_evals.is_some() {
            s.max_fun_evals = self.max_fun_evals;
        }
        if let Some(n) = self.max_iters {
            s.max_iters = n;
        }
        if let Some(t) = self.tolerance {
            s.tolerance = t;
        }
        if let Some(n) = self.line_search_steps {
            s.line_search_steps = n;
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetsSection {
    pub names: Vec<String>,
    #[serde(default = "default_sizes")]
    pub samples_per_level: Vec<usize>,
}

fn default_sizes() -> Vec<usize> {
    vec![3, 6, 9, 12, 15]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodsSection {
    pub names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub suite: SuiteSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    pub datasets: DatasetsSection,
    pub methods: MethodsSection,
}

/// One unit of work.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Experiment {
    pub method: Method,
    pub dataset: DatasetName,
    pub samples_per_level: usize,
    pub replicate: usize,
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.suite.replicates == 0 || self.suite.jobs == 0 {
            return Err(Error::Config("replicates and jobs must be positive".into()));
        }
        if self.datasets.names.is_empty() || self.methods.names.is_empty() {
            return Err(Error::Config("at least one dataset and one method are required".into()));
        }
        if self.datasets.samples_per_level.is_empty() {
            return Err(Error::Config("samples_per_level is empty".into()));
        }
        self.dataset_names()?;
        self.method_list()?;
        self.settings().validate()
    }

    pub fn settings(&self) -> OptSettings {
        self.optimizer.settings()
    }

    pub fn dataset_names(&self) -> Result<Vec<DatasetName>> {
        self.datasets.names.iter().map(|n| n.parse()).collect()
    }

    pub fn method_list(&self) -> Result<Vec<Method>> {
        self.methods.names.iter().map(|n| n.parse()).collect()
    }

    /// All experiments in a fixed order. Sizes a dataset does not allow are
    /// skipped.
    pub fn experiments(&self) -> Result<Vec<Experiment>> {
        let mut out = Vec::new();
        for dataset in self.dataset_names()? {
            for &spl in &self.datasets.samples_per_level {
                if !dataset.allowed_sizes().contains(&spl) {
                    continue;
                }
                for replicate in 0..self.suite.replicates {
                    for method in self.method_list()? {
                        out.push(Experiment {
                            method,
                            dataset,
                            samples_per_level: spl,
                            replicate,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn dataset_spec(&self, e: &Experiment) -> DatasetSpec {
        DatasetSpec::new(
            e.dataset,
            e.samples_per_level,
            e.dataset.base_seed() + self.suite.seed + e.replicate as u64,
        )
    }
}

/// Runs one experiment. Failures become +∞ rows, never errors.
pub fn run_experiment(e: &Experiment, spec: &DatasetSpec, settings: &OptSettings) -> ExperimentRecord {
    let mut rec = ExperimentRecord {
        method: e.method.to_string(),
        dataset: spec.effective_name().to_string(),
        train_size: 0,
        replicate: e.replicate,
        rrmse: f64::INFINITY,
        fit_seconds: 0.0,
        n_params: 0,
        opt_mode: settings.mode,
        status: STATUS_OK.into(),
    };
    let (train, test) = match generate_replicate(spec) {
        Ok(d) => d,
        Err(err) => {
            rec.status = format!("failed: {err}");
            return rec;
        }
    };
    rec.train_size = train.len();
    let groups = spec.effective_name().true_groups();
    if let Some(reason) = inapplicable_reason(e.method, &train.level_counts, groups.is_some()) {
        rec.status = format!("inapplicable: {reason}");
        return rec;
    }
    let options = FitOptions::new(settings.clone(), spec.seed);
    let outcome = fit_method(e.method, &train, groups.as_deref(), &options).and_then(|f| {
        let pred = f.predict(&test)?;
        Ok((rrmse(&test.y, &pred)?, f))
    });
    match outcome {
        Ok((score, f)) => {
            rec.rrmse = score;
            rec.fit_seconds = f.fit_seconds();
            rec.n_params = f.model.config.n_params();
        }
        Err(err) => rec.status = format!("failed: {err}"),
    }
    rec
}

/// Output files of a suite run, relative to its output directory.
pub const PROFILE_CSV: &str = "profiles.csv";
pub const PROFILE_SVG: &str = "profiles.svg";
pub const TIME_PROFILE_CSV: &str = "profiles_time.csv";
pub const RANKING_CSV: &str = "ranking.csv";
pub const PARETO_CSV: &str = "pareto.csv";
pub const PARETO_SVG: &str = "pareto.svg";

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub records: Vec<ExperimentRecord>,
    /// Experiments actually run (not resumed).
    pub executed: usize,
}

/// Runs every missing experiment of `config`, appending to the records CSV
/// in the output directory, then writes aggregates.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteOutcome> {
    config.validate()?;
    let dir = &config.suite.output_dir;
    std::fs::create_dir_all(dir)?;
    let path = dir.join(RECORDS_FILE);
    let existing = if path.exists() { read_records(&path)? } else { Vec::new() };
    let settings = config.settings();
    let done: HashSet<RecordKey> = existing.iter().map(ExperimentRecord::key).collect();
    let todo: Vec<Experiment> = config
        .experiments()?
        .into_iter()
        .filter(|e| {
            let spec = config.dataset_spec(e);
            let n = expected_train_size(&spec);
            !done.contains(&(
                e.method.to_string(),
                spec.effective_name().to_string(),
                n,
                e.replicate,
                settings.mode,
            ))
        })
        .collect();

    let file = OpenOptions::new().create(true).append(true).open(&path)?;
    let fresh = file.metadata()?.len() == 0;
    let writer = Mutex::new(
        csv::WriterBuilder::new()
            .has_headers(fresh)
            .from_writer(file),
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.suite.jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let new: Vec<ExperimentRecord> = pool.install(|| {
        todo.par_iter()
            .map(|e| {
                let rec = run_experiment(e, &config.dataset_spec(e), &settings);
                let mut w = writer.lock().expect("record writer poisoned");
                w.serialize(&rec)?;
                w.flush()?;
                Ok(rec)
            })
            .collect::<Result<_>>()
    })?;
    drop(writer);

    let mut records = existing;
    let executed = new.len();
    records.extend(new);
    write_aggregates(&records, dir)?;
    Ok(SuiteOutcome { records, executed })
}

/// Training-set size of a dataset spec, computed without generating data.
pub fn expected_train_size(spec: &DatasetSpec) -> usize {
    let tuples: usize = spec.name.function().level_counts().iter().product();
    spec.samples_per_level * tuples
}

/// Profile label of a record: the method id, suffixed with the mode when
/// the records mix optimizer modes.
fn labeler(records: &[ExperimentRecord]) -> impl Fn(&ExperimentRecord) -> String {
    let mixed = records.iter().any(|r| r.opt_mode != records[0].opt_mode);
    move |r| {
        if mixed {
            format!("{}[{}]", r.method, r.opt_mode)
        } else {
            r.method.clone()
        }
    }
}

fn to_scores(records: &[ExperimentRecord], time: bool) -> Vec<Score> {
    if records.is_empty() {
        return Vec::new();
    }
    let label = labeler(records);
    records
        .iter()
        .map(|r| Score {
            method: label(r),
            dataset: format!("{}/{}", r.dataset, r.train_size),
            experiment: r.replicate.to_string(),
            value: match (time, r.rrmse.is_finite()) {
                (_, false) => f64::INFINITY,
                (true, true) => r.fit_seconds,
                (false, true) => r.rrmse,
            },
        })
        .collect()
}

/// RRMSE-based profiles; `(dataset, train_size)` pairs play the role of
/// datasets and replicates that of experiments.
pub fn rrmse_profiles(records: &[ExperimentRecord]) -> Vec<PerformanceProfile> {
    performance_profiles(&to_scores(records, false))
}

/// Profiles of the sequential fit time.
pub fn time_profiles(records: &[ExperimentRecord]) -> Vec<PerformanceProfile> {
    performance_profiles(&to_scores(records, true))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub method: String,
    pub auc: f64,
    /// Methods sharing a group are not significantly different from their
    /// AUC neighbor.
    pub group: usize,
    /// One-sided p-value against the next method, when testable.
    pub p_next: Option<f64>,
}

/// AUC ranking with adjacent methods merged when a one-sided Wilcoxon test
/// on paired RRMSEs does not reject at [`WILCOXON_ALPHA`].
pub fn ranking(records: &[ExperimentRecord], profiles: &[PerformanceProfile]) -> Vec<RankingRow> {
    let scores = to_scores(records, false);
    let mut by_method: BTreeMap<&str, BTreeMap<(&str, &str), f64>> = BTreeMap::new();
    for s in &scores {
        by_method
            .entry(&s.method)
            .or_default()
            .insert((&s.dataset, &s.experiment), s.value);
    }
    let mut rows = Vec::with_capacity(profiles.len());
    let mut group = 1;
    for (i, p) in profiles.iter().enumerate() {
        let p_next = profiles.get(i + 1).and_then(|next| {
            let a = by_method.get(p.method.as_str())?;
            let b = by_method.get(next.method.as_str())?;
            let (xa, xb): (Vec<f64>, Vec<f64>) = a
                .iter()
                .filter_map(|(k, va)| b.get(k).map(|vb| (*va, *vb)))
                .filter(|(va, vb)| va.is_finite() && vb.is_finite())
                .unzip();
            wilcoxon_one_sided(&xa, &xb).ok().map(|r| r.p_value)
        });
        rows.push(RankingRow {
            method: p.method.clone(),
            auc: p.auc,
            group,
            p_next,
        });
        if p_next.is_none_or(|pv| pv < WILCOXON_ALPHA) {
            group += 1;
        }
    }
    rows
}

pub fn pareto(records: &[ExperimentRecord]) -> Vec<ParetoPoint> {
    let r = rrmse_profiles(records);
    let t = time_profiles(records);
    let points: Vec<(String, f64, f64)> = r
        .iter()
        .map(|p| {
            let time_auc = t.iter().find(|q| q.method == p.method).map_or(0.0, |q| q.auc);
            (p.method.clone(), time_auc, p.auc)
        })
        .collect();
    pareto_points(&points)
}

pub fn write_profiles_csv(path: impl AsRef<Path>, profiles: &[PerformanceProfile]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "tau", "p"])?;
    for p in profiles {
        for (t, v) in p.tau.iter().zip(&p.p) {
            w.write_record([p.method.clone(), t.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_rows<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Profiles, ranking and Pareto data for a set of records.
pub fn write_aggregates(records: &[ExperimentRecord], dir: &Path) -> Result<()> {
    if records.is_empty() {
        return Ok(());
    }
    let profiles = rrmse_profiles(records);
    write_profiles_csv(dir.join(PROFILE_CSV), &profiles)?;
    std::fs::write(dir.join(PROFILE_SVG), svg::profile_plot(&profiles, "RRMSE performance profiles"))?;
    write_profiles_csv(dir.join(TIME_PROFILE_CSV), &time_profiles(records))?;
    write_rows(dir.join(RANKING_CSV), &ranking(records, &profiles))?;
    let front = pareto(records);
    write_rows(dir.join(PARETO_CSV), &front)?;
    std::fs::write(dir.join(PARETO_SVG), svg::pareto_plot(&front))?;
    Ok(())
}
