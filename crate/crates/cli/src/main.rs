use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use catgp::bench::{self, fit_method, Method, SuiteConfig};
use catgp::datasets::{generate_replicate, DatasetName, DatasetSpec, MixedDataset};
use catgp::error::Error;
use catgp::gp::{FitOptions, TrainedGP};
use catgp::grouping::{groups_from_lvgp, msd_groups, GroupSelection};
use catgp::kernels::{CategoricalKernelSpec, Family, GroupPartition};
use catgp::optimize::{OptMode, OptSettings};

/// Gaussian processes with mixed continuous and categorical inputs.
#[derive(Parser, Debug)]
#[command(name = "catgp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the train and test sets of one benchmark replicate
    Generate(GenerateArgs),
    /// Fit one kernel on a training CSV and save the model
    Fit(FitArgs),
    /// Predict with a saved model
    Predict(PredictArgs),
    /// Run a benchmark suite from a TOML config (resumable)
    Bench(BenchArgs),
    /// Performance profiles, ranking and Pareto data from a records CSV
    Profile(ProfileArgs),
    /// Infer level groups of a categorical input
    Cluster(ClusterArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Directory for outputs, created if absent
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Overwrite existing outputs
    #[arg(long, default_value_t = false)]
    force: bool,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Dataset id (f1, f2, beam_bending, borehole, borehole2, otl, otl2, piston, piston2, goldstein)
    #[arg(long)]
    dataset: String,
    /// Training points per level combination
    #[arg(long, default_value_t = 6)]
    samples_per_level: usize,
    /// Replicate seed, added to the dataset's base seed [default: $CATGP_SEED or 0]
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Method id, e.g. CS, He, Ho_2, LVGP, Nested_He_He_MSD
    #[arg(long)]
    kernel: String,
    /// Training CSV
    #[arg(long)]
    train: PathBuf,
    /// Test CSV; when given the RRMSE is printed
    #[arg(long)]
    test: Option<PathBuf>,
    /// Level groups for nested kernels with known groups, e.g. "1,4,7;2,5,8;3,6,9"
    #[arg(long)]
    groups: Option<String>,
    /// Model file name inside the output directory
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    /// Optimizer mode (short or long)
    #[arg(long, default_value_t = OptMode::Long)]
    mode: OptMode,
    /// Number of optimizer restarts
    #[arg(long, default_value_t = 96)]
    restarts: usize,
    /// Seed of the restart design [default: $CATGP_SEED or 0]
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Model file written by `fit`
    #[arg(long)]
    model: PathBuf,
    /// Input CSV (x1.., z1.., optional y)
    #[arg(long)]
    input: PathBuf,
    /// Prediction CSV name inside the output directory
    #[arg(long, default_value = "predictions.csv")]
    output: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Suite config (see docs/config.md)
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding [suite] output_dir
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads, overriding [suite] jobs
    #[arg(long)]
    jobs: Option<usize>,
    /// Optimizer mode, overriding [optimizer] mode
    #[arg(long)]
    mode: Option<OptMode>,
    /// Seed offset, overriding [suite] seed [default: $CATGP_SEED or config]
    #[arg(long)]
    seed: Option<u64>,
    /// Discard existing records instead of resuming
    #[arg(long, default_value_t = false)]
    force: bool,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Records CSV written by `bench`
    #[arg(long)]
    records: PathBuf,
    /// Output directory [default: <records dir>/profile]
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overwrite existing outputs
    #[arg(long, default_value_t = false)]
    force: bool,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// Dataset CSV
    #[arg(long)]
    data: PathBuf,
    /// Categorical input to cluster (1-based)
    #[arg(long, default_value_t = 1)]
    variable: usize,
    /// Level embedding: msd or lvgp
    #[arg(long, default_value = "msd")]
    embedding: String,
    /// Optimizer mode for the lvgp embedding
    #[arg(long, default_value_t = OptMode::Long)]
    mode: OptMode,
    /// Restarts for the lvgp embedding
    #[arg(long, default_value_t = 24)]
    restarts: usize,
    /// Seed for the lvgp embedding [default: $CATGP_SEED or 0]
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

/// Failure with its exit code: 1 for usage and configuration, 2 at runtime.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => 1,
            _ => 2,
        };
        Failure(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure(1, msg.into())
}

type Outcome = Result<(), Failure>;

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var("CATGP_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("CATGP_SEED is not an unsigned integer: '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    })
}

fn prepare_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure(2, format!("cannot create {}: {e}", dir.display())))
}

fn check_writable(paths: &[PathBuf], force: bool) -> Outcome {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(usage(format!("{} exists; pass --force to overwrite", p.display()))),
        None => Ok(()),
    }
}

fn generate(a: GenerateArgs) -> Outcome {
    let name: DatasetName = a.dataset.parse()?;
    let seed = resolve_seed(a.seed)?;
    let spec = DatasetSpec::new(name, a.samples_per_level, name.base_seed() + seed);
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let stem = format!("{}_{}_{}", name, a.samples_per_level, seed);
    let train_path = a.common.output_dir.join(format!("{stem}_train.csv"));
    let test_path = a.common.output_dir.join(format!("{stem}_test.csv"));
    check_writable(&[train_path.clone(), test_path.clone()], a.common.force)?;
    prepare_dir(&a.common.output_dir)?;
    let (train, test) = generate_replicate(&spec)?;
    train.save_csv(&train_path)?;
    test.save_csv(&test_path)?;
    println!("train {} ({} rows)", train_path.display(), train.len());
    println!("test {} ({} rows)", test_path.display(), test.len());
    Ok(())
}

fn parse_groups(s: &str) -> Result<Vec<Vec<usize>>, Failure> {
    s.split(';')
        .map(|g| {
            g.split(',')
                .map(|l| l.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| usage(format!("bad group list '{s}'")))
        })
        .collect()
}

fn format_partition(p: &GroupPartition) -> String {
    let groups: Vec<String> = p
        .groups()
        .iter()
        .map(|g| format!("[{}]", g.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    format!("[{}]", groups.join(","))
}

fn fit(a: FitArgs) -> Outcome {
    let method: Method = a.kernel.parse()?;
    let seed = resolve_seed(a.seed)?;
    let groups = a.groups.as_deref().map(parse_groups).transpose()?;
    let model_path = a.common.output_dir.join(&a.model);
    check_writable(std::slice::from_ref(&model_path), a.common.force)?;
    let train = MixedDataset::load_csv(&a.train, None)?;
    let test = match &a.test {
        Some(p) => Some(MixedDataset::load_csv(p, Some(train.level_counts.clone()))?),
        None => None,
    };
    let settings = OptSettings::for_mode(a.mode).with_restarts(a.restarts);
    settings.validate()?;
    let fitted = fit_method(method, &train, groups.as_deref(), &FitOptions::new(settings, seed))?;
    prepare_dir(&a.common.output_dir)?;
    fitted.model.save_json(&model_path)?;
    for (j, p) in fitted.partitions.iter().enumerate() {
        println!("groups z{} {}", j + 1, format_partition(p));
    }
    println!("nll {}", fitted.model.nll);
    println!("fit_seconds {}", fitted.fit_seconds());
    if let Some(test) = test {
        let pred = fitted.predict(&test)?;
        println!("rrmse {}", bench::rrmse(&test.y, &pred)?);
    }
    println!("model {}", model_path.display());
    Ok(())
}

fn predict(a: PredictArgs) -> Outcome {
    let out_path = a.common.output_dir.join(&a.output);
    check_writable(std::slice::from_ref(&out_path), a.common.force)?;
    let model = TrainedGP::load_json(&a.model)?;
    let levels: Vec<usize> = model.config.categorical.iter().map(|s| s.levels).collect();
    let input = MixedDataset::read_inputs_csv(
        std::fs::File::open(&a.input).map_err(Error::from)?,
        (!levels.is_empty()).then_some(levels),
    )?;
    let input = if model.config.categorical.is_empty() && input.categorical_dim() > 0 {
        input.without_categoricals()
    } else {
        input
    };
    let post = model.posterior_original(&input)?;
    prepare_dir(&a.common.output_dir)?;
    let mut text = String::from("mean,variance\n");
    for (m, v) in post.mean.iter().zip(&post.variance) {
        text.push_str(&format!("{m:?},{v:?}\n"));
    }
    std::fs::write(&out_path, text).map_err(Error::from)?;
    println!("predictions {} ({} rows)", out_path.display(), post.mean.len());
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Outcome {
    let mut cfg = SuiteConfig::load(&a.config)?;
    if let Some(d) = a.output_dir {
        cfg.suite.output_dir = d;
    }
    if let Some(j) = a.jobs {
        cfg.suite.jobs = j;
    }
    if let Some(m) = a.mode {
        cfg.optimizer.mode = Some(m);
    }
    if let Some(s) = a.seed.or(env_seed()?) {
        cfg.suite.seed = s;
    }
    cfg.validate()?;
    let records = cfg.suite.output_dir.join(bench::RECORDS_FILE);
    if a.force && records.exists() {
        std::fs::remove_file(&records).map_err(Error::from)?;
    }
    let out = bench::run_suite(&cfg)?;
    let failed = out.records.iter().filter(|r| r.status.starts_with("failed")).count();
    println!(
        "records {} ({} total, {} new, {} failed)",
        records.display(),
        out.records.len(),
        out.executed,
        failed
    );
    Ok(())
}

fn profile(a: ProfileArgs) -> Outcome {
    let dir = a.output_dir.unwrap_or_else(|| {
        a.records.parent().unwrap_or(Path::new(".")).join("profile")
    });
    let outputs: Vec<PathBuf> = [
        bench::PROFILE_CSV,
        bench::PROFILE_SVG,
        bench::TIME_PROFILE_CSV,
        bench::RANKING_CSV,
        bench::PARETO_CSV,
        bench::PARETO_SVG,
    ]
    .iter()
    .map(|f| dir.join(f))
    .collect();
    check_writable(&outputs, a.force)?;
    let records = bench::read_records(&a.records)?;
    if records.is_empty() {
        return Err(usage(format!("{} holds no records", a.records.display())));
    }
    prepare_dir(&dir)?;
    bench::write_aggregates(&records, &dir)?;
    for row in bench::ranking(&records, &bench::rrmse_profiles(&records)) {
        println!("{} auc={:.4} group={}", row.method, row.auc, row.group);
    }
    Ok(())
}

fn cluster(a: ClusterArgs) -> Outcome {
    let seed = resolve_seed(a.seed)?;
    let part_path = a.common.output_dir.join("partition.json");
    let sil_path = a.common.output_dir.join("silhouette.csv");
    check_writable(&[part_path.clone(), sil_path.clone()], a.common.force)?;
    let data = MixedDataset::load_csv(&a.data, None)?;
    if a.variable == 0 || a.variable > data.categorical_dim() {
        return Err(usage(format!(
            "--variable {} out of range: the data has {} categorical inputs",
            a.variable,
            data.categorical_dim()
        )));
    }
    let j = a.variable - 1;
    let sel: GroupSelection = match a.embedding.as_str() {
        "msd" => msd_groups(&data.z_column(j), &data.y, data.level_counts[j])?,
        "lvgp" => {
            let settings = OptSettings::for_mode(a.mode).with_restarts(a.restarts);
            settings.validate()?;
            let scaler = catgp::datasets::Scaler::fit(&data)?;
            let train = scaler.transform(&data);
            let specs = train
                .level_counts
                .iter()
                .map(|&c| CategoricalKernelSpec::with_rank(Family::Lvgp, c, bench::LVGP_RANK))
                .collect::<catgp::error::Result<Vec<_>>>()?;
            let config = catgp::gp::KernelConfig::new(train.continuous_dim(), specs);
            let gp = catgp::gp::fit(&train, &config, &FitOptions::new(settings, seed))?;
            let phi = config.categorical[j]
                .latent_embedding(&gp.params.categorical[j])
                .expect("LVGP kernel")?;
            groups_from_lvgp(&phi)?
        }
        other => return Err(usage(format!("unknown embedding '{other}' (msd or lvgp)"))),
    };
    prepare_dir(&a.common.output_dir)?;
    let listing = format_partition(&sel.partition);
    std::fs::write(&part_path, format!("{listing}\n")).map_err(Error::from)?;
    let mut csv = String::from("q,silhouette\n");
    for (q, s) in &sel.scores {
        csv.push_str(&format!("{q},{s:?}\n"));
    }
    std::fs::write(&sil_path, csv).map_err(Error::from)?;
    println!("{listing}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Profile(a) => profile(a),
        Command::Cluster(a) => cluster(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
