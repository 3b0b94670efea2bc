//! driftwatt: replay a labeled stream under different retraining
//! configurations and account the energy each one costs.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use driftwatt::dataset::{
    generate_synthetic_stream, load_csv_stream, write_csv_stream, BatchStream, FeatureMatrix,
};
use driftwatt::detect::{detect_drift_with_importances, DetectorConfig, DriftMethod};
use driftwatt::report::{compare_configs, emit_tables, summarize_runs, Comparison, RunArtifact};
use driftwatt::sim::{run_experiment_matrix, write_reports, SimulationConfig};
use driftwatt::Error as CoreError;

use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "driftwatt",
    version,
    about = "Drift-aware retraining lifecycle simulator with energy accounting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic drift stream CSV from the [synthetic] section of
    /// a config file.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the (configuration x seed) experiment matrix over a stream CSV.
    Simulate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output directory for per-run JSON reports.
        #[arg(long)]
        out: PathBuf,
        /// Number of seeds (0..N-1).
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, value_enum, default_value_t = MeterArg::Virtual)]
        meter: MeterArg,
        /// Seed for shuffling the execution order of the matrix.
        #[arg(long, default_value_t = 0)]
        shuffle_seed: u64,
    },
    /// One-shot drift verdict between two CSV windows, printed as JSON.
    Detect {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        infer: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// JSON file with an `importances` array (required for ks-fi).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Summary tables, pairwise comparisons and figure data from run files.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Pair of configuration names `A,B`; repeatable.
        #[arg(long = "compare")]
        compare: Vec<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MeterArg {
    Virtual,
    CpuTime,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    #[value(name = "ks-all")]
    All,
    #[value(name = "ks-pca")]
    Pca,
    #[value(name = "ks-fi")]
    Fi,
}

impl From<MethodArg> for DriftMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::All => DriftMethod::KsAll,
            MethodArg::Pca => DriftMethod::KsPca,
            MethodArg::Fi => DriftMethod::KsFi,
        }
    }
}

/// Errors carrying their process exit code: 2 validation/configuration,
/// 3 data, 4 internal.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn config(msg: impl std::fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    fn data(msg: impl std::fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }

    fn internal(msg: impl std::fmt::Display) -> Self {
        CliError::Internal(msg.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

/// Validation and configuration problems exit 2, data problems exit 3,
/// I/O and anything unexpected exit 4.
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::Configuration(_)
            | CoreError::Validation(_)
            | CoreError::UndefinedRatio(_)
            | CoreError::Instrumentation(_) => CliError::Config(e.to_string()),
            CoreError::Schema(_)
            | CoreError::Parse { .. }
            | CoreError::InsufficientData(_)
            | CoreError::EmptyClass(_)
            | CoreError::UndefinedMetric(_)
            | CoreError::Sequencing(_)
            | CoreError::Stratification(_) => CliError::Data(e.to_string()),
            CoreError::Io { .. } => CliError::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate { spec, out } => generate(&spec, &out),
        Command::Simulate {
            data,
            config,
            out,
            seeds,
            meter,
            shuffle_seed,
        } => simulate(&data, &config, &out, seeds, meter, shuffle_seed),
        Command::Detect {
            train,
            infer,
            method,
            alpha,
            model,
        } => detect(&train, &infer, method, alpha, model.as_deref()),
        Command::Report {
            runs,
            out,
            compare,
            alpha,
        } => report(&runs, &out, &compare, alpha),
    }
}

fn generate(spec_path: &Path, out: &Path) -> Result<(), CliError> {
    let file = FileConfig::parse(spec_path)?;
    let spec = file.synthetic_spec()?;
    let stream = generate_synthetic_stream(&spec)?;
    write_csv_stream(&stream, out).map_err(CliError::internal)?;
    let rows: usize = stream.batches().iter().map(|b| b.len()).sum();
    println!(
        "wrote {} periods, {rows} rows to {}",
        stream.len(),
        out.display()
    );
    Ok(())
}

fn load_stream(path: &Path) -> Result<BatchStream, CliError> {
    load_csv_stream(path, "label", "period").map_err(|e| match e {
        // missing input file is a data problem, not an internal one
        CoreError::Io { .. } => CliError::data(e),
        other => other.into(),
    })
}

fn simulate(
    data: &Path,
    config_path: &Path,
    out: &Path,
    seeds: u64,
    meter: MeterArg,
    shuffle_seed: u64,
) -> Result<(), CliError> {
    if seeds < 1 {
        return Err(CliError::config("--seeds must be at least 1"));
    }
    let file = FileConfig::parse(config_path)?;
    let run_section = file
        .run
        .as_ref()
        .ok_or_else(|| CliError::config("config file is missing the [run] section"))?;
    if run_section.configurations.is_empty() {
        return Err(CliError::config(
            "[run].configurations must name at least one configuration",
        ));
    }

    let stream = load_stream(data)?;
    let default_window = stream.len().div_ceil(2);
    let window = file
        .window
        .as_ref()
        .and_then(|w| w.sliding_periods)
        .unwrap_or(default_window);
    let detector = file.detector.as_ref();
    let search = file.search_space()?;
    let span = file.span()?;
    let meter_choice = file.meter_choice(meter);
    let ratio = file.downsample_ratio();

    let mut configs = Vec::with_capacity(run_section.configurations.len());
    for name in &run_section.configurations {
        let mut cfg = SimulationConfig::named(name, window)?.with_detector_settings(
            detector.and_then(|d| d.alpha).unwrap_or(0.05),
            detector.and_then(|d| d.variance_retained).unwrap_or(0.95),
            detector.and_then(|d| d.max_samples).unwrap_or(5000),
        );
        cfg.search = search.clone();
        cfg.downsample_ratio = ratio;
        cfg.meter = meter_choice.clone();
        cfg.span = span;
        configs.push(cfg);
    }

    let seed_list: Vec<u64> = (0..seeds).collect();
    let reports = run_experiment_matrix(&stream, &configs, &seed_list, shuffle_seed)?;
    let paths = write_reports(&reports, out)?;
    println!(
        "ran {} configurations x {} seeds; wrote {} reports to {}",
        configs.len(),
        seeds,
        paths.len(),
        out.display()
    );
    Ok(())
}

#[derive(serde::Deserialize)]
struct ImportanceFile {
    importances: Vec<f64>,
}

fn pooled_features(path: &Path) -> Result<FeatureMatrix, CliError> {
    let stream = load_stream(path)?;
    let parts: Vec<&FeatureMatrix> = stream.batches().iter().map(|b| &b.features).collect();
    FeatureMatrix::vstack(&parts).map_err(CliError::from)
}

fn detect(
    train: &Path,
    infer: &Path,
    method: MethodArg,
    alpha: f64,
    model: Option<&Path>,
) -> Result<(), CliError> {
    let train_features = pooled_features(train)?;
    let infer_features = pooled_features(infer)?;
    let importances = match model {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::data(format!("cannot read model file {}: {e}", path.display()))
            })?;
            let parsed: ImportanceFile = serde_json::from_str(&text).map_err(|e| {
                CliError::data(format!(
                    "model file {} lacks an importances array: {e}",
                    path.display()
                ))
            })?;
            Some(parsed.importances)
        }
        None => None,
    };
    let mut config = DetectorConfig::new(method.into());
    config.alpha = alpha;
    let verdict = detect_drift_with_importances(
        &config,
        &train_features,
        &infer_features,
        importances.as_deref(),
    )?;
    let json = serde_json::to_string_pretty(&verdict).map_err(CliError::internal)?;
    println!("{json}");
    Ok(())
}

fn report(runs: &Path, out: &Path, compare: &[String], alpha: f64) -> Result<(), CliError> {
    let artifact = RunArtifact::load(runs)?;
    let summaries = summarize_runs(&artifact)?;
    let mut comparisons: Vec<Comparison> = Vec::new();
    for pair in compare {
        let (a, b) = pair
            .split_once(',')
            .ok_or_else(|| CliError::config(format!("--compare expects `A,B`, got `{pair}`")))?;
        comparisons.extend(compare_configs(&artifact, a.trim(), b.trim(), alpha)?);
    }
    emit_tables(&artifact, &summaries, &comparisons, out)?;
    println!(
        "summarized {} runs across {} configurations into {}",
        artifact.reports().len(),
        summaries.len(),
        out.display()
    );
    Ok(())
}
