//! `speechcost`: synthesize a corpus, extract features, evaluate and benchmark.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use speechcost_core::config::PipelineConfig;
use speechcost_core::evaluation::{parse_report, render_markdown, FeatureSource, GenderMode, Task};
use speechcost_core::io::{read_to_string, write_atomic_str};
use speechcost_core::models::ModelFamily;
use speechcost_core::pipeline;
use speechcost_core::synth::{write_corpus, SyntheticCorpusSpec};
use speechcost_core::CoreError;

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "speechcost",
    version,
    about = "Speech-based depression severity pipeline with cost accounting"
)]
struct Cli {
    /// Pipeline configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the random seed (corpus seed for `synth`, CV seed otherwise).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override the output directory (the corpus root for `synth`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with WAVs, metadata and deep feature matrices.
    Synth(SynthArgs),
    /// Extract conventional features for every recording (resumable).
    Extract {
        /// Skip log-MMSE enhancement regardless of the config.
        #[arg(long)]
        no_enhance: bool,
    },
    /// Write enhanced recordings and test how much enhancement shifts each feature.
    Enhance {
        /// Family-wise significance level for the per-feature tests.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Run mRMR selection over the whole extracted set (exploratory).
    Select,
    /// Cross-validated evaluation of the configured models.
    Run(RunArgs),
    /// Time every stage on both feature paths and compare feature sizes.
    Benchmark,
    /// Render a saved report as markdown.
    Report {
        /// Report JSON; defaults to the configured source's run directory.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Feature source whose report to render: conventional or deep.
        #[arg(long, value_parser = parse_source)]
        source: Option<FeatureSource>,
    },
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Corpus spec (TOML); flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    subjects: Option<usize>,
    #[arg(long)]
    samples_per_subject: Option<usize>,
    /// Signal-label coupling in [0, 1].
    #[arg(long)]
    coupling: Option<f64>,
    #[arg(long)]
    noise_level: Option<f64>,
    #[arg(long)]
    deep_dim: Option<usize>,
    /// Do not write deep feature matrices.
    #[arg(long)]
    no_deep: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Feature source: conventional or deep.
    #[arg(long, value_parser = parse_source)]
    source: Option<FeatureSource>,
    /// Comma-separated subset of svr, forest, fnn.
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    families: Option<Vec<ModelFamily>>,
    /// Comma-separated task filter.
    #[arg(long, value_delimiter = ',', value_parser = parse_task)]
    tasks: Option<Vec<Task>>,
    /// Evaluate male and female together instead of training per gender.
    #[arg(long)]
    pooled: bool,
}

fn parse_source(s: &str) -> std::result::Result<FeatureSource, String> {
    s.parse().map_err(|e: CoreError| e.to_string())
}

fn parse_family(s: &str) -> std::result::Result<ModelFamily, String> {
    s.parse().map_err(|e: CoreError| e.to_string())
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse().map_err(|e: CoreError| e.to_string())
}

/// A run that finished but skipped some inputs.
#[derive(Debug)]
struct Partial(String);

impl std::fmt::Display for Partial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Partial {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Partial>().is_some() {
        return EXIT_PARTIAL;
    }
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::Config(_)) => EXIT_CONFIG,
        Some(
            CoreError::Io { .. }
            | CoreError::Decode(_)
            | CoreError::UnsupportedFormat(_)
            | CoreError::EmptyInput(_)
            | CoreError::CannotNormalize
            | CoreError::InsufficientAudio { .. }
            | CoreError::InsufficientFrames { .. }
            | CoreError::InsufficientData(_)
            | CoreError::Shape { .. }
            | CoreError::Data(_)
            | CoreError::Format(_)
            | CoreError::Fold(_),
        ) => EXIT_DATA,
        _ => EXIT_OTHER,
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.evaluation.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_dir(cfg: &PipelineConfig, source: FeatureSource) -> PathBuf {
    cfg.output_dir.join(source.as_str())
}

fn cmd_synth(cli: &Cli, args: &SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => toml::from_str::<SyntheticCorpusSpec>(&read_to_string(path)?)
            .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?,
        None => SyntheticCorpusSpec::default(),
    };
    if let Some(v) = args.subjects {
        spec.subjects = v;
    }
    if let Some(v) = args.samples_per_subject {
        spec.samples_per_subject = v;
    }
    if let Some(v) = args.coupling {
        spec.coupling = v;
    }
    if let Some(v) = args.noise_level {
        spec.noise_level = v;
    }
    if let Some(v) = args.deep_dim {
        spec.deep_dim = v;
    }
    if args.no_deep {
        spec.deep_features = false;
    }
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let root = match &cli.out {
        Some(out) => out.clone(),
        None => {
            let cfg = load_config(cli)?;
            cfg.data.metadata.parent().map(Path::to_path_buf).unwrap_or_default()
        }
    };
    let layout = write_corpus(&spec, &root)?;
    println!(
        "wrote {} recordings from {} subjects to {}",
        spec.subjects * spec.samples_per_subject,
        spec.subjects,
        layout.root.display()
    );
    Ok(())
}

fn cmd_extract(cfg: &PipelineConfig, no_enhance: bool) -> Result<()> {
    cfg.validate_paths(true, false)?;
    let out = pipeline::extracted_features_path(cfg);
    let dir = out.parent().context("feature path has no parent")?;
    let summary = pipeline::extract_corpus(cfg, dir, !no_enhance)?;
    println!(
        "{} rows ({} computed, {} reused) -> {}",
        summary.rows,
        summary.computed,
        summary.reused,
        summary.features_path.display()
    );
    for (id, e) in &summary.errors {
        eprintln!("failed {id}: {e}");
    }
    if summary.is_partial() {
        return Err(Partial(format!("{} recordings could not be processed", summary.errors.len())).into());
    }
    Ok(())
}

fn cmd_enhance(cfg: &PipelineConfig, alpha: f64) -> Result<()> {
    cfg.validate_paths(true, false)?;
    let s = pipeline::enhance_corpus(cfg, &cfg.output_dir, alpha)?;
    let path = cfg.output_dir.join("enhancement.json");
    write_atomic_str(&path, &(serde_json::to_string_pretty(&s)? + "\n"))?;
    println!(
        "enhanced {} recordings; {} of {} features shift significantly (alpha {}, Bonferroni) -> {}",
        s.written,
        s.significance.significant,
        s.significance.features.len(),
        alpha,
        path.display()
    );
    Ok(())
}

fn cmd_select(cfg: &PipelineConfig) -> Result<()> {
    let dir = cfg.output_dir.join("selection");
    let names = pipeline::select_features(cfg, &dir)?;
    println!("selected {} features -> {}", names.len(), dir.display());
    for n in names {
        println!("  {n}");
    }
    Ok(())
}

fn cmd_run(mut cfg: PipelineConfig, args: &RunArgs) -> Result<()> {
    if let Some(s) = args.source {
        cfg.data.feature_source = s;
    }
    if let Some(f) = &args.families {
        cfg.evaluation.families = f.clone();
    }
    if let Some(t) = &args.tasks {
        cfg.data.tasks = t.clone();
    }
    if args.pooled {
        cfg.evaluation.gender_mode = GenderMode::Pooled;
    }
    cfg.validate()?;
    cfg.validate_paths(false, cfg.data.feature_source == FeatureSource::Deep)?;
    let outcome = pipeline::run_cv(&cfg)?;
    let dir = run_dir(&cfg, cfg.data.feature_source);
    pipeline::write_run_outputs(&outcome, &dir)?;
    println!(
        "{} samples, {} subjects, label std {:.3}",
        outcome.report.n_samples, outcome.report.n_subjects, outcome.report.label_std
    );
    for m in &outcome.report.models {
        println!("{:>3}  RMSE {:.3}  MAE {:.3}", m.label, m.overall.rmse, m.overall.mae);
    }
    println!("report -> {}", dir.join("report.md").display());
    Ok(())
}

fn cmd_benchmark(cfg: &PipelineConfig) -> Result<()> {
    let report = pipeline::benchmark(cfg)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| CoreError::io(&cfg.output_dir, e))?;
    let md = report.render_markdown();
    write_atomic_str(
        &cfg.output_dir.join("benchmark.json"),
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )?;
    write_atomic_str(&cfg.output_dir.join("benchmark.md"), &md)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    print!("{md}");
    Ok(())
}

fn cmd_report(cfg: &PipelineConfig, input: Option<&Path>, source: Option<FeatureSource>) -> Result<()> {
    let path = match input {
        Some(p) => p.to_path_buf(),
        None => run_dir(cfg, source.unwrap_or(cfg.data.feature_source)).join("report.json"),
    };
    let report = parse_report(&read_to_string(&path)?)?;
    print!("{}", render_markdown(&report));
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    if let Command::Synth(args) = &cli.command {
        return cmd_synth(cli, args);
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Synth(_) => unreachable!(),
        Command::Extract { no_enhance } => cmd_extract(&cfg, *no_enhance),
        Command::Enhance { alpha } => cmd_enhance(&cfg, *alpha),
        Command::Select => cmd_select(&cfg),
        Command::Run(args) => cmd_run(cfg, args),
        Command::Benchmark => cmd_benchmark(&cfg),
        Command::Report { input, source } => cmd_report(&cfg, input.as_deref(), *source),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
