//! Command-line surface for the corpus toolkit.
//!
//! Subcommands: `analyze`, `augment`, `features`, `eval`, and
//! `kernels selftest`. Exit codes: 0 on success, 1 on usage errors,
//! 2 on data errors under `--strict` (and on self-test failures).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use noisekit::augment::{Region, SnrReference};
use noisekit::pipeline::{
    list_audio_inputs, run_analyze, run_augment, run_eval, run_features, AugmentJob, GeometrySpec,
};
use noisekit::pitch::PitchConfig;
use noisekit::train_math::checks;
use noisekit::wada::GainTable;

#[derive(Parser)]
#[command(name = "noisekit", version, about = "Speech corpus noise toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blind WADA-SNR analysis over a corpus
    Analyze(AnalyzeArgs),
    /// Mix background noise into speech at controlled SNRs
    Augment(AugmentArgs),
    /// Dump mel, bark-cepstra, and pitch features per file
    Features(FeaturesArgs),
    /// Score candidate audio against references (MCD, GPE, VDE, FFE)
    Eval(EvalArgs),
    /// Numeric kernel utilities
    Kernels {
        #[command(subcommand)]
        action: KernelsAction,
    },
}

#[derive(Subcommand)]
enum KernelsAction {
    /// Run every kernel oracle suite and print pass/fail lines
    Selftest {
        /// Seed for the randomized suites
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Flags shared by the corpus commands. Values resolve as
/// flag > config file > default.
#[derive(Args, Clone)]
struct CommonArgs {
    /// Worker threads (default 4)
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed for all randomized choices
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    output: Option<PathBuf>,
    /// Exit 2 if any input file fails
    #[arg(long)]
    strict: bool,
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct FileConfig {
    workers: Option<usize>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    strict: Option<bool>,
    table: Option<PathBuf>,
    table_seed: Option<u64>,
    table_samples: Option<u64>,
    snr_low: Option<f64>,
    snr_high: Option<f64>,
    region: Option<String>,
    active_power: Option<bool>,
    wrap: Option<bool>,
    window: Option<usize>,
    hop: Option<usize>,
    fft: Option<usize>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> anyhow::Result<FileConfig> {
        match path {
            None => Ok(FileConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("cannot parse config {}", path.display()))
            }
        }
    }
}

struct Resolved {
    workers: usize,
    seed: u64,
    output: PathBuf,
    strict: bool,
    config: FileConfig,
}

fn resolve(common: &CommonArgs) -> anyhow::Result<Resolved> {
    let config = FileConfig::load(common.config.as_deref())?;
    let output = common
        .output
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Resolved {
        workers: common.workers.or(config.workers).unwrap_or(4).max(1),
        seed: common.seed.or(config.seed).unwrap_or(0),
        output,
        strict: common.strict || config.strict.unwrap_or(false),
        config,
    })
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input WAV files or directories
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Gain table cache: loaded if present, otherwise built and saved
    #[arg(long)]
    table: Option<PathBuf>,
    /// Seed for building the gain table
    #[arg(long)]
    table_seed: Option<u64>,
    /// Monte-Carlo draws per table grid point
    #[arg(long)]
    table_samples: Option<u64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct AugmentArgs {
    /// Speech WAV files or directories
    #[arg(long, required = true, num_args = 1..)]
    speech: Vec<PathBuf>,
    /// Noise WAV files or directories
    #[arg(long, required = true, num_args = 1..)]
    noise: Vec<PathBuf>,
    /// Target SNR range in dB, as LOW:HIGH
    #[arg(long)]
    snr_range: Option<String>,
    /// Noised region: full, second_half, or interval:START-END (seconds)
    #[arg(long)]
    region: Option<String>,
    /// Measure the target SNR against energy-active speech only
    #[arg(long)]
    active_power: bool,
    /// Allow noise shorter than the region (reads wrap around)
    #[arg(long)]
    wrap: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Input WAV files or directories
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Analysis window length in samples
    #[arg(long)]
    window: Option<usize>,
    /// Hop length in samples
    #[arg(long)]
    hop: Option<usize>,
    /// FFT size in samples
    #[arg(long)]
    fft: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of reference WAVs
    #[arg(
        long = "ref",
        required_unless_present = "pairs",
        conflicts_with = "pairs"
    )]
    ref_dir: Option<PathBuf>,
    /// Directory of candidate WAVs, paired by file name
    #[arg(
        long = "cand",
        required_unless_present = "pairs",
        conflicts_with = "pairs"
    )]
    cand_dir: Option<PathBuf>,
    /// Explicit pairing file: one `ref_path,cand_path` per line
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    hop: Option<usize>,
    #[arg(long)]
    fft: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

fn parse_pairs_file(path: &Path) -> anyhow::Result<Vec<(PathBuf, PathBuf)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read pairs file {}", path.display()))?;
    let mut pairs = Vec::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (reference, candidate) = line.split_once(',').with_context(|| {
            format!(
                "{}:{}: expected `ref_path,cand_path`",
                path.display(),
                number + 1
            )
        })?;
        pairs.push((
            PathBuf::from(reference.trim()),
            PathBuf::from(candidate.trim()),
        ));
    }
    if pairs.is_empty() {
        bail!("pairs file {} lists no pairs", path.display());
    }
    Ok(pairs)
}

fn geometry_from(
    window: Option<usize>,
    hop: Option<usize>,
    fft: Option<usize>,
    config: &FileConfig,
) -> GeometrySpec {
    let default = GeometrySpec::default();
    GeometrySpec {
        window: window.or(config.window).unwrap_or(default.window),
        hop: hop.or(config.hop).unwrap_or(default.hop),
        fft: fft.or(config.fft).unwrap_or(default.fft),
    }
}

fn load_or_build_table(
    cache: Option<&Path>,
    seed: Option<u64>,
    samples: Option<u64>,
) -> anyhow::Result<GainTable> {
    if let Some(path) = cache {
        if path.exists() {
            let table = GainTable::load_json(path)
                .with_context(|| format!("cannot load gain table {}", path.display()))?;
            return Ok(table);
        }
    }
    let seed = seed.unwrap_or(noisekit::wada::DEFAULT_TABLE_SEED);
    let samples = samples.unwrap_or(noisekit::wada::DEFAULT_SAMPLES_PER_POINT);
    eprintln!("building WADA gain table (seed {seed}, {samples} draws per point)...");
    let table = GainTable::build(seed, samples);
    if let Some(path) = cache {
        table
            .save_json(path)
            .with_context(|| format!("cannot save gain table {}", path.display()))?;
        eprintln!("gain table cached at {}", path.display());
    }
    Ok(table)
}

fn cmd_analyze(args: AnalyzeArgs) -> anyhow::Result<u8> {
    let resolved = resolve(&args.common)?;
    let inputs = list_audio_inputs(&args.inputs)?;
    let table = load_or_build_table(
        args.table.as_deref().or(resolved.config.table.as_deref()),
        args.table_seed.or(resolved.config.table_seed),
        args.table_samples.or(resolved.config.table_samples),
    )?;
    let report = run_analyze(&inputs, &table, &resolved.output, resolved.workers)?;
    println!(
        "analyzed {} file(s), {} error(s); report at {}",
        report.summary.n,
        report.summary.n_errors,
        report.report_csv.display()
    );
    if let (Some(mean), Some(median)) = (report.summary.mean, report.summary.median) {
        println!("mean WADA-SNR {mean:.2} dB, median {median:.2} dB");
    }
    for file in &report.files {
        if let Err(message) = &file.result {
            eprintln!("warning: {}: {message}", file.path.display());
        }
    }
    Ok(if resolved.strict && report.summary.n_errors > 0 {
        2
    } else {
        0
    })
}

fn cmd_augment(args: AugmentArgs) -> anyhow::Result<u8> {
    let resolved = resolve(&args.common)?;
    let speech = list_audio_inputs(&args.speech)?;
    let noise = list_audio_inputs(&args.noise)?;

    let snr_range_db = match &args.snr_range {
        Some(text) => {
            let (low, high) = text
                .split_once(':')
                .with_context(|| format!("--snr-range must be LOW:HIGH, got {text:?}"))?;
            (low.trim().parse()?, high.trim().parse()?)
        }
        None => (
            resolved.config.snr_low.unwrap_or(5.0),
            resolved.config.snr_high.unwrap_or(25.0),
        ),
    };
    let region: Region = args
        .region
        .as_deref()
        .or(resolved.config.region.as_deref())
        .unwrap_or("full")
        .parse()
        .map_err(|e: String| anyhow::anyhow!(e))?;
    let job = AugmentJob {
        snr_range_db,
        region,
        snr_reference: if args.active_power || resolved.config.active_power.unwrap_or(false) {
            SnrReference::ActivePower
        } else {
            SnrReference::RegionPower
        },
        allow_wrap: args.wrap || resolved.config.wrap.unwrap_or(false),
        seed: resolved.seed,
    };
    let report = run_augment(&speech, &noise, &job, &resolved.output, resolved.workers)?;
    println!(
        "augmented {} file(s), {} error(s); manifest at {}",
        report.records.len(),
        report.errors.len(),
        report.manifest_path.display()
    );
    for (path, message) in &report.errors {
        eprintln!("warning: {}: {message}", path.display());
    }
    Ok(if resolved.strict && !report.errors.is_empty() {
        2
    } else {
        0
    })
}

fn cmd_features(args: FeaturesArgs) -> anyhow::Result<u8> {
    let resolved = resolve(&args.common)?;
    let inputs = list_audio_inputs(&args.inputs)?;
    let geometry = geometry_from(args.window, args.hop, args.fft, &resolved.config);
    let report = run_features(
        &inputs,
        &geometry,
        &PitchConfig::default(),
        &resolved.output,
        resolved.workers,
    )?;
    println!(
        "extracted features for {} file(s), {} error(s)",
        report.outputs.len(),
        report.errors.len()
    );
    for (path, message) in &report.errors {
        eprintln!("warning: {}: {message}", path.display());
    }
    Ok(if resolved.strict && !report.errors.is_empty() {
        2
    } else {
        0
    })
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<u8> {
    let resolved = resolve(&args.common)?;
    let geometry = geometry_from(args.window, args.hop, args.fft, &resolved.config);
    let report = if let Some(pairs_path) = &args.pairs {
        let pairs = parse_pairs_file(pairs_path)?;
        noisekit::pipeline::run_eval_pairs(
            &pairs,
            &geometry,
            &PitchConfig::default(),
            &resolved.output,
            resolved.workers,
        )?
    } else {
        run_eval(
            args.ref_dir.as_deref().expect("clap enforces --ref"),
            args.cand_dir.as_deref().expect("clap enforces --cand"),
            &geometry,
            &PitchConfig::default(),
            &resolved.output,
            resolved.workers,
        )?
    };
    println!(
        "evaluated {} pair(s), {} error(s), {} unmatched; report at {}",
        report.summary.n_pairs,
        report.summary.n_errors,
        report.summary.n_unmatched,
        report.report_csv.display()
    );
    if let (Some(gpe), Some(vde), Some(ffe), Some(mcd)) = (
        report.summary.gpe,
        report.summary.vde,
        report.summary.ffe,
        report.summary.mcd_db,
    ) {
        println!("mean gpe {gpe:.4}, vde {vde:.4}, ffe {ffe:.4}, mcd_db {mcd:.4}");
    }
    for path in &report.unmatched {
        eprintln!("warning: unmatched file {}", path.display());
    }
    for pair in &report.pairs {
        if let Err(message) = &pair.report {
            eprintln!("warning: pair {}: {message}", pair.stem);
        }
    }
    let failed = report.summary.n_errors + report.summary.n_unmatched;
    Ok(if resolved.strict && failed > 0 { 2 } else { 0 })
}

fn cmd_selftest(seed: u64) -> anyhow::Result<u8> {
    let outcomes = checks::run_all(seed);
    let mut all_passed = true;
    for outcome in &outcomes {
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{status} {} ({})", outcome.name, outcome.detail);
        all_passed &= outcome.passed;
    }
    if all_passed {
        println!("all {} kernel suites passed", outcomes.len());
        Ok(0)
    } else {
        bail!("kernel self-test failed");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Features(args) => cmd_features(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Kernels {
            action: KernelsAction::Selftest { seed },
        } => cmd_selftest(seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if err.to_string().contains("self-test") {
                2
            } else {
                1
            })
        }
    }
}
