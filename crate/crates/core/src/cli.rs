//! Batch front end. Every subcommand takes a JSON config (`--config`) whose
//! fields can be overridden by flags; `--print-config` shows the resolved
//! config and exits.
//!
//! Exit codes: 0 ok, 1 internal or I/O failure, 2 bad input, 3 defects found,
//! 4 numerical check failed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::{self, DataError, ImageRecord};
use crate::eval::{self, EvalConfig, EvalError};
use crate::gradcheck::{self, GradCheckConfig, LossKind};
use crate::pyramid::{self, Activation, PyramidError, PyramidMode, PyramidWeights};
use crate::schedule::{self, ScheduleConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_DEFECTS: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "detkit",
    version,
    about = "Detection geometry, losses, evaluation and data tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score detections against COCO-format ground truth.
    Eval(EvalArgs),
    /// Check an annotation file for defects, optionally writing a cleaned copy.
    Validate(ValidateArgs),
    /// Compare analytic loss gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// Run the seeded toy FPN / PA-FPN pipeline.
    Pyramid(PyramidArgs),
    /// Write the warmup + cosine learning-rate curve as CSV.
    Schedule(ScheduleArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub dets: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Metrics JSON path; the table goes next to it with a `.txt` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub ann: PathBuf,
    /// Drop flagged records and write the result to `--out`.
    #[arg(long, requires = "out")]
    pub fix: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flag images whose file is missing or empty under this directory.
    #[arg(long)]
    pub image_root: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub loss: Option<LossKind>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// GFL β values (repeatable).
    #[arg(long)]
    pub beta: Vec<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub print_config: bool,
    /// Offset added to every analytic gradient component (self-test).
    #[arg(long, hide = true)]
    pub perturb: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PyramidArgs {
    #[arg(long)]
    pub mode: Option<PyramidMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Base image size; level ℓ is `size / 2^ℓ` square.
    #[arg(long)]
    pub size: Option<usize>,
    /// Output channels of every pyramid level.
    #[arg(long)]
    pub width: Option<usize>,
    /// Zero the downsampling path and make bottom-up smoothing the identity.
    #[arg(long)]
    pub sever_bottom_up: bool,
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub stride: u64,
    /// CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub base_lr: Option<f64>,
    #[arg(long)]
    pub warmup_iters: Option<u64>,
    #[arg(long)]
    pub total_iters: Option<u64>,
    #[arg(long)]
    pub min_lr: Option<f64>,
    #[arg(long)]
    pub base_batch: Option<u32>,
    #[arg(long)]
    pub actual_batch: Option<u32>,
    #[arg(long)]
    pub print_config: bool,
}

/// Resolved settings of a `pyramid` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PyramidRunConfig {
    pub mode: PyramidMode,
    pub seed: u64,
    pub size: usize,
    pub in_channels: [usize; 4],
    pub width: usize,
    pub activation: Activation,
    pub sever_bottom_up: bool,
}

impl Default for PyramidRunConfig {
    fn default() -> Self {
        PyramidRunConfig {
            mode: PyramidMode::Pafpn,
            seed: 0,
            size: 64,
            in_channels: [4, 8, 8, 16],
            width: 4,
            activation: Activation::Identity,
            sever_bottom_up: false,
        }
    }
}

/// Provenance record written as `<output>.manifest.json` after a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    /// Input path to SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub version: String,
    pub duration_secs: f64,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    fn bad_input(message: impl Into<String>) -> Self {
        CliError::new(EXIT_BAD_INPUT, message)
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        let code = match e {
            DataError::Io { .. } | DataError::StaleReport { .. } => EXIT_INTERNAL,
            _ => EXIT_BAD_INPUT,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::bad_input(e.to_string())
    }
}

impl From<PyramidError> for CliError {
    fn from(e: PyramidError) -> Self {
        let code = match e {
            PyramidError::Io(_) => EXIT_INTERNAL,
            _ => EXIT_BAD_INPUT,
        };
        CliError::new(code, e.to_string())
    }
}

/// What a successful command produced: stdout text and an exit code (which
/// may still be non-zero, e.g. defects found).
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

/// Parses `args` (including the program name), runs the command, prints its
/// output and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let started = Instant::now();
    match &cli.command {
        Command::Eval(a) => cmd_eval(a, started),
        Command::Validate(a) => cmd_validate(a, started),
        Command::Gradcheck(a) => cmd_gradcheck(a, started),
        Command::Pyramid(a) => cmd_pyramid(a, started),
        Command::Schedule(a) => cmd_schedule(a, started),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::new(EXIT_INTERNAL, format!("cannot read {}: {e}", path.display())))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::new(EXIT_INTERNAL, format!("cannot write {}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let bytes = read_bytes(p)?;
            serde_json::from_slice(&bytes).map_err(|e| CliError::bad_input(format!("bad config {}: {e}", p.display())))
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_manifest<C: Serialize>(
    command: &str,
    config: &C,
    inputs: &[&Path],
    output: &Path,
    started: Instant,
) -> Result<(), CliError> {
    let mut digests = BTreeMap::new();
    for p in inputs {
        digests.insert(p.display().to_string(), sha256_hex(&read_bytes(p)?));
    }
    let manifest = RunManifest {
        command: command.to_string(),
        config: serde_json::to_value(config).expect("serializable"),
        inputs: digests,
        version: env!("CARGO_PKG_VERSION").to_string(),
        duration_secs: started.elapsed().as_secs_f64(),
    };
    write_bytes(&manifest_path(output), pretty(&manifest).as_bytes())
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::bad_input("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::new(EXIT_INTERNAL, format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::bad_input(format!("missing required flag --{flag}")))
}

fn cmd_eval(a: &EvalArgs, started: Instant) -> Result<Outcome, CliError> {
    let cfg: EvalConfig = load_config(a.config.as_deref())?;
    cfg.validate()?;
    if a.print_config {
        return Ok(Outcome {
            code: EXIT_OK,
            stdout: pretty(&cfg),
        });
    }
    let gt_path = required(&a.gt, "gt")?;
    let dets_path = required(&a.dets, "dets")?;
    let out = required(&a.out, "out")?;
    let ann = dataio::load_annotations(gt_path)?;
    let results = dataio::load_results(dets_path)?;
    let report = with_threads(a.threads, || eval::evaluate_coco(&ann, &results, &cfg))??;
    let table = report.to_table();
    write_bytes(out, pretty(&report).as_bytes())?;
    write_bytes(&out.with_extension("txt"), table.as_bytes())?;
    write_manifest("eval", &cfg, &[gt_path, dets_path], out, started)?;
    Ok(Outcome {
        code: EXIT_OK,
        stdout: table,
    })
}

fn cmd_validate(a: &ValidateArgs, started: Instant) -> Result<Outcome, CliError> {
    let set = dataio::load_annotations(&a.ann)?;
    let root = a.image_root.clone();
    let file_ok = move |img: &ImageRecord| {
        let root = root.as_ref().expect("only used with an image root");
        fs::metadata(root.join(&img.file_name))
            .map(|m| m.is_file() && m.len() > 0)
            .unwrap_or(false)
    };
    let check: Option<dataio::ImageCheck<'_>> = a.image_root.as_ref().map(|_| &file_ok as dataio::ImageCheck<'_>);
    let report = dataio::validate(&set, check);
    let mut stdout = pretty(&report);
    if !a.fix {
        if let Some(out) = &a.out {
            write_bytes(out, stdout.as_bytes())?;
            write_manifest(
                "validate",
                &serde_json::json!({ "fix": false }),
                &[&a.ann],
                out,
                started,
            )?;
        }
        let code = if report.is_clean() { EXIT_OK } else { EXIT_DEFECTS };
        return Ok(Outcome { code, stdout });
    }
    let out = required(&a.out, "out")?;
    let cleaned = dataio::clean(&set, &report)?;
    let recheck = dataio::validate(&cleaned, check);
    if !recheck.is_clean() {
        return Err(CliError::new(
            EXIT_INTERNAL,
            format!("cleaned set still has {} defects", recheck.total_flagged()),
        ));
    }
    dataio::save_annotations(&cleaned, out)?;
    write_manifest("validate", &serde_json::json!({ "fix": true }), &[&a.ann], out, started)?;
    stdout.push_str(&format!(
        "removed {} images and {} annotations; wrote {}\n",
        set.images.len() - cleaned.images.len(),
        set.annotations.len() - cleaned.annotations.len(),
        out.display()
    ));
    Ok(Outcome { code: EXIT_OK, stdout })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct GradcheckRunConfig {
    loss: LossKind,
    #[serde(flatten)]
    check: GradCheckConfig,
}

impl Default for GradcheckRunConfig {
    fn default() -> Self {
        GradcheckRunConfig {
            loss: LossKind::Diou,
            check: GradCheckConfig::for_loss(LossKind::Diou),
        }
    }
}

fn cmd_gradcheck(a: &GradcheckArgs, started: Instant) -> Result<Outcome, CliError> {
    let mut cfg: GradcheckRunConfig = load_config(a.config.as_deref())?;
    if let Some(loss) = a.loss {
        if a.config.is_none() || loss != cfg.loss {
            cfg.check.tolerance = loss.default_tolerance();
        }
        cfg.loss = loss;
    }
    if let Some(t) = a.trials {
        cfg.check.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.check.seed = s;
    }
    if !a.beta.is_empty() {
        cfg.check.betas = a.beta.clone();
    }
    if let Some(t) = a.tolerance {
        cfg.check.tolerance = t;
    }
    if let Some(p) = a.perturb {
        cfg.check.gradient_offset = p;
    }
    if a.print_config {
        return Ok(Outcome {
            code: EXIT_OK,
            stdout: pretty(&cfg),
        });
    }
    let report = gradcheck::run(cfg.loss, &cfg.check).map_err(|e| CliError::bad_input(e.to_string()))?;
    if let Some(out) = &a.out {
        write_bytes(out, pretty(&report).as_bytes())?;
        write_manifest("gradcheck", &cfg, &[], out, started)?;
    }
    let stdout = format!(
        "loss={} checked={} skipped={} max_rel_err={:.3e} tolerance={:.0e} {}\n",
        report.loss,
        report.checked,
        report.skipped,
        report.max_rel_err,
        report.tolerance,
        if report.passed { "PASS" } else { "FAIL" }
    );
    let code = if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok(Outcome { code, stdout })
}

fn cmd_pyramid(a: &PyramidArgs, started: Instant) -> Result<Outcome, CliError> {
    let mut cfg: PyramidRunConfig = load_config(a.config.as_deref())?;
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(s) = a.size {
        cfg.size = s;
    }
    if let Some(w) = a.width {
        cfg.width = w;
    }
    cfg.sever_bottom_up |= a.sever_bottom_up;
    if a.print_config {
        return Ok(Outcome {
            code: EXIT_OK,
            stdout: pretty(&cfg),
        });
    }
    if cfg.width == 0 || cfg.in_channels.contains(&0) {
        return Err(CliError::bad_input("channel counts must be positive"));
    }
    let mut weights = PyramidWeights::seeded(cfg.seed, cfg.in_channels, cfg.width).with_activation(cfg.activation);
    if cfg.sever_bottom_up {
        weights = weights.with_severed_bottom_up();
    }
    let inputs = pyramid::seeded_inputs(cfg.seed.wrapping_add(1), cfg.size, cfg.in_channels)?;
    let levels = with_threads(a.threads, || pyramid::pyramid_pipeline(&inputs, &weights, cfg.mode))??;
    if let Some(path) = &a.dump {
        pyramid::write_dump(path, cfg.mode, cfg.seed, cfg.size, &levels)?;
        write_manifest("pyramid", &cfg, &[], path, started)?;
    }
    Ok(Outcome {
        code: EXIT_OK,
        stdout: pyramid::shape_summary(&levels),
    })
}

fn cmd_schedule(a: &ScheduleArgs, started: Instant) -> Result<Outcome, CliError> {
    let mut cfg: ScheduleConfig = load_config(a.config.as_deref())?;
    if let Some(v) = a.base_lr {
        cfg.base_lr = v;
    }
    if let Some(v) = a.warmup_iters {
        cfg.warmup_iters = v;
    }
    if let Some(v) = a.total_iters {
        cfg.total_iters = v;
    }
    if let Some(v) = a.min_lr {
        cfg.min_lr = v;
    }
    if let Some(v) = a.base_batch {
        cfg.base_batch = v;
    }
    if let Some(v) = a.actual_batch {
        cfg.actual_batch = v;
    }
    if a.print_config {
        return Ok(Outcome {
            code: EXIT_OK,
            stdout: pretty(&cfg),
        });
    }
    let rows = schedule::schedule_dump(&cfg, a.stride).map_err(|e| CliError::bad_input(e.to_string()))?;
    let csv = schedule::to_csv(&rows);
    match &a.out {
        Some(out) => {
            write_bytes(out, csv.as_bytes())?;
            let inputs: Vec<&Path> = a.config.iter().map(|p| p.as_path()).collect();
            write_manifest("schedule", &cfg, &inputs, out, started)?;
            Ok(Outcome {
                code: EXIT_OK,
                stdout: format!("wrote {} rows to {}\n", rows.len(), out.display()),
            })
        }
        None => Ok(Outcome {
            code: EXIT_OK,
            stdout: csv,
        }),
    }
}
