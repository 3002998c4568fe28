use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use gaze_target::data::{
    choose_queries, load_dataset, save_dataset, simulate_dataset, synthetic_pool, write_atomic, DataError, PoolSpec,
    SimulatorParams,
};
use gaze_target::imaging::io::{encode_png, load_pool};
use gaze_target::imaging::{default_grid, synthesize_collage, GridSpec, ImagingError};
use gaze_target::protocol::{
    dataset_vocabulary, fixation_stats, reports_to_csv, run_setting, summary_to_csv, sweep, EvalConfig, KernelChoice,
    Setting, SweepGrid, Task,
};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] gaze_target::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn kind(&self) -> String {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "Io".into(),
            CliError::Config { .. } => "Config".into(),
            CliError::Usage(_) => "Usage".into(),
        }
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}
from_core!(DataError, ImagingError, gaze_target::protocol::ProtocolError, gaze_target::features::FeatureError);

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "gaze-target", version, about = "Predict visual search targets from fixations")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "GAZE_TARGET_JOBS")]
    jobs: Option<usize>,
    /// Print errors to stderr as single-line JSON.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic image pool as PNG files.
    Pool(PoolArgs),
    /// Render one collage and its layout.
    Synth(SynthArgs),
    /// Simulate a fixation dataset.
    Simulate(SimulateArgs),
    /// Train a visual vocabulary on a dataset's fixation patches.
    TrainVocab(TrainVocabArgs),
    /// Evaluate one setting.
    Eval(EvalArgs),
    /// Evaluate a grid of window sizes, vocabulary sizes and sampling modes.
    Sweep(SweepArgs),
    /// Fixations per trial, per participant.
    Stats(StatsArgs),
}

#[derive(Args)]
struct PoolArgs {
    #[arg(long, default_value = "amazon")]
    task: Task,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of images (default: the task's pool size).
    #[arg(long)]
    n_images: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    pool: PathBuf,
    /// Grid as ROWSxCOLS (default: the squarest grid holding the pool).
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSpec>,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for collage.png and layout.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// PNG pool directory (default: a synthetic pool for --task).
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value = "amazon")]
    task: Task,
    /// JSON file of simulator parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fidelity: Option<f64>,
    #[arg(long)]
    gaze_noise_px: Option<f64>,
    #[arg(long, default_value_t = 6)]
    participants: usize,
    #[arg(long, default_value_t = 20)]
    trials_per_target: usize,
    #[arg(long, default_value_t = 5)]
    targets: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl From<OnOff> for bool {
    fn from(v: OnOff) -> bool {
        matches!(v, OnOff::On)
    }
}

/// Evaluation parameters; each flag overrides the config file, which
/// overrides the defaults.
#[derive(Args)]
struct ConfigArgs {
    /// JSON evaluation config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    /// RBF width (default: 1 / feature dimension).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    sampling: Option<OnOff>,
    /// Saliency samples per query histogram in the open settings.
    #[arg(long)]
    query_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainVocabArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    setting: Setting,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Output directory for report.json and report.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    m_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    k_grid: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', num_args = 0.., default_value = "on,off")]
    sampling_grid: Vec<OnOff>,
    #[arg(long, value_delimiter = ',', default_value = "closed-within")]
    settings: Vec<Setting>,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Output directory for cells.csv, summary.csv and sweep.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Restrict to these participants.
    #[arg(long, value_delimiter = ',')]
    participants: Option<Vec<String>>,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let (r, c) = s.split_once(['x', 'X']).ok_or("expected ROWSxCOLS")?;
    let rows = r.trim().parse().map_err(|e| format!("rows: {e}"))?;
    let cols = c.trim().parse().map_err(|e| format!("cols: {e}"))?;
    if rows == 0 || cols == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok(GridSpec { rows, cols })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes).map_err(CliError::from)
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("plain data serializes");
    out.push(b'\n');
    out
}

impl ConfigArgs {
    fn resolve(&self) -> Result<EvalConfig> {
        let mut cfg = match &self.config {
            Some(path) => serde_json::from_str(&read(path)?)
                .map_err(|e| CliError::Config { path: path.clone(), message: e.to_string() })?,
            None => EvalConfig::default(),
        };
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        match (self.kernel, self.gamma) {
            (Some(KernelArg::Linear), Some(_)) => return Err(CliError::Usage("--gamma needs --kernel rbf".into())),
            (Some(KernelArg::Linear), None) => cfg.kernel = KernelChoice::Linear,
            (Some(KernelArg::Rbf), g) => cfg.kernel = KernelChoice::Rbf { gamma: g },
            (None, Some(g)) => cfg.kernel = KernelChoice::Rbf { gamma: Some(g) },
            (None, None) => {}
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.sampling {
            cfg.sampling_on = v.into();
        }
        if let Some(v) = self.query_samples {
            cfg.query_samples = Some(v);
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.check().map_err(|m| CliError::Core(gaze_target::protocol::ProtocolError::InvalidConfig(m).into()))?;
        Ok(cfg)
    }
}

fn cmd_pool(a: &PoolArgs) -> Result<()> {
    let mut spec = PoolSpec::new(a.task, a.seed);
    if let Some(n) = a.n_images {
        spec.n_images = n;
    }
    create_dir(&a.out)?;
    let pool = synthetic_pool(&spec);
    for img in &pool {
        write(&a.out.join(format!("{}.png", img.id())), &encode_png(img)?)?;
    }
    println!("wrote {} images to {}", pool.len(), a.out.display());
    Ok(())
}

fn pool_dir(dir: &Path) -> Result<Vec<gaze_target::imaging::Image>> {
    if !dir.is_dir() {
        return Err(DataError::MissingFile(dir.to_path_buf()).into());
    }
    Ok(load_pool(dir)?)
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let pool = pool_dir(&a.pool)?;
    let grid = a.grid.unwrap_or_else(|| default_grid(pool.len()));
    let (layout, canvas) = synthesize_collage(&pool, grid, &a.target, a.seed)?;
    create_dir(&a.out)?;
    write(&a.out.join("collage.png"), &encode_png(&canvas)?)?;
    write(&a.out.join("layout.json"), &to_json(&layout))?;
    println!("wrote {}x{} collage to {}", canvas.width(), canvas.height(), a.out.display());
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut params = match &a.params {
        Some(path) => serde_json::from_str::<SimulatorParams>(&read(path)?)
            .map_err(|e| CliError::Config { path: path.clone(), message: e.to_string() })?,
        None => SimulatorParams::default(),
    };
    if let Some(v) = a.seed {
        params.seed = v;
    }
    if let Some(v) = a.fidelity {
        params.fidelity = v;
    }
    if let Some(v) = a.gaze_noise_px {
        params.gaze_noise_px = v;
    }
    params.validate()?;
    let pool = match &a.pool {
        Some(dir) => pool_dir(dir)?,
        None => synthetic_pool(&PoolSpec::new(a.task, params.seed)),
    };
    let queries = choose_queries(&pool, a.targets, params.seed);
    let grid = default_grid(pool.len());
    let ds = simulate_dataset(a.task, pool, queries, a.participants, a.trials_per_target, &params, grid)?;
    save_dataset(&a.out, &ds)?;
    println!(
        "simulated {} trials ({} participants x {} targets x {}) into {}",
        ds.trials.len(),
        a.participants,
        ds.queries.len(),
        a.trials_per_target,
        a.out.display()
    );
    Ok(())
}

fn cmd_train_vocab(a: &TrainVocabArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    let ds = load_dataset(&a.dataset)?;
    let vocab = dataset_vocabulary(&ds, &cfg)?;
    let mut json = vocab.to_json().into_bytes();
    json.push(b'\n');
    write(&a.out, &json)?;
    println!("wrote k={} vocabulary to {}", vocab.k(), a.out.display());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    let ds = load_dataset(&a.dataset)?;
    let report = run_setting(&ds, &cfg, a.setting, None)?;
    create_dir(&a.out)?;
    write(&a.out.join("report.json"), &to_json(&report))?;
    write(&a.out.join("report.csv"), reports_to_csv(std::slice::from_ref(&report)).as_bytes())?;
    println!(
        "{} {}: accuracy {:.4} +- {:.4} (chance {})",
        ds.task, a.setting, report.mean_accuracy, report.std_accuracy, report.chance
    );
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    let grid = SweepGrid {
        ms: a.m_grid.clone(),
        ks: a.k_grid.clone(),
        sampling: a.sampling_grid.iter().map(|&s| s.into()).collect(),
    };
    let ds = load_dataset(&a.dataset)?;
    let mut settings = a.settings.clone();
    settings.sort_by_key(|s| s.name());
    settings.dedup();
    let mut cells = Vec::new();
    let mut summaries = Vec::new();
    for &setting in &settings {
        let res = sweep(&ds, &grid, setting, &cfg)?;
        cells.extend(res.cells);
        summaries.extend(res.summaries);
    }
    create_dir(&a.out)?;
    write(&a.out.join("cells.csv"), summary_to_csv(&cells).as_bytes())?;
    write(&a.out.join("folds.csv"), reports_to_csv(&cells).as_bytes())?;
    write(&a.out.join("summary.csv"), summary_to_csv(&summaries).as_bytes())?;
    #[derive(Serialize)]
    struct SweepFile<'a> {
        grid: &'a SweepGrid,
        config: &'a EvalConfig,
        cells: &'a [gaze_target::protocol::AccuracyReport],
        summaries: &'a [gaze_target::protocol::AccuracyReport],
    }
    let file = SweepFile { grid: &grid, config: &cfg, cells: &cells, summaries: &summaries };
    write(&a.out.join("sweep.json"), &to_json(&file))?;
    println!("ran {} cells into {}", cells.len(), a.out.display());
    Ok(())
}

fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let stats = fixation_stats(&ds, a.participants.as_deref());
    let json = to_json(&stats);
    match &a.out {
        Some(path) => write(path, &json)?,
        None => print!("{}", String::from_utf8_lossy(&json)),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Pool(a) => cmd_pool(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::TrainVocab(a) => cmd_train_vocab(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Stats(a) => cmd_stats(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(CliError::Usage(format!("thread pool: {e}"))),
        },
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if cli.json_errors {
                let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
                eprintln!("{line}");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(2)
        }
    }
}
