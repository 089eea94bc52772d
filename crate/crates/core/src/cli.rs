//! Command line front end.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O error,
//! 3 numeric failure (training divergence).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{DatasetError, LabeledDataset};
use crate::folding::{FoldingError, FoldingReport};
use crate::global::{global_phi, GlobalConfig, GlobalError, DEFAULT_BUDGET_PER_PAIR};
use crate::network::{load_model, save_model, Mlp, ModelError};
use crate::sampler::{SampleError, SamplerConfig, DEFAULT_DELTA_INIT, DEFAULT_DELTA_MIN};
use crate::trainer::{make_dataset, train_on, TrainConfig, TrainError};

pub const THREADS_ENV: &str = "FOLDSCOPE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "foldscope", version, about = "Space-folding measures of feed-forward networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Walk the segment between two points and emit the activation patterns.
    Sample(SegmentArgs),
    /// Folding report of the segment between two points.
    Chi(ChiArgs),
    /// Global folding measure over the class pairs of a dataset.
    Global(GlobalArgs),
    /// Train a network on a synthetic task.
    Train(TrainArgs),
    /// Train one network per depth and tabulate accuracy and global folding.
    DepthSweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SamplerArgs {
    /// Initial step size in segment parameter units.
    #[arg(long, default_value_t = DEFAULT_DELTA_INIT)]
    pub dinit: f64,
    /// Minimal step size.
    #[arg(long, default_value_t = DEFAULT_DELTA_MIN)]
    pub dmin: f64,
}

impl SamplerArgs {
    fn config(&self) -> SamplerConfig {
        SamplerConfig {
            delta_init: self.dinit,
            delta_min: self.dmin,
        }
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Start point, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    /// End point, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub to: String,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ChiArgs {
    #[command(flatten)]
    pub segment: SegmentArgs,
    /// Also report the log-sum-exp surrogate of r1 at this temperature.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with header x_0,…,x_{d-1},label.
    #[arg(long)]
    pub data: PathBuf,
    /// Sample pairs drawn per ordered class pair.
    #[arg(long, default_value_t = DEFAULT_BUDGET_PER_PAIR)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// JSON report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-pair CSV path; defaults to the report path with a .csv extension.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML training configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_model: PathBuf,
    /// Per-epoch CSV (epoch,loss,accuracy,phi,penalty).
    #[arg(long)]
    pub out_history: PathBuf,
    /// Overrides the configuration's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pairs per class pair for the final global folding estimate.
    #[arg(long, default_value_t = 50)]
    pub phi_budget: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML training configuration; its first hidden width is reused at
    /// every depth.
    #[arg(long)]
    pub config: PathBuf,
    /// Hidden layer counts, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub depths: Vec<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 50)]
    pub phi_budget: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io(source) => CliError::Io {
                path: "model".into(),
                source,
            },
            other => usage(other),
        }
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> Self {
        match e {
            SampleError::Model(m) => m.into(),
            other => usage(other),
        }
    }
}

impl From<FoldingError> for CliError {
    fn from(e: FoldingError) -> Self {
        usage(e)
    }
}

impl From<GlobalError> for CliError {
    fn from(e: GlobalError) -> Self {
        match e {
            GlobalError::Sample(s) => s.into(),
            other => usage(other),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Diverged { .. } => CliError::Numeric(e.to_string()),
            TrainError::Model(m) => m.into(),
            other => usage(other),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Csv(c) if c.is_io_error() => match c.into_kind() {
                csv::ErrorKind::Io(source) => CliError::Io {
                    path: "dataset".into(),
                    source,
                },
                _ => unreachable!("checked is_io_error"),
            },
            other => usage(other),
        }
    }
}

/// Parses `"0.5,-1,2e-3"` into a point of dimension `dim`.
pub fn parse_point(text: &str, dim: usize) -> Result<Vec<f64>, CliError> {
    let values = text
        .split(',')
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| usage(format!("invalid coordinate '{}' in point '{text}'", s.trim())))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(usage(format!("non-finite coordinate in point '{text}'")))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != dim {
        return Err(usage(format!(
            "point '{text}' has dimension {}, model expects input dimension {dim}",
            values.len()
        )));
    }
    Ok(values)
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn read_model(path: &Path) -> Result<Mlp<f64>, CliError> {
    load_model(open(path)?).map_err(|e| match e {
        ModelError::Io(source) => CliError::io(path, source),
        other => usage(format!("{}: {other}", path.display())),
    })
}

fn read_dataset(path: &Path) -> Result<LabeledDataset<f64>, CliError> {
    LabeledDataset::read_csv(open(path)?).map_err(|e| match CliError::from(e) {
        CliError::Usage(msg) => usage(format!("{}: {msg}", path.display())),
        CliError::Io { source, .. } => CliError::io(path, source),
        other => other,
    })
}

fn read_config(path: &Path) -> Result<TrainConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    TrainConfig::from_toml(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => stdout
            .write_all(bytes)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
    bytes.push(b'\n');
    bytes
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>) -> Vec<u8> {
    let mut bytes = Vec::new();
    write(&mut bytes).expect("writing csv to memory");
    bytes
}

fn segment(args: &SegmentArgs) -> Result<crate::sampler::PathSample, CliError> {
    let net = read_model(&args.model)?;
    let from = parse_point(&args.from, net.input_dim())?;
    let to = parse_point(&args.to, net.input_dim())?;
    Ok(args.sampler.config().sample(&net, &from, &to)?)
}

pub fn cmd_sample(args: &SegmentArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let path = segment(args)?;
    let bytes = match args.format {
        Format::Json => to_json(&path),
        Format::Csv => csv_bytes(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["entry_t", "pattern"])?;
            for (t, p) in path.entry_ts().iter().zip(path.patterns()) {
                w.write_record([t.to_string(), p.to_string()])?;
            }
            w.flush()?;
            Ok(())
        }),
    };
    emit(args.out.as_deref(), &bytes, stdout)
}

pub fn cmd_chi(args: &ChiArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let path = segment(&args.segment)?;
    let mut report = FoldingReport::from_path(&path)?;
    if let Some(beta) = args.beta {
        report = report.with_smooth_r1(&path, beta)?;
    }
    let bytes = match args.segment.format {
        Format::Json => to_json(&report),
        Format::Csv => csv_bytes(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record([
                "r1", "r2", "chi", "chi_decimal", "chi_reversed", "chi_reversed_decimal",
                "n_patterns", "flat",
            ])?;
            w.write_record([
                report.r1.to_string(),
                report.r2.to_string(),
                report.chi.to_string(),
                report.chi_decimal.to_string(),
                report.chi_reversed.to_string(),
                report.chi_reversed_decimal.to_string(),
                report.n_patterns.to_string(),
                report.flat.to_string(),
            ])?;
            w.flush()?;
            Ok(())
        }),
    };
    emit(args.segment.out.as_deref(), &bytes, stdout)
}

pub fn cmd_global(args: &GlobalArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let net = read_model(&args.model)?;
    let data = read_dataset(&args.data)?;
    if data.dim() != net.input_dim() {
        return Err(usage(format!(
            "dataset has dimension {}, model expects input dimension {}",
            data.dim(),
            net.input_dim()
        )));
    }
    let config = GlobalConfig {
        budget_per_pair: args.budget,
        seed: args.seed,
        sampler: args.sampler.config(),
    };
    let report = global_phi(&net, &data, &config)?;
    emit(args.out.as_deref(), &to_json(&report), stdout)?;
    let csv_path = args
        .csv
        .clone()
        .or_else(|| args.out.as_ref().map(|p| p.with_extension("csv")));
    let table = csv_bytes(|buf| report.write_pair_csv(buf));
    match csv_path {
        Some(path) => emit(Some(&path), &table, stdout),
        None => emit(None, &table, stdout),
    }
}

fn final_phi(net: &Mlp<f64>, data: &LabeledDataset<f64>, budget: usize, seed: u64) -> Result<f64, CliError> {
    let config = GlobalConfig {
        budget_per_pair: budget,
        seed,
        sampler: SamplerConfig::default(),
    };
    Ok(global_phi(net, data, &config)?.phi_decimal)
}

pub fn cmd_train(args: &TrainArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut config = read_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let data = make_dataset::<f64>(
        config.dataset.task,
        config.dataset.n_samples,
        config.dataset.noise,
        config.seed,
    )?;
    let (net, history) = train_on(&config, &data)?;
    let phi = final_phi(&net, &data, args.phi_budget, config.seed)?;

    let mut model = Vec::new();
    save_model(&net, &mut model)?;
    emit(Some(&args.out_model), &model, stdout)?;
    emit(Some(&args.out_history), &csv_bytes(|buf| history.write_csv(buf)), stdout)?;
    writeln!(
        stdout,
        "final_accuracy={} final_phi={phi}",
        history.final_accuracy()
    )
    .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub depth: usize,
    pub accuracy: f64,
    pub phi: f64,
}

pub fn cmd_depth_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut template = read_config(&args.config)?;
    if let Some(seed) = args.seed {
        template.seed = seed;
    }
    if template.layer_widths.len() < 3 {
        return Err(usage("depth sweep template needs at least one hidden layer"));
    }
    if args.depths.is_empty() || args.depths.contains(&0) {
        return Err(usage("depths must be positive"));
    }
    let hidden = template.layer_widths[1];
    let input = template.layer_widths[0];
    let output = *template.layer_widths.last().unwrap();
    let data = make_dataset::<f64>(
        template.dataset.task,
        template.dataset.n_samples,
        template.dataset.noise,
        template.seed,
    )?;

    let rows = args
        .depths
        .par_iter()
        .map(|&depth| {
            let mut config = template.clone();
            config.layer_widths = std::iter::once(input)
                .chain(std::iter::repeat_n(hidden, depth))
                .chain(std::iter::once(output))
                .collect();
            let (net, history) = train_on(&config, &data)?;
            Ok(SweepRow {
                depth,
                accuracy: history.final_accuracy(),
                phi: final_phi(&net, &data, args.phi_budget, config.seed)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let table = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    });
    emit(args.out.as_deref(), &table, stdout)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| usage(format!("cannot start worker pool: {e}")))
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let pool = thread_pool()?;
    let mut buffer = Vec::new();
    let result = pool.install(|| {
        let out: &mut dyn Write = &mut buffer;
        match &cli.command {
            Command::Sample(args) => cmd_sample(args, out),
            Command::Chi(args) => cmd_chi(args, out),
            Command::Global(args) => cmd_global(args, out),
            Command::Train(args) => cmd_train(args, out),
            Command::DepthSweep(args) => cmd_depth_sweep(args, out),
        }
    });
    stdout
        .write_all(&buffer)
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    result
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_points() {
        assert_eq!(parse_point("-1, 0.5,2e-1", 3).unwrap(), vec![-1.0, 0.5, 0.2]);
        let err = parse_point("1,2", 3).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("input dimension 3"));
        assert!(parse_point("1,x", 2).is_err());
        assert!(parse_point("inf", 1).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["foldscope", "sample"], &mut out, &mut err), 1);
        assert_eq!(run(["foldscope", "bogus"], &mut out, &mut err), 1);
        assert_eq!(run(["foldscope", "--help"], &mut out, &mut err), 0);
    }
}
