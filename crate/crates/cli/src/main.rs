use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rocket_lab::series::Delimiter;
use rocket_lab::Error;
use serde::Serialize;

mod audit;
mod commands;
mod config;
mod manifest;

use config::{Resolver, TransformFlags};
use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "rocket-lab", version, about = "Random convolutional kernel features and the numerical audits behind them")]
struct Cli {
    /// Output style for stdout.
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,

    /// Master seed; every randomized step derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, env = "ROCKET_LAB_THREADS", global = true)]
    threads: Option<usize>,

    /// JSON config file or a previous run manifest. Flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Where to write the run manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DelimiterArg {
    Auto,
    Comma,
    Tab,
}

impl From<DelimiterArg> for Delimiter {
    fn from(d: DelimiterArg) -> Self {
        match d {
            DelimiterArg::Auto => Delimiter::Auto,
            DelimiterArg::Comma => Delimiter::Comma,
            DelimiterArg::Tab => Delimiter::Tab,
        }
    }
}

/// Kernel generation options shared by every command that transforms data.
#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    /// Number of random kernels L.
    #[arg(long)]
    kernels: Option<usize>,
    /// Candidate kernel lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    kernel_lengths: Option<Vec<usize>>,
    /// zero | random | circular
    #[arg(long)]
    padding: Option<String>,
    /// exp | <positive integer>
    #[arg(long)]
    dilation: Option<String>,
    /// scaled (N(0,1/K)) | centered (N(0,1), mean removed)
    #[arg(long)]
    weight_law: Option<String>,
    /// Skip per-series z-normalization.
    #[arg(long)]
    no_standardize: bool,
}

impl KernelArgs {
    pub fn flags(&self) -> TransformFlags {
        TransformFlags {
            kernels: self.kernels,
            kernel_lengths: self.kernel_lengths.clone(),
            padding: self.padding.clone(),
            dilation: self.dilation.clone(),
            weight_law: self.weight_law.clone(),
            no_standardize: self.no_standardize,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute PPV features for a dataset.
    Transform(commands::TransformArgs),
    /// Fit a ridge classifier on one dataset and score another.
    Classify(commands::ClassifyArgs),
    /// Apply a saved classifier to a dataset.
    Predict(commands::PredictArgs),
    /// Generate a synthetic two-class dataset.
    Synth(commands::SynthArgs),
    /// Numerical audits of the transform.
    #[command(subcommand)]
    Audit(audit::AuditCommand),
}

/// Per-run context handed to every command.
pub struct Ctx {
    pub format: Format,
    pub resolver: Resolver,
    manifest_path: Option<PathBuf>,
    config_path: Option<PathBuf>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    manifest: &'a RunManifest,
    report: &'a T,
}

impl Ctx {
    pub fn manifest(&self, subcommand: &str, config: config::FileConfig) -> rocket_lab::Result<RunManifest> {
        let mut m = RunManifest::new(subcommand, config, self.resolver.seed());
        if let Some(p) = &self.config_path {
            m.add_input(p)?;
        }
        Ok(m)
    }

    /// Writes the manifest (to `--manifest`, else `default_path` if any) and
    /// prints either the text summary or the JSON envelope.
    pub fn finish<T: Serialize>(
        &self,
        manifest: &RunManifest,
        report: &T,
        text: &str,
        default_path: Option<PathBuf>,
    ) -> rocket_lab::Result<()> {
        if let Some(p) = self.manifest_path.clone().or(default_path) {
            manifest.write(&p)?;
        }
        match self.format {
            Format::Text => print!("{text}"),
            Format::Json => println!(
                "{}",
                serde_json::to_string_pretty(&Envelope {
                    schema_version: rocket_lab::SCHEMA_VERSION,
                    manifest,
                    report,
                })?
            ),
        }
        Ok(())
    }
}

/// Successful commands report whether their checks held; a failed check maps
/// to exit code 1.
pub type Outcome = rocket_lab::Result<bool>;

fn run(cli: Cli) -> Outcome {
    let file = match &cli.config {
        Some(p) => config::load(p)?,
        None => config::FileConfig::default(),
    };
    let threads = cli.threads.or(file.threads).unwrap_or(0);
    // a second initialization only happens in tests; keep the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();

    let ctx = Ctx {
        format: cli.format,
        resolver: Resolver {
            file,
            seed_flag: cli.seed,
        },
        manifest_path: cli.manifest,
        config_path: cli.config,
    };
    match cli.command {
        Command::Transform(a) => commands::transform(&ctx, &a),
        Command::Classify(a) => commands::classify(&ctx, &a),
        Command::Predict(a) => commands::predict(&ctx, &a),
        Command::Synth(a) => commands::synth(&ctx, &a),
        Command::Audit(a) => audit::run(&ctx, &a),
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Io { .. } => "io",
        Error::Parse { .. } => "parse",
        Error::EmptyDataset => "empty_dataset",
        Error::InvalidSeries(_) => "invalid_series",
        Error::Span { .. } => "span",
        Error::Config(_) => "config",
        Error::Argument(_) => "argument",
        Error::Dimension(_) => "dimension",
        Error::UndefinedCoherence(_) => "undefined_coherence",
        Error::Numerical(_) => "numerical",
        Error::Json(_) => "json",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let code = if e.is_usage() { 2 } else { 1 };
            match format {
                Format::Text => eprintln!("error: {e}"),
                Format::Json => eprintln!(
                    "{}",
                    serde_json::json!({
                        "schema_version": rocket_lab::SCHEMA_VERSION,
                        "error": { "kind": error_kind(&e), "message": e.to_string(), "exit_code": code }
                    })
                ),
            }
            ExitCode::from(code)
        }
    }
}
