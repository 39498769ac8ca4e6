//! `mrhydro`: command-line front end for the actuation-line model.
//!
//! Exit codes: 0 success, 1 runtime or numeric failure (divergence, root finder,
//! unwritable output), 2 usage or configuration error.

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mrhydro_core::params::{load_config, LineConfig, LoadImpedance};

use output::{sha256_hex, RunHeader, Sink};

#[derive(Parser, Debug)]
#[command(name = "mrhydro", version, about = "Transfer-function analysis and force-control simulation of an MR-clutch hydrostatic actuation line")]
struct Cli {
    /// Line config file (`key = value` lines); built-in defaults when absent.
    #[arg(long, global = true, env = "MRHYD_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bode table of the analytical current-to-output forms.
    Bode(BodeArgs),
    /// -3 dB bandwidth of both analytical forms.
    Bandwidth(LoadOut),
    /// Poles and zeros of the analytical forms.
    Poles(PolesArgs),
    /// Closed-loop poles under proportional feedback on one channel.
    Rootlocus(RootLocusArgs),
    /// Open-loop FRF estimated from a simulated chirp, beside the model.
    Frf(FrfArgs),
    /// Reflected fluid mass from hose geometry.
    DeriveParams(DeriveArgs),
    /// Time-domain run of one controller.
    Simulate(SimulateArgs),
    /// All three controllers on the same reference.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LoadChoice {
    /// Whatever the config file specifies.
    Config,
    Blocked,
    /// The config's compliant load, or the bench load if the config is blocked.
    Compliant,
}

impl LoadChoice {
    pub fn resolve(self, cfg: &LineConfig) -> LoadImpedance {
        match (self, cfg.load) {
            (LoadChoice::Config, z) => z,
            (LoadChoice::Blocked, _) => LoadImpedance::Blocked,
            (LoadChoice::Compliant, z @ LoadImpedance::Compliant { .. }) => z,
            (LoadChoice::Compliant, LoadImpedance::Blocked) => LoadImpedance::bench(),
        }
    }
}

#[derive(Args, Debug)]
pub struct LoadOut {
    #[arg(long, value_enum, default_value = "config")]
    pub load: LoadChoice,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TfChoice {
    Hf,
    Hp,
    Both,
}

#[derive(Args, Debug)]
pub struct BodeArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub tf: TfChoice,
    #[arg(long, default_value_t = 0.1)]
    pub fmin: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub fmax: f64,
    #[arg(long, default_value_t = 500)]
    pub points: usize,
    #[command(flatten)]
    pub io: LoadOut,
}

#[derive(Args, Debug)]
pub struct PolesArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub tf: TfChoice,
    #[command(flatten)]
    pub io: LoadOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LoopChoice {
    Force,
    Pressure,
}

#[derive(Args, Debug)]
pub struct RootLocusArgs {
    #[arg(long = "loop", value_enum, default_value = "pressure")]
    pub channel: LoopChoice,
    #[command(flatten)]
    pub io: LoadOut,
}

#[derive(Args, Debug)]
pub struct FrfArgs {
    #[arg(long, value_enum, default_value = "force")]
    pub channel: LoopChoice,
    /// Chirp length, s.
    #[arg(long, default_value_t = 120.0)]
    pub duration: f64,
    #[command(flatten)]
    pub io: LoadOut,
}

#[derive(Args, Debug)]
pub struct DeriveArgs {
    /// m; config value when absent.
    #[arg(long)]
    pub hose_length: Option<f64>,
    /// Inner diameter, m.
    #[arg(long)]
    pub hose_diameter: Option<f64>,
    /// kg/m³
    #[arg(long)]
    pub fluid_density: Option<f64>,
    /// Piston area the fluid mass is reflected to, m².
    #[arg(long)]
    pub cylinder_area: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignalChoice {
    /// 50 N to 250 N at 0.5 s.
    Step,
    /// 150 ± 100 N log chirp, 0.1 to 6 Hz over 20 s.
    Chirp,
    /// The step, then the chirp.
    Mixed,
    /// 23 N hold under a seeded load disturbance.
    Drill,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "mixed")]
    pub signal: SignalChoice,
    /// Run length, s; the signal's natural length when absent.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Disturbance seed for `--signal drill`.
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "config")]
    pub load: LoadChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerChoice {
    Open,
    ForcePi,
    PressurePi,
}

impl ControllerChoice {
    pub fn name(self) -> &'static str {
        match self {
            ControllerChoice::Open => "open",
            ControllerChoice::ForcePi => "force-pi",
            ControllerChoice::PressurePi => "pressure-pi",
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "force-pi")]
    pub controller: ControllerChoice,
    /// Proportional gain, A/N; tuned when absent (requires --ki).
    #[arg(long, requires = "ki")]
    pub kp: Option<f64>,
    /// Integral gain, A/(N·s).
    #[arg(long, requires = "kp")]
    pub ki: Option<f64>,
    #[command(flatten)]
    pub run: RunArgs,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Directory for the metrics table and one trace per controller; the
    /// metrics table goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Core(mrhydro_core::Error),
    Usage(String),
    Io(String),
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Io(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<mrhydro_core::Error> for CliError {
    fn from(e: mrhydro_core::Error) -> Self {
        CliError::Core(e)
    }
}

/// The invocation minus output and config paths, which must not change the run identity.
fn canonical_command(args: &[String]) -> String {
    let mut kept = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" || a == "--config" {
            it.next();
        } else if !(a.starts_with("--out=") || a.starts_with("--config=")) {
            kept.push(a.as_str());
        }
    }
    kept.join(" ")
}

struct Loaded {
    config: LineConfig,
    source: String,
    digest: String,
}

fn load(path: Option<&Path>) -> Result<Loaded, CliError> {
    let Some(path) = path else {
        return Ok(Loaded { config: LineConfig::default(), source: "defaults".into(), digest: "defaults".into() });
    };
    let bytes = std::fs::read(path)
        .map_err(|e| mrhydro_core::Error::Io { path: path.display().to_string(), msg: e.to_string() })?;
    let config = load_config(path)?;
    Ok(Loaded { config, source: path.display().to_string(), digest: format!("sha256:{}", sha256_hex(&bytes)) })
}

fn run(cli: Cli, argv: &[String]) -> Result<(), CliError> {
    let loaded = load(cli.config.as_deref())?;
    let header = RunHeader::new(canonical_command(argv), loaded.digest.clone());
    let cfg = &loaded.config;
    // (report, load used, output path, output is a directory)
    let (report, z, out, to_dir) = match &cli.command {
        Command::Bode(a) => {
            let z = a.io.load.resolve(cfg);
            (commands::bode(cfg, &z, a)?, z, &a.io.out, false)
        }
        Command::Bandwidth(a) => {
            let z = a.load.resolve(cfg);
            (commands::bandwidth(cfg, &z)?, z, &a.out, false)
        }
        Command::Poles(a) => {
            let z = a.io.load.resolve(cfg);
            (commands::poles(cfg, &z, a.tf)?, z, &a.io.out, false)
        }
        Command::Rootlocus(a) => {
            let z = a.io.load.resolve(cfg);
            (commands::rootlocus(cfg, &z, a.channel)?, z, &a.io.out, false)
        }
        Command::Frf(a) => {
            let z = a.io.load.resolve(cfg);
            (commands::frf(cfg, &z, a)?, z, &a.io.out, false)
        }
        Command::DeriveParams(a) => (commands::derive_params(cfg, a)?, cfg.load, &a.out, false),
        Command::Simulate(a) => {
            let z = a.run.load.resolve(cfg);
            (commands::simulate(cfg, &z, a)?, z, &a.out, false)
        }
        Command::Compare(a) => {
            let z = a.run.load.resolve(cfg);
            (commands::compare(cfg, &z, &a.run)?, z, &a.out, true)
        }
    };
    let sink = Sink { header: &header, config: cfg, config_source: &loaded.source, load: &z };
    if to_dir {
        sink.emit_dir(&report, out.as_deref())
    } else {
        sink.emit_file(&report, out.as_deref())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mrhydro: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
