use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mlread::protocol::model::{DELTA_0, DELTA_1};
use mlread::transmon::{Level, DEFAULT_SNR};
use mlread::SystemParams;
use serde::Serialize;

use crate::commands;
use crate::manifest::{RunInputs, RunManifest, SCHEMA_VERSION};
use crate::output::Sink;

#[derive(Debug, Parser)]
#[command(name = "mlread", version, about = "Multilevel readout and repeated bosonic-code readout simulations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Device parameter file (flat TOML).
    #[arg(long, global = true, env = "MLREAD_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo trials (per logical state or per level).
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Output directory; data goes to standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Drop records with a stuck reset from the infidelity tables.
    #[arg(long, global = true)]
    pub postselect_stuck: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form majority-vote infidelity of a Fock code.
    Theory(TheoryArgs),
    #[command(subcommand)]
    Hmm(HmmCommand),
    #[command(subcommand)]
    Protocol(ProtocolCommand),
    #[command(subcommand)]
    Trajectory(TrajectoryCommand),
    /// Pi-pulse simulations and amplitude scans.
    Pulse(PulseArgs),
    /// Photon-number belief after heralding checks.
    Prepare(PrepareArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Theory(_) => "theory",
            Command::Hmm(HmmCommand::Classify(_)) => "hmm classify",
            Command::Protocol(ProtocolCommand::Run(_)) => "protocol run",
            Command::Protocol(ProtocolCommand::Qnd(_)) => "protocol qnd",
            Command::Trajectory(TrajectoryCommand::Curves(_)) => "trajectory curves",
            Command::Trajectory(TrajectoryCommand::Shelve(_)) => "trajectory shelve",
            Command::Pulse(_) => "pulse",
            Command::Prepare(_) => "prepare",
        }
    }

    fn options(&self) -> serde_json::Value {
        let v = match self {
            Command::Theory(a) => serde_json::to_value(a),
            Command::Hmm(HmmCommand::Classify(a)) => serde_json::to_value(a),
            Command::Protocol(ProtocolCommand::Run(a)) => serde_json::to_value(a),
            Command::Protocol(ProtocolCommand::Qnd(a)) => serde_json::to_value(a),
            Command::Trajectory(TrajectoryCommand::Curves(a)) => serde_json::to_value(a),
            Command::Trajectory(TrajectoryCommand::Shelve(a)) => serde_json::to_value(a),
            Command::Pulse(a) => serde_json::to_value(a),
            Command::Prepare(a) => serde_json::to_value(a),
        };
        v.expect("options serialize")
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TheoryArgs {
    /// Code distance.
    #[arg(long = "L", default_value_t = 5)]
    pub l: usize,
    #[arg(long = "N-max", default_value_t = 31)]
    pub n_max: usize,
    /// Photon loss probability per cycle.
    #[arg(long, default_value_t = 4.8e-3)]
    pub kdt: f64,
    /// Photon gain probability per cycle.
    #[arg(long, default_value_t = 2.7e-4)]
    pub kut: f64,
    #[arg(long, default_value_t = DELTA_0)]
    pub delta0: f64,
    #[arg(long, default_value_t = DELTA_1)]
    pub delta1: f64,
    /// Include even N.
    #[arg(long)]
    pub allow_even: bool,
}

#[derive(Debug, Subcommand)]
pub enum HmmCommand {
    /// Posterior over the initial photon number for each sequence in a JSONL file.
    Classify(ClassifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "fock-0-4")]
    pub code: String,
    #[arg(long, default_value_t = DELTA_0)]
    pub delta_in: f64,
    #[arg(long, default_value_t = DELTA_1)]
    pub delta_out: f64,
}

#[derive(Debug, Subcommand)]
pub enum ProtocolCommand {
    /// Logical infidelity versus number of readouts.
    Run(RunArgs),
    /// Storage lifetime versus readout interval.
    Qnd(QndArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierChoice {
    Majority,
    Mle,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    /// Four-level ancilla with feedforward reset and leakage.
    Matched,
    /// Lumped per-round vote errors, one-shot reset.
    Ideal,
}

#[derive(Debug, Args, Serialize)]
pub struct RunArgs {
    /// Codes to simulate (comma separated); all built-in codes by default.
    #[arg(long, value_delimiter = ',')]
    pub code: Vec<String>,
    #[arg(long = "N-max", default_value_t = 51)]
    pub n_max: usize,
    #[arg(long, value_enum, default_value_t = ClassifierChoice::Both)]
    pub classifier: ClassifierChoice,
    #[arg(long, value_enum, default_value_t = ModelChoice::Matched)]
    pub model: ModelChoice,
    /// Also write the first K records of each logical state as JSONL.
    #[arg(long, default_value_t = 0)]
    pub dump_sequences: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct QndArgs {
    /// Readout intervals in seconds.
    #[arg(long, value_delimiter = ',', default_value = "2e-6,4e-6,8e-6,16e-6,32e-6,64e-6")]
    pub intervals: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum TrajectoryCommand {
    /// Misassignment versus acquisition time.
    Curves(CurvesArgs),
    /// Rabi curves with and without shelving.
    Shelve(ShelveArgs),
}

fn parse_level(s: &str) -> Result<Level, String> {
    Level::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct CurvesArgs {
    /// Point radius over per-sample noise.
    #[arg(long, default_value_t = DEFAULT_SNR)]
    pub snr: f64,
    #[arg(long, default_value_t = 20e-9)]
    pub dt: f64,
    #[arg(long, default_value_t = 200e-9)]
    pub t_rise: f64,
    #[arg(long, default_value_t = 0.2e-6)]
    pub t_min: f64,
    #[arg(long, default_value_t = 30e-6)]
    pub t_max: f64,
    /// Log-spaced acquisition times between t-min and t-max.
    #[arg(long, default_value_t = 40)]
    pub points: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_level, default_value = "g,e,f,h")]
    pub levels: Vec<Level>,
    /// Raw records per level to dump at t-max (needs --out).
    #[arg(long, default_value_t = 0)]
    pub dump_records: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ShelveArgs {
    /// Amplitudes from 0 to twice the calibrated pi amplitude.
    #[arg(long, default_value_t = 81)]
    pub points: usize,
    #[arg(long, default_value_t = mlread::dynamics::DEFAULT_DT)]
    pub dt: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PulseArgs {
    #[arg(long, default_value_t = mlread::dynamics::DEFAULT_DT)]
    pub dt: f64,
    /// Also write the density-matrix trajectory of the shelving sequence.
    #[arg(long)]
    pub trajectory: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct PrepareArgs {
    #[arg(long, default_value_t = 3)]
    pub target: usize,
    #[arg(long, default_value_t = 3)]
    pub checks: usize,
    #[arg(long, default_value_t = 0.0)]
    pub initial_error: f64,
    #[arg(long, default_value_t = DELTA_0)]
    pub delta_in: f64,
    #[arg(long, default_value_t = DELTA_1)]
    pub delta_out: f64,
}

/// Shared state handed to every subcommand.
pub struct Context {
    pub params: SystemParams,
    pub seed: u64,
    pub trials: Option<u64>,
    pub postselect_stuck: bool,
    pub sink: Sink,
}

impl Context {
    pub fn trials_or(&self, default: u64) -> u64 {
        self.trials.unwrap_or(default)
    }
}

/// Marks an error as a broken invariant rather than bad input.
#[derive(Debug)]
pub struct Internal(pub String);

impl std::fmt::Display for Internal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal error: {}", self.0)
    }
}

impl std::error::Error for Internal {}

fn is_internal(err: &anyhow::Error) -> bool {
    err.chain().any(|c| {
        c.downcast_ref::<Internal>().is_some()
            || c.downcast_ref::<mlread::Error>().is_some_and(|e| e.is_internal())
    })
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let start = Instant::now();
    let g = cli.global;
    let params = SystemParams::load(g.config.as_deref()).context("loading the configuration")?;
    let mut ctx = Context {
        params,
        seed: g.seed,
        trials: g.trials,
        postselect_stuck: g.postselect_stuck,
        sink: Sink::new(g.out.clone())?,
    };
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = g.threads {
            if n == 0 {
                anyhow::bail!("--threads must be at least 1");
            }
            b = b.num_threads(n);
        }
        b.build()?
    };
    pool.install(|| commands::dispatch(&cli.command, &mut ctx))?;

    let inputs = RunInputs {
        schema_version: SCHEMA_VERSION,
        subcommand: cli.command.name().to_string(),
        options: cli.command.options(),
        config: ctx.params.clone(),
        seed: ctx.seed,
        trials: ctx.trials,
        postselect_stuck: ctx.postselect_stuck,
    };
    if let Some(dir) = ctx.sink.dir().cloned() {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_hash: inputs.hash(),
            inputs,
            outputs: ctx.sink.into_files(),
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        };
        let path = manifest.write(&dir)?;
        RunManifest::load(&path).map_err(|e| Internal(format!("manifest does not validate: {e:#}")))?;
    }
    eprintln!("done in {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}

/// Runs the CLI on `argv` and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(cli))) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            if is_internal(&e) {
                2
            } else {
                1
            }
        }
        Err(_) => 2,
    }
}
