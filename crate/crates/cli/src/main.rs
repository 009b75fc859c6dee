use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use consensus_kit::channel::InitialState;
use consensus_kit::report::to_canonical_json;
use consensus_kit::scenario::{parse_gain, Scenario, TheoremSelection};
use consensus_kit::Error;
use serde::Serialize;
use serde_json::Value;

const THREADS_VAR: &str = "CONSENSUS_KIT_THREADS";

/// Mean-square consensusability analysis over lossy channels.
#[derive(Parser)]
#[command(name = "consensus-kit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate consensusability criteria on a scenario.
    Analyze {
        #[arg(long, short)]
        scenario: PathBuf,
        /// Criterion to run; repeatable. Defaults to the scenario's list.
        #[arg(long, short, value_parser = parse_theorem)]
        theorem: Vec<TheoremSelection>,
        /// JSON file with a gain matrix, or a synthesize report.
        #[arg(long, short)]
        gain: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Synthesize a consensus gain.
    Synthesize {
        #[arg(long, short)]
        scenario: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Critical value of the modified Riccati equation for the model.
    GammaC {
        #[arg(long, short)]
        scenario: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo simulation of the consensus error.
    Simulate {
        #[arg(long, short)]
        scenario: PathBuf,
        #[arg(long, short)]
        gain: Option<PathBuf>,
        /// Per-step mean-square errors as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// JSON summary; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        /// `stationary` or a 0-based channel state index.
        #[arg(long, value_parser = parse_initial_state)]
        initial_state: Option<InitialState>,
    },
    /// Print the version.
    Version,
}

fn parse_theorem(s: &str) -> Result<TheoremSelection, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_initial_state(s: &str) -> Result<InitialState, String> {
    if s == "stationary" {
        return Ok(InitialState::Stationary);
    }
    s.parse()
        .map(InitialState::Fixed)
        .map_err(|_| format!("expected 'stationary' or a state index, got '{s}'"))
}

/// A failed command: message plus exit code.
struct Failure(String, u8);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) => 1,
            _ => 2,
        };
        Failure(e.to_string(), code)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display()), 2))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure(format!("cannot write {}: {e}", path.display()), 1))
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    Scenario::from_json(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display()), 2))
}

fn emit<T: Serialize>(command: &str, report: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut v = serde_json::to_value(report).map_err(|e| Failure(e.to_string(), 1))?;
    if let Value::Object(map) = &mut v {
        map.insert("command".into(), Value::String(command.into()));
        map.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    }
    let text = to_canonical_json(&v)?;
    match out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure(format!("{THREADS_VAR} must be a positive integer, got '{raw}'"), 2))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure(format!("thread pool: {e}"), 1))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Analyze {
            scenario,
            theorem,
            gain,
            out,
        } => {
            let s = load(&scenario)?;
            let gain = gain.map(|p| parse_gain(&read(&p)?).map_err(Failure::from)).transpose()?;
            let selection = if theorem.is_empty() { s.theorems.clone() } else { theorem };
            let report = s.analyze(&selection, gain.as_ref())?;
            emit("analyze", &report, out.as_deref())
        }
        Command::Synthesize { scenario, out } => {
            let report = load(&scenario)?.synthesize()?;
            emit("synthesize", &report, out.as_deref())
        }
        Command::GammaC { scenario, out } => {
            let report = load(&scenario)?.gamma_c()?;
            emit("gamma-c", &report, out.as_deref())
        }
        Command::Simulate {
            scenario,
            gain,
            csv,
            out,
            seed,
            runs,
            horizon,
            initial_state,
        } => {
            let mut s = load(&scenario)?;
            let sim = &mut s.simulation;
            sim.seed = seed.unwrap_or(sim.seed);
            sim.runs = runs.unwrap_or(sim.runs);
            sim.horizon = horizon.unwrap_or(sim.horizon);
            sim.initial_state = initial_state.unwrap_or(sim.initial_state);
            let gain = gain.map(|p| parse_gain(&read(&p)?).map_err(Failure::from)).transpose()?;
            let (result, report) = s.simulate(gain.as_ref())?;
            if let Some(p) = csv {
                write(&p, &result.to_csv())?;
            }
            emit("simulate", &report, out.as_deref())
        }
        Command::Version => {
            println!("consensus-kit {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg, code)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
