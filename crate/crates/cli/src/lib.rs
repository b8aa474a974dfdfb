//! The `aivat` command line: simulate toy corpora, commit heuristics, evaluate
//! with variance-reduced estimators, run the pathology attacks and the
//! embedded verification suite.

pub mod check;
pub mod config;
pub mod corpus;
pub mod domain;
pub mod error;
pub mod evaluate;
pub mod heuristic;
pub mod pathology;
pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Command, RunConfig};
pub use error::{CliError, Result};

#[derive(Parser, Debug)]
#[command(name = "aivat", version, about = "Variance-reduced agent evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Generate a deterministic Kuhn, Leduc or synthetic hold'em corpus.
    Simulate(Flags),
    /// Fit a heuristic on a training corpus and write a committed model file.
    Train(Flags),
    /// Per-player win rates with standard errors and one-sided t-tests.
    Eval(Flags),
    /// Variance or t-statistic attack on a fixed sample.
    Pathology(Flags),
    /// Run the embedded verification suite.
    Check(Flags),
}

/// Every flag; each also works as a `key = value` line in `--config`.
#[derive(Args, Debug, Default)]
struct Flags {
    /// Flat `key = value` settings file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    output: Option<String>,
    /// Per-hand estimates CSV (eval).
    #[arg(long)]
    per_hand: Option<String>,
    /// Final-row CSV (pathology).
    #[arg(long)]
    report: Option<String>,
    /// Committed heuristic written by `train` (eval).
    #[arg(long)]
    model: Option<String>,
    /// kuhn, leduc or holdem (simulate).
    #[arg(long)]
    game: Option<String>,
    #[arg(long)]
    hands: Option<String>,
    #[arg(long)]
    players: Option<String>,
    /// uniform or random:SEED (simulate).
    #[arg(long)]
    profile: Option<String>,
    /// raw, mivat or aivat.
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated players whose strategies aivat may use.
    #[arg(long)]
    known: Option<String>,
    /// zero, tabular, wb-linear or bayes-linear.
    #[arg(long)]
    heuristic: Option<String>,
    /// uniform or ivw.
    #[arg(long)]
    weighting: Option<String>,
    #[arg(long)]
    kfold: Option<String>,
    #[arg(long)]
    train_subsample: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// variance or tstat (pathology).
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    mu0: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    beta1: Option<String>,
    #[arg(long)]
    beta2: Option<String>,
    #[arg(long)]
    weight_decay: Option<String>,
    #[arg(long)]
    variance_floor: Option<String>,
    /// Tracked chance events: comma list of hole, flop, turn, river, or none.
    #[arg(long)]
    track: Option<String>,
    /// pot-hs-pow, pot-hs-all-pow or pot-pow-hs.
    #[arg(long)]
    form: Option<String>,
    #[arg(long)]
    hs_samples: Option<String>,
    #[arg(long)]
    ridge: Option<String>,
    #[arg(long)]
    prior_scale: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    /// Evaluate even when the heuristic saw the evaluation corpus.
    #[arg(long)]
    allow_insample: bool,
    #[arg(long)]
    explain: bool,
    /// Aligned tables instead of CSV on stdout.
    #[arg(long)]
    pretty: bool,
    #[arg(long, hide = true)]
    corrupt_coefficient: bool,
}

impl Flags {
    fn settings(&self) -> Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(path) => config::load_config_file(path)?,
            None => BTreeMap::new(),
        };
        let values = [
            ("input", &self.input),
            ("output", &self.output),
            ("per-hand", &self.per_hand),
            ("report", &self.report),
            ("model", &self.model),
            ("game", &self.game),
            ("hands", &self.hands),
            ("players", &self.players),
            ("profile", &self.profile),
            ("scheme", &self.scheme),
            ("known", &self.known),
            ("heuristic", &self.heuristic),
            ("weighting", &self.weighting),
            ("kfold", &self.kfold),
            ("train-subsample", &self.train_subsample),
            ("seed", &self.seed),
            ("objective", &self.objective),
            ("mu0", &self.mu0),
            ("iters", &self.iters),
            ("lr", &self.lr),
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
            ("weight-decay", &self.weight_decay),
            ("variance-floor", &self.variance_floor),
            ("track", &self.track),
            ("form", &self.form),
            ("hs-samples", &self.hs_samples),
            ("ridge", &self.ridge),
            ("prior-scale", &self.prior_scale),
            ("noise", &self.noise),
        ];
        for (key, value) in values {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        for (key, set) in [
            ("allow-insample", self.allow_insample),
            ("explain", self.explain),
            ("pretty", self.pretty),
        ] {
            if set {
                map.insert(key.to_string(), "true".to_string());
            }
        }
        Ok(map)
    }
}

/// Builds the run configuration for a parsed argument list.
fn configure(sub: Sub) -> Result<RunConfig> {
    let (command, flags) = match sub {
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::Train(f) => (Command::Train, f),
        Sub::Eval(f) => (Command::Eval, f),
        Sub::Pathology(f) => (Command::Pathology, f),
        Sub::Check(f) => (Command::Check, f),
    };
    let mut config = RunConfig::from_map(command, &flags.settings()?)?;
    config.corrupt_coefficient = flags.corrupt_coefficient;
    Ok(config)
}

/// Runs a command and returns what it prints on stdout.
pub fn execute(config: &RunConfig) -> Result<String> {
    match config.command {
        Command::Simulate => corpus::cmd_simulate(config),
        Command::Train => heuristic::cmd_train(config),
        Command::Eval => evaluate::cmd_eval(config),
        Command::Pathology => pathology::cmd_pathology(config),
        Command::Check => check::cmd_check(config),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match configure(cli.command).and_then(|c| execute(&c)) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            let _ = stdout.flush();
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
