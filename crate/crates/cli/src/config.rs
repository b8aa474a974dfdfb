//! Run configuration: flags merged over an optional flat `key = value` file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use aivat::heuristics::FeatureForm;
use aivat::pathology::AdamConfig;
use aivat::stats::Scheme;
use aivat_poker::TrackedEvents;

use crate::error::{read_file, usage, Result};

/// Every key accepted in a config file; each mirrors a long flag.
pub const KEYS: &[&str] = &[
    "input",
    "output",
    "per-hand",
    "report",
    "model",
    "game",
    "hands",
    "players",
    "profile",
    "scheme",
    "known",
    "heuristic",
    "weighting",
    "kfold",
    "train-subsample",
    "seed",
    "objective",
    "mu0",
    "iters",
    "lr",
    "beta1",
    "beta2",
    "weight-decay",
    "variance-floor",
    "track",
    "form",
    "hs-samples",
    "ridge",
    "prior-scale",
    "noise",
    "allow-insample",
    "explain",
    "pretty",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Train,
    Eval,
    Pathology,
    Check,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameKind {
    Kuhn,
    Leduc,
    Holdem,
}

impl FromStr for GameKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kuhn" => Ok(GameKind::Kuhn),
            "leduc" => Ok(GameKind::Leduc),
            "holdem" => Ok(GameKind::Holdem),
            _ => Err(format!("unknown game `{s}` (kuhn, leduc, holdem)")),
        }
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameKind::Kuhn => "kuhn",
            GameKind::Leduc => "leduc",
            GameKind::Holdem => "holdem",
        })
    }
}

/// Strategy profile used to simulate a toy-game corpus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileSpec {
    Uniform,
    Random(u64),
}

impl FromStr for ProfileSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(ProfileSpec::Uniform),
            _ => s
                .strip_prefix("random:")
                .and_then(|n| n.parse().ok())
                .map(ProfileSpec::Random)
                .ok_or_else(|| format!("unknown profile `{s}` (uniform or random:SEED)")),
        }
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Uniform => f.write_str("uniform"),
            ProfileSpec::Random(s) => write!(f, "random:{s}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorScheme {
    Raw,
    Mivat,
    Aivat,
}

impl FromStr for EstimatorScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "raw" => Ok(EstimatorScheme::Raw),
            "mivat" => Ok(EstimatorScheme::Mivat),
            "aivat" => Ok(EstimatorScheme::Aivat),
            _ => Err(format!("unknown scheme `{s}` (raw, mivat, aivat)")),
        }
    }
}

impl fmt::Display for EstimatorScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorScheme::Raw => "raw",
            EstimatorScheme::Mivat => "mivat",
            EstimatorScheme::Aivat => "aivat",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeuristicKind {
    Zero,
    Tabular,
    WbLinear,
    BayesLinear,
}

impl FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero" => Ok(HeuristicKind::Zero),
            "tabular" => Ok(HeuristicKind::Tabular),
            "wb-linear" => Ok(HeuristicKind::WbLinear),
            "bayes-linear" => Ok(HeuristicKind::BayesLinear),
            _ => Err(format!("unknown heuristic `{s}` (zero, tabular, wb-linear, bayes-linear)")),
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeuristicKind::Zero => "zero",
            HeuristicKind::Tabular => "tabular",
            HeuristicKind::WbLinear => "wb-linear",
            HeuristicKind::BayesLinear => "bayes-linear",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    Variance,
    TStat,
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "variance" => Ok(Objective::Variance),
            "tstat" => Ok(Objective::TStat),
            _ => Err(format!("unknown objective `{s}` (variance, tstat)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub per_hand: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub game: GameKind,
    pub hands: usize,
    pub players: usize,
    pub profile: ProfileSpec,
    pub scheme: EstimatorScheme,
    /// Players whose strategies the aivat scheme may use; `None` for all.
    pub known: Option<Vec<usize>>,
    pub heuristic: HeuristicKind,
    pub weighting: Scheme,
    pub kfold: usize,
    pub train_subsample: Option<usize>,
    pub seed: u64,
    pub objective: Objective,
    pub mu0: f64,
    pub adam: AdamConfig,
    pub variance_floor: f64,
    pub track: TrackedEvents,
    pub form: FeatureForm,
    pub hs_samples: usize,
    pub ridge: f64,
    pub prior_scale: f64,
    /// Observation noise for bayes-linear; `None` uses the target variance.
    pub noise: Option<f64>,
    pub allow_insample: bool,
    pub explain: bool,
    pub pretty: bool,
    /// Test hook: perturb one coefficient before the zero-sum check.
    pub corrupt_coefficient: bool,
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = k.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(usage(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_config_file(&read_file(path)?)
}

fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|e| usage(format!("--{key} {v}: {e}"))))
        .transpose()
}

fn flag(map: &BTreeMap<String, String>, key: &str) -> Result<bool> {
    match map.get(key).map(String::as_str) {
        None | Some("false") | Some("0") | Some("no") => Ok(false),
        Some("true") | Some("1") | Some("yes") | Some("") => Ok(true),
        Some(v) => Err(usage(format!("--{key}: expected true or false, got `{v}`"))),
    }
}

impl RunConfig {
    /// Builds a validated config from merged key/value settings.
    pub fn from_map(command: Command, map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(usage(format!("unknown setting `{k}`")));
        }
        let scheme: EstimatorScheme = get(map, "scheme")?.unwrap_or(EstimatorScheme::Mivat);
        let default_heuristic = if scheme == EstimatorScheme::Raw {
            HeuristicKind::Zero
        } else {
            HeuristicKind::BayesLinear
        };
        let objective = get(map, "objective")?.unwrap_or(Objective::Variance);
        let mut adam = match objective {
            Objective::Variance => AdamConfig::variance_attack(),
            Objective::TStat => AdamConfig::t_attack(),
        };
        if let Some(v) = get(map, "iters")? {
            adam.iterations = v;
        }
        if let Some(v) = get(map, "lr")? {
            adam.learning_rate = v;
        }
        if let Some(v) = get(map, "beta1")? {
            adam.beta1 = v;
        }
        if let Some(v) = get(map, "beta2")? {
            adam.beta2 = v;
        }
        if let Some(v) = get(map, "weight-decay")? {
            adam.weight_decay = v;
        }
        adam.validate().map_err(|e| usage(e.to_string()))?;
        let known = map
            .get("known")
            .map(|s| {
                s.split(',')
                    .map(|p| p.trim().parse::<usize>().map_err(|_| usage(format!("--known: bad player `{p}`"))))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let track = match map.get("track") {
            Some(s) => s.parse().map_err(|e: aivat_poker::PokerError| usage(e.to_string()))?,
            None => TrackedEvents::default(),
        };
        let form = match map.get("form") {
            Some(s) => s.parse().map_err(|e: aivat::Error| usage(e.to_string()))?,
            None => FeatureForm::default(),
        };
        let weighting = match map.get("weighting") {
            Some(s) => s.parse().map_err(|e: aivat::Error| usage(e.to_string()))?,
            None => Scheme::Uniform,
        };
        let config = RunConfig {
            command,
            input: get(map, "input")?,
            output: get(map, "output")?,
            per_hand: get(map, "per-hand")?,
            report: get(map, "report")?,
            model: get(map, "model")?,
            game: get(map, "game")?.unwrap_or(GameKind::Kuhn),
            hands: get(map, "hands")?.unwrap_or(1000),
            players: get(map, "players")?.unwrap_or(2),
            profile: get(map, "profile")?.unwrap_or(ProfileSpec::Uniform),
            scheme,
            known,
            heuristic: get(map, "heuristic")?.unwrap_or(default_heuristic),
            weighting,
            kfold: get(map, "kfold")?.unwrap_or(10),
            train_subsample: get(map, "train-subsample")?,
            seed: get(map, "seed")?.unwrap_or(0),
            objective,
            mu0: get(map, "mu0")?.unwrap_or(0.0),
            adam,
            variance_floor: get(map, "variance-floor")?.unwrap_or(0.0),
            track,
            form,
            hs_samples: get(map, "hs-samples")?.unwrap_or(aivat_poker::strength::DEFAULT_MC_SAMPLES),
            ridge: get(map, "ridge")?.unwrap_or(0.0),
            prior_scale: get(map, "prior-scale")?.unwrap_or(1e6),
            noise: get(map, "noise")?,
            allow_insample: flag(map, "allow-insample")?,
            explain: flag(map, "explain")?,
            pretty: flag(map, "pretty")?,
            corrupt_coefficient: false,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.weighting == Scheme::Ivw && self.heuristic != HeuristicKind::BayesLinear {
            return Err(usage(format!(
                "--weighting ivw needs per-hand variances, which only the bayes-linear heuristic provides (got {})",
                self.heuristic
            )));
        }
        if self.kfold < 2 {
            return Err(usage("--kfold must be at least 2"));
        }
        if !(self.variance_floor >= 0.0 && self.variance_floor.is_finite()) {
            return Err(usage("--variance-floor must be a non-negative number"));
        }
        if self.hs_samples == 0 {
            return Err(usage("--hs-samples must be positive"));
        }
        if !(self.prior_scale > 0.0) || self.noise.is_some_and(|n| !(n > 0.0)) {
            return Err(usage("--prior-scale and --noise must be positive"));
        }
        if !(self.ridge >= 0.0) {
            return Err(usage("--ridge must be non-negative"));
        }
        if !(2..=aivat_poker::history::MAX_SEATS).contains(&self.players) {
            return Err(usage("--players must be between 2 and 6"));
        }
        let needs_input = matches!(self.command, Command::Train | Command::Eval | Command::Pathology);
        if needs_input && self.input.is_none() {
            return Err(usage("--input is required"));
        }
        if matches!(self.command, Command::Simulate | Command::Train) && self.output.is_none() {
            return Err(usage("--output is required"));
        }
        Ok(())
    }
}
