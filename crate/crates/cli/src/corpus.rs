//! Corpus files.
//!
//! The first line may be a header comment
//! `# aivat-corpus v1 game=<kuhn|leduc|holdem> [profile=..] [seed=..] [hands=..]`.
//! Toy-game corpora then hold one `{"id", "history", "payoffs"}` record per
//! line, with payoffs in milli-big-blinds (one chip is one big blind).
//! Hold'em corpora hold one hand history per line.

use std::collections::BTreeMap;
use std::path::Path;

use aivat::game::{sample_playout, terminal_utility, Game, History, Kuhn, Leduc, StrategyProfile};
use aivat_poker::{parse_corpus, write_corpus, HandHistory};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{GameKind, ProfileSpec, RunConfig};
use crate::error::{invalid, read_file, write_file, CliError, Result};

pub const HEADER_TAG: &str = "aivat-corpus v1";

/// Chips to milli-big-blinds for the toy games.
pub const TOY_MBB_PER_CHIP: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToyGame {
    Kuhn,
    Leduc,
}

static KUHN: Kuhn = Kuhn;
static LEDUC: Leduc = Leduc;

impl ToyGame {
    pub fn game(self) -> &'static (dyn Game + Sync) {
        match self {
            ToyGame::Kuhn => &KUHN,
            ToyGame::Leduc => &LEDUC,
        }
    }

    pub fn kind(self) -> GameKind {
        match self {
            ToyGame::Kuhn => GameKind::Kuhn,
            ToyGame::Leduc => GameKind::Leduc,
        }
    }

    pub fn profile(self, spec: ProfileSpec) -> Result<StrategyProfile> {
        Ok(match spec {
            ProfileSpec::Uniform => StrategyProfile::uniform(self.game())?,
            ProfileSpec::Random(seed) => StrategyProfile::random(self.game(), seed)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyRecord {
    pub id: String,
    pub history: String,
    pub payoffs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyHand {
    pub id: String,
    pub history: History,
    pub payoffs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Corpus {
    Toy {
        game: ToyGame,
        profile: Option<ProfileSpec>,
        hands: Vec<ToyHand>,
    },
    Holdem(Vec<HandHistory>),
}

impl Corpus {
    pub fn len(&self) -> usize {
        match self {
            Corpus::Toy { hands, .. } => hands.len(),
            Corpus::Holdem(h) => h.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn game_kind(&self) -> GameKind {
        match self {
            Corpus::Toy { game, .. } => game.kind(),
            Corpus::Holdem(_) => GameKind::Holdem,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    /// Hex SHA-256 of the file bytes.
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Key/value pairs of a header line, or `None` if `line` is not a header.
pub fn parse_header(line: &str) -> Option<BTreeMap<String, String>> {
    let rest = line.strip_prefix('#')?.trim().strip_prefix(HEADER_TAG)?;
    Some(
        rest.split_whitespace()
            .filter_map(|kv| kv.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
    )
}

pub fn parse_corpus_text(text: &str) -> Result<Corpus> {
    let header = text.lines().next().and_then(parse_header).unwrap_or_default();
    let game: GameKind = match header.get("game") {
        Some(g) => g.parse().map_err(invalid)?,
        None => GameKind::Holdem,
    };
    let toy = match game {
        GameKind::Holdem => return Ok(Corpus::Holdem(parse_corpus(text)?)),
        GameKind::Kuhn => ToyGame::Kuhn,
        GameKind::Leduc => ToyGame::Leduc,
    };
    let profile = header
        .get("profile")
        .map(|p| p.parse::<ProfileSpec>().map_err(invalid))
        .transpose()?;
    let mut hands = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let rec: ToyRecord = serde_json::from_str(line)
            .map_err(|e| invalid(format!("line {}, column {}: {e}", i + 1, e.column())))?;
        let history: History = rec
            .history
            .parse()
            .map_err(|e| invalid(format!("line {}: {e}", i + 1)))?;
        let g = toy.game();
        if rec.payoffs.len() != g.num_players() {
            return Err(invalid(format!("line {}: expected {} payoffs", i + 1, g.num_players())));
        }
        for (p, &x) in rec.payoffs.iter().enumerate() {
            let u = terminal_utility(g, &history, p).map_err(|e| invalid(format!("line {}: {e}", i + 1)))?;
            if (u * TOY_MBB_PER_CHIP - x).abs() > 1e-6 {
                return Err(invalid(format!(
                    "line {}: payoff {x} for player {p} does not match the history ({})",
                    i + 1,
                    u * TOY_MBB_PER_CHIP
                )));
            }
        }
        hands.push(ToyHand {
            id: rec.id,
            history,
            payoffs: rec.payoffs,
        });
    }
    Ok(Corpus::Toy { game: toy, profile, hands })
}

pub fn load_corpus(path: &Path) -> Result<LoadedCorpus> {
    let text = read_file(path)?;
    let corpus = parse_corpus_text(&text).map_err(|e| match e {
        CliError::Validation(m) => invalid(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(LoadedCorpus {
        corpus,
        sha256: sha256_hex(text.as_bytes()),
    })
}

/// Deterministic corpus text for `config.game`, `hands` and `seed`.
pub fn simulate_text(config: &RunConfig) -> Result<String> {
    let (game, hands, seed) = (config.game, config.hands, config.seed);
    let mut header = format!("{HEADER_TAG} game={game}");
    let toy = match game {
        GameKind::Holdem => {
            let cfg = aivat_poker::SynthConfig {
                players: config.players,
                ..Default::default()
            };
            header.push_str(&format!(" players={} seed={seed} hands={hands}", config.players));
            let generated = aivat_poker::generate_holdem(hands, seed, &cfg)?;
            return Ok(write_corpus(&generated, Some(&header)));
        }
        GameKind::Kuhn => ToyGame::Kuhn,
        GameKind::Leduc => ToyGame::Leduc,
    };
    header.push_str(&format!(" profile={} seed={seed} hands={hands}", config.profile));
    let profile = toy.profile(config.profile)?;
    let g = toy.game();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!("# {header}\n");
    for i in 0..hands {
        let z = sample_playout(g, &profile, rng.next_u64())?;
        let payoffs = (0..g.num_players())
            .map(|p| terminal_utility(g, &z, p).map(|u| u * TOY_MBB_PER_CHIP))
            .collect::<aivat::Result<Vec<_>>>()?;
        let rec = ToyRecord {
            id: format!("{game}-{seed}-{i}"),
            history: z.to_string(),
            payoffs,
        };
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push('\n');
    }
    Ok(out)
}

pub fn cmd_simulate(config: &RunConfig) -> Result<String> {
    let text = simulate_text(config)?;
    let out = config.output.as_ref().expect("validated");
    write_file(out, text.as_bytes())?;
    Ok(format!("wrote {} hands to {}\n", config.hands, out.display()))
}
