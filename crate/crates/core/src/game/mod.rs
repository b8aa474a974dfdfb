//! Extensive-form games: histories, strategies, reach probabilities, exact
//! enumeration and seeded playout sampling.
//!
//! Histories are canonical action-index sequences from the root. Chance deals
//! are sequential single-card chance nodes whose action index addresses the
//! remaining deck in ascending order, so every ordered deal is equally likely.

mod kuhn;
mod leduc;

pub use kuhn::Kuhn;
pub use leduc::Leduc;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Upper bound on terminal histories visited by exact enumeration.
pub const ENUMERATION_LIMIT: usize = 10_000_000;

const DISTRIBUTION_TOLERANCE: f64 = 1e-12;

/// An action-index sequence from the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct History(Vec<u8>);

impl History {
    pub fn root() -> Self {
        History(Vec::new())
    }

    pub fn from_actions(actions: impl Into<Vec<u8>>) -> Self {
        History(actions.into())
    }

    pub fn actions(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, action: usize) -> History {
        let mut next = self.0.clone();
        next.push(u8::try_from(action).expect("action index exceeds u8"));
        History(next)
    }

    pub fn prefix(&self, len: usize) -> History {
        History(self.0[..len].to_vec())
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().map(|&a| a as usize)
    }
}

/// Canonical text form: `r` for the root followed by `.`-separated indices.
impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("r")?;
        for a in &self.0 {
            write!(f, ".{a}")?;
        }
        Ok(())
    }
}

impl FromStr for History {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split('.');
        if parts.next() != Some("r") {
            return Err(Error::InvalidHistory(s.to_string()));
        }
        parts
            .map(|p| p.parse::<u8>().map_err(|_| Error::InvalidHistory(s.to_string())))
            .collect::<Result<Vec<_>>>()
            .map(History)
    }
}

/// What happens at a history.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Chance node with its fixed distribution `f_c(h, ·)` over actions.
    Chance(Vec<f64>),
    /// Decision of a non-chance player over `num_actions` actions.
    Decision { player: usize, num_actions: usize },
    /// Terminal history with one utility per player, in chips.
    Terminal(Vec<f64>),
}

impl Node {
    pub fn num_actions(&self) -> usize {
        match self {
            Node::Chance(p) => p.len(),
            Node::Decision { num_actions, .. } => *num_actions,
            Node::Terminal(_) => 0,
        }
    }
}

/// An extensive-form game addressed by [`History`].
pub trait Game: Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of non-chance players.
    fn num_players(&self) -> usize;

    fn node(&self, h: &History) -> Result<Node>;

    /// Serialized observation string of `player` at `h`.
    fn infoset_key(&self, h: &History, player: usize) -> Result<String>;

    /// All histories that differ from `h` only in the private chance outcomes
    /// of the `owners`, including `h` itself. The default treats the game as
    /// having no private information.
    fn private_variants(&self, h: &History, _owners: &[usize]) -> Result<Vec<History>> {
        self.node(h)?;
        Ok(vec![h.clone()])
    }
}

/// Games with a pot and a showdown, for feature extraction.
pub trait PotGame: Game {
    /// Chips committed to the pot at `h`.
    fn pot(&self, h: &History) -> Result<f64>;

    /// Players still contesting the pot at `h`.
    fn active(&self, h: &History) -> Result<Vec<bool>>;

    /// `(hs, hs²)` for `player` at `h`: expected probability of beating a
    /// uniformly random opponent holding, ties counted as half, and the
    /// expectation of that probability squared over unseen public cards. A
    /// player without a dealt card is averaged over the possible cards.
    fn hand_strength(&self, h: &History, player: usize) -> Result<(f64, f64)>;
}

/// A behavioural strategy: information-set key to action distribution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Strategy {
    table: HashMap<String, Vec<f64>>,
}

impl Strategy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, infoset: impl Into<String>, dist: Vec<f64>) -> Result<()> {
        let infoset = infoset.into();
        check_distribution(&dist).map_err(|msg| {
            Error::InvalidArgument(format!("distribution at `{infoset}`: {msg}"))
        })?;
        self.table.insert(infoset, dist);
        Ok(())
    }

    pub fn get(&self, infoset: &str) -> Option<&[f64]> {
        self.table.get(infoset).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

fn check_distribution(dist: &[f64]) -> std::result::Result<(), String> {
    if dist.is_empty() {
        return Err("empty".into());
    }
    if dist.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err("entries must be finite and non-negative".into());
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(format!("sums to {total}, not 1"));
    }
    Ok(())
}

/// One strategy per non-chance player.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyProfile {
    strategies: Vec<Strategy>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<Strategy>) -> Self {
        StrategyProfile { strategies }
    }

    /// Builds a profile by querying `f(player, infoset, num_actions)` at
    /// every information set of the game. Returned weights are normalised.
    pub fn from_fn<G, F>(game: &G, mut f: F) -> Result<Self>
    where
        G: Game + ?Sized,
        F: FnMut(usize, &str, usize) -> Vec<f64>,
    {
        let mut strategies = vec![Strategy::new(); game.num_players()];
        let mut stack = vec![History::root()];
        while let Some(h) = stack.pop() {
            let node = game.node(&h)?;
            if let Node::Decision {
                player,
                num_actions,
            } = node
            {
                let key = game.infoset_key(&h, player)?;
                if strategies[player].get(&key).is_none() {
                    let raw = f(player, &key, num_actions);
                    if raw.len() != num_actions {
                        return Err(Error::InvalidArgument(format!(
                            "strategy at `{key}` has {} entries, expected {num_actions}",
                            raw.len()
                        )));
                    }
                    let total: f64 = raw.iter().sum();
                    if !(total > 0.0) {
                        return Err(Error::InvalidArgument(format!(
                            "strategy weights at `{key}` do not have positive mass"
                        )));
                    }
                    let dist = raw.iter().map(|w| w / total).collect();
                    strategies[player].insert(key, dist)?;
                }
            }
            for a in 0..node.num_actions() {
                stack.push(h.child(a));
            }
        }
        Ok(StrategyProfile { strategies })
    }

    pub fn uniform<G: Game + ?Sized>(game: &G) -> Result<Self> {
        Self::from_fn(game, |_, _, n| vec![1.0; n])
    }

    /// A seeded random profile; every action keeps probability at least
    /// `0.05 / n` so all histories stay reachable.
    pub fn random<G: Game + ?Sized>(game: &G, seed: u64) -> Result<Self> {
        // Infosets are visited in DFS order, which is fixed for a given game,
        // so the draws below are reproducible.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_fn(game, |_, _, n| {
            (0..n).map(|_| 0.05 + rng.random::<f64>()).collect()
        })
    }

    pub fn strategy(&self, player: usize) -> Option<&Strategy> {
        self.strategies.get(player)
    }

    pub fn num_players(&self) -> usize {
        self.strategies.len()
    }

    /// Keeps only the strategies of `known` players.
    pub fn restrict(&self, known: &[usize]) -> PartialProfile<'_> {
        PartialProfile {
            strategies: (0..self.strategies.len())
                .map(|p| known.contains(&p).then(|| &self.strategies[p]))
                .collect(),
        }
    }

    pub fn as_partial(&self) -> PartialProfile<'_> {
        PartialProfile {
            strategies: self.strategies.iter().map(Some).collect(),
        }
    }
}

/// Strategies for a subset of players; chance is always known.
#[derive(Clone, Debug, Default)]
pub struct PartialProfile<'a> {
    strategies: Vec<Option<&'a Strategy>>,
}

impl<'a> PartialProfile<'a> {
    pub fn empty() -> Self {
        PartialProfile::default()
    }

    pub fn strategy(&self, player: usize) -> Option<&'a Strategy> {
        self.strategies.get(player).copied().flatten()
    }
}

/// Action distribution at a non-terminal `h` under the full profile.
pub(crate) fn action_distribution<'s, G: Game + ?Sized>(
    game: &G,
    strategy_of: impl Fn(usize) -> Option<&'s Strategy>,
    h: &History,
    node: &Node,
) -> Result<Vec<f64>> {
    match node {
        Node::Chance(p) => Ok(p.clone()),
        Node::Decision {
            player,
            num_actions,
        } => {
            let key = game.infoset_key(h, *player)?;
            let dist = strategy_of(*player)
                .and_then(|s| s.get(&key))
                .ok_or_else(|| Error::MissingStrategy {
                    player: *player,
                    infoset: key.clone(),
                })?;
            if dist.len() != *num_actions {
                return Err(Error::InvalidArgument(format!(
                    "strategy at `{key}` has {} actions, node has {num_actions}",
                    dist.len()
                )));
            }
            Ok(dist.to_vec())
        }
        Node::Terminal(_) => Err(Error::InvalidHistory(h.to_string())),
    }
}

/// Reach probability of a history and its per-actor factors.
#[derive(Clone, Debug, PartialEq)]
pub struct Reach {
    pub total: f64,
    pub chance: f64,
    pub players: Vec<f64>,
}

pub fn reach_probability<G: Game + ?Sized>(
    game: &G,
    profile: &StrategyProfile,
    h: &History,
) -> Result<Reach> {
    let mut chance = 1.0;
    let mut players = vec![1.0; game.num_players()];
    for depth in 0..h.len() {
        let prefix = h.prefix(depth);
        let node = game.node(&prefix)?;
        let action = h.actions()[depth] as usize;
        if action >= node.num_actions() {
            return Err(Error::InvalidHistory(h.to_string()));
        }
        let dist = action_distribution(game, |p| profile.strategy(p), &prefix, &node)?;
        match node {
            Node::Chance(_) => chance *= dist[action],
            Node::Decision { player, .. } => players[player] *= dist[action],
            Node::Terminal(_) => unreachable!(),
        }
    }
    // Validates the history itself.
    game.node(h)?;
    let total = chance * players.iter().product::<f64>();
    Ok(Reach {
        total,
        chance,
        players,
    })
}

/// Every terminal history with its reach probability, in depth-first order.
/// Zero-probability branches are pruned.
pub fn terminal_distribution<G: Game + ?Sized>(
    game: &G,
    profile: &StrategyProfile,
) -> Result<Vec<(History, f64)>> {
    let mut out = Vec::new();
    let mut stack = vec![(History::root(), 1.0)];
    while let Some((h, prob)) = stack.pop() {
        let node = game.node(&h)?;
        if let Node::Terminal(_) = node {
            if out.len() == ENUMERATION_LIMIT {
                return Err(Error::TooLarge {
                    limit: ENUMERATION_LIMIT,
                });
            }
            out.push((h, prob));
            continue;
        }
        let dist = action_distribution(game, |p| profile.strategy(p), &h, &node)?;
        for (a, p) in dist.iter().enumerate().rev() {
            if *p > 0.0 {
                stack.push((h.child(a), prob * p));
            }
        }
    }
    Ok(out)
}

/// `Σ_z π(z)·u_player(z)` by exhaustive enumeration.
pub fn expected_value_exact<G: Game + ?Sized>(
    game: &G,
    profile: &StrategyProfile,
    player: usize,
) -> Result<f64> {
    if player >= game.num_players() {
        return Err(Error::InvalidArgument(format!("no player {player}")));
    }
    let mut total = 0.0;
    for (z, prob) in terminal_distribution(game, profile)? {
        total += prob * terminal_utility(game, &z, player)?;
    }
    Ok(total)
}

/// Conditional expected utility of `player` below every history of the
/// game, keyed by history. Terminal histories map to their utility.
pub fn subtree_values<G: Game + ?Sized>(
    game: &G,
    profile: &StrategyProfile,
    player: usize,
) -> Result<BTreeMap<History, f64>> {
    fn visit<G: Game + ?Sized>(
        game: &G,
        profile: &StrategyProfile,
        player: usize,
        h: History,
        out: &mut BTreeMap<History, f64>,
    ) -> Result<f64> {
        let node = game.node(&h)?;
        let value = match &node {
            Node::Terminal(u) => u[player],
            _ => {
                let dist = action_distribution(game, |p| profile.strategy(p), &h, &node)?;
                let mut v = 0.0;
                for (a, p) in dist.iter().enumerate() {
                    let child = visit(game, profile, player, h.child(a), out)?;
                    v += p * child;
                }
                v
            }
        };
        out.insert(h, value);
        Ok(value)
    }
    let mut out = BTreeMap::new();
    visit(game, profile, player, History::root(), &mut out)?;
    Ok(out)
}

pub fn terminal_utility<G: Game + ?Sized>(game: &G, z: &History, player: usize) -> Result<f64> {
    match game.node(z)? {
        Node::Terminal(u) => u
            .get(player)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no player {player}"))),
        _ => Err(Error::InvalidArgument(format!("`{z}` is not terminal"))),
    }
}

/// Samples a terminal history; the same seed always yields the same history.
pub fn sample_playout<G: Game + ?Sized>(
    game: &G,
    profile: &StrategyProfile,
    seed: u64,
) -> Result<History> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = History::root();
    loop {
        let node = game.node(&h)?;
        if let Node::Terminal(_) = node {
            return Ok(h);
        }
        let dist = action_distribution(game, |p| profile.strategy(p), &h, &node)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = dist.len() - 1;
        for (a, p) in dist.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = a;
                break;
            }
        }
        // Guard against landing on a zero-probability tail action after
        // floating-point round-off in the cumulative sum.
        while dist[chosen] == 0.0 && chosen > 0 {
            chosen -= 1;
        }
        h = h.child(chosen);
    }
}

/// `U(h)`: histories differing from `h` only in the private information of
/// the player acting at `h`.
pub fn enumerate_u_set<G: Game + ?Sized>(game: &G, h: &History) -> Result<Vec<History>> {
    match game.node(h)? {
        Node::Decision { player, .. } => game.private_variants(h, &[player]),
        Node::Chance(_) => Err(Error::InvalidArgument(format!(
            "`{h}` is a chance node; U(h) is defined for player nodes"
        ))),
        Node::Terminal(_) => Err(Error::InvalidArgument(format!(
            "`{h}` is terminal; U(h) is defined for player nodes"
        ))),
    }
}

/// Index of `card` within the ascending list of cards of `deck_size` not in
/// `removed`.
pub(crate) fn remaining_index(deck_size: usize, removed: &[usize], card: usize) -> Option<usize> {
    if removed.contains(&card) || card >= deck_size {
        return None;
    }
    Some((0..card).filter(|c| !removed.contains(c)).count())
}

/// All reassignments of the cards dealt to `owners`, keeping every other
/// dealt card fixed and all cards distinct. `deals[i]` is the card of the
/// i-th deal (if dealt) and `deal_owner[i]` the player who privately observes
/// it (`None` for public cards). The input assignment is always included.
pub(crate) fn card_variants(
    deck_size: usize,
    deals: &[Option<usize>],
    deal_owner: &[Option<usize>],
    owners: &[usize],
) -> Vec<Vec<Option<usize>>> {
    let varying: Vec<usize> = (0..deals.len())
        .filter(|&i| deals[i].is_some() && deal_owner[i].is_some_and(|o| owners.contains(&o)))
        .collect();
    let fixed: Vec<usize> = (0..deals.len())
        .filter(|i| !varying.contains(i))
        .filter_map(|i| deals[i])
        .collect();
    let mut out = Vec::new();
    let mut current = deals.to_vec();
    fn assign(
        k: usize,
        varying: &[usize],
        deck_size: usize,
        fixed: &[usize],
        current: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if k == varying.len() {
            out.push(current.clone());
            return;
        }
        for card in 0..deck_size {
            let taken = fixed.contains(&card)
                || varying[..k].iter().any(|&i| current[i] == Some(card));
            if !taken {
                current[varying[k]] = Some(card);
                assign(k + 1, varying, deck_size, fixed, current, out);
            }
        }
    }
    assign(0, &varying, deck_size, &fixed, &mut current, &mut out);
    out
}

/// Inverse of [`remaining_index`].
pub(crate) fn card_at(deck_size: usize, removed: &[usize], index: usize) -> Option<usize> {
    (0..deck_size).filter(|c| !removed.contains(c)).nth(index)
}
