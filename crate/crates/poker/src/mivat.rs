//! Chance-only decomposition of hold'em hands.
//!
//! Every tracked card deal is a chance node whose children are the cards not
//! visibly consumed: all recorded hole cards other than the dealt one, and
//! board cards dealt earlier. Counterfactual children are named
//! `"<hand id>|<slot>|<card>"` where slot is `h<seat><0|1>`, `f1`, `f2`, `f3`,
//! `t` or `r`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use aivat::estimator::{AffineEstimate, CorrectionGroup, HistoryId};
use aivat::heuristics::{FeatureForm, FeatureMap};
use nalgebra::DVector;

use crate::card::{Card, CardSet};
use crate::error::{PokerError, Result};
use crate::features::{extract_features, snapshot_with_cards, StrengthPolicy};
use crate::history::{HandHistory, Street};

/// Which card deals count as chance nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrackedEvents {
    pub hole: bool,
    pub flop: bool,
    pub turn: bool,
    pub river: bool,
}

impl Default for TrackedEvents {
    fn default() -> Self {
        TrackedEvents {
            hole: false,
            flop: true,
            turn: true,
            river: true,
        }
    }
}

impl TrackedEvents {
    pub fn none() -> Self {
        TrackedEvents {
            hole: false,
            flop: false,
            turn: false,
            river: false,
        }
    }

    fn tracks(&self, street: Street) -> bool {
        match street {
            Street::Preflop => self.hole,
            Street::Flop => self.flop,
            Street::Turn => self.turn,
            Street::River => self.river,
        }
    }
}

impl FromStr for TrackedEvents {
    type Err = PokerError;

    /// Comma-separated subset of `hole,flop,turn,river`, or `none`.
    fn from_str(s: &str) -> Result<Self> {
        let mut t = TrackedEvents::none();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "none" => {}
                "hole" => t.hole = true,
                "flop" => t.flop = true,
                "turn" => t.turn = true,
                "river" => t.river = true,
                _ => return Err(PokerError::InvalidInput(format!("unknown chance event `{part}`"))),
            }
        }
        Ok(t)
    }
}

impl fmt::Display for TrackedEvents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.hole, "hole"),
            (self.flop, "flop"),
            (self.turn, "turn"),
            (self.river, "river"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join(","))
        }
    }
}

/// A dealt card position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Hole { seat: usize, card: usize },
    Board(usize),
}

impl Slot {
    pub fn street(self) -> Street {
        match self {
            Slot::Hole { .. } => Street::Preflop,
            Slot::Board(i) => Street::of_board_card(i),
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Hole { seat, card } => write!(f, "h{seat}{card}"),
            Slot::Board(i @ 0..=2) => write!(f, "f{}", i + 1),
            Slot::Board(3) => f.write_str("t"),
            Slot::Board(_) => f.write_str("r"),
        }
    }
}

impl FromStr for Slot {
    type Err = PokerError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || PokerError::InvalidInput(format!("invalid slot `{s}`"));
        match s {
            "f1" => Ok(Slot::Board(0)),
            "f2" => Ok(Slot::Board(1)),
            "f3" => Ok(Slot::Board(2)),
            "t" => Ok(Slot::Board(3)),
            "r" => Ok(Slot::Board(4)),
            _ => {
                let digits = s.strip_prefix('h').ok_or_else(bad)?.as_bytes();
                if digits.len() != 2 || !digits[0].is_ascii_digit() || !matches!(digits[1], b'0' | b'1') {
                    return Err(bad());
                }
                Ok(Slot::Hole {
                    seat: (digits[0] - b'0') as usize,
                    card: (digits[1] - b'0') as usize,
                })
            }
        }
    }
}

pub fn counterfactual_id(hand_id: &str, slot: Slot, card: Card) -> HistoryId {
    HistoryId::new(format!("{hand_id}|{slot}|{card}"))
}

/// Splits a counterfactual id into hand id, slot and card.
pub fn parse_counterfactual_id(id: &HistoryId) -> Result<(String, Slot, Card)> {
    let mut parts = id.as_str().rsplitn(3, '|');
    let (card, slot, hand) = (parts.next(), parts.next(), parts.next());
    match (hand, slot, card) {
        (Some(h), Some(s), Some(c)) => Ok((h.to_string(), s.parse()?, c.parse()?)),
        _ => Err(PokerError::InvalidInput(format!("invalid history id `{id}`"))),
    }
}

fn realized_card(hand: &HandHistory, slot: Slot) -> Option<Card> {
    match slot {
        Slot::Hole { seat, card } => hand.holes.get(seat)?.map(|h| h[card]),
        Slot::Board(i) => hand.board.get(i).copied(),
    }
}

/// Tracked deals present in `hand`, in deal order.
pub fn tracked_slots(hand: &HandHistory, tracked: &TrackedEvents) -> Result<Vec<Slot>> {
    let fail = |message: String| PokerError::Decomposition {
        hand: hand.id.clone(),
        message,
    };
    let mut slots = Vec::new();
    if tracked.hole {
        for seat in 0..hand.num_players() {
            if hand.holes[seat].is_none() {
                return Err(fail(format!("hole deals tracked but seat {seat} hole is unknown")));
            }
            slots.extend((0..2).map(|card| Slot::Hole { seat, card }));
        }
    }
    for street in [Street::Flop, Street::Turn, Street::River] {
        if !tracked.tracks(street) {
            continue;
        }
        let reached = hand.actions.len() > street.index();
        if hand.board.len() < street.board_len() {
            if reached {
                return Err(fail(format!("{street} is tracked but its board card is missing")));
            }
            continue;
        }
        let first = if street == Street::Flop { 0 } else { street.board_len() - 1 };
        slots.extend((first..street.board_len()).map(Slot::Board));
    }
    Ok(slots)
}

/// Cards a tracked deal at `slot` could have produced.
pub fn candidates(hand: &HandHistory, slot: Slot) -> Result<Vec<Card>> {
    let mut seen = CardSet::default();
    for (seat, hole) in hand.holes.iter().enumerate() {
        for (k, c) in hole.iter().flat_map(|h| h.iter().enumerate()) {
            if slot != (Slot::Hole { seat, card: k }) {
                seen.insert(*c)?;
            }
        }
    }
    if let Slot::Board(i) = slot {
        for c in &hand.board[..i] {
            seen.insert(*c)?;
        }
    }
    Ok(seen.remaining())
}

/// Chance-only estimate for `seat`, in milli-big-blinds. Each group has
/// coefficient `1/n` on every candidate child and `1/n − 1` on the realized
/// one.
pub fn mivat_decompose_hand(hand: &HandHistory, seat: usize, tracked: &TrackedEvents) -> Result<AffineEstimate> {
    if seat >= hand.num_players() {
        return Err(PokerError::InvalidInput(format!("seat {seat} out of range")));
    }
    let mut groups = Vec::new();
    for slot in tracked_slots(hand, tracked)? {
        let realized = realized_card(hand, slot).expect("tracked slots are dealt");
        let cands = candidates(hand, slot)?;
        let f = 1.0 / cands.len() as f64;
        let members = cands
            .iter()
            .map(|&c| {
                let coeff = if c == realized { f - 1.0 } else { f };
                (counterfactual_id(&hand.id, slot, c), coeff)
            })
            .collect();
        groups.push(CorrectionGroup {
            anchor: HistoryId::new(format!("{}|{slot}", hand.id)),
            members,
        });
    }
    Ok(AffineEstimate::from_groups(hand.payoff_mbb(seat), groups))
}

/// Ids of the realized children of every tracked deal.
pub fn realized_ids(hand: &HandHistory, tracked: &TrackedEvents) -> Result<Vec<HistoryId>> {
    Ok(tracked_slots(hand, tracked)?
        .into_iter()
        .map(|slot| counterfactual_id(&hand.id, slot, realized_card(hand, slot).expect("dealt")))
        .collect())
}

/// Feature settings for hold'em histories.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoldemFeatureConfig {
    pub policy: StrengthPolicy,
    pub max_seats: usize,
    pub form: FeatureForm,
}

/// Features of the history where `slot` of `hand` was dealt `card` instead.
pub fn counterfactual_features(
    hand: &HandHistory,
    slot: Slot,
    card: Card,
    config: &HoldemFeatureConfig,
) -> Result<DVector<f64>> {
    let mut holes = hand.holes.clone();
    let mut board: Vec<Card> = Vec::new();
    match slot {
        Slot::Hole { seat, card: k } => {
            let hole = holes[seat].as_mut().ok_or_else(|| PokerError::InvalidInput(format!("seat {seat} hole is unknown")))?;
            hole[k] = card;
        }
        Slot::Board(i) => {
            board.extend_from_slice(&hand.board[..i]);
            board.push(card);
        }
    }
    let tag = format!("{slot}|{card}");
    let snap = snapshot_with_cards(hand, slot.street(), &holes, &board, &config.policy, &tag)?;
    extract_features(&snap, config.max_seats, config.form)
}

/// Features of every history id referenced by `est` (a decomposition of
/// `hand`).
pub fn hand_feature_rows(
    hand: &HandHistory,
    est: &AffineEstimate,
    config: &HoldemFeatureConfig,
) -> Result<Vec<(HistoryId, DVector<f64>)>> {
    est.groups
        .iter()
        .flat_map(|g| g.members.iter().map(|(id, _)| id))
        .map(|id| {
            let (hand_id, slot, card) = parse_counterfactual_id(id)?;
            if hand_id != hand.id {
                return Err(PokerError::InvalidInput(format!("id `{id}` is not from hand `{}`", hand.id)));
            }
            Ok((id.clone(), counterfactual_features(hand, slot, card, config)?))
        })
        .collect()
}

/// Precomputed features keyed by history id.
#[derive(Clone, Debug, Default)]
pub struct FeatureTable {
    pub dim: usize,
    pub rows: BTreeMap<HistoryId, DVector<f64>>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Self {
        FeatureTable {
            dim,
            rows: BTreeMap::new(),
        }
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = (HistoryId, DVector<f64>)>) {
        self.rows.extend(rows);
    }
}

impl FeatureMap for FeatureTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn features(&self, id: &HistoryId) -> aivat::Result<DVector<f64>> {
        self.rows
            .get(id)
            .cloned()
            .ok_or_else(|| aivat::Error::MissingHeuristicValue(id.to_string()))
    }
}
