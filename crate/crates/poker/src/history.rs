//! Hold'em hand histories in a JSON-lines corpus.
//!
//! One hand per line:
//!
//! ```text
//! {"id":"h1","button":0,"blinds":[50,100],"stacks":[10000,10000],
//!  "players":["a","b"],"holes":[["As","Kd"],null],"board":["2c","7d","9h","Ts","Jc"],
//!  "actions":[[{"seat":0,"kind":"call","amount":50},{"seat":1,"kind":"check","amount":0}],[],[],[]],
//!  "payoffs":[100,-100]}
//! ```
//!
//! Amounts are chips added to the pot by that action; blinds are posted
//! implicitly (heads-up the button posts the small blind, otherwise the two
//! seats after the button do). `actions` holds one list per street reached.
//! Lines starting with `#` and blank lines are ignored by [`parse_corpus`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::card::{Card, CardSet};
use crate::error::{PokerError, Result};

pub const MAX_SEATS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Street {
    Preflop,
    Flop,
    Turn,
    River,
}

impl Street {
    pub const ALL: [Street; 4] = [Street::Preflop, Street::Flop, Street::Turn, Street::River];

    /// Board cards visible once this street is dealt.
    pub fn board_len(self) -> usize {
        match self {
            Street::Preflop => 0,
            Street::Flop => 3,
            Street::Turn => 4,
            Street::River => 5,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// The street on which board card `i` (0-based) is dealt.
    pub fn of_board_card(i: usize) -> Street {
        match i {
            0..=2 => Street::Flop,
            3 => Street::Turn,
            _ => Street::River,
        }
    }
}

impl fmt::Display for Street {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Street::Preflop => "preflop",
            Street::Flop => "flop",
            Street::Turn => "turn",
            Street::River => "river",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Fold,
    Check,
    Call,
    Bet,
    Raise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub seat: usize,
    pub kind: ActionKind,
    pub amount: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandHistory {
    pub id: String,
    pub button: usize,
    /// Small and big blind in chips.
    pub blinds: [i64; 2],
    pub stacks: Vec<i64>,
    pub players: Vec<String>,
    pub holes: Vec<Option<[Card; 2]>>,
    pub board: Vec<Card>,
    pub actions: Vec<Vec<Action>>,
    /// Net chips won per seat.
    pub payoffs: Vec<i64>,
}

impl HandHistory {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn big_blind(&self) -> i64 {
        self.blinds[1]
    }

    /// Seats posting the small and big blind.
    pub fn blind_seats(&self) -> (usize, usize) {
        let n = self.num_players();
        if n == 2 {
            (self.button, (self.button + 1) % n)
        } else {
            ((self.button + 1) % n, (self.button + 2) % n)
        }
    }

    /// Net payoff of `seat` in milli-big-blinds.
    pub fn payoff_mbb(&self, seat: usize) -> f64 {
        self.payoffs[seat] as f64 * 1000.0 / self.big_blind() as f64
    }

    /// Chips each seat has put in before `street` begins.
    pub fn contributions_before(&self, street: Street) -> Vec<i64> {
        let mut c = vec![0; self.num_players()];
        let (sb, bb) = self.blind_seats();
        c[sb] += self.blinds[0];
        c[bb] += self.blinds[1];
        for acts in self.actions.iter().take(street.index()) {
            for a in acts {
                c[a.seat] += a.amount;
            }
        }
        c
    }

    /// Pot in chips at the start of `street`.
    pub fn pot_at(&self, street: Street) -> i64 {
        self.contributions_before(street).iter().sum()
    }

    /// Seats that have not folded before `street` begins.
    pub fn live_at(&self, street: Street) -> Vec<bool> {
        let mut live = vec![true; self.num_players()];
        for acts in self.actions.iter().take(street.index()) {
            for a in acts.iter().filter(|a| a.kind == ActionKind::Fold) {
                live[a.seat] = false;
            }
        }
        live
    }

    /// Last street with recorded actions or dealt board cards.
    pub fn last_street(&self) -> Street {
        let by_board = Street::ALL
            .iter()
            .rev()
            .find(|s| s.board_len() <= self.board.len())
            .copied()
            .unwrap_or(Street::Preflop);
        let by_actions = Street::ALL[self.actions.len().clamp(1, 4) - 1];
        by_board.max(by_actions)
    }

    /// All known hole cards, by seat order.
    pub fn known_holes(&self) -> Vec<Card> {
        self.holes.iter().flatten().flat_map(|h| h.iter().copied()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| {
            Err(PokerError::Validation {
                hand: self.id.clone(),
                message,
            })
        };
        let n = self.num_players();
        if !(2..=MAX_SEATS).contains(&n) {
            return fail(format!("{n} players, expected 2 to {MAX_SEATS}"));
        }
        for (name, len) in [
            ("stacks", self.stacks.len()),
            ("holes", self.holes.len()),
            ("payoffs", self.payoffs.len()),
        ] {
            if len != n {
                return fail(format!("{name} has {len} entries for {n} players"));
            }
        }
        if self.button >= n {
            return fail(format!("button seat {} out of range", self.button));
        }
        if self.blinds[0] <= 0 || self.blinds[1] < self.blinds[0] {
            return fail(format!("invalid blinds {:?}", self.blinds));
        }
        if ![0, 3, 4, 5].contains(&self.board.len()) {
            return fail(format!("board has {} cards", self.board.len()));
        }
        let mut seen = CardSet::default();
        for c in self.known_holes().iter().chain(&self.board) {
            if seen.insert(*c).is_err() {
                return fail(format!("card {c} appears twice"));
            }
        }
        if self.payoffs.iter().sum::<i64>() != 0 {
            return fail(format!("payoffs {:?} do not sum to zero", self.payoffs));
        }
        if self.actions.len() > 4 {
            return fail(format!("{} betting rounds", self.actions.len()));
        }
        let mut folded = vec![false; n];
        for (street, acts) in Street::ALL.iter().zip(&self.actions) {
            if !acts.is_empty() && self.board.len() < street.board_len() {
                return fail(format!("{street} actions without a {street} board"));
            }
            let mut previous = None;
            for a in acts {
                if a.seat >= n {
                    return fail(format!("action by seat {} out of range", a.seat));
                }
                if folded[a.seat] {
                    return fail(format!("seat {} acts after folding", a.seat));
                }
                if previous == Some(a.seat) {
                    return fail(format!("seat {} acts twice in a row on the {street}", a.seat));
                }
                let passive = matches!(a.kind, ActionKind::Fold | ActionKind::Check);
                if a.amount < 0 || passive != (a.amount == 0) {
                    return fail(format!("{:?} with amount {}", a.kind, a.amount));
                }
                if a.kind == ActionKind::Fold {
                    folded[a.seat] = true;
                }
                previous = Some(a.seat);
            }
        }
        Ok(())
    }

    /// Canonical single-line JSON form.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("hand histories always serialize")
    }
}

/// Parses and validates one JSON record.
pub fn parse_hand(line: &str) -> Result<HandHistory> {
    let hand: HandHistory = serde_json::from_str(line).map_err(|e| PokerError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    hand.validate()?;
    Ok(hand)
}

/// Parses a JSON-lines corpus; parse errors report the line in `text`.
pub fn parse_corpus(text: &str) -> Result<Vec<HandHistory>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            parse_hand(l).map_err(|e| match e {
                PokerError::Parse { column, message, .. } => PokerError::Parse {
                    line: i + 1,
                    column,
                    message,
                },
                other => other,
            })
        })
        .collect()
}

pub fn write_corpus(hands: &[HandHistory], header: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    for hand in hands {
        out.push_str(&hand.to_json_line());
        out.push('\n');
    }
    out
}
