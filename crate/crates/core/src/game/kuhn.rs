//! Kuhn poker.
//!
//! Rules: a three-card deck (J < Q < K), one card to each of two players,
//! an ante of 1 chip each and a single betting round with a fixed bet of 1.
//!
//! | history (after the deal) | to act | actions            |
//! |--------------------------|--------|--------------------|
//! | (empty)                  | P0     | 0 = check, 1 = bet |
//! | check                    | P1     | 0 = check, 1 = bet |
//! | check, bet               | P0     | 0 = fold, 1 = call |
//! | bet                      | P1     | 0 = fold, 1 = call |
//!
//! Check-check and any call go to showdown; the higher card takes the pot.
//! Chance deals P0's card first (3 actions) and then P1's card from the two
//! remaining cards (2 actions).

use super::{card_at, card_variants, remaining_index, Game, History, Node, PotGame};
use crate::error::{Error, Result};

const DECK: usize = 3;
const RANKS: [char; 3] = ['J', 'Q', 'K'];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Kuhn;

#[derive(Debug)]
struct State {
    cards: [Option<usize>; 2],
    /// Betting actions as 0 (pass: check or fold) or 1 (bet or call).
    bets: Vec<u8>,
}

enum Phase {
    DealP0,
    DealP1,
    Act(usize),
    Terminal([f64; 2]),
}

impl Kuhn {
    pub fn new() -> Self {
        Kuhn
    }

    fn replay(&self, h: &History) -> Result<State> {
        let invalid = || Error::InvalidHistory(h.to_string());
        let acts = h.actions();
        let mut cards = [None, None];
        if let Some(&a) = acts.first() {
            cards[0] = Some(card_at(DECK, &[], a as usize).ok_or_else(invalid)?);
        }
        if let Some(&a) = acts.get(1) {
            let c0 = cards[0].unwrap();
            cards[1] = Some(card_at(DECK, &[c0], a as usize).ok_or_else(invalid)?);
        }
        let bets = acts.get(2..).unwrap_or(&[]).to_vec();
        if bets.iter().any(|&b| b > 1) {
            return Err(invalid());
        }
        let state = State { cards, bets };
        // Rejects betting sequences that continue past a terminal.
        if acts.len() > 2 {
            for len in 0..state.bets.len() {
                let prefix = State {
                    cards: state.cards,
                    bets: state.bets[..len].to_vec(),
                };
                if let Phase::Terminal(_) = prefix.phase() {
                    return Err(invalid());
                }
            }
        }
        Ok(state)
    }

    fn encode(cards: [usize; 2], bets: &[u8]) -> History {
        let mut acts = vec![
            remaining_index(DECK, &[], cards[0]).unwrap() as u8,
            remaining_index(DECK, &[cards[0]], cards[1]).unwrap() as u8,
        ];
        acts.extend_from_slice(bets);
        History::from_actions(acts)
    }
}

impl State {
    fn phase(&self) -> Phase {
        let (Some(c0), Some(c1)) = (self.cards[0], self.cards[1]) else {
            return if self.cards[0].is_none() {
                Phase::DealP0
            } else {
                Phase::DealP1
            };
        };
        let showdown = |stake: f64| {
            if c0 > c1 {
                Phase::Terminal([stake, -stake])
            } else {
                Phase::Terminal([-stake, stake])
            }
        };
        match self.bets.as_slice() {
            [] => Phase::Act(0),
            [0] => Phase::Act(1),
            [0, 0] => showdown(1.0),
            [0, 1] => Phase::Act(0),
            [0, 1, 0] => Phase::Terminal([-1.0, 1.0]),
            [0, 1, 1] => showdown(2.0),
            [1] => Phase::Act(1),
            [1, 0] => Phase::Terminal([1.0, -1.0]),
            [1, 1] => showdown(2.0),
            _ => unreachable!("replay validates betting sequences"),
        }
    }

    fn public_actions(&self) -> String {
        self.bets
            .iter()
            .map(|&b| if b == 0 { 'p' } else { 'b' })
            .collect()
    }
}

impl Game for Kuhn {
    fn name(&self) -> &'static str {
        "kuhn"
    }

    fn num_players(&self) -> usize {
        2
    }

    fn node(&self, h: &History) -> Result<Node> {
        let state = self.replay(h)?;
        Ok(match state.phase() {
            Phase::DealP0 => Node::Chance(vec![1.0 / 3.0; 3]),
            Phase::DealP1 => Node::Chance(vec![0.5; 2]),
            Phase::Act(player) => Node::Decision {
                player,
                num_actions: 2,
            },
            Phase::Terminal(u) => Node::Terminal(u.to_vec()),
        })
    }

    fn infoset_key(&self, h: &History, player: usize) -> Result<String> {
        if player >= 2 {
            return Err(Error::InvalidArgument(format!("no player {player}")));
        }
        let state = self.replay(h)?;
        let card = state.cards[player].map_or('?', |c| RANKS[c]);
        Ok(format!("{card}:{}", state.public_actions()))
    }

    fn private_variants(&self, h: &History, owners: &[usize]) -> Result<Vec<History>> {
        let state = self.replay(h)?;
        let (Some(_), Some(_)) = (state.cards[0], state.cards[1]) else {
            // Before both deals every history is its own class.
            return Ok(vec![h.clone()]);
        };
        Ok(
            card_variants(DECK, &state.cards, &[Some(0), Some(1)], owners)
                .into_iter()
                .map(|c| Kuhn::encode([c[0].unwrap(), c[1].unwrap()], &state.bets))
                .collect(),
        )
    }
}

impl PotGame for Kuhn {
    fn pot(&self, h: &History) -> Result<f64> {
        let state = self.replay(h)?;
        Ok(2.0 + state.bets.iter().filter(|&&b| b == 1).count() as f64)
    }

    fn active(&self, h: &History) -> Result<Vec<bool>> {
        let state = self.replay(h)?;
        Ok(match state.bets.as_slice() {
            [0, 1, 0] => vec![false, true],
            [1, 0] => vec![true, false],
            _ => vec![true, true],
        })
    }

    fn hand_strength(&self, h: &History, player: usize) -> Result<(f64, f64)> {
        let state = self.replay(h)?;
        // No public cards: the win probability is fixed once the card is known.
        let strength = |c: usize| c as f64 / 2.0;
        Ok(match state.cards.get(player).copied().flatten() {
            Some(c) => (strength(c), strength(c).powi(2)),
            None => {
                let hs = (0..DECK).map(strength).sum::<f64>() / DECK as f64;
                let hs2 = (0..DECK).map(|c| strength(c).powi(2)).sum::<f64>() / DECK as f64;
                (hs, hs2)
            }
        })
    }
}
