//! Leduc hold'em.
//!
//! Rules: a six-card deck (J, Q, K in two suits), an ante of 1 chip each and
//! two betting rounds with fixed bet sizes of 2 and 4. Each round allows at
//! most two bets (a bet and one raise). One private card is dealt to each
//! player before the first round and one public board card before the second.
//!
//! | situation         | actions                                   |
//! |-------------------|-------------------------------------------|
//! | no bet to face    | 0 = check, 1 = bet                        |
//! | facing a bet      | 0 = fold, 1 = call, 2 = raise (if < 2 bets) |
//!
//! P0 opens both rounds. A round ends after check-check or a call. At
//! showdown a card pairing the board wins, otherwise the higher rank wins and
//! equal ranks split the pot.
//!
//! Cards are numbered 0..6 with rank `card / 2` and suit `card % 2`. Chance
//! deals P0's card (6 actions), P1's card (5 actions) and the board card
//! (4 actions), each indexing the remaining deck in ascending order.
//! Information-set keys use ranks only since suits are strategically inert.

use super::{card_at, card_variants, remaining_index, Game, History, Node, PotGame};
use crate::error::{Error, Result};

const DECK: usize = 6;
const RANKS: [char; 3] = ['J', 'Q', 'K'];
const BET_SIZE: [f64; 2] = [2.0, 4.0];
const MAX_BETS: u8 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Leduc;

#[derive(Clone, Debug, Default)]
struct Round {
    to_act: usize,
    bets: u8,
    facing: bool,
    checked: bool,
    done: bool,
    actions: Vec<char>,
}

#[derive(Debug)]
struct State {
    /// P0, P1, board.
    deals: [Option<usize>; 3],
    board_pos: Option<usize>,
    contrib: [f64; 2],
    rounds: Vec<Round>,
    folded: Option<usize>,
}

enum Phase {
    Deal,
    Act { player: usize, num_actions: usize },
    Terminal([f64; 2]),
}

fn rank(card: usize) -> usize {
    card / 2
}

/// Showdown result for a holding of `a` against `b` with `board`:
/// 1 win, 0.5 tie, 0 loss.
fn showdown_share(a: usize, b: usize, board: usize) -> f64 {
    let score = |c: usize| {
        if rank(c) == rank(board) {
            10 + rank(c)
        } else {
            rank(c)
        }
    };
    match score(a).cmp(&score(b)) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => 0.0,
    }
}

impl Leduc {
    pub fn new() -> Self {
        Leduc
    }

    fn replay(&self, h: &History) -> Result<State> {
        let invalid = || Error::InvalidHistory(h.to_string());
        let mut state = State {
            deals: [None; 3],
            board_pos: None,
            contrib: [1.0, 1.0],
            rounds: Vec::new(),
            folded: None,
        };
        for (pos, &a) in h.actions().iter().enumerate() {
            let a = a as usize;
            match state.phase() {
                Phase::Terminal(_) => return Err(invalid()),
                Phase::Deal => {
                    let removed: Vec<usize> = state.deals.iter().flatten().copied().collect();
                    let card = card_at(DECK, &removed, a).ok_or_else(invalid)?;
                    let slot = removed.len();
                    state.deals[slot] = Some(card);
                    if slot == 2 {
                        state.board_pos = Some(pos);
                    }
                    if slot >= 1 {
                        state.rounds.push(Round::default());
                    }
                }
                Phase::Act { num_actions, .. } => {
                    if a >= num_actions {
                        return Err(invalid());
                    }
                    state.apply(a);
                }
            }
        }
        Ok(state)
    }

    fn encode(deals: &[Option<usize>], template: &History, board_pos: Option<usize>) -> History {
        let mut acts = template.actions().to_vec();
        let c0 = deals[0].unwrap();
        let c1 = deals[1].unwrap();
        acts[0] = remaining_index(DECK, &[], c0).unwrap() as u8;
        acts[1] = remaining_index(DECK, &[c0], c1).unwrap() as u8;
        if let (Some(pos), Some(b)) = (board_pos, deals[2]) {
            acts[pos] = remaining_index(DECK, &[c0, c1], b).unwrap() as u8;
        }
        History::from_actions(acts)
    }
}

impl State {
    fn phase(&self) -> Phase {
        if let Some(loser) = self.folded {
            let stake = self.contrib[loser];
            let mut u = [stake, stake];
            u[loser] = -stake;
            return Phase::Terminal(u);
        }
        let dealt = self.deals.iter().flatten().count();
        if dealt < 2 {
            return Phase::Deal;
        }
        let round = self.rounds.last().expect("round opened after second deal");
        if !round.done {
            let num_actions = match (round.facing, round.bets < MAX_BETS) {
                (false, _) => 2,
                (true, true) => 3,
                (true, false) => 2,
            };
            return Phase::Act {
                player: round.to_act,
                num_actions,
            };
        }
        if dealt == 2 {
            return Phase::Deal;
        }
        let (c0, c1, board) = (
            self.deals[0].unwrap(),
            self.deals[1].unwrap(),
            self.deals[2].unwrap(),
        );
        let share = showdown_share(c0, c1, board);
        // Contributions are equal after a completed round.
        let stake = self.contrib[0];
        let u0 = (2.0 * share - 1.0) * stake;
        Phase::Terminal([u0, -u0])
    }

    fn apply(&mut self, action: usize) {
        let index = self.rounds.len() - 1;
        let size = BET_SIZE[index];
        let high = self.contrib[0].max(self.contrib[1]);
        let round = &mut self.rounds[index];
        let actor = round.to_act;
        match (round.facing, action) {
            (false, 0) => {
                round.actions.push('k');
                if round.checked {
                    round.done = true;
                }
                round.checked = true;
            }
            (false, _) | (true, 2) => {
                round.actions.push(if round.facing { 'r' } else { 'b' });
                self.contrib[actor] = high + size;
                round.bets += 1;
                round.facing = true;
            }
            (true, 0) => {
                round.actions.push('f');
                self.folded = Some(actor);
            }
            (true, _) => {
                round.actions.push('c');
                self.contrib[actor] = high;
                round.done = true;
            }
        }
        round.to_act = 1 - actor;
    }

    fn public_actions(&self) -> String {
        self.rounds
            .iter()
            .map(|r| r.actions.iter().collect::<String>())
            .collect::<Vec<_>>()
            .join("/")
    }
}

impl Game for Leduc {
    fn name(&self) -> &'static str {
        "leduc"
    }

    fn num_players(&self) -> usize {
        2
    }

    fn node(&self, h: &History) -> Result<Node> {
        let state = self.replay(h)?;
        Ok(match state.phase() {
            Phase::Deal => {
                let n = DECK - state.deals.iter().flatten().count();
                Node::Chance(vec![1.0 / n as f64; n])
            }
            Phase::Act {
                player,
                num_actions,
            } => Node::Decision {
                player,
                num_actions,
            },
            Phase::Terminal(u) => Node::Terminal(u.to_vec()),
        })
    }

    fn infoset_key(&self, h: &History, player: usize) -> Result<String> {
        if player >= 2 {
            return Err(Error::InvalidArgument(format!("no player {player}")));
        }
        let state = self.replay(h)?;
        let own = state.deals[player].map_or('?', |c| RANKS[rank(c)]);
        let board = state.deals[2].map_or(String::new(), |c| RANKS[rank(c)].to_string());
        Ok(format!("{own}|{board}:{}", state.public_actions()))
    }

    fn private_variants(&self, h: &History, owners: &[usize]) -> Result<Vec<History>> {
        let state = self.replay(h)?;
        if state.deals[1].is_none() {
            return Ok(vec![h.clone()]);
        }
        Ok(
            card_variants(DECK, &state.deals, &[Some(0), Some(1), None], owners)
                .into_iter()
                .map(|deals| Leduc::encode(&deals, h, state.board_pos))
                .collect(),
        )
    }
}

impl PotGame for Leduc {
    fn pot(&self, h: &History) -> Result<f64> {
        let state = self.replay(h)?;
        Ok(state.contrib.iter().sum())
    }

    fn active(&self, h: &History) -> Result<Vec<bool>> {
        let state = self.replay(h)?;
        Ok((0..2).map(|p| state.folded != Some(p)).collect())
    }

    fn hand_strength(&self, h: &History, player: usize) -> Result<(f64, f64)> {
        let state = self.replay(h)?;
        let own = state.deals.get(player).copied().flatten();
        let board = state.deals[2];
        // Win probability against a random opposing card, given own card and board.
        let against_random = |c: usize, b: usize| {
            let opp: Vec<usize> = (0..DECK).filter(|&o| o != c && o != b).collect();
            opp.iter().map(|&o| showdown_share(c, o, b)).sum::<f64>() / opp.len() as f64
        };
        let for_card = |c: usize| -> (f64, f64) {
            match board {
                Some(b) => {
                    let p = against_random(c, b);
                    (p, p * p)
                }
                None => {
                    let boards: Vec<usize> = (0..DECK).filter(|&b| b != c).collect();
                    let ps: Vec<f64> = boards.iter().map(|&b| against_random(c, b)).collect();
                    let n = ps.len() as f64;
                    (
                        ps.iter().sum::<f64>() / n,
                        ps.iter().map(|p| p * p).sum::<f64>() / n,
                    )
                }
            }
        };
        Ok(match own {
            Some(c) => for_card(c),
            None => {
                let cards: Vec<usize> = (0..DECK).filter(|&c| Some(c) != board).collect();
                let n = cards.len() as f64;
                let (hs, hs2) = cards.iter().map(|&c| for_card(c)).fold((0.0, 0.0), |acc, x| {
                    (acc.0 + x.0, acc.1 + x.1)
                });
                (hs / n, hs2 / n)
            }
        })
    }
}
