//! Synthetic hold'em hands from a simple fixed-limit style policy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::card::Card;
use crate::error::{PokerError, Result};
use crate::eval::evaluate_unchecked;
use crate::history::{Action, ActionKind, HandHistory, Street, MAX_SEATS};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub players: usize,
    pub small_blind: i64,
    pub big_blind: i64,
    pub stack: i64,
    /// Probability that the first live player bets on a street.
    pub bet_probability: f64,
    /// Probability that a player facing a bet folds.
    pub fold_probability: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            players: 2,
            small_blind: 50,
            big_blind: 100,
            stack: 20_000,
            bet_probability: 0.4,
            fold_probability: 0.25,
        }
    }
}

/// Seat order for a street: preflop starts after the big blind, later
/// streets after the button.
fn acting_order(n: usize, button: usize, street: Street) -> Vec<usize> {
    let first = match (street, n) {
        (Street::Preflop, 2) => button,
        (Street::Preflop, _) => (button + 3) % n,
        (_, 2) => (button + 1) % n,
        _ => (button + 1) % n,
    };
    (0..n).map(|i| (first + i) % n).collect()
}

fn one_hand(rng: &mut ChaCha8Rng, id: String, button: usize, cfg: &SynthConfig) -> HandHistory {
    let n = cfg.players;
    let mut deck: Vec<Card> = Card::deck().collect();
    deck.shuffle(rng);
    let holes: Vec<[Card; 2]> = (0..n).map(|s| [deck[2 * s], deck[2 * s + 1]]).collect();
    let full_board = &deck[2 * n..2 * n + 5];

    let mut hand = HandHistory {
        id,
        button,
        blinds: [cfg.small_blind, cfg.big_blind],
        stacks: vec![cfg.stack; n],
        players: (0..n).map(|s| format!("p{s}")).collect(),
        holes: holes.iter().map(|h| Some(*h)).collect(),
        board: Vec::new(),
        actions: Vec::new(),
        payoffs: vec![0; n],
    };
    let mut put = hand.contributions_before(Street::Preflop);
    let mut live = vec![true; n];

    for street in Street::ALL {
        hand.board = full_board[..street.board_len()].to_vec();
        let mut acts = Vec::new();
        let order: Vec<usize> = acting_order(n, button, street).into_iter().filter(|s| live[*s]).collect();
        let bet_size = cfg.big_blind * if street >= Street::Turn { 2 } else { 1 };
        let mut target = *put.iter().max().unwrap();
        let mut aggressor = None;
        if street != Street::Preflop && rng.random_bool(cfg.bet_probability) {
            let s = order[0];
            target += bet_size;
            acts.push(Action { seat: s, kind: ActionKind::Bet, amount: target - put[s] });
            put[s] = target;
            aggressor = Some(s);
        }
        for &s in &order {
            if Some(s) == aggressor || live.iter().filter(|l| **l).count() == 1 {
                continue;
            }
            let owed = target - put[s];
            if owed == 0 {
                acts.push(Action { seat: s, kind: ActionKind::Check, amount: 0 });
            } else if rng.random_bool(cfg.fold_probability) {
                acts.push(Action { seat: s, kind: ActionKind::Fold, amount: 0 });
                live[s] = false;
            } else {
                acts.push(Action { seat: s, kind: ActionKind::Call, amount: owed });
                put[s] = target;
            }
        }
        hand.actions.push(acts);
        if live.iter().filter(|l| **l).count() == 1 {
            break;
        }
    }

    let pot: i64 = put.iter().sum();
    let winners: Vec<usize> = if live.iter().filter(|l| **l).count() == 1 {
        vec![live.iter().position(|l| *l).unwrap()]
    } else {
        let ranks: Vec<_> = (0..n)
            .map(|s| {
                live[s].then(|| {
                    let mut cards = [holes[s][0]; 7];
                    cards[1] = holes[s][1];
                    cards[2..].copy_from_slice(full_board);
                    evaluate_unchecked(&cards)
                })
            })
            .collect();
        let best = ranks.iter().flatten().max().copied();
        (0..n).filter(|&s| ranks[s].is_some() && ranks[s] == best).collect()
    };
    let share = pot / winners.len() as i64;
    let mut odd = pot - share * winners.len() as i64;
    for s in 0..n {
        hand.payoffs[s] = -put[s];
    }
    for &w in &winners {
        hand.payoffs[w] += share + i64::from(odd > 0);
        odd -= 1;
    }
    hand
}

/// `hands` synthetic hands with rotating button, deterministic in `seed`.
pub fn generate_holdem(hands: usize, seed: u64, cfg: &SynthConfig) -> Result<Vec<HandHistory>> {
    if !(2..=MAX_SEATS).contains(&cfg.players) {
        return Err(PokerError::InvalidInput(format!("{} players", cfg.players)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..hands)
        .map(|i| one_hand(&mut rng, format!("s{seed}-{i}"), i % cfg.players, cfg))
        .collect())
}
