//! Hand strength against a uniformly random opponent hand.
//!
//! `hs` is the expected win probability over board completions (ties count
//! one half) and `hs2` the expectation of its square.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::card::{Card, CardSet};
use crate::error::{PokerError, Result};
use crate::eval::{evaluate_unchecked, HandRank};

pub const DEFAULT_MC_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsMode {
    /// Full enumeration; needs at least a flop.
    Exact,
    /// Sampled board completions with two independent opponent hands each.
    MonteCarlo { samples: usize, seed: Option<u64> },
}

/// Result for the hero, already ranked as `hero_rank`, against `opp`.
fn win_value(hero: &[Card; 7], hero_rank: HandRank, opp: [Card; 2]) -> f64 {
    let mut theirs = *hero;
    theirs[0] = opp[0];
    theirs[1] = opp[1];
    match hero_rank.cmp(&evaluate_unchecked(&theirs)) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => 0.0,
    }
}

/// Win probability of `hero` (hole cards first, then the full board) against
/// every opponent hand drawn from `pool`.
fn river_win_probability(hero: &[Card; 7], pool: &[Card]) -> f64 {
    let rank = evaluate_unchecked(hero);
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            total += win_value(hero, rank, [pool[i], pool[j]]);
            count += 1;
        }
    }
    total / count as f64
}

/// Moves a uniform draw of `k` cards from `cards[from..]` into
/// `cards[from..from + k]` (partial Fisher-Yates; any prior order is fine).
fn draw(rng: &mut ChaCha8Rng, cards: &mut [Card], from: usize, k: usize) {
    for i in from..from + k {
        let j = rng.random_range(i..cards.len());
        cards.swap(i, j);
    }
}

fn hero_cards(hole: [Card; 2], board: &[Card]) -> [Card; 7] {
    let mut hero = [hole[0]; 7];
    hero[1] = hole[1];
    hero[2..2 + board.len()].copy_from_slice(board);
    hero
}

/// `(hs, hs2)` for `hole` on a partial `board` of 0 to 5 cards.
pub fn hand_strength(hole: [Card; 2], board: &[Card], mode: HsMode) -> Result<(f64, f64)> {
    if board.len() > 5 {
        return Err(PokerError::InvalidInput(format!("board has {} cards", board.len())));
    }
    let mut used = CardSet::from_cards(&hole)?;
    for &c in board {
        used.insert(c)?;
    }
    let deck = used.remaining();
    let missing = 5 - board.len();
    match mode {
        HsMode::Exact => {
            if missing > 2 {
                return Err(PokerError::InvalidInput(
                    "exact hand strength needs at least three board cards".into(),
                ));
            }
            let mut hero = hero_cards(hole, board);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut runouts = 0usize;
            let mut visit = |extra: &[Card]| {
                hero[2 + board.len()..].copy_from_slice(extra);
                let pool: Vec<Card> = deck.iter().copied().filter(|c| !extra.contains(c)).collect();
                let p = river_win_probability(&hero, &pool);
                sum += p;
                sum_sq += p * p;
                runouts += 1;
            };
            match missing {
                0 => visit(&[]),
                1 => deck.iter().for_each(|&c| visit(&[c])),
                _ => {
                    for i in 0..deck.len() {
                        for j in i + 1..deck.len() {
                            visit(&[deck[i], deck[j]]);
                        }
                    }
                }
            }
            Ok((sum / runouts as f64, sum_sq / runouts as f64))
        }
        HsMode::MonteCarlo { samples, seed } => {
            let seed = seed.ok_or(PokerError::MissingSeed)?;
            if samples == 0 {
                return Err(PokerError::InvalidInput("zero monte carlo samples".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut hero = hero_cards(hole, board);
            let mut cards = deck;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..samples {
                // The runout goes to the front; opponents come from the rest.
                draw(&mut rng, &mut cards, 0, missing);
                hero[2 + board.len()..].copy_from_slice(&cards[..missing]);
                let rank = evaluate_unchecked(&hero);
                let mut opponent = |rng: &mut ChaCha8Rng| {
                    draw(rng, &mut cards, missing, 2);
                    win_value(&hero, rank, [cards[missing], cards[missing + 1]])
                };
                let (w1, w2) = (opponent(&mut rng), opponent(&mut rng));
                sum += 0.5 * (w1 + w2);
                sum_sq += w1 * w2;
            }
            Ok((sum / samples as f64, sum_sq / samples as f64))
        }
    }
}
