//! Per-street snapshots and the pot/hand-strength feature vector.

use aivat::heuristics::FeatureForm;
use nalgebra::DVector;

use crate::card::Card;
use crate::error::{PokerError, Result};
use crate::history::{HandHistory, Street};
use crate::strength::{hand_strength, HsMode, DEFAULT_MC_SAMPLES};

/// How hand strength is computed for features: exact on the river, seeded
/// Monte Carlo before it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StrengthPolicy {
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for StrengthPolicy {
    fn default() -> Self {
        StrengthPolicy {
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: 0,
        }
    }
}

impl StrengthPolicy {
    pub fn mode(&self, board_len: usize, seed: u64) -> HsMode {
        if board_len == 5 {
            HsMode::Exact
        } else {
            HsMode::MonteCarlo {
                samples: self.mc_samples,
                seed: Some(seed),
            }
        }
    }
}

/// FNV-1a over the policy seed and `parts`, for per-hand Monte Carlo seeds.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for part in parts {
        for b in part.bytes().chain(std::iter::once(0xff)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreetSnapshot {
    pub street: Street,
    /// Pot in chips at the start of the street.
    pub pot: f64,
    pub non_folded: usize,
    /// `(hs, hs2)` per seat; `None` for folded seats and unknown holes.
    pub strengths: Vec<Option<(f64, f64)>>,
}

/// Snapshot at `street` using the given hole cards and board prefix.
pub fn snapshot_with_cards(
    hand: &HandHistory,
    street: Street,
    holes: &[Option<[Card; 2]>],
    board: &[Card],
    policy: &StrengthPolicy,
    tag: &str,
) -> Result<StreetSnapshot> {
    let live = hand.live_at(street);
    let strengths = holes
        .iter()
        .enumerate()
        .map(|(seat, hole)| match hole {
            Some(hole) if live[seat] => {
                let seed = derive_seed(policy.seed, &[&hand.id, tag, &seat.to_string()]);
                hand_strength(*hole, board, policy.mode(board.len(), seed)).map(Some)
            }
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StreetSnapshot {
        street,
        pot: hand.pot_at(street) as f64,
        non_folded: live.iter().filter(|l| **l).count(),
        strengths,
    })
}

/// Snapshot at the start of `street` of the realized hand.
pub fn snapshot(hand: &HandHistory, street: Street, policy: &StrengthPolicy) -> Result<StreetSnapshot> {
    let board = hand.board.get(..street.board_len()).ok_or_else(|| {
        PokerError::InvalidInput(format!("hand `{}` has no {street} board", hand.id))
    })?;
    snapshot_with_cards(hand, street, &hand.holes, board, policy, &street.to_string())
}

/// `[pot] ++ per seat [f(pot, HS, n), f(pot, HS², n)]`, padded with zeros to
/// `max_seats` seats; `n` is the number of non-folded players.
pub fn extract_features(snap: &StreetSnapshot, max_seats: usize, form: FeatureForm) -> Result<DVector<f64>> {
    if snap.strengths.len() > max_seats {
        return Err(PokerError::InvalidInput(format!(
            "{} seats exceed the feature width of {max_seats}",
            snap.strengths.len()
        )));
    }
    let mut phi = DVector::zeros(1 + 2 * max_seats);
    phi[0] = snap.pot;
    for (seat, s) in snap.strengths.iter().enumerate() {
        if let Some((hs, hs2)) = s {
            phi[1 + 2 * seat] = form.apply(snap.pot, *hs, snap.non_folded);
            phi[2 + 2 * seat] = form.apply(snap.pot, *hs2, snap.non_folded);
        }
    }
    Ok(phi)
}
