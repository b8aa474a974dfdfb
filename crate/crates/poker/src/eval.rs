//! Seven-card hand evaluation.

use std::fmt;

use crate::card::{Card, CardSet};
use crate::error::{PokerError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    HighCard,
    Pair,
    TwoPair,
    Trips,
    Straight,
    Flush,
    FullHouse,
    Quads,
    StraightFlush,
}

const CATEGORIES: [Category; 9] = [
    Category::HighCard,
    Category::Pair,
    Category::TwoPair,
    Category::Trips,
    Category::Straight,
    Category::Flush,
    Category::FullHouse,
    Category::Quads,
    Category::StraightFlush,
];

/// Strength of a hand. Larger is better; equal values tie.
///
/// Packed as `category << 20` followed by up to five 4-bit ranks in
/// significance order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HandRank(pub u32);

impl HandRank {
    fn pack(category: Category, ranks: &[u8]) -> Self {
        let mut v = (category as u32) << 20;
        for (i, &r) in ranks.iter().take(5).enumerate() {
            v |= (r as u32) << (16 - 4 * i);
        }
        HandRank(v)
    }

    pub fn category(self) -> Category {
        CATEGORIES[(self.0 >> 20) as usize]
    }
}

impl fmt::Display for HandRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({:#07x})", self.category(), self.0 & 0xfffff)
    }
}

/// Highest straight in a 13-bit rank mask, as the rank of its top card.
fn top_straight(mask: u16) -> Option<u8> {
    // The ace also plays low.
    let ext = (mask as u32) << 1 | (mask as u32 >> 12 & 1);
    (0..=9u8).rev().find_map(|low| {
        let run = 0b11111u32 << low;
        (ext & run == run).then_some(low + 3)
    })
}

/// Up to five ranks in significance order, built without allocating.
#[derive(Default)]
struct Ranks {
    r: [u8; 5],
    n: usize,
}

impl Ranks {
    fn of(lead: &[u8]) -> Self {
        let mut out = Ranks::default();
        for &r in lead {
            out.r[out.n] = r;
            out.n += 1;
        }
        out
    }

    /// Appends the `n` highest ranks of `mask`.
    fn top(mut self, mask: u16, n: usize) -> Self {
        let mut left = n;
        let mut r = 13u8;
        while left > 0 && r > 0 {
            r -= 1;
            if mask >> r & 1 == 1 {
                self.r[self.n] = r;
                self.n += 1;
                left -= 1;
            }
        }
        self
    }

    fn pack(&self, category: Category) -> HandRank {
        HandRank::pack(category, &self.r[..self.n])
    }
}

/// Best five-card hand among `cards` (5 to 7 distinct cards).
pub fn evaluate(cards: &[Card]) -> Result<HandRank> {
    if !(5..=7).contains(&cards.len()) {
        return Err(PokerError::InvalidInput(format!(
            "expected 5 to 7 cards, got {}",
            cards.len()
        )));
    }
    CardSet::from_cards(cards)?;
    Ok(evaluate_unchecked(cards))
}

/// [`evaluate`] for exactly seven cards.
pub fn evaluate_7card(cards: &[Card; 7]) -> Result<HandRank> {
    evaluate(cards)
}

/// [`evaluate`] without the distinctness check.
pub(crate) fn evaluate_unchecked(cards: &[Card]) -> HandRank {
    let mut suit_masks = [0u16; 4];
    let mut counts = [0u8; 13];
    for c in cards {
        suit_masks[c.suit() as usize] |= 1 << c.rank();
        counts[c.rank() as usize] += 1;
    }
    if let Some(mask) = suit_masks.iter().copied().find(|m| m.count_ones() >= 5) {
        if let Some(top) = top_straight(mask) {
            return Ranks::of(&[top]).pack(Category::StraightFlush);
        }
        return Ranks::default().top(mask, 5).pack(Category::Flush);
    }

    let mut quads = None;
    let mut trips = [0u8; 2];
    let mut n_trips = 0;
    let mut pairs = [0u8; 2];
    let mut n_pairs = 0;
    let mut all = 0u16;
    for r in (0..13u8).rev() {
        match counts[r as usize] {
            4 => quads = Some(r),
            3 if n_trips < 2 => {
                trips[n_trips] = r;
                n_trips += 1;
            }
            2 if n_pairs < 2 => {
                pairs[n_pairs] = r;
                n_pairs += 1;
            }
            _ => {}
        }
        if counts[r as usize] > 0 {
            all |= 1 << r;
        }
    }
    let without = |ranks: &[u8]| ranks.iter().fold(all, |m, r| m & !(1 << r));

    if let Some(q) = quads {
        return Ranks::of(&[q]).top(without(&[q]), 1).pack(Category::Quads);
    }
    if n_trips > 0 {
        // A second set of trips plays as the pair.
        let pair = match (n_trips, n_pairs) {
            (2, 0) => Some(trips[1]),
            (2, _) => Some(trips[1].max(pairs[0])),
            (_, 0) => None,
            _ => Some(pairs[0]),
        };
        if let Some(p) = pair {
            return Ranks::of(&[trips[0], p]).pack(Category::FullHouse);
        }
    }
    if let Some(top) = top_straight(all) {
        return Ranks::of(&[top]).pack(Category::Straight);
    }
    if n_trips > 0 {
        let t = trips[0];
        return Ranks::of(&[t]).top(without(&[t]), 2).pack(Category::Trips);
    }
    if n_pairs == 2 {
        let (a, b) = (pairs[0], pairs[1]);
        return Ranks::of(&[a, b]).top(without(&[a, b]), 1).pack(Category::TwoPair);
    }
    if n_pairs == 1 {
        let p = pairs[0];
        return Ranks::of(&[p]).top(without(&[p]), 3).pack(Category::Pair);
    }
    Ranks::default().top(all, 5).pack(Category::HighCard)
}
