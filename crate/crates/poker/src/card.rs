use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{PokerError, Result};

const RANKS: &[u8; 13] = b"23456789TJQKA";
const SUITS: &[u8; 4] = b"cdhs";

/// A playing card, stored as `rank * 4 + suit` with rank 0 = deuce and
/// suits ordered c, d, h, s.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Card(u8);

impl Card {
    pub fn new(rank: u8, suit: u8) -> Result<Self> {
        if rank >= 13 || suit >= 4 {
            return Err(PokerError::InvalidCard(format!("rank {rank}, suit {suit}")));
        }
        Ok(Card(rank * 4 + suit))
    }

    pub fn from_index(index: u8) -> Result<Self> {
        if index >= 52 {
            return Err(PokerError::InvalidCard(format!("index {index}")));
        }
        Ok(Card(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn rank(self) -> u8 {
        self.0 / 4
    }

    pub fn suit(self) -> u8 {
        self.0 % 4
    }

    pub fn deck() -> impl Iterator<Item = Card> {
        (0..52).map(Card)
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            RANKS[self.rank() as usize] as char,
            SUITS[self.suit() as usize] as char
        )
    }
}

impl FromStr for Card {
    type Err = PokerError;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        if b.len() != 2 {
            return Err(PokerError::InvalidCard(s.to_string()));
        }
        let rank = RANKS.iter().position(|&r| r == b[0].to_ascii_uppercase());
        let suit = SUITS.iter().position(|&x| x == b[1].to_ascii_lowercase());
        match (rank, suit) {
            (Some(r), Some(s)) => Card::new(r as u8, s as u8),
            _ => Err(PokerError::InvalidCard(s.to_string())),
        }
    }
}

impl Serialize for Card {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Card {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses concatenated cards such as `"AsKd"` or `"As Kd"`.
pub fn parse_cards(s: &str) -> Result<Vec<Card>> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.len() % 2 != 0 {
        return Err(PokerError::InvalidCard(s.to_string()));
    }
    (0..compact.len())
        .step_by(2)
        .map(|i| compact.get(i..i + 2).ok_or_else(|| PokerError::InvalidCard(s.to_string()))?.parse())
        .collect()
}

/// Bit set of cards by index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CardSet(pub u64);

impl CardSet {
    pub fn contains(self, c: Card) -> bool {
        self.0 >> c.0 & 1 == 1
    }

    /// Inserts `c`, failing if it is already present.
    pub fn insert(&mut self, c: Card) -> Result<()> {
        if self.contains(c) {
            return Err(PokerError::DuplicateCard(c.to_string()));
        }
        self.0 |= 1 << c.0;
        Ok(())
    }

    pub fn from_cards(cards: &[Card]) -> Result<Self> {
        let mut set = CardSet::default();
        for &c in cards {
            set.insert(c)?;
        }
        Ok(set)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Cards not in the set, ascending.
    pub fn remaining(self) -> Vec<Card> {
        Card::deck().filter(|&c| !self.contains(c)).collect()
    }
}
