//! Hold'em support for the aivat estimators: cards and hand evaluation,
//! JSON-lines hand histories, hand-strength features, chance-only
//! decomposition of real hands, and cross-fitting splits.

pub mod card;
pub mod error;
pub mod eval;
pub mod features;
pub mod history;
pub mod kfold;
pub mod mivat;
pub mod strength;
pub mod synth;

pub use card::{parse_cards, Card, CardSet};
pub use error::{PokerError, Result};
pub use eval::{evaluate, evaluate_7card, Category, HandRank};
pub use features::{extract_features, snapshot, StrengthPolicy, StreetSnapshot};
pub use history::{parse_corpus, parse_hand, write_corpus, Action, ActionKind, HandHistory, Street};
pub use kfold::{kfold_split, subsample_training, training_indices};
pub use mivat::{mivat_decompose_hand, HoldemFeatureConfig, TrackedEvents};
pub use strength::{hand_strength, HsMode};
pub use synth::{generate_holdem, SynthConfig};
