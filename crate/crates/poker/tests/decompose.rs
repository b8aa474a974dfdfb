use std::collections::BTreeMap;

use aivat::estimator::{evaluate_affine, HistoryId};
use aivat::heuristics::{FeatureForm, HeuristicModel, TabularHeuristic};
use aivat_poker::features::{derive_seed, extract_features, snapshot, StrengthPolicy, StreetSnapshot};
use aivat_poker::mivat::{candidates, hand_feature_rows, parse_counterfactual_id, realized_ids, Slot};
use aivat_poker::{
    generate_holdem, kfold_split, mivat_decompose_hand, parse_hand, subsample_training, HoldemFeatureConfig,
    PokerError, Street, SynthConfig, TrackedEvents,
};

fn sample_hand() -> aivat_poker::HandHistory {
    parse_hand(r#"{"id":"t1","button":1,"blinds":[50,100],"stacks":[10000,10000],"players":["a","b"],"holes":[["As","Kd"],["7c","2h"]],"board":["Qs","9d","4c","3h","Jd"],"actions":[[{"seat":1,"kind":"call","amount":50},{"seat":0,"kind":"check","amount":0}],[],[],[]],"payoffs":[100,-100]}"#).unwrap()
}

#[test]
fn turn_node_coefficients() {
    let hand = sample_hand();
    let est = mivat_decompose_hand(&hand, 0, &TrackedEvents::default()).unwrap();
    assert_eq!(est.groups.len(), 5);
    let turn = &est.groups[3];
    assert_eq!(turn.members.len(), 45);
    for (id, c) in &turn.members {
        let (_, slot, card) = parse_counterfactual_id(id).unwrap();
        assert_eq!(slot, Slot::Board(3));
        let expected = if card.to_string() == "3h" { 1.0 / 45.0 - 1.0 } else { 1.0 / 45.0 };
        assert!((c - expected).abs() < 1e-15);
    }
    assert_eq!(est.groups[0].members.len(), 48);
    assert!(est.max_group_imbalance() < 1e-10);
    assert_eq!(est.b, 1000.0);
}

#[test]
fn reductions_to_the_raw_payoff() {
    let hand = sample_hand();
    let none = mivat_decompose_hand(&hand, 1, &TrackedEvents::none()).unwrap();
    assert!(none.groups.is_empty() && none.b == -1000.0);
    let est = mivat_decompose_hand(&hand, 1, &"flop,turn,river,hole".parse().unwrap()).unwrap();
    assert_eq!(est.groups.len(), 9);
    assert!(est.max_group_imbalance() < 1e-10);
    let value = evaluate_affine(&est, &TabularHeuristic::constant(37.5)).unwrap();
    assert!((value - est.b).abs() < 1e-9);
}

#[test]
fn missing_tracked_board_card_is_an_error() {
    let mut hand = sample_hand();
    hand.board.truncate(4);
    hand.actions[3].clear();
    assert!(matches!(
        mivat_decompose_hand(&hand, 0, &TrackedEvents::default()),
        Err(PokerError::Decomposition { .. })
    ));
    // A hand that never reached the river has no river node.
    hand.actions.truncate(3);
    let est = mivat_decompose_hand(&hand, 0, &TrackedEvents::default()).unwrap();
    assert_eq!(est.groups.len(), 4);
}

/// Deterministic stand-in for a fitted heuristic: depends on the slot and
/// card of a counterfactual id.
struct CardScore;

impl HeuristicModel for CardScore {
    fn value(&self, id: &HistoryId) -> aivat::Result<f64> {
        let (_, slot, card) = parse_counterfactual_id(id).unwrap();
        let weight = match slot {
            Slot::Board(i) => 1.0 + i as f64,
            Slot::Hole { .. } => 0.5,
        };
        Ok(weight * (card.rank() as f64 - 6.0) * 150.0 + card.suit() as f64 * 40.0)
    }
}

#[test]
fn corrected_mean_matches_raw_mean() {
    let hands = generate_holdem(40_000, 11, &SynthConfig::default()).unwrap();
    let tracked: TrackedEvents = "hole,flop,turn,river".parse().unwrap();
    let diffs: Vec<f64> = hands
        .iter()
        .map(|h| {
            let est = mivat_decompose_hand(h, 0, &tracked).unwrap();
            evaluate_affine(&est, &CardScore).unwrap() - est.b
        })
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(sd > 0.0);
    assert!(mean.abs() < 4.0 * sd / n.sqrt(), "{mean} vs se {}", sd / n.sqrt());
}

#[test]
fn candidate_sets_remove_visible_cards() {
    let hand = sample_hand();
    assert_eq!(candidates(&hand, Slot::Board(4)).unwrap().len(), 44);
    assert_eq!(candidates(&hand, Slot::Hole { seat: 0, card: 1 }).unwrap().len(), 49);
    assert_eq!(realized_ids(&hand, &TrackedEvents::default()).unwrap().len(), 5);
}

#[test]
fn feature_formula_and_shape() {
    let snap = StreetSnapshot {
        street: Street::River,
        pot: 100.0,
        non_folded: 2,
        strengths: vec![Some((0.5, 0.3)), Some((0.2, 0.1))],
    };
    let phi = extract_features(&snap, 6, FeatureForm::default()).unwrap();
    assert_eq!(phi.len(), 13);
    assert!((phi[1] - 25.0).abs() < 1e-12);
    let alone = StreetSnapshot {
        non_folded: 1,
        strengths: vec![Some((0.5, 0.3)), None],
        ..snap.clone()
    };
    let phi = extract_features(&alone, 6, FeatureForm::default()).unwrap();
    assert!((phi[1] - 50.0).abs() < 1e-12 && phi[3] == 0.0 && phi[4] == 0.0);
    assert!(extract_features(&snap, 1, FeatureForm::default()).is_err());

    let mut hands = generate_holdem(10, 3, &SynthConfig::default()).unwrap();
    hands.extend(generate_holdem(10, 4, &SynthConfig { players: 5, ..SynthConfig::default() }).unwrap());
    let policy = StrengthPolicy { mc_samples: 50, seed: 1 };
    for hand in &hands {
        for street in Street::ALL.into_iter().filter(|s| s.board_len() <= hand.board.len()) {
            let snap = snapshot(hand, street, &policy).unwrap();
            for (hs, hs2) in snap.strengths.iter().flatten() {
                assert!((0.0..=1.0).contains(hs) && (0.0..=1.0).contains(hs2));
            }
            assert_eq!(extract_features(&snap, 6, FeatureForm::default()).unwrap().len(), 13);
        }
    }
}

#[test]
fn feature_rows_cover_every_member_deterministically() {
    let hand = sample_hand();
    let est = mivat_decompose_hand(&hand, 0, &TrackedEvents::default()).unwrap();
    let config = HoldemFeatureConfig {
        policy: StrengthPolicy { mc_samples: 20, seed: 5 },
        max_seats: 2,
        form: FeatureForm::default(),
    };
    let rows = hand_feature_rows(&hand, &est, &config).unwrap();
    assert_eq!(rows.len(), est.coeffs.len());
    assert_eq!(rows, hand_feature_rows(&hand, &est, &config).unwrap());
    let table: BTreeMap<_, _> = rows.into_iter().collect();
    let river = &table[&HistoryId::new("t1|r|Jd")];
    assert_eq!(river[0], 200.0);
    assert_ne!(derive_seed(1, &["a", "b"]), derive_seed(1, &["ab"]));
}

#[test]
fn kfold_partitions() {
    let singletons = kfold_split(10, 10, 1).unwrap();
    assert!(singletons.iter().all(|f| f.len() == 1));
    let folds = kfold_split(10_000, 10, 2).unwrap();
    assert!(folds.iter().all(|f| f.len() == 1000));
    let mut all: Vec<usize> = folds.concat();
    all.sort_unstable();
    assert_eq!(all, (0..10_000).collect::<Vec<_>>());
    let uneven = kfold_split(23, 5, 3).unwrap();
    let sizes: Vec<usize> = uneven.iter().map(Vec::len).collect();
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    assert_eq!(kfold_split(23, 5, 3).unwrap(), uneven);
    assert!(matches!(kfold_split(5, 1, 0), Err(PokerError::KOutOfRange { .. })));
    assert!(matches!(kfold_split(5, 6, 0), Err(PokerError::KOutOfRange { .. })));
}

#[test]
fn subsampling() {
    let items: Vec<usize> = (0..9000).collect();
    let sub = subsample_training(&items, 1000, 4).unwrap();
    assert_eq!(sub.len(), 1000);
    assert_eq!(sub, subsample_training(&items, 1000, 4).unwrap());
    assert_ne!(sub, subsample_training(&items, 1000, 5).unwrap());
    assert_eq!(subsample_training(&items, 9000, 6).unwrap(), items);
    assert!(matches!(
        subsample_training(&items, 9001, 0),
        Err(PokerError::SampleTooLarge { .. })
    ));
}
