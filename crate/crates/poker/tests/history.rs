use std::time::Instant;

use aivat_poker::{
    generate_holdem, parse_corpus, parse_hand, write_corpus, HandHistory, PokerError, Street, SynthConfig,
};
use proptest::prelude::*;

const CHECK_DOWN: &str = r#"{"id":"min","button":0,"blinds":[50,100],"stacks":[10000,10000],"players":["a","b"],"holes":[["As","Kd"],["7c","2h"]],"board":["Qs","9d","4c","3h","Jd"],"actions":[[{"seat":0,"kind":"call","amount":50},{"seat":1,"kind":"check","amount":0}],[{"seat":1,"kind":"check","amount":0},{"seat":0,"kind":"check","amount":0}],[{"seat":1,"kind":"check","amount":0},{"seat":0,"kind":"check","amount":0}],[{"seat":1,"kind":"check","amount":0},{"seat":0,"kind":"check","amount":0}]],"payoffs":[100,-100]}"#;

#[test]
fn minimal_check_down() {
    let hand = parse_hand(CHECK_DOWN).unwrap();
    assert_eq!(hand.payoffs.iter().sum::<i64>(), 0);
    assert_eq!(hand.pot_at(Street::Flop), 200);
    assert_eq!(hand.payoff_mbb(0), 1000.0);
    assert_eq!(hand.blind_seats(), (0, 1));
    assert_eq!(hand.to_json_line(), CHECK_DOWN);
}

#[test]
fn validation_errors() {
    let dup = CHECK_DOWN.replace(r#""Qs","9d""#, r#""As","9d""#);
    assert!(matches!(parse_hand(&dup), Err(PokerError::Validation { .. })));
    let unbalanced = CHECK_DOWN.replace("[100,-100]", "[100,-90]");
    assert!(matches!(parse_hand(&unbalanced), Err(PokerError::Validation { .. })));
    let after_fold = CHECK_DOWN.replace(r#""kind":"call","amount":50"#, r#""kind":"fold","amount":0"#);
    assert!(matches!(parse_hand(&after_fold), Err(PokerError::Validation { .. })));
    let twice = CHECK_DOWN.replace(
        r#"{"seat":1,"kind":"check","amount":0}],[{"seat":1"#,
        r#"{"seat":0,"kind":"check","amount":0}],[{"seat":1"#,
    );
    assert!(matches!(parse_hand(&twice), Err(PokerError::Validation { .. })));
}

#[test]
fn malformed_records_report_position() {
    let text = format!("# header\n{CHECK_DOWN}\n{}\n", &CHECK_DOWN[..40]);
    match parse_corpus(&text) {
        Err(PokerError::Parse { line, column, .. }) => {
            assert_eq!(line, 3);
            assert!(column > 0);
        }
        other => panic!("{other:?}"),
    }
    let bad_card = CHECK_DOWN.replace("\"7c\"", "\"7x\"");
    assert!(matches!(parse_hand(&bad_card), Err(PokerError::Parse { .. })));
}

#[test]
fn ten_thousand_records_parse_quickly() {
    let hands = generate_holdem(10_000, 5, &SynthConfig { players: 3, ..SynthConfig::default() }).unwrap();
    let text = write_corpus(&hands, Some("aivat-corpus v1 game=holdem"));
    let start = Instant::now();
    let parsed = parse_corpus(&text).unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert_eq!(parsed.len(), 10_000);
    assert_eq!(parsed, hands);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip(seed in 0u64..1_000_000, players in 2usize..=6) {
        let cfg = SynthConfig { players, ..SynthConfig::default() };
        for hand in generate_holdem(5, seed, &cfg).unwrap() {
            hand.validate().unwrap();
            let line = hand.to_json_line();
            let parsed: HandHistory = parse_hand(&line).unwrap();
            prop_assert_eq!(&parsed, &hand);
            prop_assert_eq!(parsed.to_json_line(), line);
        }
    }
}

#[test]
fn whitespace_normalizes_to_canonical_form() {
    let pretty = serde_json::to_string_pretty(&parse_hand(CHECK_DOWN).unwrap()).unwrap();
    assert_eq!(parse_hand(&pretty).unwrap().to_json_line(), CHECK_DOWN);
}
