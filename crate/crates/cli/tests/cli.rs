use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aivat::estimator::monte_carlo_summary;
use aivat::game::{expected_value_exact, Kuhn, StrategyProfile};
use aivat_cli::corpus::{load_corpus, Corpus};
use tempfile::TempDir;

fn aivat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aivat"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = aivat(args);
    assert!(
        out.status.success(),
        "aivat {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn simulate(dir: &TempDir, name: &str, args: &[&str]) -> String {
    let out = path(dir, name);
    let mut all = vec!["simulate", "--output", &out];
    all.extend_from_slice(args);
    ok(&all);
    out
}

/// Summary rows keyed by player: `(win_rate, se, remaining columns)`.
fn summary_rows(csv_text: &str) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn column(csv_text: &str, name: &str) -> Vec<f64> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = reader.headers().unwrap().iter().position(|h| h == name).expect("column");
    reader
        .records()
        .map(|r| r.unwrap()[idx].parse::<f64>().unwrap())
        .collect()
}

fn toy_payoffs(path: &Path, seat: usize) -> Vec<f64> {
    match load_corpus(path).unwrap().corpus {
        Corpus::Toy { hands, .. } => hands.iter().map(|h| h.payoffs[seat]).collect(),
        Corpus::Holdem(_) => panic!("expected a toy corpus"),
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = simulate(&dir, "a.txt", &["--game", "kuhn", "--hands", "1000", "--seed", "7"]);
    let b = simulate(&dir, "b.txt", &["--game", "kuhn", "--hands", "1000", "--seed", "7"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = simulate(&dir, "c.txt", &["--game", "kuhn", "--hands", "1000", "--seed", "8"]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn zero_hands_is_a_header_only_corpus() {
    let dir = TempDir::new().unwrap();
    let p = simulate(&dir, "empty.txt", &["--game", "leduc", "--hands", "0"]);
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("# aivat-corpus v1 game=leduc"));
    assert_eq!(load_corpus(Path::new(&p)).unwrap().corpus.len(), 0);
}

#[test]
fn kuhn_corpus_mean_matches_exact_value() {
    let dir = TempDir::new().unwrap();
    let p = simulate(&dir, "k.txt", &["--game", "kuhn", "--hands", "20000", "--seed", "3"]);
    let payoffs = toy_payoffs(Path::new(&p), 0);
    let s = monte_carlo_summary(&payoffs).unwrap();
    let exact = 1000.0 * expected_value_exact(&Kuhn, &StrategyProfile::uniform(&Kuhn).unwrap(), 0).unwrap();
    assert!((s.mean - exact).abs() < 4.0 * s.se, "{} vs {exact} (se {})", s.mean, s.se);
}

#[test]
fn raw_matches_monte_carlo_summary_and_zero_mivat_matches_raw() {
    let dir = TempDir::new().unwrap();
    let p = simulate(&dir, "l.txt", &["--game", "leduc", "--hands", "500", "--seed", "4"]);
    let raw = ok(&["eval", "--input", &p, "--scheme", "raw"]);
    let s = monte_carlo_summary(&toy_payoffs(Path::new(&p), 0)).unwrap();
    let rows = summary_rows(&raw);
    assert_eq!(rows[0][0], "p0");
    assert!((column(&raw, "win_rate_mbb")[0] - s.mean).abs() < 1e-9);
    assert!((column(&raw, "se_mbb")[0] - s.se).abs() < 1e-9);

    let zero = ok(&["eval", "--input", &p, "--scheme", "mivat", "--heuristic", "zero"]);
    for name in ["win_rate_mbb", "se_mbb", "t"] {
        let (a, b) = (column(&raw, name), column(&zero, name));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{name}: {x} vs {y}");
        }
    }
}

#[test]
fn commitment_is_enforced() {
    let dir = TempDir::new().unwrap();
    let train = simulate(&dir, "train.txt", &["--game", "leduc", "--hands", "300", "--seed", "1"]);
    let test = simulate(&dir, "test.txt", &["--game", "leduc", "--hands", "300", "--seed", "2"]);
    let model = path(&dir, "model.txt");
    ok(&["train", "--input", &train, "--output", &model, "--heuristic", "tabular"]);

    let refused = aivat(&["eval", "--input", &train, "--model", &model]);
    assert_eq!(refused.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&refused.stderr);
    assert!(msg.contains("fixed before the evaluation data is seen"), "{msg}");
    assert!(msg.contains("--allow-insample"), "{msg}");

    ok(&["eval", "--input", &train, "--model", &model, "--allow-insample"]);
    let out = ok(&["eval", "--input", &test, "--model", &model]);
    assert_eq!(summary_rows(&out).len(), 2);

    let mismatch = aivat(&["eval", "--input", &test, "--model", &model, "--scheme", "aivat"]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("--scheme mivat"));
}

#[test]
fn tampered_model_is_rejected() {
    let dir = TempDir::new().unwrap();
    let train = simulate(&dir, "train.txt", &["--game", "kuhn", "--hands", "200", "--seed", "1"]);
    let test = simulate(&dir, "test.txt", &["--game", "kuhn", "--hands", "200", "--seed", "2"]);
    let model = path(&dir, "model.txt");
    ok(&["train", "--input", &train, "--output", &model, "--heuristic", "tabular"]);
    let text = std::fs::read_to_string(&model).unwrap();
    let line = text.lines().rev().find(|l| l.contains(' ') && !l.contains('=')).unwrap().to_string();
    let (id, _) = line.split_once(' ').unwrap();
    std::fs::write(&model, text.replace(&line, &format!("{id} 12345"))).unwrap();
    let out = aivat(&["eval", "--input", &test, "--model", &model]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ivw_se_is_below_uniform_on_leduc() {
    let dir = TempDir::new().unwrap();
    let p = simulate(
        &dir,
        "l.txt",
        &["--game", "leduc", "--hands", "1000", "--seed", "3", "--profile", "random:1"],
    );
    let base = ["eval", "--input", &p, "--scheme", "mivat", "--heuristic", "bayes-linear"];
    let uniform = ok(&[&base[..], &["--weighting", "uniform"]].concat());
    let ivw = ok(&[&base[..], &["--weighting", "ivw"]].concat());
    let (u, w) = (column(&uniform, "se_mbb"), column(&ivw, "se_mbb"));
    assert!(w[0] < u[0], "ivw {} vs uniform {}", w[0], u[0]);
    assert!(column(&ivw, "est_bias_mbb")[0].is_finite());
    assert!(column(&uniform, "model_se_mbb")[0] > 0.0);
}

#[test]
fn insample_wb_linear_overfits() {
    let dir = TempDir::new().unwrap();
    let p = simulate(
        &dir,
        "l.txt",
        &["--game", "leduc", "--hands", "300", "--seed", "5", "--profile", "random:2"],
    );
    let base = ["eval", "--input", &p, "--scheme", "aivat", "--heuristic", "wb-linear"];
    let held_out = column(&ok(&base), "se_mbb")[0];
    let in_sample = column(&ok(&[&base[..], &["--allow-insample"]].concat()), "se_mbb")[0];
    assert!(in_sample < held_out, "in-sample {in_sample} vs held-out {held_out}");
}

#[test]
fn pathology_attacks_through_the_cli() {
    let dir = TempDir::new().unwrap();
    let p = simulate(
        &dir,
        "l.txt",
        &["--game", "leduc", "--hands", "1000", "--seed", "3", "--profile", "random:1"],
    );
    let trace = path(&dir, "trace.csv");
    let report = ok(&["pathology", "--input", &p, "--scheme", "aivat", "--output", &trace]);
    let ratios = column(&report, "variance_ratio");
    assert!(ratios.iter().all(|r| *r < 0.01), "{ratios:?}");
    let trace_text = std::fs::read_to_string(&trace).unwrap();
    assert!(trace_text.starts_with("player,attack,iteration,objective,sample_variance,t,p\n"));
    assert_eq!(trace_text.lines().count(), 1 + 2 * 251);

    let report = ok(&["pathology", "--input", &p, "--scheme", "aivat", "--objective", "tstat"]);
    let rows = summary_rows(&report);
    let t = column(&report, "t");
    assert_eq!(rows.len(), 4);
    for (row, t) in rows.iter().zip(&t) {
        let p: f64 = row[7].trim_start_matches("log10:").parse().unwrap();
        let significant = if row[7].starts_with("log10:") { p < -6.0 } else { p < 1e-6 };
        assert!(significant, "{row:?}");
        assert_eq!(row[1] == "tstat-max", *t > 5.0, "{row:?}");
        assert_eq!(row[1] == "tstat-min", *t < -5.0, "{row:?}");
    }
}

#[test]
fn explain_prints_the_reference_row_only_on_request() {
    let dir = TempDir::new().unwrap();
    let p = simulate(&dir, "k.txt", &["--game", "kuhn", "--hands", "100", "--seed", "3"]);
    let plain = ok(&["pathology", "--input", &p, "--iters", "5"]);
    let explained = ok(&["pathology", "--input", &p, "--iters", "5", "--explain"]);
    assert!(!plain.contains("2062"));
    assert!(explained.contains("2062 mbb/h") && explained.contains("SE 25 mbb/h"));
}

#[test]
fn check_passes_and_the_corruption_hook_fails_it() {
    let out = ok(&["check"]);
    assert!(out.lines().all(|l| l.starts_with("PASS ")), "{out}");
    assert!(out.contains("PASS group-zero-sums"));

    let bad = aivat(&["check", "--corrupt-coefficient"]);
    assert_eq!(bad.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(stdout.contains("FAIL group-zero-sums"), "{stdout}");
    assert!(String::from_utf8_lossy(&bad.stderr).contains("group-zero-sums"));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = TempDir::new().unwrap();
    let corpus = path(&dir, "c.txt");
    let config = path(&dir, "run.conf");
    std::fs::write(
        &config,
        format!("# toy run\ngame = leduc\nhands = 50\nseed = 9\noutput = {corpus}\n"),
    )
    .unwrap();
    ok(&["simulate", "--config", &config, "--hands", "20"]);
    let header = std::fs::read_to_string(&corpus).unwrap();
    assert!(header.starts_with("# aivat-corpus v1 game=leduc"), "{header}");
    assert!(header.lines().next().unwrap().contains("seed=9 hands=20"));
    assert_eq!(header.lines().count(), 21);

    std::fs::write(&config, "colour = blue\n").unwrap();
    assert_eq!(aivat(&["simulate", "--config", &config]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(aivat(&["--help"]).status.code(), Some(0));
    assert_eq!(aivat(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(aivat(&["eval"]).status.code(), Some(1));
    assert_eq!(aivat(&["eval", "--input", "x", "--kfold", "1"]).status.code(), Some(1));
    assert_eq!(
        aivat(&["eval", "--input", "x", "--weighting", "ivw", "--heuristic", "tabular"]).status.code(),
        Some(1)
    );
    let missing = path(&dir, "missing.txt");
    assert_eq!(aivat(&["eval", "--input", &missing]).status.code(), Some(2));
    let bad = path(&dir, "bad.txt");
    std::fs::write(&bad, "# aivat-corpus v1 game=kuhn\n{\"id\":\"x\",\"history\":\"9.9\",\"payoffs\":[0,0]}\n").unwrap();
    let out = aivat(&["eval", "--input", &bad]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn pretty_tables_are_aligned() {
    let dir = TempDir::new().unwrap();
    let p = simulate(&dir, "k.txt", &["--game", "kuhn", "--hands", "200", "--seed", "1"]);
    let out = ok(&["eval", "--input", &p, "--scheme", "raw", "--pretty"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].chars().all(|c| c == '-' || c == ' '));
    let widths: Vec<usize> = lines.iter().map(|l| l.len()).collect();
    assert!(widths.windows(2).all(|w| w[0] == w[1]), "{out}");
}

#[test]
fn eval_writes_per_hand_rows() {
    let dir = TempDir::new().unwrap();
    let p = simulate(&dir, "k.txt", &["--game", "kuhn", "--hands", "100", "--seed", "2"]);
    let per_hand = path(&dir, "per_hand.csv");
    let summary = path(&dir, "summary.csv");
    let stdout = ok(&["eval", "--input", &p, "--output", &summary, "--per-hand", &per_hand, "--kfold", "4"]);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&per_hand).unwrap();
    assert!(text.starts_with("hand_id,seat,b,estimate,variance\n"));
    assert_eq!(text.lines().count(), 1 + 200);
    let estimates = column(&text, "estimate");
    let mean0: f64 = estimates.iter().step_by(2).sum::<f64>() / 100.0;
    let reported = column(&std::fs::read_to_string(&summary).unwrap(), "win_rate_mbb")[0];
    assert!((mean0 - reported).abs() < 1e-9);
}

fn holdem_corpus(dir: &TempDir) -> String {
    simulate(dir, "h.txt", &["--game", "holdem", "--hands", "60", "--seed", "5", "--players", "3"])
}

#[test]
fn holdem_raw_and_mivat() {
    let dir = TempDir::new().unwrap();
    let p = holdem_corpus(&dir);
    let raw = ok(&["eval", "--input", &p, "--scheme", "raw"]);
    let zero = ok(&["eval", "--input", &p, "--scheme", "mivat", "--heuristic", "zero"]);
    assert_eq!(column(&raw, "win_rate_mbb"), column(&zero, "win_rate_mbb"));
    let fitted = ok(&[
        "eval", "--input", &p, "--scheme", "mivat", "--heuristic", "bayes-linear", "--hs-samples", "20",
        "--kfold", "3",
    ]);
    assert_eq!(summary_rows(&fitted).len(), 3);
    assert!(column(&fitted, "se_mbb").iter().all(|s| s.is_finite() && *s > 0.0));

    let no_floor = aivat(&[
        "eval", "--input", &p, "--heuristic", "bayes-linear", "--weighting", "ivw", "--hs-samples", "20",
    ]);
    assert_eq!(no_floor.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_floor.stderr).contains("--variance-floor"));
    ok(&[
        "eval", "--input", &p, "--heuristic", "bayes-linear", "--weighting", "ivw", "--hs-samples", "20",
        "--variance-floor", "1",
    ]);

    let aivat_run = aivat(&["eval", "--input", &p, "--scheme", "aivat"]);
    assert_eq!(aivat_run.status.code(), Some(2));
}

#[test]
fn holdem_model_round_trip() {
    let dir = TempDir::new().unwrap();
    let train = holdem_corpus(&dir);
    let test = simulate(&dir, "h2.txt", &["--game", "holdem", "--hands", "40", "--seed", "6", "--players", "3"]);
    let model: PathBuf = dir.path().join("m.txt");
    let m = model.to_string_lossy().into_owned();
    ok(&["train", "--input", &train, "--output", &m, "--heuristic", "wb-linear", "--hs-samples", "20", "--ridge", "1e-6"]);
    let text = std::fs::read_to_string(&model).unwrap();
    assert!(text.contains("created = 1700000000"), "{text}");
    let out = ok(&["eval", "--input", &test, "--model", &m, "--hs-samples", "20"]);
    assert_eq!(summary_rows(&out).len(), 3);
    let kuhn = simulate(&dir, "k.txt", &["--game", "kuhn", "--hands", "50"]);
    assert_eq!(aivat(&["eval", "--input", &kuhn, "--model", &m]).status.code(), Some(2));
}
