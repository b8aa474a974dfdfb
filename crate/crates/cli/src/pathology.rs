//! `pathology`: gradient attacks on a fixed evaluation sample.

use std::collections::BTreeMap;

use aivat::estimator::AffineEstimate;
use aivat::pathology::{optimize, ObjectiveKind, Optimized, PathologyDataset};
use nalgebra::DVector;

use crate::config::{Objective, RunConfig};
use crate::corpus::load_corpus;
use crate::domain::Domain;
use crate::error::{write_file, Result};
use crate::report::{fmt_f64, Table};

/// Reference figures for the attack on a large professional-scale match,
/// shown with `--explain` only.
pub const REFERENCE_NOTE: &str = "reference: a variance attack on a large two-player no-limit match \
reported a win rate of 2062 mbb/h with SE 25 mbb/h; synthetic corpora are not expected to match it";

#[derive(Clone, Debug, PartialEq)]
pub struct AttackRun {
    pub player: String,
    /// `variance`, `tstat-min` or `tstat-max`.
    pub attack: &'static str,
    pub result: Optimized,
}

/// Each player's estimates across the corpus, keyed by player name.
pub fn player_datasets(domain: &Domain) -> Result<BTreeMap<String, PathologyDataset>> {
    let mut by_player: BTreeMap<String, Vec<AffineEstimate>> = BTreeMap::new();
    for h in 0..domain.len() {
        for (seat, name) in domain.players(h).into_iter().enumerate() {
            by_player.entry(name).or_default().push(domain.estimates[h][seat].clone());
        }
    }
    by_player
        .into_iter()
        .filter(|(_, e)| e.len() >= 2)
        .map(|(p, e)| Ok((p, PathologyDataset::from_estimates(&e)?)))
        .collect()
}

pub fn run_attacks(domain: &Domain, config: &RunConfig) -> Result<Vec<AttackRun>> {
    let attacks: Vec<(&'static str, ObjectiveKind)> = match config.objective {
        Objective::Variance => vec![("variance", ObjectiveKind::SampleVariance)],
        Objective::TStat => vec![
            ("tstat-min", ObjectiveKind::TStatisticMinimize { mu0: config.mu0 }),
            ("tstat-max", ObjectiveKind::TStatisticMaximize { mu0: config.mu0 }),
        ],
    };
    let mut runs = Vec::new();
    for (player, data) in player_datasets(domain)? {
        for &(attack, kind) in &attacks {
            let result = optimize(kind, &data, config.adam, DVector::zeros(data.dim()))?;
            runs.push(AttackRun {
                player: player.clone(),
                attack,
                result,
            });
        }
    }
    Ok(runs)
}

pub fn trace_table(runs: &[AttackRun]) -> Table {
    let mut t = Table::new(&["player", "attack", "iteration", "objective", "sample_variance", "t", "p"]);
    for run in runs {
        for row in &run.result.trace {
            t.push(vec![
                run.player.clone(),
                run.attack.to_string(),
                row.iteration.to_string(),
                fmt_f64(row.objective),
                fmt_f64(row.sample_variance),
                fmt_f64(row.t),
                row.p.to_string(),
            ]);
        }
    }
    t
}

pub fn final_table(runs: &[AttackRun]) -> Table {
    let mut t = Table::new(&[
        "player",
        "attack",
        "iterations",
        "initial_variance",
        "final_variance",
        "variance_ratio",
        "t",
        "p",
    ]);
    for run in runs {
        let first = &run.result.trace[0];
        let last = run.result.last();
        t.push(vec![
            run.player.clone(),
            run.attack.to_string(),
            last.iteration.to_string(),
            fmt_f64(first.sample_variance),
            fmt_f64(last.sample_variance),
            fmt_f64(last.sample_variance / first.sample_variance),
            fmt_f64(last.t),
            last.p.to_string(),
        ]);
    }
    t
}

/// Writes the trace to `--output` and the final rows to `--report`; the
/// final rows are also returned for stdout.
pub fn cmd_pathology(config: &RunConfig) -> Result<String> {
    let loaded = load_corpus(config.input.as_ref().expect("validated"))?;
    let domain = Domain::new(&loaded.corpus, config)?;
    let runs = run_attacks(&domain, config)?;
    if let Some(path) = &config.output {
        write_file(path, trace_table(&runs).to_csv()?.as_bytes())?;
    }
    let summary = final_table(&runs);
    if let Some(path) = &config.report {
        write_file(path, summary.to_csv()?.as_bytes())?;
    }
    let mut out = if config.pretty { summary.to_pretty() } else { summary.to_csv()? };
    if config.explain {
        out.push_str(&format!("# {REFERENCE_NOTE}\n"));
    }
    Ok(out)
}
