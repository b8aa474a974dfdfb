//! `eval`: per-hand estimates and per-player summaries.

use std::collections::BTreeMap;

use aivat::estimator::evaluate_affine;
use aivat::stats::{
    coefficient_vector, ivw_mean_with_floor, one_sided_t_test, propagate_variance, uniform_mean, Direction,
    EstimateWithVariance, PValue, Scheme, WeightedSummary,
};
use aivat::Error;
use aivat_poker::{kfold_split, subsample_training, training_indices};
use rayon::prelude::*;

use crate::config::{HeuristicKind, RunConfig};
use crate::corpus::{load_corpus, LoadedCorpus};
use crate::domain::{Domain, SharedFeatures};
use crate::error::{invalid, write_file, CliError, Result};
use crate::heuristic::{fit_seats, FittedHeuristic, ModelFile};
use crate::report::{fmt_f64, Table};

#[derive(Clone, Debug, PartialEq)]
pub struct HandEstimate {
    pub hand_id: String,
    pub seat: usize,
    pub player: String,
    pub b: f64,
    pub estimate: f64,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayerSummary {
    pub player: String,
    pub hands: usize,
    pub summary: WeightedSummary,
    pub t: f64,
    pub p: PValue,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOutput {
    pub per_hand: Vec<HandEstimate>,
    pub players: Vec<PlayerSummary>,
}

/// Heuristics per seat and the hands they are applied to.
struct Assignment {
    hands: Vec<usize>,
    seats: Vec<FittedHeuristic>,
}

fn needs_features(kind: HeuristicKind) -> bool {
    matches!(kind, HeuristicKind::WbLinear | HeuristicKind::BayesLinear)
}

fn assignments(
    domain: &Domain,
    loaded: &LoadedCorpus,
    model: Option<ModelFile>,
    features: Option<&SharedFeatures>,
    config: &RunConfig,
) -> Result<Vec<Assignment>> {
    let all: Vec<usize> = (0..domain.len()).collect();
    if let Some(model) = model {
        let path = config.model.as_ref().expect("model comes from --model");
        if model.corpus_sha256 == loaded.sha256 && !config.allow_insample {
            return Err(CliError::Commitment(format!(
                "the heuristic in {} was trained on this evaluation corpus (sha256 {})",
                path.display(),
                loaded.sha256
            )));
        }
        if model.game != loaded.corpus.game_kind() {
            return Err(invalid(format!(
                "heuristic was trained on {} but the corpus is {}",
                model.game,
                loaded.corpus.game_kind()
            )));
        }
        if model.scheme != config.scheme {
            return Err(invalid(format!(
                "heuristic was trained for the {} scheme; pass --scheme {}",
                model.scheme, model.scheme
            )));
        }
        if model.seats.len() < domain.max_seats() {
            return Err(invalid(format!(
                "heuristic covers {} seats, corpus has {}",
                model.seats.len(),
                domain.max_seats()
            )));
        }
        return Ok(vec![Assignment { hands: all, seats: model.seats }]);
    }
    if config.heuristic == HeuristicKind::Zero {
        let seats = vec![FittedHeuristic::Zero; domain.max_seats()];
        return Ok(vec![Assignment { hands: all, seats }]);
    }
    if config.allow_insample {
        let seats = fit_seats(domain, &all, features, config)?;
        return Ok(vec![Assignment { hands: all, seats }]);
    }
    let k = config.kfold.min(domain.len());
    let folds = kfold_split(domain.len(), k, config.seed)?;
    (0..folds.len())
        .map(|i| {
            let mut train = training_indices(&folds, i);
            if let Some(n) = config.train_subsample {
                train = subsample_training(&train, n.min(train.len()), config.seed.wrapping_add(i as u64))?;
            }
            Ok(Assignment {
                hands: folds[i].clone(),
                seats: fit_seats(domain, &train, features, config)?,
            })
        })
        .collect()
}

fn summarize(
    player: String,
    estimates: &[EstimateWithVariance],
    config: &RunConfig,
) -> Result<PlayerSummary> {
    let summary = match config.weighting {
        Scheme::Uniform => uniform_mean(estimates)?,
        Scheme::Ivw => ivw_mean_with_floor(estimates, config.variance_floor).map_err(|e| match e {
            Error::InfiniteWeight { .. } => invalid(format!("{e}; pass --variance-floor")),
            other => other.into(),
        })?,
    };
    let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    let weights = (config.weighting == Scheme::Ivw).then_some(summary.weights.as_slice());
    let (t, p) = match one_sided_t_test(&values, weights, config.mu0, Direction::Greater) {
        Ok(r) => (r.t, r.p_one_sided),
        Err(Error::DegenerateStatistic(_)) => (f64::NAN, PValue::P(f64::NAN)),
        Err(e) => return Err(e.into()),
    };
    Ok(PlayerSummary {
        player,
        hands: estimates.len(),
        summary,
        t,
        p,
    })
}

/// Runs the evaluation on a loaded corpus.
pub fn evaluate_corpus(loaded: &LoadedCorpus, config: &RunConfig) -> Result<EvalOutput> {
    let domain = Domain::new(&loaded.corpus, config)?;
    if domain.len() < 2 {
        return Err(invalid("evaluation needs at least two hands"));
    }
    let model = config.model.as_deref().map(ModelFile::load).transpose()?;
    let (kind, form) = match &model {
        Some(m) => (m.kind, m.form),
        None => (config.heuristic, config.form),
    };
    if config.weighting == Scheme::Ivw && kind != HeuristicKind::BayesLinear {
        return Err(invalid(format!(
            "--weighting ivw needs per-hand variances, which a {kind} heuristic does not provide"
        )));
    }
    let features = needs_features(kind).then(|| domain.features(form, config)).transpose()?;
    let plan = assignments(&domain, loaded, model, features.as_ref(), config)?;

    let mut per_hand: Vec<Option<Vec<HandEstimate>>> = vec![None; domain.len()];
    for assignment in &plan {
        let bound = assignment
            .seats
            .iter()
            .map(|h| h.bind(features.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let with_variance: Vec<bool> = assignment
            .seats
            .iter()
            .map(|h| matches!(h, FittedHeuristic::Bayes(_)))
            .collect();
        let rows: Vec<(usize, Vec<HandEstimate>)> = assignment
            .hands
            .par_iter()
            .map(|&h| {
                let players = domain.players(h);
                let rows = (0..domain.num_seats(h))
                    .map(|seat| {
                        let est = &domain.estimates[h][seat];
                        let heuristic = bound[seat].as_ref();
                        let estimate = evaluate_affine(est, heuristic)?;
                        let variance = if with_variance[seat] {
                            let (ids, _) = coefficient_vector(est);
                            let (_, sigma) = heuristic.joint(&ids)?;
                            propagate_variance(est, &sigma)?
                        } else {
                            0.0
                        };
                        Ok(HandEstimate {
                            hand_id: domain.hand_id(h).to_string(),
                            seat,
                            player: players[seat].clone(),
                            b: est.b,
                            estimate,
                            variance,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((h, rows))
            })
            .collect::<Result<_>>()?;
        for (h, r) in rows {
            per_hand[h] = Some(r);
        }
    }
    let per_hand: Vec<HandEstimate> = per_hand.into_iter().flatten().flatten().collect();

    let mut by_player: BTreeMap<String, Vec<EstimateWithVariance>> = BTreeMap::new();
    for row in &per_hand {
        by_player
            .entry(row.player.clone())
            .or_default()
            .push(EstimateWithVariance::new(row.estimate, row.variance)?);
    }
    let players = by_player
        .into_iter()
        .filter(|(_, e)| e.len() >= 2)
        .map(|(p, e)| summarize(p, &e, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalOutput { per_hand, players })
}

pub fn summary_table(out: &EvalOutput, config: &RunConfig) -> Table {
    let mut t = Table::new(&[
        "player",
        "scheme",
        "weighting",
        "hands",
        "win_rate_mbb",
        "se_mbb",
        "est_bias_mbb",
        "t",
        "p_or_log10p",
        "model_se_mbb",
    ]);
    for p in &out.players {
        t.push(vec![
            p.player.clone(),
            config.scheme.to_string(),
            p.summary.scheme.to_string(),
            p.hands.to_string(),
            fmt_f64(p.summary.mean),
            fmt_f64(p.summary.se),
            p.summary.estimated_bias.map(fmt_f64).unwrap_or_default(),
            fmt_f64(p.t),
            p.p.to_string(),
            fmt_f64(p.summary.model_se()),
        ]);
    }
    t
}

pub fn per_hand_table(out: &EvalOutput) -> Table {
    let mut t = Table::new(&["hand_id", "seat", "b", "estimate", "variance"]);
    for r in &out.per_hand {
        t.push(vec![
            r.hand_id.clone(),
            r.seat.to_string(),
            fmt_f64(r.b),
            fmt_f64(r.estimate),
            fmt_f64(r.variance),
        ]);
    }
    t
}

pub fn cmd_eval(config: &RunConfig) -> Result<String> {
    let loaded = load_corpus(config.input.as_ref().expect("validated"))?;
    let out = evaluate_corpus(&loaded, config)?;
    if let Some(path) = &config.per_hand {
        write_file(path, per_hand_table(&out).to_csv()?.as_bytes())?;
    }
    let summary = summary_table(&out, config);
    let csv = summary.to_csv()?;
    let mut shown = if config.pretty { summary.to_pretty() } else { csv.clone() };
    if let Some(path) = &config.output {
        write_file(path, csv.as_bytes())?;
        if !config.pretty {
            shown.clear();
        }
    }
    Ok(shown)
}
