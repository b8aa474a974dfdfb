//! `check`: the embedded verification suite.

use std::collections::BTreeSet;

use aivat::estimator::{decompose_affine, evaluate_affine, AffineEstimate, EstimatorConfig, HistoryId};
use aivat::game::{
    expected_value_exact, sample_playout, terminal_distribution, Game, Kuhn, Leduc, StrategyProfile,
};
use aivat::heuristics::TabularHeuristic;
use aivat::pathology::{optimize, sample_variance_cost, t_statistic, AdamConfig, ObjectiveKind, PathologyDataset};
use aivat::stats::{ivw_mean, weighted_model_variance, EstimateWithVariance};
use aivat_poker::{generate_holdem, mivat_decompose_hand, SynthConfig, TrackedEvents};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

const UNBIASED_TOL: f64 = 1e-10;
const ZERO_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub failure: Option<String>,
}

type Check = std::result::Result<(), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `(π(z), v̂ decomposition)` for every terminal under full-knowledge AIVAT.
fn enumerate_aivat(
    game: &(dyn Game + Sync),
    profile: &StrategyProfile,
    player: usize,
) -> std::result::Result<Vec<(f64, AffineEstimate)>, String> {
    let config = EstimatorConfig::aivat(player, 0..game.num_players());
    let partial = profile.as_partial();
    terminal_distribution(game, profile)
        .map_err(err)?
        .par_iter()
        .map(|(z, p)| Ok((*p, decompose_affine(game, z, &partial, &config).map_err(err)?)))
        .collect()
}

fn expectation(rows: &[(f64, AffineEstimate)], h: &TabularHeuristic) -> std::result::Result<f64, String> {
    rows.iter()
        .map(|(p, e)| Ok(p * evaluate_affine(e, h).map_err(err)?))
        .sum()
}

fn unbiased(game: &(dyn Game + Sync), heuristics: usize, seed: u64) -> Check {
    let profile = StrategyProfile::random(game, seed).map_err(err)?;
    let truth = expected_value_exact(game, &profile, 0).map_err(err)?;
    let rows = enumerate_aivat(game, &profile, 0)?;
    let ids: BTreeSet<HistoryId> = rows.iter().flat_map(|(_, e)| e.coeffs.keys().cloned()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..heuristics {
        let theta = ids.iter().map(|id| (id.clone(), rng.random_range(-10.0..10.0))).collect();
        let h = TabularHeuristic::new(theta).map_err(err)?;
        let mean = expectation(&rows, &h)?;
        if (mean - truth).abs() >= UNBIASED_TOL {
            return Err(format!("{}: heuristic {i} gives {mean}, exact value {truth}", game.name()));
        }
    }
    Ok(())
}

/// Attacks a 200-hand Kuhn sample, then enumerates with the attacked values.
fn unbiased_after_attack() -> Check {
    let game = &Kuhn;
    let profile = StrategyProfile::random(game, 3).map_err(err)?;
    let truth = expected_value_exact(game, &profile, 0).map_err(err)?;
    let config = EstimatorConfig::aivat(0, [0, 1]);
    let partial = profile.as_partial();
    let sample: Vec<AffineEstimate> = (0..200)
        .map(|s| {
            let z = sample_playout(game, &profile, s).map_err(err)?;
            decompose_affine(game, &z, &partial, &config).map_err(err)
        })
        .collect::<std::result::Result<_, _>>()?;
    let data = PathologyDataset::from_estimates(&sample).map_err(err)?;
    let adam = AdamConfig {
        learning_rate: 0.5,
        iterations: 100,
        ..AdamConfig::variance_attack()
    };
    let attacked = optimize(ObjectiveKind::SampleVariance, &data, adam, DVector::zeros(data.dim())).map_err(err)?;
    let theta = data.index.iter().map(|(id, &k)| (id.clone(), attacked.theta[k])).collect();
    let h = TabularHeuristic::with_default(theta, Some(0.0)).map_err(err)?;
    let mean = expectation(&enumerate_aivat(game, &profile, 0)?, &h)?;
    if (mean - truth).abs() >= UNBIASED_TOL {
        return Err(format!("attacked heuristic gives {mean}, exact value {truth}"));
    }
    Ok(())
}

fn central_difference(f: impl Fn(&DVector<f64>) -> f64, theta: &DVector<f64>, step: f64) -> DVector<f64> {
    DVector::from_fn(theta.len(), |k, _| {
        let mut up = theta.clone();
        let mut down = theta.clone();
        up[k] += step;
        down[k] -= step;
        (f(&up) - f(&down)) / (2.0 * step)
    })
}

fn relative_error(analytic: &DVector<f64>, numeric: &DVector<f64>) -> f64 {
    (analytic - numeric).amax() / analytic.amax().max(numeric.amax()).max(1e-300)
}

fn gradients() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for instance in 0..20 {
        let (n, d) = (40, 20);
        let c = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let b = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let data = PathologyDataset::from_dense(b, &c).map_err(err)?;
        let theta = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let (_, g) = sample_variance_cost(&theta, &data).map_err(err)?;
        let fd = central_difference(|t| sample_variance_cost(t, &data).map(|r| r.0).unwrap_or(f64::NAN), &theta, 1e-5);
        let e = relative_error(&g, &fd);
        if !(e < 1e-5) {
            return Err(format!("variance gradient, instance {instance}: relative error {e:e}"));
        }
        let (_, g) = t_statistic(&theta, &data, 0.0).map_err(err)?;
        let fd = central_difference(|t| t_statistic(t, &data, 0.0).map(|r| r.0).unwrap_or(f64::NAN), &theta, 1e-5);
        let e = relative_error(&g, &fd);
        if !(e < 1e-5) {
            return Err(format!("t gradient, instance {instance}: relative error {e:e}"));
        }
    }
    Ok(())
}

fn ivw_optimality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for set in 0..20 {
        let variances: Vec<f64> = (0..30).map(|_| rng.random_range(0.1..10.0)).collect();
        let ests: Vec<EstimateWithVariance> = variances
            .iter()
            .map(|&v| EstimateWithVariance::new(rng.random_range(-1.0..1.0), v))
            .collect::<aivat::Result<_>>()
            .map_err(err)?;
        let best = ivw_mean(&ests).map_err(err)?.model_variance;
        for _ in 0..100 {
            let w: Vec<f64> = (0..variances.len()).map(|_| rng.random_range(1e-3..1.0)).collect();
            let alt = weighted_model_variance(&w, &variances).map_err(err)?;
            if alt < best * (1.0 - 1e-12) {
                return Err(format!("set {set}: weighting with model variance {alt} beats IVW {best}"));
            }
        }
    }
    Ok(())
}

fn zero_sums(corrupt: bool) -> Check {
    let mut estimates: Vec<(String, AffineEstimate)> = Vec::new();
    for game in [&Kuhn as &(dyn Game + Sync), &Leduc] {
        let profile = StrategyProfile::uniform(game).map_err(err)?;
        for (i, (_, e)) in enumerate_aivat(game, &profile, 0)?.into_iter().enumerate().step_by(7) {
            estimates.push((format!("{} terminal {i}", game.name()), e));
        }
    }
    let hands = generate_holdem(100, 9, &SynthConfig::default()).map_err(err)?;
    let tracked = TrackedEvents::default();
    for hand in &hands {
        for seat in 0..hand.num_players() {
            let e = mivat_decompose_hand(hand, seat, &tracked).map_err(err)?;
            estimates.push((format!("hand {} seat {seat}", hand.id), e));
        }
    }
    if corrupt {
        if let Some((_, e)) = estimates.iter_mut().find(|(_, e)| !e.groups.is_empty()) {
            e.groups[0].members[0].1 += 0.1;
        }
    }
    for (label, e) in &estimates {
        let imbalance = e.max_group_imbalance();
        if !(imbalance <= ZERO_SUM_TOL) {
            return Err(format!("{label}: a correction group sums to {imbalance:e}"));
        }
    }
    Ok(())
}

pub fn run_checks(corrupt: bool) -> Vec<CheckOutcome> {
    let checks: Vec<(&'static str, Box<dyn Fn() -> Check + Sync>)> = vec![
        ("unbiasedness-kuhn", Box::new(|| unbiased(&Kuhn, 100, 1))),
        ("unbiasedness-leduc", Box::new(|| unbiased(&Leduc, 20, 2))),
        ("unbiasedness-after-attack", Box::new(unbiased_after_attack)),
        ("gradients", Box::new(gradients)),
        ("ivw-optimality", Box::new(ivw_optimality)),
        ("group-zero-sums", Box::new(move || zero_sums(corrupt))),
    ];
    checks
        .into_iter()
        .map(|(name, f)| CheckOutcome {
            name,
            failure: f().err(),
        })
        .collect()
}

pub fn cmd_check(config: &RunConfig) -> Result<String> {
    let outcomes = run_checks(config.corrupt_coefficient);
    let mut out = String::new();
    for o in &outcomes {
        match &o.failure {
            None => out.push_str(&format!("PASS {}\n", o.name)),
            Some(why) => out.push_str(&format!("FAIL {}: {why}\n", o.name)),
        }
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| o.failure.is_some()).map(|o| o.name).collect();
    if failed.is_empty() {
        Ok(out)
    } else {
        print!("{out}");
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}
