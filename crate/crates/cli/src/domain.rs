//! Per-hand decomposition and features, uniform over toy and hold'em corpora.

use std::sync::Arc;

use aivat::estimator::{decompose_affine, AffineEstimate, EstimatorConfig, HistoryId};
use aivat::game::StrategyProfile;
use aivat::heuristics::{FeatureForm, FeatureMap, GameFeatures};
use aivat_poker::features::StrengthPolicy;
use aivat_poker::history::MAX_SEATS;
use aivat_poker::mivat::{hand_feature_rows, realized_ids, FeatureTable};
use aivat_poker::{mivat_decompose_hand, HandHistory, HoldemFeatureConfig, TrackedEvents};
use nalgebra::DVector;
use rayon::prelude::*;

use crate::config::{EstimatorScheme, RunConfig};
use crate::corpus::{Corpus, ToyGame, ToyHand, TOY_MBB_PER_CHIP};
use crate::error::{invalid, Result};

/// A shareable feature map.
#[derive(Clone)]
pub struct SharedFeatures(pub Arc<dyn FeatureMap>);

impl FeatureMap for SharedFeatures {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn features(&self, id: &HistoryId) -> aivat::Result<DVector<f64>> {
        self.0.features(id)
    }
}

/// Decomposed corpus: one estimate per hand and seat, `b` in mbb.
pub struct Domain<'a> {
    pub corpus: &'a Corpus,
    pub estimates: Vec<Vec<AffineEstimate>>,
    scheme: EstimatorScheme,
    track: TrackedEvents,
}

fn toy_estimates(
    game: ToyGame,
    profile: Option<&StrategyProfile>,
    hands: &[ToyHand],
    config: &RunConfig,
) -> Result<Vec<Vec<AffineEstimate>>> {
    let g = game.game();
    let players = g.num_players();
    let known: Vec<usize> = config.known.clone().unwrap_or_else(|| (0..players).collect());
    if let Some(&p) = known.iter().find(|&&p| p >= players) {
        return Err(invalid(format!("--known: no player {p} in {}", g.name())));
    }
    let configs: Vec<EstimatorConfig> = (0..players)
        .map(|p| match config.scheme {
            EstimatorScheme::Raw => EstimatorConfig::raw(p),
            EstimatorScheme::Mivat => EstimatorConfig::mivat(p),
            EstimatorScheme::Aivat => EstimatorConfig::aivat(p, known.iter().copied()),
        })
        .collect();
    let partial = match (config.scheme, profile) {
        (EstimatorScheme::Aivat, Some(p)) => p.restrict(&known),
        (EstimatorScheme::Aivat, None) => {
            return Err(invalid("the aivat scheme needs the corpus header to name its strategy profile"))
        }
        _ => aivat::game::PartialProfile::empty(),
    };
    hands
        .par_iter()
        .map(|hand| {
            configs
                .iter()
                .map(|c| {
                    let mut est = decompose_affine(g, &hand.history, &partial, c)
                        .map_err(|e| invalid(format!("hand `{}`: {e}", hand.id)))?;
                    est.b *= TOY_MBB_PER_CHIP;
                    Ok(est)
                })
                .collect()
        })
        .collect()
}

fn holdem_estimates(hands: &[HandHistory], track: &TrackedEvents) -> Result<Vec<Vec<AffineEstimate>>> {
    hands
        .par_iter()
        .map(|hand| {
            (0..hand.num_players())
                .map(|seat| Ok(mivat_decompose_hand(hand, seat, track)?))
                .collect()
        })
        .collect()
}

impl<'a> Domain<'a> {
    pub fn new(corpus: &'a Corpus, config: &RunConfig) -> Result<Self> {
        let track = match config.scheme {
            EstimatorScheme::Raw => TrackedEvents::none(),
            _ => config.track,
        };
        let estimates = match corpus {
            Corpus::Toy { game, profile, hands } => {
                let profile = profile.map(|p| game.profile(p)).transpose()?;
                toy_estimates(*game, profile.as_ref(), hands, config)?
            }
            Corpus::Holdem(hands) => {
                if config.scheme == EstimatorScheme::Aivat {
                    return Err(invalid(
                        "hold'em corpora carry no strategies; use --scheme raw or mivat",
                    ));
                }
                holdem_estimates(hands, &track)?
            }
        };
        Ok(Domain {
            corpus,
            estimates,
            scheme: config.scheme,
            track,
        })
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scheme(&self) -> EstimatorScheme {
        self.scheme
    }

    pub fn hand_id(&self, hand: usize) -> &str {
        match self.corpus {
            Corpus::Toy { hands, .. } => &hands[hand].id,
            Corpus::Holdem(hands) => &hands[hand].id,
        }
    }

    /// Player name per seat.
    pub fn players(&self, hand: usize) -> Vec<String> {
        match self.corpus {
            Corpus::Toy { hands, .. } => (0..hands[hand].payoffs.len()).map(|p| format!("p{p}")).collect(),
            Corpus::Holdem(hands) => hands[hand].players.clone(),
        }
    }

    pub fn num_seats(&self, hand: usize) -> usize {
        self.estimates[hand].len()
    }

    pub fn max_seats(&self) -> usize {
        self.estimates.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Realized payoff in mbb.
    pub fn payoff(&self, hand: usize, seat: usize) -> f64 {
        match self.corpus {
            Corpus::Toy { hands, .. } => hands[hand].payoffs[seat],
            Corpus::Holdem(hands) => hands[hand].payoff_mbb(seat),
        }
    }

    /// Histories on the realized path, used as heuristic training inputs.
    pub fn realized(&self, hand: usize) -> Result<Vec<HistoryId>> {
        match self.corpus {
            Corpus::Toy { hands, .. } => {
                let z = &hands[hand].history;
                Ok((1..=z.len()).map(|k| HistoryId::from(&z.prefix(k))).collect())
            }
            Corpus::Holdem(hands) => Ok(realized_ids(&hands[hand], &self.track)?),
        }
    }

    /// Feature map covering every history the estimates reference.
    pub fn features(&self, form: FeatureForm, config: &RunConfig) -> Result<SharedFeatures> {
        match self.corpus {
            Corpus::Toy { game, .. } => Ok(match game {
                ToyGame::Kuhn => SharedFeatures(Arc::new(GameFeatures::new(aivat::game::Kuhn, form))),
                ToyGame::Leduc => SharedFeatures(Arc::new(GameFeatures::new(aivat::game::Leduc, form))),
            }),
            Corpus::Holdem(hands) => {
                let fc = HoldemFeatureConfig {
                    policy: StrengthPolicy {
                        mc_samples: config.hs_samples,
                        seed: config.seed,
                    },
                    max_seats: MAX_SEATS,
                    form,
                };
                let rows: Vec<Vec<(HistoryId, DVector<f64>)>> = hands
                    .par_iter()
                    .zip(&self.estimates)
                    .map(|(hand, ests)| match ests.first() {
                        // Every seat references the same chance histories.
                        Some(est) => Ok(hand_feature_rows(hand, est, &fc)?),
                        None => Ok(Vec::new()),
                    })
                    .collect::<Result<_>>()?;
                let mut table = FeatureTable::new(1 + 2 * MAX_SEATS);
                table.extend(rows.into_iter().flatten());
                Ok(SharedFeatures(Arc::new(table)))
            }
        }
    }
}
