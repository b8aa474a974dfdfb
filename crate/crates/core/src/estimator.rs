//! The estimator family: raw Monte Carlo, control variates, advantage sum /
//! MIVAT and AIVAT.
//!
//! Every estimator here is expressed as an [`AffineEstimate`]: a shift `b(z)`
//! plus sparse coefficients `c(z)` on heuristic outputs, so that
//! `v̂(z) = b(z) + Σ_h c(z)_h·v'(h)`. For each `h·a ∈ K(z)` the correction
//! group holds, for every `h' ∈ U(h)` and `a' ∈ A(h)`,
//!
//! ```text
//! c(h'·a') = π(h'·a') / Σ_{h''∈U(h)} π(h'')  −  [a' = a]·π(h'·a) / Σ_{h''∈U(h)} π(h''·a)
//! ```
//!
//! and the shift is the imaginary-observation average of `v` over `U(z)`.
//! Reach probabilities only enter as ratios within a group, so the factors of
//! players whose strategies are unknown cancel and are never needed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{action_distribution, Game, History, Node, PartialProfile};
use crate::heuristics::HeuristicModel;
use crate::stats::pairwise_sum;

/// Canonical identifier of a (possibly counterfactual) history.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HistoryId(pub String);

impl HistoryId {
    pub fn new(id: impl Into<String>) -> Self {
        HistoryId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for HistoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&History> for HistoryId {
    fn from(h: &History) -> Self {
        HistoryId(h.to_string())
    }
}

impl From<&str> for HistoryId {
    fn from(s: &str) -> Self {
        HistoryId(s.to_string())
    }
}

/// The correction terms contributed by one `h·a ∈ K(z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionGroup {
    /// The realized child `h·a`.
    pub anchor: HistoryId,
    /// `(h'·a', coefficient)` for every `h' ∈ U(h)` and `a' ∈ A(h)`.
    pub members: Vec<(HistoryId, f64)>,
}

impl CorrectionGroup {
    pub fn coefficient_sum(&self) -> f64 {
        pairwise_sum(&self.members.iter().map(|(_, c)| *c).collect::<Vec<_>>())
    }
}

/// `v̂(z) = b + Σ_h coeffs[h]·v'(h)`.
///
/// Serialized (for debug dumps) as JSON:
/// `{"b": <f64>, "coeffs": {"<history id>": <f64>, ...}, "groups": [...]}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineEstimate {
    pub b: f64,
    pub coeffs: BTreeMap<HistoryId, f64>,
    pub groups: Vec<CorrectionGroup>,
}

impl AffineEstimate {
    /// An estimate with no heuristic dependence.
    pub fn constant(b: f64) -> Self {
        AffineEstimate {
            b,
            ..Default::default()
        }
    }

    /// Builds the sparse coefficient vector by summing group members.
    pub fn from_groups(b: f64, groups: Vec<CorrectionGroup>) -> Self {
        let mut coeffs: BTreeMap<HistoryId, f64> = BTreeMap::new();
        for g in &groups {
            for (id, c) in &g.members {
                if *c != 0.0 {
                    *coeffs.entry(id.clone()).or_insert(0.0) += c;
                }
            }
        }
        AffineEstimate { b, coeffs, groups }
    }

    /// Largest absolute coefficient sum over the correction groups.
    pub fn max_group_imbalance(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.coefficient_sum().abs())
            .fold(0.0, f64::max)
    }

    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("affine estimates always serialize")
    }

    pub fn from_record(record: &str) -> Result<Self> {
        serde_json::from_str(record).map_err(|e| Error::InvalidData(e.to_string()))
    }
}

/// Which nodes enter `K(z)` and which value is estimated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EstimatorConfig {
    /// Players whose action probabilities are known. A player node is in
    /// `K(z)` iff its player is listed here and a strategy is supplied.
    pub known_players: BTreeSet<usize>,
    /// Group histories into `U(h)` (imaginary observations).
    pub use_imaginary_observations: bool,
    /// Whether chance nodes enter `K(z)`.
    pub include_chance: bool,
    /// `v(z) = u_i(z)` for this player.
    pub evaluated_player: usize,
}

impl EstimatorConfig {
    /// Plain Monte Carlo: `v̂(z) = v(z)`.
    pub fn raw(player: usize) -> Self {
        EstimatorConfig {
            known_players: BTreeSet::new(),
            use_imaginary_observations: false,
            include_chance: false,
            evaluated_player: player,
        }
    }

    /// Advantage sum over chance nodes only.
    pub fn mivat(player: usize) -> Self {
        EstimatorConfig {
            include_chance: true,
            ..Self::raw(player)
        }
    }

    /// Advantage sum over chance and `known` players with imaginary
    /// observations over the known players' private information.
    pub fn aivat(player: usize, known: impl IntoIterator<Item = usize>) -> Self {
        EstimatorConfig {
            known_players: known.into_iter().collect(),
            use_imaginary_observations: true,
            include_chance: true,
            evaluated_player: player,
        }
    }
}

/// Mean, unbiased sample variance and standard error of raw values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McSummary {
    pub mean: f64,
    pub sample_variance: f64,
    pub se: f64,
}

pub fn monte_carlo_summary(values: &[f64]) -> Result<McSummary> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let squares: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let sample_variance = pairwise_sum(&squares) / (n - 1.0);
    Ok(McSummary {
        mean,
        sample_variance,
        se: (sample_variance / n).sqrt(),
    })
}

/// `v − c·(w − ω)`.
pub fn control_variate_estimate(v: f64, w: f64, omega: f64, c: f64) -> f64 {
    v - c * (w - omega)
}

/// `Cov(v, w) / Var(w)`, the variance-minimising control-variate weight.
pub fn optimal_cv_coefficient(cov_vw: f64, var_w: f64) -> Result<f64> {
    if !(var_w > 0.0) {
        return Err(Error::DegenerateVariate(var_w));
    }
    Ok(cov_vw / var_w)
}

struct Decomposer<'a, G: Game + ?Sized> {
    game: &'a G,
    profile: &'a PartialProfile<'a>,
    config: &'a EstimatorConfig,
}

impl<G: Game + ?Sized> Decomposer<'_, G> {
    fn included(&self, player: usize) -> bool {
        self.config.known_players.contains(&player) && self.profile.strategy(player).is_some()
    }

    /// Reach probability restricted to chance and included players.
    fn known_reach(&self, h: &History) -> Result<f64> {
        let mut reach = 1.0;
        for depth in 0..h.len() {
            let prefix = h.prefix(depth);
            let node = self.game.node(&prefix)?;
            let a = h.actions()[depth] as usize;
            let counted = match node {
                Node::Chance(_) => true,
                Node::Decision { player, .. } => self.included(player),
                Node::Terminal(_) => return Err(Error::InvalidHistory(h.to_string())),
            };
            if counted {
                let dist = self.distribution(&prefix, &node)?;
                reach *= dist.get(a).copied().ok_or_else(|| Error::InvalidHistory(h.to_string()))?;
            }
            if reach == 0.0 {
                break;
            }
        }
        Ok(reach)
    }

    fn distribution(&self, h: &History, node: &Node) -> Result<Vec<f64>> {
        action_distribution(self.game, |p| self.profile.strategy(p), h, node)
    }

    fn base_term(&self, z: &History) -> Result<f64> {
        let player = self.config.evaluated_player;
        let owners: Vec<usize> = (0..self.game.num_players())
            .filter(|&p| self.included(p))
            .collect();
        if !self.config.use_imaginary_observations || owners.is_empty() {
            return crate::game::terminal_utility(self.game, z, player);
        }
        let mut weighted = Vec::new();
        let mut weights = Vec::new();
        for variant in self.game.private_variants(z, &owners)? {
            let w = self.known_reach(&variant)?;
            if w > 0.0 {
                weighted.push(w * crate::game::terminal_utility(self.game, &variant, player)?);
                weights.push(w);
            }
        }
        let total = pairwise_sum(&weights);
        if !(total > 0.0) {
            return Err(Error::DegenerateGroup(z.to_string()));
        }
        Ok(pairwise_sum(&weighted) / total)
    }

    fn group(&self, h: &History, action: usize, node: &Node) -> Result<Option<CorrectionGroup>> {
        let variants = match node {
            Node::Chance(_) if self.config.include_chance => vec![h.clone()],
            Node::Decision { player, .. } if self.included(*player) => {
                if self.config.use_imaginary_observations {
                    self.game.private_variants(h, &[*player])?
                } else {
                    vec![h.clone()]
                }
            }
            _ => return Ok(None),
        };
        let mut rows = Vec::with_capacity(variants.len());
        for v in &variants {
            let w = self.known_reach(v)?;
            let dist = self.distribution(v, &self.game.node(v)?)?;
            rows.push((v, w, dist));
        }
        let denom_h = pairwise_sum(&rows.iter().map(|(_, w, _)| *w).collect::<Vec<_>>());
        let denom_ha = pairwise_sum(
            &rows
                .iter()
                .map(|(_, w, d)| w * d[action])
                .collect::<Vec<_>>(),
        );
        let anchor = h.child(action);
        if !(denom_h > 0.0) || !(denom_ha > 0.0) {
            return Err(Error::DegenerateGroup(anchor.to_string()));
        }
        let mut members = Vec::new();
        for (v, w, dist) in &rows {
            for (a, p) in dist.iter().enumerate() {
                let mut c = w * p / denom_h;
                if a == action {
                    c -= w * p / denom_ha;
                }
                members.push((HistoryId::from(&v.child(a)), c));
            }
        }
        Ok(Some(CorrectionGroup {
            anchor: HistoryId::from(&anchor),
            members,
        }))
    }
}

/// Affine decomposition `(b(z), c(z))` of the estimate at terminal `z`.
///
/// With imaginary observations off (or no known players) this is the
/// advantage sum over `K(z)`; with chance excluded as well it reduces to
/// `b = v(z)` and no coefficients. `K(z)` is processed in path order.
pub fn decompose_affine<G: Game + ?Sized>(
    game: &G,
    z: &History,
    profile: &PartialProfile<'_>,
    config: &EstimatorConfig,
) -> Result<AffineEstimate> {
    if config.evaluated_player >= game.num_players() {
        return Err(Error::InvalidArgument(format!(
            "evaluated player {} is not a player of {}",
            config.evaluated_player,
            game.name()
        )));
    }
    if !matches!(game.node(z)?, Node::Terminal(_)) {
        return Err(Error::InvalidArgument(format!("`{z}` is not terminal")));
    }
    let d = Decomposer {
        game,
        profile,
        config,
    };
    let b = d.base_term(z)?;
    let mut groups = Vec::new();
    for depth in 0..z.len() {
        let h = z.prefix(depth);
        let node = game.node(&h)?;
        if let Some(g) = d.group(&h, z.actions()[depth] as usize, &node)? {
            groups.push(g);
        }
    }
    Ok(AffineEstimate::from_groups(b, groups))
}

/// `b + Σ_h c_h·v'(h)`.
pub fn evaluate_affine(est: &AffineEstimate, heuristic: &dyn HeuristicModel) -> Result<f64> {
    let mut terms = Vec::with_capacity(est.coeffs.len() + 1);
    terms.push(est.b);
    for (id, c) in &est.coeffs {
        terms.push(c * heuristic.value(id)?);
    }
    Ok(pairwise_sum(&terms))
}

/// `evaluate_affine(decompose_affine(..), heuristic)`.
pub fn aivat_estimate<G: Game + ?Sized>(
    game: &G,
    z: &History,
    profile: &PartialProfile<'_>,
    config: &EstimatorConfig,
    heuristic: &dyn HeuristicModel,
) -> Result<f64> {
    evaluate_affine(&decompose_affine(game, z, profile, config)?, heuristic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Kuhn, StrategyProfile};
    use crate::heuristics::{TabularHeuristic, ZeroHeuristic};

    #[test]
    fn summary_by_hand() {
        let s = monte_carlo_summary(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.sample_variance, 1.0);
        assert!((s.se - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let c = monte_carlo_summary(&[5.0; 4]).unwrap();
        assert_eq!((c.sample_variance, c.se), (0.0, 0.0));
        assert_eq!(
            monte_carlo_summary(&[1.0]),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        );
    }

    #[test]
    fn control_variates() {
        assert_eq!(control_variate_estimate(3.0, 2.0, 2.0, 7.0), 3.0);
        assert_eq!(control_variate_estimate(3.0, 4.0, 2.0, 0.0), 3.0);
        assert_eq!(control_variate_estimate(3.0, 4.0, 2.0, 0.5), 2.0);
        assert_eq!(optimal_cv_coefficient(2.0, 4.0).unwrap(), 0.5);
        assert_eq!(optimal_cv_coefficient(0.0, 4.0).unwrap(), 0.0);
        assert!(matches!(
            optimal_cv_coefficient(1.0, 0.0),
            Err(Error::DegenerateVariate(_))
        ));
    }

    #[test]
    fn raw_config_has_no_coefficients() {
        let game = Kuhn;
        let z = History::from_actions(vec![2, 0, 1, 1]);
        let est = decompose_affine(&game, &z, &PartialProfile::empty(), &EstimatorConfig::raw(0))
            .unwrap();
        assert_eq!(est.b, 2.0);
        assert!(est.coeffs.is_empty() && est.groups.is_empty());
    }

    #[test]
    fn record_round_trip() {
        let game = Kuhn;
        let profile = StrategyProfile::uniform(&game).unwrap();
        let z = History::from_actions(vec![1, 1, 0, 1, 1]);
        let est = decompose_affine(
            &game,
            &z,
            &profile.as_partial(),
            &EstimatorConfig::aivat(1, [0, 1]),
        )
        .unwrap();
        let back = AffineEstimate::from_record(&est.to_record()).unwrap();
        assert_eq!(back, est);
    }

    #[test]
    fn constant_heuristic_leaves_the_shift() {
        let game = Kuhn;
        let profile = StrategyProfile::uniform(&game).unwrap();
        let z = History::from_actions(vec![0, 1, 1, 0]);
        let est = decompose_affine(
            &game,
            &z,
            &profile.as_partial(),
            &EstimatorConfig::aivat(0, [0, 1]),
        )
        .unwrap();
        let constant = TabularHeuristic::constant(17.0);
        assert!((evaluate_affine(&est, &constant).unwrap() - est.b).abs() < 1e-12);
        assert_eq!(evaluate_affine(&est, &ZeroHeuristic).unwrap(), est.b);
    }

    #[test]
    fn non_terminal_input_is_rejected() {
        let game = Kuhn;
        let h = History::from_actions(vec![0, 1]);
        assert!(matches!(
            decompose_affine(&game, &h, &PartialProfile::empty(), &EstimatorConfig::mivat(0)),
            Err(Error::InvalidArgument(_))
        ));
    }
}
