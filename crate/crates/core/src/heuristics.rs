//! Heuristic value functions `v'` over histories.
//!
//! * [`TabularHeuristic`]: one free value per history id.
//! * [`LinearHeuristic`]: `φ(h)ᵀθ` over a [`FeatureMap`], with the
//!   variance-minimising closed form [`closed_form_theta`].
//! * [`BayesianLinearModel`]: Gaussian weight prior plus observation noise,
//!   which is the weight-space form of a Gaussian process with kernel
//!   `prior_scale·⟨x, x'⟩ + noise·δ(x, x')`. Its [`joint_prediction`] supplies
//!   the covariance `Σ(z)` used for variance propagation.
//!
//! Fitted models have a plain-text record format (see each `to_record`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimator::{AffineEstimate, HistoryId};
use crate::game::{subtree_values, Game, History, PotGame, StrategyProfile};
use crate::stats::pairwise_sum;

/// Condition number above which the second-moment matrix counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

pub trait HeuristicModel: Send + Sync {
    /// Predictive mean `v'(h)`.
    fn value(&self, id: &HistoryId) -> Result<f64>;

    /// Means and joint covariance over `ids`. Point heuristics report zero
    /// covariance.
    fn joint(&self, ids: &[HistoryId]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let means = ids
            .iter()
            .map(|id| self.value(id))
            .collect::<Result<Vec<_>>>()?;
        Ok((DVector::from_vec(means), DMatrix::zeros(ids.len(), ids.len())))
    }
}

/// `v' ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroHeuristic;

impl HeuristicModel for ZeroHeuristic {
    fn value(&self, _id: &HistoryId) -> Result<f64> {
        Ok(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabularHeuristic {
    pub theta: BTreeMap<HistoryId, f64>,
    /// Value for ids missing from `theta`; `None` makes lookups strict.
    pub default: Option<f64>,
}

impl Default for TabularHeuristic {
    fn default() -> Self {
        TabularHeuristic {
            theta: BTreeMap::new(),
            default: Some(0.0),
        }
    }
}

impl TabularHeuristic {
    pub fn new(theta: BTreeMap<HistoryId, f64>) -> Result<Self> {
        Self::with_default(theta, Some(0.0))
    }

    pub fn with_default(theta: BTreeMap<HistoryId, f64>, default: Option<f64>) -> Result<Self> {
        if let Some((id, v)) = theta.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!("θ[{id}] = {v}")));
        }
        if default.is_some_and(|d| !d.is_finite()) {
            return Err(Error::InvalidData("non-finite default".into()));
        }
        Ok(TabularHeuristic { theta, default })
    }

    /// `v' ≡ c`.
    pub fn constant(c: f64) -> Self {
        TabularHeuristic {
            theta: BTreeMap::new(),
            default: Some(c),
        }
    }

    /// Exact conditional expected utility of `player` below every history
    /// under `profile`; lookups outside the game tree fail.
    pub fn exact_values<G: Game + ?Sized>(
        game: &G,
        profile: &StrategyProfile,
        player: usize,
    ) -> Result<Self> {
        let theta = subtree_values(game, profile, player)?
            .iter()
            .map(|(h, v)| (HistoryId::from(h), *v))
            .collect();
        Ok(TabularHeuristic {
            theta,
            default: None,
        })
    }

    /// Text record: a `tabular` header, the default (`none` when strict),
    /// then one `<id> <value>` line per entry.
    pub fn to_record(&self) -> String {
        let mut out = String::from("tabular v1\n");
        match self.default {
            Some(d) => out.push_str(&format!("default {d}\n")),
            None => out.push_str("default none\n"),
        }
        for (id, v) in &self.theta {
            out.push_str(&format!("{id} {v}\n"));
        }
        out
    }

    pub fn from_record(record: &str) -> Result<Self> {
        let mut lines = record.lines();
        expect_line(lines.next(), "tabular v1")?;
        let default = match field(lines.next(), "default")? {
            "none" => None,
            d => Some(parse_f64(d)?),
        };
        let mut theta = BTreeMap::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (id, v) = line
                .rsplit_once(' ')
                .ok_or_else(|| Error::InvalidData(format!("bad tabular line `{line}`")))?;
            theta.insert(HistoryId::new(id), parse_f64(v)?);
        }
        Self::with_default(theta, default)
    }
}

impl HeuristicModel for TabularHeuristic {
    fn value(&self, id: &HistoryId) -> Result<f64> {
        self.theta
            .get(id)
            .copied()
            .or(self.default)
            .ok_or_else(|| Error::MissingHeuristicValue(id.to_string()))
    }
}

/// `h ↦ φ(h) ∈ R^d`.
pub trait FeatureMap: Send + Sync {
    fn dim(&self) -> usize;
    fn features(&self, id: &HistoryId) -> Result<DVector<f64>>;
}

/// Checked feature lookup: right length and finite entries.
pub fn checked_features(map: &dyn FeatureMap, id: &HistoryId) -> Result<DVector<f64>> {
    let phi = map.features(id)?;
    if phi.len() != map.dim() {
        return Err(Error::FeatureDimension {
            expected: map.dim(),
            got: phi.len(),
        });
    }
    if phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidData(format!("non-finite features at {id}")));
    }
    Ok(phi)
}

/// How pot, hand strength and the number of live players combine into a
/// per-seat feature.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FeatureForm {
    /// `pot · HS^n`
    #[default]
    PotTimesPower,
    /// `(pot · HS)^n`
    PowerOfProduct,
    /// `pot^n · HS`
    PotPowerTimes,
}

impl FeatureForm {
    pub fn apply(self, pot: f64, hs: f64, n: usize) -> f64 {
        let n = n as i32;
        match self {
            FeatureForm::PotTimesPower => pot * hs.powi(n),
            FeatureForm::PowerOfProduct => (pot * hs).powi(n),
            FeatureForm::PotPowerTimes => pot.powi(n) * hs,
        }
    }
}

impl fmt::Display for FeatureForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureForm::PotTimesPower => "pot-hs-pow",
            FeatureForm::PowerOfProduct => "pot-hs-all-pow",
            FeatureForm::PotPowerTimes => "pot-pow-hs",
        })
    }
}

impl FromStr for FeatureForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pot-hs-pow" => Ok(FeatureForm::PotTimesPower),
            "pot-hs-all-pow" => Ok(FeatureForm::PowerOfProduct),
            "pot-pow-hs" => Ok(FeatureForm::PotPowerTimes),
            _ => Err(Error::InvalidArgument(format!("unknown feature form `{s}`"))),
        }
    }
}

/// `[pot] ++ per seat [f(pot, HS, n), f(pot, HS², n)]` with `n` the number
/// of live players; folded seats contribute zeros.
pub fn pot_features(pot: f64, strengths: &[Option<(f64, f64)>], form: FeatureForm) -> DVector<f64> {
    let n = strengths.iter().filter(|s| s.is_some()).count();
    let mut phi = DVector::zeros(1 + 2 * strengths.len());
    phi[0] = pot;
    for (seat, s) in strengths.iter().enumerate() {
        if let Some((hs, hs2)) = s {
            phi[1 + 2 * seat] = form.apply(pot, *hs, n);
            phi[2 + 2 * seat] = form.apply(pot, *hs2, n);
        }
    }
    phi
}

/// [`pot_features`] for the histories of a [`PotGame`].
#[derive(Clone, Debug)]
pub struct GameFeatures<G> {
    pub game: G,
    pub form: FeatureForm,
}

impl<G: PotGame> GameFeatures<G> {
    pub fn new(game: G, form: FeatureForm) -> Self {
        GameFeatures { game, form }
    }

    pub fn of_history(&self, h: &History) -> Result<DVector<f64>> {
        let pot = self.game.pot(h)?;
        let active = self.game.active(h)?;
        let strengths = active
            .iter()
            .enumerate()
            .map(|(p, live)| {
                live.then(|| self.game.hand_strength(h, p))
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(pot_features(pot, &strengths, self.form))
    }
}

impl<G: PotGame> FeatureMap for GameFeatures<G> {
    fn dim(&self) -> usize {
        1 + 2 * self.game.num_players()
    }

    fn features(&self, id: &HistoryId) -> Result<DVector<f64>> {
        self.of_history(&id.as_str().parse()?)
    }
}

/// `ψ(z) = Σ_h c(z)_h·φ(h)`.
pub fn psi_features(est: &AffineEstimate, features: &dyn FeatureMap) -> Result<DVector<f64>> {
    let mut psi = DVector::zeros(features.dim());
    for (id, c) in &est.coeffs {
        psi += checked_features(features, id)? * *c;
    }
    Ok(psi)
}

/// `v'(h) = φ(h)ᵀθ`.
pub struct LinearHeuristic<F> {
    pub theta: DVector<f64>,
    pub features: F,
}

impl<F: FeatureMap> LinearHeuristic<F> {
    pub fn new(theta: DVector<f64>, features: F) -> Result<Self> {
        if theta.len() != features.dim() {
            return Err(Error::FeatureDimension {
                expected: features.dim(),
                got: theta.len(),
            });
        }
        Ok(LinearHeuristic { theta, features })
    }

    /// Text record: `linear v1`, `dim d`, `theta θ1 … θd`.
    pub fn to_record(&self) -> String {
        format!("linear v1\ndim {}\ntheta {}\n", self.theta.len(), join(self.theta.iter()))
    }

    pub fn theta_from_record(record: &str) -> Result<DVector<f64>> {
        let mut lines = record.lines();
        expect_line(lines.next(), "linear v1")?;
        let d = parse_usize(field(lines.next(), "dim")?)?;
        let theta = parse_vector(field(lines.next(), "theta")?, d)?;
        Ok(theta)
    }
}

impl<F: FeatureMap> HeuristicModel for LinearHeuristic<F> {
    fn value(&self, id: &HistoryId) -> Result<f64> {
        Ok(checked_features(&self.features, id)?.dot(&self.theta))
    }
}

fn check_dataset(data: &[(f64, DVector<f64>)]) -> Result<usize> {
    if data.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: data.len(),
        });
    }
    let d = data[0].1.len();
    for (b, psi) in data {
        if psi.len() != d {
            return Err(Error::FeatureDimension {
                expected: d,
                got: psi.len(),
            });
        }
        if !b.is_finite() || psi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidData("non-finite (b, ψ) pair".into()));
        }
    }
    Ok(d)
}

/// Centred second moment `X` and right-hand side `y = b̄ψ̄ − mean(bψ)`.
pub fn normal_equations(data: &[(f64, DVector<f64>)]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let d = check_dataset(data)?;
    let n = data.len() as f64;
    let b_mean = pairwise_sum(&data.iter().map(|(b, _)| *b).collect::<Vec<_>>()) / n;
    let psi_mean = (0..d)
        .map(|k| pairwise_sum(&data.iter().map(|(_, p)| p[k]).collect::<Vec<_>>()) / n)
        .collect::<Vec<_>>();
    let psi_mean = DVector::from_vec(psi_mean);
    let mut x = DMatrix::zeros(d, d);
    let mut y = DVector::zeros(d);
    for (b, psi) in data {
        let centred = psi - &psi_mean;
        x += &centred * centred.transpose();
        y -= &centred * (b - b_mean);
    }
    Ok((x / n, y / n))
}

/// `θ* = X⁻¹y`, the linear parameters minimising the sample variance of
/// `b_t + ⟨ψ_t, θ⟩`. `ridge` adds `ridge·I` to `X` (0 for the plain solve).
///
/// Fails with [`Error::HyperplaneDegeneracy`] when the `ψ_t` lie on a common
/// hyperplane, i.e. `X` has condition number above [`MAX_CONDITION`].
pub fn closed_form_theta(data: &[(f64, DVector<f64>)], ridge: f64) -> Result<DVector<f64>> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidArgument(format!("ridge {ridge}")));
    }
    let (mut x, y) = normal_equations(data)?;
    for i in 0..x.nrows() {
        x[(i, i)] += ridge;
    }
    let sv = x.clone().singular_values();
    let (max, min) = (sv.max(), sv.min());
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::HyperplaneDegeneracy { condition });
    }
    x.lu()
        .solve(&y)
        .ok_or(Error::HyperplaneDegeneracy { condition })
}

/// `Σ_t (b_t + ⟨ψ_t, θ⟩ − mean)²` and its gradient.
pub fn linear_variance_cost(
    data: &[(f64, DVector<f64>)],
    theta: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    let d = check_dataset(data)?;
    if theta.len() != d {
        return Err(Error::FeatureDimension {
            expected: d,
            got: theta.len(),
        });
    }
    let scores: Vec<f64> = data.iter().map(|(b, psi)| b + psi.dot(theta)).collect();
    let m = pairwise_sum(&scores) / scores.len() as f64;
    let residuals: Vec<f64> = scores.iter().map(|s| s - m).collect();
    let cost = pairwise_sum(&residuals.iter().map(|r| r * r).collect::<Vec<_>>());
    let mut grad = DVector::zeros(d);
    for (r, (_, psi)) in residuals.iter().zip(data) {
        grad += psi * (2.0 * r);
    }
    Ok((cost, grad))
}

/// Conjugate Gaussian posterior over linear weights.
#[derive(Clone, Debug, PartialEq)]
pub struct BayesianLinearModel {
    pub posterior_mean: DVector<f64>,
    pub posterior_covariance: DMatrix<f64>,
    pub noise_variance: f64,
    pub prior_scale: f64,
    /// Add the observation noise to predictive variances (off for the latent
    /// function, which is what `Σ(z)` needs).
    pub include_noise: bool,
}

/// Posterior for `w ~ N(0, prior_scale·I)`, `y = φᵀw + N(0, noise)`:
/// `S = (I/prior_scale + ΦᵀΦ/noise)⁻¹`, `m = SΦᵀy/noise`.
pub fn fit_bayesian_linear(
    data: &[(DVector<f64>, f64)],
    prior_scale: f64,
    noise_variance: f64,
) -> Result<BayesianLinearModel> {
    if data.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !(prior_scale > 0.0 && prior_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("prior scale {prior_scale}")));
    }
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise variance {noise_variance}")));
    }
    let d = data[0].0.len();
    let mut precision = DMatrix::identity(d, d) / prior_scale;
    let mut rhs = DVector::zeros(d);
    for (phi, y) in data {
        if phi.len() != d {
            return Err(Error::FeatureDimension {
                expected: d,
                got: phi.len(),
            });
        }
        if !y.is_finite() || phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidData("non-finite training pair".into()));
        }
        precision += phi * phi.transpose() / noise_variance;
        rhs += phi * (*y / noise_variance);
    }
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::InvalidData("posterior precision is not positive definite".into()))?;
    let mut cov = chol.inverse();
    cov = (&cov + cov.transpose()) * 0.5;
    let mean = &cov * rhs;
    Ok(BayesianLinearModel {
        posterior_mean: mean,
        posterior_covariance: cov,
        noise_variance,
        prior_scale,
        include_noise: false,
    })
}

impl BayesianLinearModel {
    pub fn dim(&self) -> usize {
        self.posterior_mean.len()
    }

    /// Predictive mean and variance at `phi`; noise is added iff
    /// `with_noise`.
    pub fn predict(&self, phi: &DVector<f64>, with_noise: bool) -> Result<(f64, f64)> {
        if phi.len() != self.dim() {
            return Err(Error::FeatureDimension {
                expected: self.dim(),
                got: phi.len(),
            });
        }
        let var = (phi.transpose() * &self.posterior_covariance * phi)[(0, 0)].max(0.0);
        let noise = if with_noise { self.noise_variance } else { 0.0 };
        Ok((phi.dot(&self.posterior_mean), var + noise))
    }

    /// Text record: header, `dim`, `prior_scale`, `noise`, `include_noise`,
    /// `mean` (d values) and `cov` followed by d rows of d values.
    pub fn to_record(&self) -> String {
        let d = self.dim();
        let mut out = format!(
            "bayes-linear v1\ndim {d}\nprior_scale {}\nnoise {}\ninclude_noise {}\nmean {}\ncov\n",
            self.prior_scale,
            self.noise_variance,
            self.include_noise,
            join(self.posterior_mean.iter())
        );
        for i in 0..d {
            out.push_str(&join(self.posterior_covariance.row(i).iter()));
            out.push('\n');
        }
        out
    }

    pub fn from_record(record: &str) -> Result<Self> {
        let mut lines = record.lines();
        expect_line(lines.next(), "bayes-linear v1")?;
        let d = parse_usize(field(lines.next(), "dim")?)?;
        let prior_scale = parse_f64(field(lines.next(), "prior_scale")?)?;
        let noise_variance = parse_f64(field(lines.next(), "noise")?)?;
        let include_noise = match field(lines.next(), "include_noise")? {
            "true" => true,
            "false" => false,
            other => return Err(Error::InvalidData(format!("include_noise `{other}`"))),
        };
        let posterior_mean = parse_vector(field(lines.next(), "mean")?, d)?;
        expect_line(lines.next(), "cov")?;
        let mut cov = DMatrix::zeros(d, d);
        for i in 0..d {
            let row = parse_vector(lines.next().unwrap_or(""), d)?;
            cov.set_row(i, &row.transpose());
        }
        Ok(BayesianLinearModel {
            posterior_mean,
            posterior_covariance: cov,
            noise_variance,
            prior_scale,
            include_noise,
        })
    }
}

/// Means `φ(h)ᵀm` and covariance `Σ_{h1,h2} = φ(h1)ᵀSφ(h2)` (plus noise on
/// the diagonal when the model includes it).
pub fn joint_prediction(
    model: &BayesianLinearModel,
    ids: &[HistoryId],
    features: &dyn FeatureMap,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if features.dim() != model.dim() {
        return Err(Error::FeatureDimension {
            expected: model.dim(),
            got: features.dim(),
        });
    }
    let mut phi = DMatrix::zeros(ids.len(), model.dim());
    for (i, id) in ids.iter().enumerate() {
        phi.set_row(i, &checked_features(features, id)?.transpose());
    }
    let means = &phi * &model.posterior_mean;
    let mut cov = &phi * &model.posterior_covariance * phi.transpose();
    cov = (&cov + cov.transpose()) * 0.5;
    if model.include_noise {
        for i in 0..ids.len() {
            cov[(i, i)] += model.noise_variance;
        }
    }
    Ok((means, cov))
}

/// A fitted [`BayesianLinearModel`] bound to its feature map.
pub struct BayesianHeuristic<F> {
    pub model: BayesianLinearModel,
    pub features: F,
}

impl<F: FeatureMap> HeuristicModel for BayesianHeuristic<F> {
    fn value(&self, id: &HistoryId) -> Result<f64> {
        Ok(self
            .model
            .predict(&checked_features(&self.features, id)?, false)?
            .0)
    }

    fn joint(&self, ids: &[HistoryId]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        joint_prediction(&self.model, ids, &self.features)
    }
}

fn join<'a>(xs: impl Iterator<Item = &'a f64>) -> String {
    xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn expect_line(line: Option<&str>, expected: &str) -> Result<()> {
    match line {
        Some(l) if l.trim() == expected => Ok(()),
        other => Err(Error::InvalidData(format!(
            "expected `{expected}`, found `{}`",
            other.unwrap_or("<eof>")
        ))),
    }
}

fn field<'a>(line: Option<&'a str>, name: &str) -> Result<&'a str> {
    line.and_then(|l| l.trim().strip_prefix(name))
        .map(str::trim)
        .ok_or_else(|| Error::InvalidData(format!("missing `{name}` line")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidData(format!("bad number `{s}`")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidData(format!("bad count `{s}`")))
}

fn parse_vector(s: &str, d: usize) -> Result<DVector<f64>> {
    let xs = s
        .split_whitespace()
        .map(parse_f64)
        .collect::<Result<Vec<_>>>()?;
    if xs.len() != d {
        return Err(Error::FeatureDimension {
            expected: d,
            got: xs.len(),
        });
    }
    Ok(DVector::from_vec(xs))
}
