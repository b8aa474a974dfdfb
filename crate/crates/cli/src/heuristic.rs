//! Heuristic fitting and committed model files.
//!
//! A model file is a header of `key = value` lines followed by one record
//! per seat:
//!
//! ```text
//! # aivat-heuristic v1
//! kind = bayes-linear
//! game = leduc
//! scheme = mivat
//! form = pot-hs-pow
//! corpus_sha256 = <hash of the training corpus>
//! created = <unix seconds>
//! content_sha256 = <hash of everything after this line>
//! [seat 0]
//! ...
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use aivat::estimator::{AffineEstimate, HistoryId};
use aivat::heuristics::{
    closed_form_theta, fit_bayesian_linear, psi_features, BayesianHeuristic, BayesianLinearModel, FeatureForm,
    FeatureMap, HeuristicModel, LinearHeuristic, TabularHeuristic, ZeroHeuristic,
};
use aivat::stats::pairwise_sum;
use aivat::Error;
use nalgebra::DVector;

use crate::config::{EstimatorScheme, GameKind, HeuristicKind, RunConfig};
use crate::corpus::{load_corpus, sha256_hex};
use crate::domain::{Domain, SharedFeatures};
use crate::error::{invalid, read_file, write_file, Result};

pub const MODEL_TAG: &str = "# aivat-heuristic v1";

#[derive(Clone, Debug, PartialEq)]
pub enum FittedHeuristic {
    Zero,
    Tabular(TabularHeuristic),
    Linear(DVector<f64>),
    Bayes(BayesianLinearModel),
}

impl FittedHeuristic {
    pub fn kind(&self) -> HeuristicKind {
        match self {
            FittedHeuristic::Zero => HeuristicKind::Zero,
            FittedHeuristic::Tabular(_) => HeuristicKind::Tabular,
            FittedHeuristic::Linear(_) => HeuristicKind::WbLinear,
            FittedHeuristic::Bayes(_) => HeuristicKind::BayesLinear,
        }
    }

    pub fn to_record(&self) -> String {
        match self {
            FittedHeuristic::Zero => "zero v1\n".into(),
            FittedHeuristic::Tabular(t) => t.to_record(),
            FittedHeuristic::Linear(theta) => {
                let d = theta.len();
                let values: Vec<String> = theta.iter().map(|x| format!("{x:e}")).collect();
                format!("linear v1\ndim {d}\ntheta {}\n", values.join(" "))
            }
            FittedHeuristic::Bayes(m) => m.to_record(),
        }
    }

    pub fn from_record(kind: HeuristicKind, record: &str) -> Result<Self> {
        Ok(match kind {
            HeuristicKind::Zero => FittedHeuristic::Zero,
            HeuristicKind::Tabular => FittedHeuristic::Tabular(TabularHeuristic::from_record(record)?),
            HeuristicKind::WbLinear => FittedHeuristic::Linear(
                LinearHeuristic::<SharedFeatures>::theta_from_record(record)?,
            ),
            HeuristicKind::BayesLinear => FittedHeuristic::Bayes(BayesianLinearModel::from_record(record)?),
        })
    }

    /// Bound model; `features` is needed for the linear kinds.
    pub fn bind(&self, features: Option<&SharedFeatures>) -> Result<Box<dyn HeuristicModel>> {
        let need = || features.cloned().ok_or_else(|| invalid("linear heuristics need a feature map"));
        Ok(match self {
            FittedHeuristic::Zero => Box::new(ZeroHeuristic),
            FittedHeuristic::Tabular(t) => Box::new(t.clone()),
            FittedHeuristic::Linear(theta) => Box::new(LinearHeuristic::new(theta.clone(), need()?)?),
            FittedHeuristic::Bayes(model) => Box::new(BayesianHeuristic {
                model: model.clone(),
                features: need()?,
            }),
        })
    }
}

/// Training examples for one seat.
pub struct TrainingData {
    pub estimates: Vec<AffineEstimate>,
    /// `(history, realized payoff)` pairs from the realized paths.
    pub pairs: Vec<(HistoryId, f64)>,
}

pub fn training_data(domain: &Domain, hands: &[usize], seat: usize) -> Result<TrainingData> {
    let mut estimates = Vec::new();
    let mut pairs = Vec::new();
    for &h in hands.iter().filter(|&&h| seat < domain.num_seats(h)) {
        estimates.push(domain.estimates[h][seat].clone());
        let payoff = domain.payoff(h, seat);
        pairs.extend(domain.realized(h)?.into_iter().map(|id| (id, payoff)));
    }
    Ok(TrainingData { estimates, pairs })
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = pairwise_sum(xs) / n;
    let v = if xs.len() > 1 {
        pairwise_sum(&xs.iter().map(|x| (x - m).powi(2)).collect::<Vec<_>>()) / (n - 1.0)
    } else {
        0.0
    };
    (m, v)
}

/// Average realized payoff per history, falling back to the overall mean.
fn fit_tabular(pairs: &[(HistoryId, f64)]) -> Result<TabularHeuristic> {
    let mut sums: BTreeMap<HistoryId, (f64, usize)> = BTreeMap::new();
    for (id, y) in pairs {
        let e = sums.entry(id.clone()).or_default();
        e.0 += y;
        e.1 += 1;
    }
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let default = if ys.is_empty() { 0.0 } else { mean_and_variance(&ys).0 };
    let theta = sums.into_iter().map(|(id, (s, n))| (id, s / n as f64)).collect();
    Ok(TabularHeuristic::with_default(theta, Some(default))?)
}

/// Closed-form variance-minimising θ; ψ columns that vanish on the whole
/// training set get θ = 0.
fn fit_wb_linear(estimates: &[AffineEstimate], features: &SharedFeatures, ridge: f64) -> Result<DVector<f64>> {
    let d = features.dim();
    let data = estimates
        .iter()
        .map(|e| Ok((e.b, psi_features(e, features)?)))
        .collect::<Result<Vec<_>>>()?;
    let scale = data.iter().map(|(_, p)| p.amax()).fold(0.0, f64::max);
    let live: Vec<usize> = (0..d)
        .filter(|&k| data.iter().any(|(_, p)| p[k].abs() > 1e-9 * scale))
        .collect();
    let mut theta = DVector::zeros(d);
    if live.is_empty() {
        return Ok(theta);
    }
    let reduced: Vec<(f64, DVector<f64>)> = data
        .iter()
        .map(|(b, p)| (*b, DVector::from_iterator(live.len(), live.iter().map(|&k| p[k]))))
        .collect();
    let solved = closed_form_theta(&reduced, ridge).map_err(|e| match e {
        Error::HyperplaneDegeneracy { .. } => invalid(format!("{e}; pass --ridge to regularise")),
        other => other.into(),
    })?;
    for (i, &k) in live.iter().enumerate() {
        theta[k] = solved[i];
    }
    Ok(theta)
}

pub fn fit(
    kind: HeuristicKind,
    data: &TrainingData,
    features: Option<&SharedFeatures>,
    config: &RunConfig,
) -> Result<FittedHeuristic> {
    let need = || features.ok_or_else(|| invalid("linear heuristics need a feature map"));
    Ok(match kind {
        HeuristicKind::Zero => FittedHeuristic::Zero,
        HeuristicKind::Tabular => FittedHeuristic::Tabular(fit_tabular(&data.pairs)?),
        HeuristicKind::WbLinear => FittedHeuristic::Linear(fit_wb_linear(&data.estimates, need()?, config.ridge)?),
        HeuristicKind::BayesLinear => {
            let features = need()?;
            let rows = data
                .pairs
                .iter()
                .map(|(id, y)| Ok((features.features(id)?, *y)))
                .collect::<Result<Vec<_>>>()?;
            let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
            if ys.is_empty() {
                return Err(invalid("no training histories for the bayes-linear heuristic"));
            }
            let target_var = mean_and_variance(&ys).1;
            let noise = config
                .noise
                .unwrap_or(if target_var > 0.0 { target_var } else { 1.0 });
            FittedHeuristic::Bayes(fit_bayesian_linear(&rows, config.prior_scale, noise)?)
        }
    })
}

/// One fitted heuristic per seat.
pub fn fit_seats(
    domain: &Domain,
    hands: &[usize],
    features: Option<&SharedFeatures>,
    config: &RunConfig,
) -> Result<Vec<FittedHeuristic>> {
    (0..domain.max_seats())
        .map(|seat| fit(config.heuristic, &training_data(domain, hands, seat)?, features, config))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub kind: HeuristicKind,
    pub game: GameKind,
    pub scheme: EstimatorScheme,
    pub form: FeatureForm,
    pub corpus_sha256: String,
    pub created: u64,
    pub seats: Vec<FittedHeuristic>,
}

impl ModelFile {
    fn body(&self) -> String {
        self.seats
            .iter()
            .enumerate()
            .map(|(i, h)| format!("[seat {i}]\n{}", h.to_record()))
            .collect()
    }

    pub fn content_sha256(&self) -> String {
        sha256_hex(self.body().as_bytes())
    }

    pub fn to_text(&self) -> String {
        format!(
            "{MODEL_TAG}\nkind = {}\ngame = {}\nscheme = {}\nform = {}\ncorpus_sha256 = {}\ncreated = {}\ncontent_sha256 = {}\n{}",
            self.kind,
            self.game,
            self.scheme,
            self.form,
            self.corpus_sha256,
            self.created,
            self.content_sha256(),
            self.body()
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let rest = text
            .strip_prefix(MODEL_TAG)
            .ok_or_else(|| invalid("not a heuristic model file"))?;
        let mut header = BTreeMap::new();
        let mut body_start = rest.len();
        let mut offset = 0;
        for line in rest.split_inclusive('\n') {
            if line.starts_with("[seat ") {
                body_start = offset;
                break;
            }
            if let Some((k, v)) = line.split_once('=') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
            offset += line.len();
        }
        let field = |k: &str| header.get(k).cloned().ok_or_else(|| invalid(format!("model file lacks `{k}`")));
        let body = &rest[body_start..];
        if sha256_hex(body.as_bytes()) != field("content_sha256")? {
            return Err(invalid("model file content does not match its content_sha256"));
        }
        let kind: HeuristicKind = field("kind")?.parse().map_err(invalid)?;
        let mut seats = Vec::new();
        for (i, section) in body.split("[seat ").skip(1).enumerate() {
            let (label, record) = section.split_once('\n').unwrap_or((section, ""));
            if label.trim_end_matches(']') != i.to_string() {
                return Err(invalid(format!("model file: expected seat {i}, found `{label}`")));
            }
            seats.push(FittedHeuristic::from_record(kind, record)?);
        }
        Ok(ModelFile {
            kind,
            game: field("game")?.parse().map_err(invalid)?,
            scheme: field("scheme")?.parse().map_err(invalid)?,
            form: field("form")?.parse()?,
            corpus_sha256: field("corpus_sha256")?,
            created: field("created")?.parse().map_err(|_| invalid("model file: bad `created`"))?,
            seats,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?)
    }
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

pub fn cmd_train(config: &RunConfig) -> Result<String> {
    let loaded = load_corpus(config.input.as_ref().expect("validated"))?;
    let domain = Domain::new(&loaded.corpus, config)?;
    let features = match config.heuristic {
        HeuristicKind::WbLinear | HeuristicKind::BayesLinear => Some(domain.features(config.form, config)?),
        _ => None,
    };
    let all: Vec<usize> = (0..domain.len()).collect();
    let model = ModelFile {
        kind: config.heuristic,
        game: loaded.corpus.game_kind(),
        scheme: config.scheme,
        form: config.form,
        corpus_sha256: loaded.sha256.clone(),
        created: timestamp(),
        seats: fit_seats(&domain, &all, features.as_ref(), config)?,
    };
    let out = config.output.as_ref().expect("validated");
    write_file(out, model.to_text().as_bytes())?;
    Ok(format!(
        "wrote {} heuristic for {} seats to {} (content sha256 {})\n",
        model.kind,
        model.seats.len(),
        out.display(),
        model.content_sha256()
    ))
}
