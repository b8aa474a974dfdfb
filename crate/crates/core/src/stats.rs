//! Aggregation of per-trial estimates: variance propagation through the
//! affine decomposition, uniform and inverse-variance weighted means,
//! weighted standard errors, the IVW bias estimate and one-sided t-tests.
//!
//! All sums go through [`pairwise_sum`] in input order, so results do not
//! depend on thread scheduling.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{AffineEstimate, HistoryId};
use crate::special::{ln_student_t_cdf, ln_student_t_sf};

const PAIRWISE_BLOCK: usize = 16;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

fn require(n: usize, needed: usize) -> Result<()> {
    if n < needed {
        Err(Error::InsufficientData { needed, got: n })
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithVariance {
    pub value: f64,
    pub variance: f64,
}

impl EstimateWithVariance {
    pub fn new(value: f64, variance: f64) -> Result<Self> {
        if !value.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(Error::InvalidData(format!(
                "estimate {value} with variance {variance}"
            )));
        }
        Ok(EstimateWithVariance { value, variance })
    }
}

/// The coefficient vector of `est` in `est.coeffs` key order, which is the
/// row/column order expected by [`propagate_variance`].
pub fn coefficient_vector(est: &AffineEstimate) -> (Vec<HistoryId>, DVector<f64>) {
    let ids: Vec<HistoryId> = est.coeffs.keys().cloned().collect();
    let c = DVector::from_iterator(ids.len(), est.coeffs.values().copied());
    (ids, c)
}

fn check_covariance(sigma: &DMatrix<f64>) -> Result<()> {
    if !sigma.is_square() {
        return Err(Error::InvalidCovariance(format!(
            "{}x{} matrix is not square",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    if sigma.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidCovariance("non-finite entry".into()));
    }
    let scale = sigma.amax().max(1.0);
    for i in 0..sigma.nrows() {
        for j in 0..i {
            if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::InvalidCovariance(format!(
                    "asymmetric at ({i}, {j})"
                )));
            }
        }
    }
    if sigma.nrows() > 0 {
        let min_eig = sigma.clone().symmetric_eigen().eigenvalues.min();
        if min_eig < -1e-9 * scale {
            return Err(Error::InvalidCovariance(format!(
                "negative eigenvalue {min_eig}"
            )));
        }
    }
    Ok(())
}

/// `cᵀΣc`, the variance of `v̂(z)` induced by heuristic uncertainty.
///
/// `sigma` is indexed like [`coefficient_vector`].
pub fn propagate_variance(est: &AffineEstimate, sigma: &DMatrix<f64>) -> Result<f64> {
    check_covariance(sigma)?;
    let (_, c) = coefficient_vector(est);
    if sigma.nrows() != c.len() {
        return Err(Error::InvalidCovariance(format!(
            "expected {0}x{0} covariance, got {1}x{1}",
            c.len(),
            sigma.nrows()
        )));
    }
    let terms: Vec<f64> = (0..c.len())
        .map(|i| c[i] * pairwise_sum(&(0..c.len()).map(|j| sigma[(i, j)] * c[j]).collect::<Vec<_>>()))
        .collect();
    Ok(pairwise_sum(&terms).max(0.0))
}

/// `Σ_h c_h²·Var(v'(h))` for uncorrelated heuristic outputs.
pub fn propagate_variance_diagonal(est: &AffineEstimate, variances: &[f64]) -> Result<f64> {
    let (_, c) = coefficient_vector(est);
    if variances.len() != c.len() {
        return Err(Error::InvalidCovariance(format!(
            "expected {} variances, got {}",
            c.len(),
            variances.len()
        )));
    }
    if variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidCovariance("negative or non-finite variance".into()));
    }
    let terms: Vec<f64> = c.iter().zip(variances).map(|(c, v)| c * c * v).collect();
    Ok(pairwise_sum(&terms))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Uniform,
    Ivw,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Uniform => "uniform",
            Scheme::Ivw => "ivw",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Scheme::Uniform),
            "ivw" => Ok(Scheme::Ivw),
            _ => Err(Error::InvalidArgument(format!("unknown weighting `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSummary {
    pub mean: f64,
    /// Empirical standard error (weighted for IVW).
    pub se: f64,
    /// Model-based variance of the mean from the per-trial variances.
    pub model_variance: f64,
    pub weights: Vec<f64>,
    pub scheme: Scheme,
    pub estimated_bias: Option<f64>,
}

impl WeightedSummary {
    pub fn model_se(&self) -> f64 {
        self.model_variance.sqrt()
    }
}

fn split(estimates: &[EstimateWithVariance]) -> (Vec<f64>, Vec<f64>) {
    estimates.iter().map(|e| (e.value, e.variance)).unzip()
}

/// Plain sample standard error `s/√T` with the `T−1` divisor.
pub fn plain_se(values: &[f64]) -> Result<f64> {
    require(values.len(), 2)?;
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m).powi(2)).collect();
    let n = values.len() as f64;
    Ok((pairwise_sum(&sq) / (n - 1.0) / n).sqrt())
}

/// Arithmetic mean with model variance `Σ Var / T²`.
pub fn uniform_mean(estimates: &[EstimateWithVariance]) -> Result<WeightedSummary> {
    require(estimates.len(), 2)?;
    let (values, variances) = split(estimates);
    let n = values.len() as f64;
    Ok(WeightedSummary {
        mean: mean(&values),
        se: plain_se(&values)?,
        model_variance: pairwise_sum(&variances) / (n * n),
        weights: vec![1.0; values.len()],
        scheme: Scheme::Uniform,
        estimated_bias: None,
    })
}

/// Inverse-variance weighted mean with model variance `1/Σw`.
pub fn ivw_mean(estimates: &[EstimateWithVariance]) -> Result<WeightedSummary> {
    ivw_mean_with_floor(estimates, 0.0)
}

/// [`ivw_mean`] with variances clamped below at `floor`.
pub fn ivw_mean_with_floor(
    estimates: &[EstimateWithVariance],
    floor: f64,
) -> Result<WeightedSummary> {
    require(estimates.len(), 2)?;
    let (values, variances) = split(estimates);
    let mut weights = Vec::with_capacity(values.len());
    for (index, v) in variances.iter().enumerate() {
        let v = v.max(floor);
        if !(v > 0.0) {
            return Err(Error::InfiniteWeight { index });
        }
        weights.push(1.0 / v);
    }
    let total = pairwise_sum(&weights);
    let weighted: Vec<f64> = values.iter().zip(&weights).map(|(x, w)| x * w).collect();
    Ok(WeightedSummary {
        mean: pairwise_sum(&weighted) / total,
        se: weighted_se(&values, &weights)?,
        model_variance: 1.0 / total,
        estimated_bias: Some(estimate_ivw_bias(&values, &weights)?),
        weights,
        scheme: Scheme::Ivw,
    })
}

/// `Σ w²·Var / (Σ w)²`, the model variance of an arbitrary weighted mean.
pub fn weighted_model_variance(weights: &[f64], variances: &[f64]) -> Result<f64> {
    if weights.len() != variances.len() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {} variances",
            weights.len(),
            variances.len()
        )));
    }
    let total = pairwise_sum(weights);
    let terms: Vec<f64> = weights.iter().zip(variances).map(|(w, v)| w * w * v).collect();
    Ok(pairwise_sum(&terms) / (total * total))
}

fn check_weights(values: &[f64], weights: &[f64]) -> Result<()> {
    require(values.len(), 2)?;
    if weights.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {} values",
            weights.len(),
            values.len()
        )));
    }
    if let Some(index) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "weight {index} is {}",
            weights[index]
        )));
    }
    Ok(())
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let wx: Vec<f64> = values.iter().zip(weights).map(|(x, w)| x * w).collect();
    pairwise_sum(&wx) / pairwise_sum(weights)
}

/// `SE* = s*/√N` with `(s*)² = Σw(x − x̄*)²/Σw · N/(N−1)`.
pub fn weighted_se(values: &[f64], weights: &[f64]) -> Result<f64> {
    check_weights(values, weights)?;
    let m = weighted_mean(values, weights);
    let n = values.len() as f64;
    let sq: Vec<f64> = values
        .iter()
        .zip(weights)
        .map(|(x, w)| w * (x - m).powi(2))
        .collect();
    let s2 = pairwise_sum(&sq) / pairwise_sum(weights) * n / (n - 1.0);
    Ok((s2 / n).sqrt())
}

/// Sample `Cov(w, v̂) / mean(w)`, the asymptotic bias of the weighted mean.
pub fn estimate_ivw_bias(values: &[f64], weights: &[f64]) -> Result<f64> {
    check_weights(values, weights)?;
    let n = values.len() as f64;
    let mv = mean(values);
    let mw = mean(weights);
    let cross: Vec<f64> = values
        .iter()
        .zip(weights)
        .map(|(v, w)| (v - mv) * (w - mw))
        .collect();
    Ok(pairwise_sum(&cross) / (n - 1.0) / mw)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Alternative `mean > μ0`.
    Greater,
    /// Alternative `mean < μ0`.
    Less,
}

/// Below this, p is reported as `log10 p`.
pub const P_UNDERFLOW: f64 = 1e-300;

/// A p-value, or its base-10 log when it underflows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PValue {
    P(f64),
    Log10(f64),
}

impl PValue {
    pub fn from_ln(ln_p: f64) -> Self {
        let p = ln_p.exp();
        if p < P_UNDERFLOW {
            PValue::Log10(ln_p / std::f64::consts::LN_10)
        } else {
            PValue::P(p)
        }
    }

    pub fn log10(&self) -> f64 {
        match *self {
            PValue::P(p) => p.log10(),
            PValue::Log10(l) => l,
        }
    }

    /// The probability, which is 0 after underflow.
    pub fn value(&self) -> f64 {
        match *self {
            PValue::P(p) => p,
            PValue::Log10(_) => 0.0,
        }
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PValue::P(p) if *p >= 1e-4 => write!(f, "{p}"),
            PValue::P(p) => write!(f, "{p:e}"),
            PValue::Log10(l) => write!(f, "log10:{l}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub dof: f64,
    pub p_one_sided: PValue,
    pub direction: Direction,
}

/// One-sided p for a given `t` with `dof` degrees of freedom.
pub fn t_test_from_statistic(t: f64, dof: f64, direction: Direction) -> TTestResult {
    let ln_p = match direction {
        Direction::Greater => ln_student_t_sf(t, dof),
        Direction::Less => ln_student_t_cdf(t, dof),
    };
    TTestResult {
        t,
        dof,
        p_one_sided: PValue::from_ln(ln_p),
        direction,
    }
}

/// `t = (mean − μ0)/SE` with `T − 1` degrees of freedom; the weighted
/// variant uses the weighted mean and [`weighted_se`].
pub fn one_sided_t_test(
    values: &[f64],
    weights: Option<&[f64]>,
    mu0: f64,
    direction: Direction,
) -> Result<TTestResult> {
    require(values.len(), 2)?;
    let (m, se) = match weights {
        Some(w) => (weighted_mean(values, w), weighted_se(values, w)?),
        None => (mean(values), plain_se(values)?),
    };
    if !(se > 0.0) {
        return Err(Error::DegenerateStatistic(format!("standard error {se}")));
    }
    let t = (m - mu0) / se;
    Ok(t_test_from_statistic(t, values.len() as f64 - 1.0, direction))
}
