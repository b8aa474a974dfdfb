//! Gradient attacks on a fixed evaluation sample.
//!
//! A tabular heuristic `θ_h` over every history that carries a coefficient
//! turns each estimate into `b_t + ⟨c_t, θ⟩`. With the sample fixed, Adam can
//! then drive the sample variance towards zero or push the t-statistic in
//! either direction, while the estimator stays unbiased over fresh samples.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{AffineEstimate, HistoryId};
use crate::heuristics::TabularHeuristic;
use crate::stats::{pairwise_sum, t_test_from_statistic, Direction, PValue};

/// Trials `(b_t, c_t)` with the coefficient histories indexed into `θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathologyDataset {
    pub b: Vec<f64>,
    /// Sparse rows of `(coordinate, coefficient)`.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// History id → coordinate of `θ`, in id order.
    pub index: BTreeMap<HistoryId, usize>,
}

impl PathologyDataset {
    pub fn from_estimates(estimates: &[AffineEstimate]) -> Result<Self> {
        if estimates.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: estimates.len(),
            });
        }
        let mut index: BTreeMap<HistoryId, usize> = estimates
            .iter()
            .flat_map(|e| e.coeffs.keys().cloned())
            .map(|id| (id, 0))
            .collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let rows = estimates
            .iter()
            .map(|e| e.coeffs.iter().map(|(id, c)| (index[id], *c)).collect())
            .collect();
        Ok(PathologyDataset {
            b: estimates.iter().map(|e| e.b).collect(),
            rows,
            index,
        })
    }

    /// A dataset from dense coefficient rows; coordinates are named `θ<k>`.
    pub fn from_dense(b: Vec<f64>, c: &DMatrix<f64>) -> Result<Self> {
        if b.len() != c.nrows() {
            return Err(Error::InvalidArgument(format!(
                "{} shifts for {} coefficient rows",
                b.len(),
                c.nrows()
            )));
        }
        if b.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: b.len(),
            });
        }
        let index = (0..c.ncols())
            .map(|k| (HistoryId::new(format!("θ{k:06}")), k))
            .collect();
        let rows = (0..c.nrows())
            .map(|t| {
                (0..c.ncols())
                    .filter(|&k| c[(t, k)] != 0.0)
                    .map(|k| (k, c[(t, k)]))
                    .collect()
            })
            .collect();
        Ok(PathologyDataset { b, rows, index })
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    fn check(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::FeatureDimension {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// `b_t + ⟨c_t, θ⟩` for every trial.
    pub fn estimates(&self, theta: &DVector<f64>) -> Vec<f64> {
        self.b
            .par_iter()
            .zip(self.rows.par_iter())
            .map(|(b, row)| {
                let terms: Vec<f64> = std::iter::once(*b)
                    .chain(row.iter().map(|&(k, c)| c * theta[k]))
                    .collect();
                pairwise_sum(&terms)
            })
            .collect()
    }

    /// `Σ_t r_t·c_t` as a dense vector.
    fn weighted_rows(&self, r: &[f64]) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        for (rt, row) in r.iter().zip(&self.rows) {
            for &(k, c) in row {
                g[k] += rt * c;
            }
        }
        g
    }

    fn mean_row(&self) -> DVector<f64> {
        self.weighted_rows(&vec![1.0; self.len()]) / self.len() as f64
    }

    /// The fitted θ as a tabular heuristic keyed by history id.
    pub fn heuristic(&self, theta: &DVector<f64>) -> Result<TabularHeuristic> {
        self.check(theta)?;
        TabularHeuristic::new(
            self.index
                .iter()
                .map(|(id, &k)| (id.clone(), theta[k]))
                .collect(),
        )
    }
}

fn residuals(values: &[f64]) -> (f64, Vec<f64>) {
    let m = pairwise_sum(values) / values.len() as f64;
    (m, values.iter().map(|v| v - m).collect())
}

/// `C(θ) = Σ_t ((b_t − b̄) + ⟨c_t − c̄, θ⟩)²` and `∇C = 2Σ_t r_t (c_t − c̄)`.
pub fn sample_variance_cost(
    theta: &DVector<f64>,
    data: &PathologyDataset,
) -> Result<(f64, DVector<f64>)> {
    data.check(theta)?;
    let (_, r) = residuals(&data.estimates(theta));
    let cost = pairwise_sum(&r.iter().map(|x| x * x).collect::<Vec<_>>());
    // Σ r_t = 0, so the c̄ term drops out of the gradient.
    let grad = data.weighted_rows(&r) * 2.0;
    Ok((cost, grad))
}

/// `t = (v̄ − μ0)·√T / s` and its gradient.
pub fn t_statistic(
    theta: &DVector<f64>,
    data: &PathologyDataset,
    mu0: f64,
) -> Result<(f64, DVector<f64>)> {
    data.check(theta)?;
    let n = data.len() as f64;
    let (m, r) = residuals(&data.estimates(theta));
    let s2 = pairwise_sum(&r.iter().map(|x| x * x).collect::<Vec<_>>()) / (n - 1.0);
    let s = s2.sqrt();
    if !(s > 0.0) {
        return Err(Error::DegenerateStatistic(format!("sample deviation {s}")));
    }
    let t = (m - mu0) * n.sqrt() / s;
    let dmean = data.mean_row();
    let ds = data.weighted_rows(&r) / ((n - 1.0) * s);
    let grad = (dmean * s - ds * (m - mu0)) * (n.sqrt() / s2);
    Ok((t, grad))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub epsilon: f64,
    pub iterations: usize,
}

impl AdamConfig {
    /// Defaults for the variance attack: η = 100, β = (0.9, 0.999), λ = 0,
    /// 250 iterations.
    pub fn variance_attack() -> Self {
        AdamConfig {
            learning_rate: 100.0,
            beta1: 0.9,
            beta2: 0.999,
            weight_decay: 0.0,
            epsilon: 1e-8,
            iterations: 250,
        }
    }

    /// As [`AdamConfig::variance_attack`] with 10 iterations.
    pub fn t_attack() -> Self {
        AdamConfig {
            iterations: 10,
            ..Self::variance_attack()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.weight_decay >= 0.0
            && self.learning_rate.is_finite()
            && self.weight_decay.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid Adam config {self:?}")))
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self::variance_attack()
    }
}

/// Adam with bias correction; weight decay is added to the gradient.
#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    m: DVector<f64>,
    v: DVector<f64>,
    step: i32,
}

impl Adam {
    pub fn new(config: AdamConfig, dim: usize) -> Result<Self> {
        config.validate()?;
        Ok(Adam {
            config,
            m: DVector::zeros(dim),
            v: DVector::zeros(dim),
            step: 0,
        })
    }

    /// One descent step on `theta` along `grad`.
    pub fn step(&mut self, theta: &mut DVector<f64>, grad: &DVector<f64>) {
        let c = self.config;
        self.step += 1;
        let g = grad + &*theta * c.weight_decay;
        self.m = &self.m * c.beta1 + &g * (1.0 - c.beta1);
        self.v = &self.v * c.beta2 + g.component_mul(&g) * (1.0 - c.beta2);
        let m_corr = 1.0 - c.beta1.powi(self.step);
        let v_corr = 1.0 - c.beta2.powi(self.step);
        for k in 0..theta.len() {
            let m_hat = self.m[k] / m_corr;
            let v_hat = self.v[k] / v_corr;
            theta[k] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObjectiveKind {
    SampleVariance,
    TStatisticMinimize { mu0: f64 },
    TStatisticMaximize { mu0: f64 },
}

impl ObjectiveKind {
    fn mu0(&self) -> f64 {
        match *self {
            ObjectiveKind::SampleVariance => 0.0,
            ObjectiveKind::TStatisticMinimize { mu0 } | ObjectiveKind::TStatisticMaximize { mu0 } => {
                mu0
            }
        }
    }

    fn direction(&self) -> Direction {
        match self {
            ObjectiveKind::TStatisticMinimize { .. } => Direction::Less,
            _ => Direction::Greater,
        }
    }
}

/// One row of the optimisation trace, taken before the step of that index
/// (the last row is the final θ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    /// Sample variance of the estimates (divisor `T − 1`).
    pub sample_variance: f64,
    pub t: f64,
    pub p: PValue,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimized {
    pub theta: DVector<f64>,
    pub trace: Vec<TraceRow>,
}

impl Optimized {
    pub fn last(&self) -> &TraceRow {
        self.trace.last().expect("trace holds the starting point")
    }
}

fn evaluate(
    objective: ObjectiveKind,
    data: &PathologyDataset,
    theta: &DVector<f64>,
    iteration: usize,
) -> Result<(TraceRow, DVector<f64>)> {
    let n = data.len() as f64;
    let mu0 = objective.mu0();
    let (cost, cost_grad) = sample_variance_cost(theta, data)?;
    let t_result = t_statistic(theta, data, mu0);
    let (value, grad) = match objective {
        ObjectiveKind::SampleVariance => (cost, cost_grad),
        ObjectiveKind::TStatisticMinimize { .. } => t_result.clone()?,
        ObjectiveKind::TStatisticMaximize { .. } => {
            let (t, g) = t_result.clone()?;
            (t, -g)
        }
    };
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Divergence { iteration });
    }
    let t = t_result.map(|(t, _)| t).unwrap_or(f64::NAN);
    let p = t_test_from_statistic(t, n - 1.0, objective.direction()).p_one_sided;
    Ok((
        TraceRow {
            iteration,
            objective: value,
            sample_variance: cost / (n - 1.0),
            t,
            p,
        },
        grad,
    ))
}

/// Full-batch Adam on `objective`, starting at `theta0`. Minimises the
/// sample variance or `t`, or maximises `t` by descending on `−t`.
pub fn optimize(
    objective: ObjectiveKind,
    data: &PathologyDataset,
    adam: AdamConfig,
    theta0: DVector<f64>,
) -> Result<Optimized> {
    data.check(&theta0)?;
    let mut opt = Adam::new(adam, data.dim())?;
    let mut theta = theta0;
    let mut trace = Vec::with_capacity(adam.iterations + 1);
    for iteration in 0..adam.iterations {
        let (row, grad) = evaluate(objective, data, &theta, iteration)?;
        trace.push(row);
        opt.step(&mut theta, &grad);
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { iteration });
        }
    }
    let (row, _) = evaluate(objective, data, &theta, adam.iterations)?;
    trace.push(row);
    Ok(Optimized { theta, trace })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhackReport {
    pub t_min: f64,
    pub p_min: PValue,
    pub t_max: f64,
    pub p_max: PValue,
    pub theta_min: DVector<f64>,
    pub theta_max: DVector<f64>,
}

/// Runs the t attack in both directions from `θ = 0`. `p_min` is the
/// one-sided p for "less than μ0", `p_max` for "greater than μ0".
pub fn phack_report(data: &PathologyDataset, adam: AdamConfig, mu0: f64) -> Result<PhackReport> {
    let zero = DVector::zeros(data.dim());
    let down = optimize(ObjectiveKind::TStatisticMinimize { mu0 }, data, adam, zero.clone())?;
    let up = optimize(ObjectiveKind::TStatisticMaximize { mu0 }, data, adam, zero)?;
    Ok(PhackReport {
        t_min: down.last().t,
        p_min: down.last().p,
        t_max: up.last().t,
        p_max: up.last().p,
        theta_min: down.theta,
        theta_max: up.theta,
    })
}

/// The global minimiser of [`sample_variance_cost`] by a pseudo-inverse
/// least-squares solve over the dense centred coefficient matrix, with its
/// cost. Intended for small instances.
pub fn least_squares_optimum(data: &PathologyDataset) -> Result<(DVector<f64>, f64)> {
    let n = data.len();
    let d = data.dim();
    let mut c = DMatrix::zeros(n, d);
    for (t, row) in data.rows.iter().enumerate() {
        for &(k, v) in row {
            c[(t, k)] += v;
        }
    }
    let mean_row = data.mean_row();
    for t in 0..n {
        for k in 0..d {
            c[(t, k)] -= mean_row[k];
        }
    }
    let (_, y) = residuals(&data.b);
    let y = DVector::from_vec(y);
    let svd = c.svd(true, true);
    let tol = svd.singular_values.max() * (n.max(d) as f64) * f64::EPSILON;
    let theta = -svd
        .solve(&y, tol)
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    let (cost, _) = sample_variance_cost(&theta, data)?;
    Ok((theta, cost))
}

/// Supremum and infimum of [`t_statistic`] over all `θ`, in closed form.
///
/// With centred coefficient matrix `X`, centred shifts `y` and mean shift
/// `m`, write the mean direction as `c̄ = Xᵀw` (minimum-norm `w`), `K = m −
/// μ0 − wᵀy` and `P` for the part of `y` outside the range of `X`. Then `t`
/// ranges over `√(T(T−1))·(−a, √(K²/P² + a²))` when `K > 0` (mirrored when
/// `K < 0`) with `a = ‖w‖`. Bounds are infinite when some direction moves
/// the mean without touching the residuals, or when `P = 0` on the side of
/// `K`. Intended for small instances.
pub fn t_statistic_range(data: &PathologyDataset, mu0: f64) -> Result<(f64, f64)> {
    let n = data.len();
    let d = data.dim();
    let mut x = DMatrix::zeros(n, d);
    for (t, row) in data.rows.iter().enumerate() {
        for &(k, v) in row {
            x[(t, k)] += v;
        }
    }
    let mean_row = data.mean_row();
    for t in 0..n {
        for k in 0..d {
            x[(t, k)] -= mean_row[k];
        }
    }
    let (m, y) = residuals(&data.b);
    let y = DVector::from_vec(y);
    let scale = ((n * (n - 1)) as f64).sqrt();
    if d == 0 {
        let p = y.norm();
        if !(p > 0.0) {
            return Err(Error::DegenerateStatistic("constant estimates".into()));
        }
        let t = scale * (m - mu0) / p;
        return Ok((t, t));
    }
    let svd = x.clone().svd(true, true);
    let tol = svd.singular_values.max() * (n.max(d) as f64) * 1e-12;
    let svd_t = x.transpose().svd(true, true);
    let w = svd_t
        .solve(&mean_row, tol)
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    let consistency = (x.transpose() * &w - &mean_row).amax();
    if consistency > 1e-9 * mean_row.amax().max(1.0) {
        return Ok((f64::NEG_INFINITY, f64::INFINITY));
    }
    let fitted = &x
        * svd
            .solve(&y, tol)
            .map_err(|e| Error::InvalidData(e.to_string()))?;
    let p = (&y - fitted).norm();
    let k = m - mu0 - w.dot(&y);
    let a = w.norm();
    let far = if p > 0.0 {
        (k * k / (p * p) + a * a).sqrt()
    } else if k != 0.0 {
        f64::INFINITY
    } else {
        a
    };
    Ok(if k >= 0.0 {
        (-scale * a, scale * far)
    } else {
        (-scale * far, scale * a)
    })
}
