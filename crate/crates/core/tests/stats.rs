use aivat::estimator::{AffineEstimate, HistoryId};
use aivat::stats::{
    estimate_ivw_bias, ivw_mean, one_sided_t_test, plain_se, propagate_variance,
    propagate_variance_diagonal, t_test_from_statistic, uniform_mean, weighted_model_variance,
    weighted_se, Direction, EstimateWithVariance, PValue,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_set(rng: &mut ChaCha8Rng, n: usize) -> Vec<EstimateWithVariance> {
    (0..n)
        .map(|_| {
            EstimateWithVariance::new(rng.random_range(-5.0..5.0), rng.random_range(0.1..10.0))
                .unwrap()
        })
        .collect()
}

#[test]
fn ivw_has_minimum_model_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let n = rng.random_range(2..60);
        let set = random_set(&mut rng, n);
        let variances: Vec<f64> = set.iter().map(|e| e.variance).collect();
        let ivw = ivw_mean(&set).unwrap();
        for _ in 0..10 {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..1.0)).collect();
            let alt = weighted_model_variance(&w, &variances).unwrap();
            assert!(alt >= ivw.model_variance - 1e-12);
        }
    }
}

#[test]
fn equal_variances_make_ivw_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let set: Vec<EstimateWithVariance> = (0..50)
        .map(|_| EstimateWithVariance::new(rng.random_range(-1.0..1.0), 2.5).unwrap())
        .collect();
    let u = uniform_mean(&set).unwrap();
    let w = ivw_mean(&set).unwrap();
    assert!((u.mean - w.mean).abs() < 1e-12);
    assert!((u.se - w.se).abs() < 1e-12);
    assert!((u.model_variance - w.model_variance).abs() < 1e-12);
    assert!(w.estimated_bias.unwrap().abs() < 1e-12);
}

#[test]
fn constant_weights_reduce_to_unweighted() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values: Vec<f64> = (0..40).map(|_| rng.random_range(-2.0..3.0)).collect();
    let w = vec![7.0; values.len()];
    assert!((weighted_se(&values, &w).unwrap() - plain_se(&values).unwrap()).abs() < 1e-12);
    let a = one_sided_t_test(&values, Some(&w), 0.1, Direction::Greater).unwrap();
    let b = one_sided_t_test(&values, None, 0.1, Direction::Greater).unwrap();
    assert!((a.t - b.t).abs() < 1e-12);
    assert!((a.p_one_sided.value() - b.p_one_sided.value()).abs() < 1e-12);
}

#[test]
fn diagonal_covariance_is_the_uncorrelated_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut est = AffineEstimate::constant(1.0);
    for i in 0..6 {
        est.coeffs
            .insert(HistoryId::new(format!("h{i}")), rng.random_range(-1.0..1.0));
    }
    let vars: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..4.0)).collect();
    let sigma = DMatrix::from_diagonal(&DVector::from_vec(vars.clone()));
    let full = propagate_variance(&est, &sigma).unwrap();
    let diag = propagate_variance_diagonal(&est, &vars).unwrap();
    assert!((full - diag).abs() < 1e-12);
}

#[test]
fn planted_bias_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let n = 100_000;
    // w ~ U(0.5, 1.5): E[w] = 1, Var(w) = 1/12; v = 6(w − 1) + ε gives
    // Cov(w, v) = 1/2.
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let v: Vec<f64> = w.iter().map(|w| 6.0 * (w - 1.0) + noise.sample(&mut rng)).collect();
    let bias = estimate_ivw_bias(&v, &w).unwrap();
    assert!((bias - 0.5).abs() < 0.02, "{bias}");

    let independent: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
    let bias = estimate_ivw_bias(&independent, &w).unwrap();
    let mw = w.iter().sum::<f64>() / n as f64;
    let products: Vec<f64> = w.iter().zip(&independent).map(|(w, v)| (w - mw) * v).collect();
    let sd = (products.iter().map(|p| p * p).sum::<f64>() / n as f64).sqrt();
    let se = sd / (n as f64).sqrt() / mw;
    assert!(bias.abs() < 3.0 * se, "{bias} vs se {se}");
}

#[test]
fn bias_error_shrinks_with_sample_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut mean_error = |n: usize| {
        let reps = 40;
        (0..reps)
            .map(|_| {
                let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
                let v: Vec<f64> = w.iter().map(|w| 6.0 * (w - 1.0) + noise.sample(&mut rng)).collect();
                (estimate_ivw_bias(&v, &w).unwrap() - 0.5).abs()
            })
            .sum::<f64>()
            / reps as f64
    };
    let small = mean_error(1_000);
    let large = mean_error(16_000);
    // Sixteen times the data should cut the error by about four.
    assert!(large < 0.5 * small, "{large} vs {small}");
}

#[test]
fn t_table_value() {
    let r = t_test_from_statistic(2.0, 10.0, Direction::Greater);
    assert!((r.p_one_sided.value() - 0.0367).abs() < 5e-4);
    let l = t_test_from_statistic(-2.0, 10.0, Direction::Less);
    assert_eq!(l.p_one_sided, r.p_one_sided);
}

#[test]
fn p_value_handoff_near_underflow() {
    let mut last_log = 0.0;
    let mut saw_p = false;
    let mut saw_log = false;
    for i in 0..400 {
        let t = 20.0 + i as f64 * 0.5;
        let r = t_test_from_statistic(t, 5000.0, Direction::Greater);
        let log10 = r.p_one_sided.log10();
        assert!(log10.is_finite() && log10 < last_log);
        match r.p_one_sided {
            PValue::P(p) => {
                assert!(p >= 1e-300);
                saw_p = true;
            }
            PValue::Log10(l) => {
                assert!(l < -300.0);
                saw_log = true;
            }
        }
        last_log = log10;
    }
    assert!(saw_p && saw_log);
}

#[test]
fn model_variance_matches_empirical_se() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let set: Vec<EstimateWithVariance> = (0..10_000)
        .map(|_| {
            let var: f64 = rng.random_range(0.5..4.0);
            EstimateWithVariance::new(var.sqrt() * normal.sample(&mut rng), var).unwrap()
        })
        .collect();
    let u = uniform_mean(&set).unwrap();
    let ratio = u.model_variance / (u.se * u.se);
    assert!((ratio - 1.0).abs() < 0.2, "{ratio}");
}
