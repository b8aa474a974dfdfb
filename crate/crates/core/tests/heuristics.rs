use aivat::estimator::{decompose_affine, evaluate_affine, EstimatorConfig, HistoryId};
use aivat::game::{terminal_distribution, Leduc, StrategyProfile};
use aivat::heuristics::{
    closed_form_theta, fit_bayesian_linear, joint_prediction, linear_variance_cost, psi_features,
    BayesianHeuristic, FeatureForm, FeatureMap, GameFeatures, HeuristicModel, LinearHeuristic,
};
use aivat::Error;
use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))
}

fn dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<(DVector<f64>, f64)> {
    let w = random_vec(rng, d);
    (0..n)
        .map(|_| {
            let x = random_vec(rng, d);
            let y = x.dot(&w) + 0.1 * rng.random_range(-1.0..1.0);
            (x, y)
        })
        .collect()
}

/// Gaussian-process prediction with `k(x, x') = s·⟨x, x'⟩ + noise·δ`.
fn kernel_prediction(
    data: &[(DVector<f64>, f64)],
    scale: f64,
    noise: f64,
    x: &DVector<f64>,
) -> (f64, f64) {
    let n = data.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        scale * data[i].0.dot(&data[j].0) + if i == j { noise } else { 0.0 }
    });
    let k_star = DVector::from_fn(n, |i, _| scale * data[i].0.dot(x));
    let y = DVector::from_fn(n, |i, _| data[i].1);
    let k_inv = k.try_inverse().unwrap();
    let mean = (k_star.transpose() * &k_inv * &y)[(0, 0)];
    let var = scale * x.dot(x) - (k_star.transpose() * &k_inv * &k_star)[(0, 0)];
    (mean, var)
}

#[test]
fn weight_space_matches_kernel_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..20 {
        let d = 2 + trial % 4;
        let data = dataset(&mut rng, 5, d);
        let (scale, noise) = (0.5 + trial as f64 * 0.2, 0.05 + trial as f64 * 0.01);
        let model = fit_bayesian_linear(&data, scale, noise).unwrap();
        for _ in 0..5 {
            let x = random_vec(&mut rng, d) * 2.0;
            let (m_ref, v_ref) = kernel_prediction(&data, scale, noise, &x);
            let (m, v) = model.predict(&x, false).unwrap();
            assert!((m - m_ref).abs() < 1e-8, "mean {m} vs {m_ref}");
            assert!((v - v_ref).abs() < 1e-8, "variance {v} vs {v_ref}");
            let (_, v_noisy) = model.predict(&x, true).unwrap();
            assert!((v_noisy - v_ref - noise).abs() < 1e-8);
        }
    }
}

#[test]
fn posterior_shrinks_as_data_arrives() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = dataset(&mut rng, 25, 4);
    let mut previous: Option<DMatrix<f64>> = None;
    for n in (5..=25).step_by(5) {
        let s = fit_bayesian_linear(&data[..n], 3.0, 0.2)
            .unwrap()
            .posterior_covariance;
        let eig = s.clone().symmetric_eigen().eigenvalues;
        assert!(eig.min() >= -1e-9);
        if let Some(prev) = previous {
            let diff = &prev - &s;
            assert!(diff.symmetric_eigen().eigenvalues.min() >= -1e-12);
        }
        previous = Some(s);
    }
}

#[test]
fn bayesian_edge_cases() {
    assert!(matches!(
        fit_bayesian_linear(&[], 1.0, 1.0),
        Err(Error::InsufficientData { .. })
    ));
    let one = [(DVector::from_vec(vec![1.0]), 0.0)];
    let tight = fit_bayesian_linear(&one, 1e-6, 1.0).unwrap();
    assert!(tight.posterior_mean[0].abs() < 1e-12);
    assert!(matches!(
        fit_bayesian_linear(&[(DVector::from_vec(vec![f64::NAN]), 0.0)], 1.0, 1.0),
        Err(Error::InvalidData(_))
    ));
    assert!(fit_bayesian_linear(&one, 0.0, 1.0).is_err());
    assert!(fit_bayesian_linear(&one, 1.0, 0.0).is_err());
}

#[test]
fn predictive_variance_grows_away_from_the_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = dataset(&mut rng, 30, 3);
    let model = fit_bayesian_linear(&data, 1.0, 0.1).unwrap();
    let centre = data.iter().fold(DVector::zeros(3), |acc, (x, _)| acc + x) / 30.0;
    let far = DVector::from_vec(vec![40.0, -35.0, 50.0]);
    assert!(model.predict(&far, false).unwrap().1 > model.predict(&centre, false).unwrap().1);
}

struct Table(Vec<DVector<f64>>);

impl FeatureMap for Table {
    fn dim(&self) -> usize {
        self.0[0].len()
    }
    fn features(&self, id: &HistoryId) -> aivat::Result<DVector<f64>> {
        Ok(self.0[id.as_str().parse::<usize>().unwrap()].clone())
    }
}

#[test]
fn joint_prediction_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let data = dataset(&mut rng, 10, 3);
    let model = fit_bayesian_linear(&data, 2.0, 0.3).unwrap();
    let table = Table((0..4).map(|_| random_vec(&mut rng, 3)).collect());
    let id = |i: usize| HistoryId::new(i.to_string());

    let (m1, s1) = joint_prediction(&model, &[id(2)], &table).unwrap();
    let (pm, pv) = model.predict(&table.0[2], false).unwrap();
    assert_eq!(s1.shape(), (1, 1));
    assert!((s1[(0, 0)] - pv).abs() < 1e-12 && (m1[0] - pm).abs() < 1e-12);

    let (_, dup) = joint_prediction(&model, &[id(1), id(1)], &table).unwrap();
    assert!((dup[(0, 0)] - dup[(0, 1)]).abs() < 1e-12);
    assert!(dup.determinant().abs() < 1e-12 * dup[(0, 0)].powi(2).max(1.0));

    let ids: Vec<HistoryId> = (0..4).map(id).collect();
    let (_, sigma) = joint_prediction(&model, &ids, &table).unwrap();
    for i in 0..4 {
        let (_, v) = model.predict(&table.0[i], false).unwrap();
        assert!((sigma[(i, i)] - v).abs() < 1e-12);
    }
    assert_eq!(sigma, sigma.transpose());
    assert!(sigma.clone().symmetric_eigen().eigenvalues.min() >= -1e-9);

    let heuristic = BayesianHeuristic { model, features: table };
    let (means, cov) = heuristic.joint(&ids).unwrap();
    assert_eq!(cov, sigma);
    assert!((means[3] - heuristic.value(&id(3)).unwrap()).abs() < 1e-15);
}

fn linear_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<(f64, DVector<f64>)> {
    (0..n)
        .map(|_| {
            let psi = random_vec(rng, d);
            (psi.sum() * 3.0 + rng.random_range(-1.0..1.0), psi)
        })
        .collect()
}

#[test]
fn closed_form_is_a_stationary_global_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let data = linear_dataset(&mut rng, 60, 5);
        let theta = closed_form_theta(&data, 0.0).unwrap();
        let (cost, grad) = linear_variance_cost(&data, &theta).unwrap();
        let (_, grad0) = linear_variance_cost(&data, &DVector::zeros(5)).unwrap();
        assert!(grad.amax() / grad0.amax().max(1.0) < 1e-8);
        for _ in 0..100 {
            let delta = random_vec(&mut rng, 5) * 0.1;
            let (perturbed, _) = linear_variance_cost(&data, &(&theta + delta)).unwrap();
            assert!(cost <= perturbed);
        }
    }
}

#[test]
fn hyperplane_data_is_rejected_until_perturbed() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = 4;
    let normal = random_vec(&mut rng, d).normalize();
    let offset = 0.7;
    let on_plane: Vec<(f64, DVector<f64>)> = (0..40)
        .map(|_| {
            let x = random_vec(&mut rng, d);
            let x = &x - &normal * (x.dot(&normal) - offset);
            (rng.random_range(-5.0..5.0), x)
        })
        .collect();
    assert!(matches!(
        closed_form_theta(&on_plane, 0.0),
        Err(Error::HyperplaneDegeneracy { .. })
    ));
    let perturbed: Vec<(f64, DVector<f64>)> = on_plane
        .iter()
        .map(|(b, x)| (*b, x + random_vec(&mut rng, d) * 1e-3))
        .collect();
    assert!(closed_form_theta(&perturbed, 0.0).is_ok());
}

#[test]
fn linear_heuristic_is_affine_in_psi() {
    let game = Leduc;
    let profile = StrategyProfile::random(&game, 3).unwrap();
    let features = GameFeatures::new(game, FeatureForm::default());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let config = EstimatorConfig::aivat(0, [0, 1]);
    for (z, _) in terminal_distribution(&game, &profile).unwrap().iter().step_by(257) {
        let est = decompose_affine(&game, z, &profile.as_partial(), &config).unwrap();
        let psi = psi_features(&est, &features).unwrap();
        let theta = random_vec(&mut rng, features.dim());
        let heuristic = LinearHeuristic::new(theta.clone(), features.clone()).unwrap();
        let direct = evaluate_affine(&est, &heuristic).unwrap();
        assert_relative_eq!(direct, est.b + psi.dot(&theta), epsilon = 1e-12, max_relative = 1e-12);
    }
    assert!(matches!(
        LinearHeuristic::new(DVector::zeros(2), features),
        Err(Error::FeatureDimension { expected: 5, got: 2 })
    ));
}
