use super::*;
use crate::domain::DesignDomain;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dataset_1d(xs: &[f64], f: impl Fn(f64) -> f64) -> Dataset {
    Dataset::new(
        DesignDomain::unit(1),
        xs.iter().map(|x| vec![*x]).collect(),
        xs.iter().map(|x| f(*x)).collect(),
    )
    .unwrap()
}

fn random_dataset(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Dataset {
    let x: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
        .collect();
    let y = x
        .iter()
        .map(|p| p.iter().enumerate().map(|(d, v)| ((d + 1) as f64 * 3.0 * v).sin()).sum())
        .collect();
    Dataset::new(DesignDomain::unit(n), x, y).unwrap()
}

/// Mean and variance via an explicitly inverted covariance matrix.
fn dense_oracle(model: &GpModel, x: &[f64]) -> (f64, f64) {
    let kernel = model.kernel();
    let m = model.len();
    let mut kn = DMatrix::from_fn(m, m, |i, j| kernel.k(&model.train_x()[i], &model.train_x()[j]));
    for i in 0..m {
        kn[(i, i)] += model.noise_variance() + model.jitter();
    }
    let inv = kn.try_inverse().unwrap();
    let k = DVector::from_iterator(m, model.train_x().iter().map(|t| kernel.k(x, t)));
    let y = DVector::from_column_slice(model.train_y_normalized());
    let mean = (k.transpose() * &inv * y)[0];
    let var = kernel.k(x, x) - (k.transpose() * &inv * &k)[0];
    let s = model.stats();
    (s.denormalize(mean), var.max(0.0) * s.y_sigma * s.y_sigma)
}

#[test]
fn scalar_likelihood_examples() {
    let k = KernelSpec::matern32(1.0);
    let l0 = log_marginal_likelihood(&k, 0.0, &[vec![0.5]], &[0.0]).unwrap();
    assert!((l0 + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-9);
    assert!((l0 - -0.9189).abs() < 1e-4);
    let l1 = log_marginal_likelihood(&k, 0.0, &[vec![0.5]], &[1.0]).unwrap();
    assert!((l1 - (-0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5)).abs() < 1e-9);
    assert!((l1 - -1.4189).abs() < 1e-4);
}

#[test]
fn likelihood_matches_dense_computation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data = random_dataset(&mut rng, 12, 2);
    let k = KernelSpec::matern32(0.4);
    let noise = 1e-4;
    let y: Vec<f64> = data.y().to_vec();
    let lml = log_marginal_likelihood(&k, noise, data.x(), &y).unwrap();
    let mut kn = k.gram(data.x()).unwrap();
    for i in 0..12 {
        kn[(i, i)] += noise + DEFAULT_JITTER;
    }
    let det = kn.determinant();
    let inv = kn.try_inverse().unwrap();
    let yv = DVector::from_column_slice(&y);
    let dense = -6.0 * (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * (yv.transpose() * inv * &yv)[0];
    assert!((lml - dense).abs() < 1e-8 * dense.abs().max(1.0), "{lml} vs {dense}");
}

#[test]
fn likelihood_drops_with_an_outlier() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let data = random_dataset(&mut rng, 10, 1);
    let k = KernelSpec::matern32(0.3);
    let mut y = data.y().to_vec();
    let base = log_marginal_likelihood(&k, 1e-3, data.x(), &y).unwrap();
    y[4] += 50.0;
    let worse = log_marginal_likelihood(&k, 1e-3, data.x(), &y).unwrap();
    assert!(worse < base);
}

#[test]
fn factorization_error_lists_jitter_levels() {
    let k = KernelSpec::matern32(1.0);
    let x = vec![vec![0.1], vec![0.2]];
    // a negative noise makes the matrix indefinite at every jitter level
    let err = factorize(&k, -5.0, &x, DEFAULT_JITTER).unwrap_err();
    match err {
        Error::Factorization { jitter_levels } => {
            assert_eq!(jitter_levels.len(), 7);
            assert_eq!(jitter_levels[0], 1e-10);
            assert!((jitter_levels[6] - 1e-4).abs() < 1e-18);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn duplicate_rows_still_factor_with_jitter_escalation() {
    let k = KernelSpec::matern32(0.5);
    let x = vec![vec![0.3], vec![0.3]];
    let (_, used) = factorize(&k, 0.0, &x, DEFAULT_JITTER).unwrap();
    assert!(used >= DEFAULT_JITTER);
}

#[test]
fn fit_dominates_random_starts_and_is_deterministic() {
    let xs: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
    let data = dataset_1d(&xs, |x| (6.0 * x).sin() + x);
    let opts = FitOptions::default().with_seed(RngSeed(17));
    let a = GpModel::fit(&data, &opts).unwrap();
    let b = GpModel::fit(&data, &opts).unwrap();
    assert_eq!(a.kernel(), b.kernel());
    assert_eq!(a.noise_variance().to_bits(), b.noise_variance().to_bits());

    let crate::kernels::LengthScale::Isotropic(l) = a.kernel().length_scale else {
        panic!("expected isotropic");
    };
    assert!((1e-2..=1e2).contains(&l));

    let (lo, hi) = opts.log_bounds();
    let (_, y_stats) = crate::domain::normalize_targets(data.y()).unwrap();
    let y_norm: Vec<f64> = data.y().iter().map(|v| y_stats.normalize(*v)).collect();
    for r in 0..opts.n_restarts {
        let mut rng = opts.seed.derive_index(r as u64).rng();
        let p: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect();
        let kern = opts.kernel.with_log_params(&p[..1]);
        if let Ok(start) = log_marginal_likelihood(&kern, p[1].exp(), data.x(), &y_norm) {
            assert!(a.log_likelihood() >= start - 1e-9);
        }
    }
}

#[test]
fn fitted_model_interpolates_linear_data() {
    let xs = [0.0, 0.25, 0.5, 0.75, 1.0];
    let data = dataset_1d(&xs, |x| 2.0 * x - 1.0);
    let model = GpModel::fit(&data, &FitOptions::default().with_seed(RngSeed(3))).unwrap();
    assert!(model.noise_variance() < 1e-6, "noise {}", model.noise_variance());
    for (x, y) in data.x().iter().zip(data.y()) {
        let (m, _) = model.predict(x).unwrap();
        assert!((m - y).abs() < 1e-6, "{m} vs {y}");
    }
}

#[test]
fn fit_rejects_tiny_datasets_and_bad_options() {
    let data = dataset_1d(&[0.5], |x| x);
    assert!(GpModel::fit(&data, &FitOptions::default()).is_err());
    let data = dataset_1d(&[0.1, 0.5], |x| x);
    let opts = FitOptions {
        n_restarts: 0,
        ..FitOptions::default()
    };
    assert!(GpModel::fit(&data, &opts).is_err());
    let opts = FitOptions {
        length_scale_bounds: (1.0, 0.5),
        ..FitOptions::default()
    };
    assert!(GpModel::fit(&data, &opts).is_err());
}

#[test]
fn prediction_at_training_points_and_far_away() {
    let xs = [0.1, 0.4, 0.45, 0.8];
    let data = dataset_1d(&xs, |x| 5.0 * x * x + 1.0);
    let model = GpModel::condition(KernelSpec::matern32(0.3), 0.0, &data).unwrap();
    let s = model.stats();
    for (x, y) in data.x().iter().zip(data.y()) {
        let (m, v) = model.predict(x).unwrap();
        assert!((m - y).abs() < 1e-6);
        assert!(v <= 1e-6 * s.y_sigma * s.y_sigma);
    }
    let (m, v) = model.predict(&[500.0]).unwrap();
    assert!((m - s.y_mu).abs() < 1e-9);
    assert!((v - s.y_sigma * s.y_sigma).abs() < 1e-9);
    assert!(model.predict(&[0.1, 0.2]).is_err());
}

#[test]
fn prediction_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in 1..=3 {
        let data = random_dataset(&mut rng, 15, n);
        let model = GpModel::condition(KernelSpec::matern32(0.35), 1e-5, &data).unwrap();
        let probes: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
            .collect();
        let batch = model.predict_batch(&probes).unwrap();
        for (p, (bm, bv)) in probes.iter().zip(batch) {
            let (m, v) = model.predict(p).unwrap();
            let (om, ov) = dense_oracle(&model, p);
            assert!((m - om).abs() <= 1e-8 * om.abs().max(1.0));
            assert!((v - ov).abs() <= 1e-8 * ov.abs().max(1.0));
            assert!((bm - m).abs() <= 1e-12 * m.abs().max(1.0));
            assert!((bv - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}

#[test]
fn raw_variance_is_not_meaningfully_negative() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let data = random_dataset(&mut rng, 30, 2);
    let model = GpModel::condition(KernelSpec::matern32(0.5), 0.0, &data).unwrap();
    for x in data.x() {
        assert!(model.raw_variance_normalized(x) >= -1e-6);
    }
}

#[test]
fn loocv_identity_kernel_case() {
    // far-apart points with a tiny length scale give K_N = I up to jitter
    let data = dataset_1d(&[0.0, 1.0], |x| 3.0 * x);
    let k = KernelSpec::matern32(1e-3);
    let model = GpModel::condition(k, 0.0, &data).unwrap();
    let e = model.loocv_errors_fast();
    let y = model.train_y_normalized();
    for i in 0..2 {
        assert!((e.normalized[i] - y[i]).abs() < 1e-9);
    }
    let den = e.denormalized();
    assert!((den[1] - y[1] * model.stats().y_sigma).abs() < 1e-9);
}

#[test]
fn loocv_fast_matches_bruteforce() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 1..=3 {
        let data = random_dataset(&mut rng, 5 + 4 * n, n);
        let k = KernelSpec::matern32(0.3);
        let model = GpModel::condition(k.clone(), 0.0, &data).unwrap();
        let fast = model.loocv_errors_fast().normalized;
        let brute = loocv_errors_bruteforce(&data, &k, 0.0).unwrap();
        let scale = brute.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in fast.iter().zip(&brute) {
            assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
        }
    }
}

#[test]
fn loocv_mirrored_data_gives_mirrored_errors() {
    let xs = [0.0, 0.2, 0.5, 0.8, 1.0];
    let data = dataset_1d(&xs, |x| (x - 0.5).powi(2) + 0.3 * (x - 0.5).abs());
    let model = GpModel::condition(KernelSpec::matern32(0.4), 0.0, &data).unwrap();
    let e = model.loocv_errors_fast().normalized;
    for i in 0..5 {
        assert!((e[i].abs() - e[4 - i].abs()).abs() < 1e-9);
    }
}

#[test]
fn loocv_bruteforce_structure() {
    // linear data, tiny length scale: the middle point is predicted by the
    // prior mean, which equals its normalized response
    let data = dataset_1d(&[0.0, 0.5, 1.0], |x| 2.0 * x);
    let e = loocv_errors_bruteforce(&data, &KernelSpec::matern32(1e-3), 0.0).unwrap();
    assert!(e[1].abs() < 1e-9);

    // large length scale on collinear points: interior point is easy
    let data = dataset_1d(&[0.0, 0.5, 1.0], |x| 2.0 * x);
    let e = loocv_errors_bruteforce(&data, &KernelSpec::matern32(5.0), 1e-8).unwrap();
    assert!(e[1].abs() < 0.1 * e[0].abs().min(e[2].abs()), "{e:?}");

    assert!(loocv_errors_bruteforce(&dataset_1d(&[0.0, 1.0], |x| x), &KernelSpec::matern32(1.0), 0.0).is_err());
}

#[test]
fn mean_gradient_examples() {
    let xs: Vec<f64> = (0..12).map(|i| i as f64 / 11.0).collect();
    let flat = dataset_1d(&xs, |_| 4.0);
    let model = GpModel::condition(KernelSpec::matern32(0.3), 0.0, &flat).unwrap();
    for x in [0.0, 0.33, 1.0] {
        let g = model.mean_gradient(&[x], &[0.0], &[1.0]).unwrap();
        assert!(g[0].abs() <= 1e-4);
    }

    let xs: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    let line = dataset_1d(&xs, |x| 3.0 * x);
    let model = GpModel::fit(&line, &FitOptions::default().with_seed(RngSeed(4))).unwrap();
    for x in [0.1, 0.37, 0.5, 0.9, 1.0] {
        let g = model.mean_gradient(&[x], &[0.0], &[1.0]).unwrap();
        assert!((g[0] - 3.0).abs() <= 0.15, "x={x}: {}", g[0]);
    }
}

#[test]
fn mean_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let data = random_dataset(&mut rng, 25, 2);
    let model = GpModel::condition(KernelSpec::matern32(0.5), 1e-6, &data).unwrap();
    for _ in 0..10 {
        let x = vec![0.05 + 0.9 * rng.random::<f64>(), 0.05 + 0.9 * rng.random::<f64>()];
        let g = model.mean_gradient(&x, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        for d in 0..2 {
            let h = 1e-4;
            let mut a = x.clone();
            a[d] += h;
            let mut b = x.clone();
            b[d] -= h;
            let c = (model.predict(&a).unwrap().0 - model.predict(&b).unwrap().0) / (2.0 * h);
            assert!((g[d] - c).abs() <= 1e-3 * c.abs().max(1.0), "{} vs {c}", g[d]);
        }
    }
}

#[test]
fn cholesky_and_alpha_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let data = random_dataset(&mut rng, 20, 2);
    let model = GpModel::condition(KernelSpec::matern32(0.4), 1e-6, &data).unwrap();
    let l = model.cholesky_factor();
    let mut kn = model.kernel().gram(data.x()).unwrap();
    for i in 0..20 {
        kn[(i, i)] += model.noise_variance() + model.jitter();
    }
    let rec = &l * l.transpose();
    assert!((rec - &kn).norm() <= 1e-8 * kn.norm());
    let alpha = DVector::from_column_slice(model.alpha());
    let y = DVector::from_column_slice(model.train_y_normalized());
    assert!((&kn * alpha - &y).norm() <= 1e-8 * y.norm());
}

#[test]
fn every_family_fits() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let data = random_dataset(&mut rng, 15, 2);
    for fam in [
        KernelFamily::Matern32,
        KernelFamily::Matern52,
        KernelFamily::SquaredExponential,
        KernelFamily::AbsoluteExponential,
        KernelFamily::RationalQuadratic { alpha: 1.0 },
        KernelFamily::DotProduct { sigma0_sq: 1.0 },
    ] {
        let opts = FitOptions::default().with_kernel(kernel_template(fam)).with_seed(RngSeed(1));
        let model = GpModel::fit(&data, &opts).unwrap();
        assert!(model.log_likelihood().is_finite(), "{}", fam.name());
    }
}
