use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vfrecon::baseline::{
    library_features, library_size, sindy_fit, stlsq, PolynomialLibrary, SindyOptions,
};
use vfrecon::simulate::LinearField;
use vfrecon::{generate_dataset, make_grid, InitialSampler, IntegratorConfig, VectorField};

fn linear_dataset(sigma: f64) -> (LinearField, vfrecon::TrajectoryDataset) {
    let f = LinearField::new(2, vec![-0.5, 1.0, -1.0, -0.5]).unwrap();
    let sampler = InitialSampler::segment(vec![-1.0, 1.0], vec![1.0, 0.5]).unwrap();
    let grid = make_grid(3.0, 600).unwrap();
    let ds = generate_dataset(&f, &sampler, 20, &grid, sigma, &IntegratorConfig::default(), 1).unwrap();
    (f, ds)
}

fn opts(degree: usize, thresholds: Vec<f64>) -> SindyOptions {
    SindyOptions { degree, thresholds, stencil: 3, max_iters: 10 }
}

#[test]
fn linear_field_is_recovered() {
    let (f, ds) = linear_dataset(0.0);
    let probes: Vec<f64> = (0..50).flat_map(|i| [(i as f64 * 0.3).sin(), (i as f64 * 0.7).cos()]).collect();
    let fit = sindy_fit(&ds, &opts(2, vec![0.05, 0.1]), &f, &probes).unwrap();
    let lib = &fit.model.library;
    let coef = &fit.model.sparse.coefficients;
    for (row, term) in lib.terms().iter().enumerate() {
        for s in 0..2 {
            let expected = match term.as_slice() {
                [1, 0] => f.matrix()[s * 2],
                [0, 1] => f.matrix()[s * 2 + 1],
                _ => 0.0,
            };
            assert!((coef[(row, s)] - expected).abs() < 1e-4, "term {term:?} target {s}: {}", coef[(row, s)]);
        }
    }
}

#[test]
fn single_threshold_grid_matches_plain_stlsq() {
    let (f, ds) = linear_dataset(0.05);
    let probes = [0.2, 0.3, -0.4, 0.1];
    let fit = sindy_fit(&ds, &opts(3, vec![0.1]), &f, &probes).unwrap();
    let (states, targets) = vfrecon::baseline::derivative_targets(&ds, 3).unwrap();
    let lib = PolynomialLibrary::new(2, 3).unwrap();
    let direct = stlsq(&library_features(&states, &lib).unwrap(), &targets, 0.1, 10).unwrap();
    assert_eq!(fit.model.sparse, direct);
    assert_eq!(fit.threshold, 0.1);
    assert_eq!(fit.errors.len(), 1);
}

#[test]
fn twelve_dimensional_quadratic_library() {
    assert_eq!(library_size(12, 2), 91);
    let lib = PolynomialLibrary::new(12, 2).unwrap();
    let points: Vec<f64> = (0..5 * 12).map(|v| v as f64 * 0.01).collect();
    let theta = library_features(&points, &lib).unwrap();
    assert_eq!((theta.nrows(), theta.ncols()), (5, 91));
}

/// Random well-conditioned design with a planted sparse solution whose
/// nonzero entries are all at least 2 lambda in magnitude.
fn planted(rng: &mut ChaCha8Rng, lambda: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let rows = rng.random_range(40..80);
    let cols = rng.random_range(5..20);
    let targets = rng.random_range(1..4);
    let theta = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    let xi = DMatrix::from_fn(cols, targets, |_, _| {
        if rng.random_bool(0.3) {
            let mag = rng.random_range(2.0 * lambda..5.0);
            if rng.random_bool(0.5) { mag } else { -mag }
        } else {
            0.0
        }
    });
    let y = &theta * &xi;
    (theta, xi, y)
}

#[test]
fn planted_sparse_solutions_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let lambda = rng.random_range(0.05..0.5);
        let (theta, xi, y) = planted(&mut rng, lambda);
        let model = stlsq(&theta, &y, lambda, 10).unwrap();
        let err = (&model.coefficients - &xi).abs().max();
        assert!(err < 1e-8, "max coefficient error {err}");
    }
}

#[test]
fn active_sets_shrink_and_survivors_clear_the_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let lambda = rng.random_range(0.05..0.5);
        let (theta, xi, mut y) = planted(&mut rng, lambda);
        // Noise so that thresholding has work to do.
        y.iter_mut().for_each(|v| *v += rng.random_range(-0.3..0.3));
        let model = stlsq(&theta, &y, lambda, 10).unwrap();
        for history in &model.active_history {
            assert!(history.windows(2).all(|w| w[1] <= w[0]), "{history:?}");
        }
        assert!(model.coefficients.iter().all(|c| *c == 0.0 || c.abs() >= lambda));
        assert_eq!(model.coefficients.shape(), xi.shape());
    }
}

#[test]
fn predictions_follow_the_library() {
    let (f, ds) = linear_dataset(0.0);
    let fit = sindy_fit(&ds, &opts(1, vec![0.05]), &f, &[0.5, 0.5]).unwrap();
    for x in [[0.1, -0.2], [0.7, 0.3]] {
        let p = fit.model.predict(&x);
        let t = f.eval_vec(&x);
        assert!(p.iter().zip(&t).all(|(a, b)| (a - b).abs() < 1e-4));
    }
    let mut out = Vec::new();
    fit.model.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("target,multi_index,coefficient"));
    assert_eq!(text.lines().count(), 5);
}
