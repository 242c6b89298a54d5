//! Shared fixtures for the benchmarks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vfrecon::baseline::{library_features, PolynomialLibrary};
use vfrecon::metrics::{locations, sample_envelope};
use vfrecon::simulate::HighDimVanDerPol;
use vfrecon::{
    generate_dataset, make_grid, InitialSampler, IntegratorConfig, TrajectoryDataset, VanDerPol,
    VectorField,
};

/// `count` uniform points in `[-1, 1]^dim`, flat.
pub fn random_points(count: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count * dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn field(dim: usize) -> Box<dyn VectorField> {
    if dim == 2 {
        Box::new(VanDerPol)
    } else {
        Box::new(HighDimVanDerPol::new(dim).expect("even dimension"))
    }
}

fn sampler(dim: usize) -> InitialSampler {
    if dim == 2 {
        InitialSampler::diagonal(2, -1.0, 1.0).unwrap()
    } else {
        InitialSampler::diagonal(dim, 1.0, 2.0).unwrap()
    }
}

/// Noisy Van der Pol trajectories (planar for `dim = 2`, paired otherwise).
pub fn dataset(dim: usize, n: usize, m: usize) -> TrajectoryDataset {
    let grid = make_grid(2.0, m).unwrap();
    generate_dataset(&*field(dim), &sampler(dim), n, &grid, 0.05, &IntegratorConfig::default(), 1).unwrap()
}

/// `count` envelope points of the same system, flat.
pub fn queries(dim: usize, count: usize) -> Vec<f64> {
    let pts = sample_envelope(&*field(dim), &sampler(dim), 2.0, count, 1, &IntegratorConfig::default(), 2).unwrap();
    locations(&pts)
}

/// Polynomial features of random states and a sparse linear response.
pub fn regression(dim: usize, degree: usize, rows: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let lib = PolynomialLibrary::new(dim, degree).unwrap();
    let theta = library_features(&random_points(rows, dim, 3), &lib).unwrap();
    let xi = DMatrix::from_fn(lib.len(), dim, |q, s| if q == s + 1 { 1.0 } else { 0.0 });
    let y = &theta * xi;
    (theta, y)
}
