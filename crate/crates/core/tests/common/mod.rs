#![allow(dead_code)]

use vfrecon::metrics::{locations, sample_envelope, truths};
use vfrecon::simulate::ConstantField;
use vfrecon::{
    generate_dataset, make_grid, InitialSampler, IntegratorConfig, TrajectoryDataset, VectorField,
};

pub fn dataset(f: &dyn VectorField, n: usize, m: usize, horizon: f64, sigma: f64, seed: u64) -> TrajectoryDataset {
    let sampler = InitialSampler::diagonal(f.dim(), -1.0, 1.0).unwrap();
    let grid = make_grid(horizon, m).unwrap();
    generate_dataset(f, &sampler, n, &grid, sigma, &IntegratorConfig::default(), seed).unwrap()
}

pub fn constant(dim: usize) -> ConstantField {
    ConstantField::new((0..dim).map(|c| 0.5 + c as f64).collect()).unwrap()
}

/// Envelope locations and true field values, flat.
pub fn envelope(f: &dyn VectorField, sampler: &InitialSampler, horizon: f64, count: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let pts = sample_envelope(f, sampler, horizon, count, count, &IntegratorConfig::default(), seed).unwrap();
    (locations(&pts), truths(&pts))
}
