//! Benchmark systems, reference integration, and synthetic observation noise.

mod fields;
mod integrate;
mod sampler;

pub use fields::{
    field_by_name, ConstantField, HighDimVanDerPol, LinearField, LotkaVolterra, VanDerPol,
    VectorField,
};
pub use integrate::{integrate_flow, integrate_to_times, IntegratorConfig};
pub use sampler::{sample_initials, InitialSampler};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::TrajectoryDataset;
use crate::error::{invalid, Result};
use crate::grid::TemporalGrid;
use crate::rng::{self, tag};

/// Adds `sigma * g` to every coordinate of the flat `n x m x D` array
/// `trajectories`, with `g ~ N(0, 1)` keyed by `(seed, i, j, component)`.
pub fn add_noise(
    trajectories: &[f64],
    n: usize,
    m: usize,
    dim: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("sigma must be nonnegative, got {sigma}")));
    }
    if trajectories.len() != n * m * dim {
        return Err(invalid(format!(
            "trajectory array has {} values, expected {}",
            trajectories.len(),
            n * m * dim
        )));
    }
    if sigma == 0.0 {
        return Ok(trajectories.to_vec());
    }
    let mut out = trajectories.to_vec();
    out.par_chunks_mut(m * dim).enumerate().for_each(|(i, traj)| {
        for (j, obs) in traj.chunks_mut(dim).enumerate() {
            let mut r = rng::stream(seed, &[tag::NOISE, i as u64, j as u64]);
            for v in obs {
                let g: f64 = r.sample(StandardNormal);
                *v += sigma * g;
            }
        }
    });
    Ok(out)
}

/// Samples `n` initial points, integrates each on `grid`, and adds noise.
pub fn generate_dataset(
    f: &dyn VectorField,
    sampler: &InitialSampler,
    n: usize,
    grid: &TemporalGrid,
    sigma: f64,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<TrajectoryDataset> {
    let dim = f.dim();
    if sampler.dim() != dim {
        return Err(invalid(format!(
            "sampler dimension {} does not match field dimension {dim}",
            sampler.dim()
        )));
    }
    cfg.validate()?;
    let initials = sampler.sample(n, seed);
    let flows = initials
        .par_chunks(dim)
        .map(|x0| integrate_flow(f, x0, grid, cfg))
        .collect::<Result<Vec<_>>>()?
        .concat();
    let observations = add_noise(&flows, n, grid.len(), dim, sigma, seed)?;
    TrajectoryDataset::new(dim, grid.clone(), initials, observations, sigma, seed)
}
