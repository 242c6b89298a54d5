use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataSplit, TrajectoryDataset};
use crate::error::{invalid, Result};

/// Convex weights `w_l = 6 l^2 / (k (k+1) (2k+1))`, `l = 1..=k`.
///
/// They minimize the variance of the combined symmetric difference quotient
/// subject to summing to one.
pub fn step2_weights(k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(invalid("stencil half-width k must be >= 1"));
    }
    let k64 = k as u64;
    let denom = (k64 * (k64 + 1) * (2 * k64 + 1)) as f64;
    Ok((1..=k64).map(|l| (6 * l * l) as f64 / denom).collect())
}

/// Weighted finite-difference derivative estimates along a set of
/// trajectories, at interior time indices `k..=m-k-2` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeField {
    k: usize,
    dim: usize,
    weights: Vec<f64>,
    trajectories: Range<usize>,
    interior_len: usize,
    values: Vec<f64>,
}

impl DerivativeField {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Dataset indices of the trajectories covered.
    pub fn trajectories(&self) -> Range<usize> {
        self.trajectories.clone()
    }

    /// First interior time index (0-based); equal to `k`.
    pub fn first_time(&self) -> usize {
        self.k
    }

    pub fn interior_len(&self) -> usize {
        self.interior_len
    }

    /// Estimate for the `slot`-th covered trajectory at interior offset `offset`.
    pub fn at_slot(&self, slot: usize, offset: usize) -> &[f64] {
        let start = (slot * self.interior_len + offset) * self.dim;
        &self.values[start..start + self.dim]
    }

    /// Estimate at dataset trajectory `i` and grid time index `j` (0-based),
    /// or `None` outside the covered range.
    pub fn at(&self, i: usize, j: usize) -> Option<&[f64]> {
        let first = self.first_time();
        if !self.trajectories.contains(&i) || j < first || j >= first + self.interior_len {
            return None;
        }
        Some(self.at_slot(i - self.trajectories.start, j - first))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn from_parts(
        k: usize,
        dim: usize,
        trajectories: Range<usize>,
        interior_len: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != trajectories.len() * interior_len * dim {
            return Err(invalid("derivative array does not match its declared shape"));
        }
        Ok(DerivativeField { k, dim, weights: step2_weights(k)?, trajectories, interior_len, values })
    }
}

/// Step-2 estimates on the second half of `split`.
pub fn estimate_derivatives(ds: &TrajectoryDataset, split: &DataSplit, k: usize) -> Result<DerivativeField> {
    estimate_derivatives_for(ds, split.second.clone(), k)
}

/// Step-2 estimates on the trajectories `trajectories` of `ds`.
pub fn estimate_derivatives_for(
    ds: &TrajectoryDataset,
    trajectories: Range<usize>,
    k: usize,
) -> Result<DerivativeField> {
    let m = ds.m();
    if k == 0 || 2 * k + 2 >= m {
        return Err(invalid(format!("stencil half-width k = {k} needs 1 <= k and 2k + 2 < m = {m}")));
    }
    if trajectories.end > ds.n() {
        return Err(invalid(format!("trajectory range {trajectories:?} exceeds n = {}", ds.n())));
    }
    let weights = step2_weights(k)?;
    let dim = ds.dim();
    let interior_len = m - 2 * k - 1;
    let horizon = ds.grid().horizon();
    let mf = m as f64;
    // w_l / (t_{j+l} - t_{j-l}) with the spacing taken as exactly 2 l T / m.
    let coeffs: Vec<f64> = weights
        .iter()
        .enumerate()
        .map(|(l, w)| w / (2.0 * (l + 1) as f64 * horizon / mf))
        .collect();

    let mut values = vec![0.0; trajectories.len() * interior_len * dim];
    values
        .par_chunks_mut(interior_len * dim)
        .zip(trajectories.clone().into_par_iter())
        .for_each(|(out, i)| {
            let traj = ds.trajectory(i);
            for (offset, est) in out.chunks_exact_mut(dim).enumerate() {
                let j = k + offset;
                for (l, c) in coeffs.iter().enumerate() {
                    let lag = l + 1;
                    let ahead = &traj[(j + lag) * dim..(j + lag + 1) * dim];
                    let behind = &traj[(j - lag) * dim..(j - lag + 1) * dim];
                    for ((e, a), b) in est.iter_mut().zip(ahead).zip(behind) {
                        *e += c * (a - b);
                    }
                }
            }
        });
    Ok(DerivativeField { k, dim, weights, trajectories, interior_len, values })
}
