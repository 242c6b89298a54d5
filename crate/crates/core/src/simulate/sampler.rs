use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{self, tag};

/// Distribution of initial conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialSampler {
    /// Uniform on the segment `[start, end]`: `start + u (end - start)` with
    /// `u ~ U[0, 1]` shared by every coordinate.
    Segment { start: Vec<f64>, end: Vec<f64> },
}

impl InitialSampler {
    pub fn segment(start: Vec<f64>, end: Vec<f64>) -> Result<Self> {
        if start.is_empty() || start.len() != end.len() {
            return Err(invalid(format!(
                "segment endpoints must share a positive dimension ({} vs {})",
                start.len(),
                end.len()
            )));
        }
        Ok(InitialSampler::Segment { start, end })
    }

    /// The diagonal segment `{(x, ..., x) | x in [lo, hi]}` in `R^dim`.
    pub fn diagonal(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::segment(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialSampler::Segment { start, .. } => start.len(),
        }
    }

    /// Draw number `index` of the stream keyed by `seed`.
    pub fn draw(&self, seed: u64, index: usize) -> Vec<f64> {
        match self {
            InitialSampler::Segment { start, end } => {
                let u: f64 = rng::stream(seed, &[tag::INITIALS, index as u64]).random();
                start.iter().zip(end).map(|(a, b)| a + u * (b - a)).collect()
            }
        }
    }

    /// `n` i.i.d. draws, flat `n x D`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        (0..n).flat_map(|i| self.draw(seed, i)).collect()
    }
}

/// Convenience wrapper returning one vector per draw.
pub fn sample_initials(sampler: &InitialSampler, n: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n).map(|i| sampler.draw(seed, i)).collect()
}
