use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibrate::CalibrationParams;
use super::derivative::{estimate_derivatives_for, DerivativeField};
use super::flow::FlowEstimator;
use crate::dataset::{DataSplit, TrajectoryDataset};
use crate::error::{invalid, Result};
use crate::neighbors::{KnnIndex, SearchStrategy};

/// Whether flow estimation and derivative estimation use disjoint halves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Step 1 on the first half, Steps 2 and 3 on the second half.
    #[default]
    Split,
    /// Every step uses all trajectories.
    NoSplit,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub split: SplitMode,
    pub search: SearchStrategy,
}

/// A fitted estimator: denoised positions along the query trajectories at
/// every interior time, and the derivative estimate at each of them.
#[derive(Debug, Clone)]
pub struct VectorFieldModel {
    dataset: TrajectoryDataset,
    params: CalibrationParams,
    options: ModelOptions,
    reference: Range<usize>,
    search: Range<usize>,
    cache: KnnIndex,
    derivatives: DerivativeField,
}

/// One trajectory picked for a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    /// Dataset trajectory index.
    pub trajectory: usize,
    /// Grid time index (0-based) minimizing the distance along that trajectory.
    pub time: usize,
    pub distance: f64,
}

fn ranges(n: usize, split: SplitMode) -> Result<(Range<usize>, Range<usize>)> {
    Ok(match split {
        SplitMode::Split => {
            let s = DataSplit::for_len(n)?;
            (s.first, s.second)
        }
        SplitMode::NoSplit => {
            if n == 0 {
                return Err(crate::Error::InsufficientData("no trajectories".into()));
            }
            (0..n, 0..n)
        }
    })
}

/// Builds the split estimator with automatic search structure selection.
pub fn build_model(ds: &TrajectoryDataset, params: &CalibrationParams) -> Result<VectorFieldModel> {
    VectorFieldModel::build(ds, params, ModelOptions::default())
}

/// Builds the variant where every step uses the full dataset.
pub fn build_model_no_split(ds: &TrajectoryDataset, params: &CalibrationParams) -> Result<VectorFieldModel> {
    VectorFieldModel::build(ds, params, ModelOptions { split: SplitMode::NoSplit, ..Default::default() })
}

impl VectorFieldModel {
    pub fn build(ds: &TrajectoryDataset, params: &CalibrationParams, options: ModelOptions) -> Result<Self> {
        let (reference, search) = ranges(ds.n(), options.split)?;
        let m = ds.m();
        params.validate(reference.len(), search.len(), m)?;

        let flow = FlowEstimator::new(ds, reference.clone(), params.k1, params.k2, options.search)?;
        let first = params.k;
        let interior = params.interior_len(m);
        let time_nbrs = (first..first + interior)
            .map(|j| flow.temporal_neighbors(ds.grid().time(j)))
            .collect::<Result<Vec<_>>>()?;

        let dim = ds.dim();
        let mut cache = vec![0.0; search.len() * interior * dim];
        cache
            .par_chunks_mut(interior * dim)
            .zip(search.clone().into_par_iter())
            .try_for_each(|(out, i)| -> Result<()> {
                let space = flow.spatial_neighbors(ds.initial_point(i))?;
                for (pos, time) in out.chunks_exact_mut(dim).zip(&time_nbrs) {
                    flow.average(&space, time, pos);
                }
                Ok(())
            })?;

        let derivatives = estimate_derivatives_for(ds, search.clone(), params.k)?;
        let cache = KnnIndex::with_strategy(cache, dim, options.search)?;
        Ok(VectorFieldModel {
            dataset: ds.clone(),
            params: *params,
            options,
            reference,
            search,
            cache,
            derivatives,
        })
    }

    pub(crate) fn from_parts(
        dataset: TrajectoryDataset,
        params: CalibrationParams,
        options: ModelOptions,
        cache: Vec<f64>,
        derivatives: Vec<f64>,
    ) -> Result<Self> {
        let (reference, search) = ranges(dataset.n(), options.split)?;
        let m = dataset.m();
        params.validate(reference.len(), search.len(), m)?;
        let dim = dataset.dim();
        let interior = params.interior_len(m);
        if cache.len() != search.len() * interior * dim {
            return Err(invalid("cached positions do not match the model shape"));
        }
        let derivatives = DerivativeField::from_parts(params.k, dim, search.clone(), interior, derivatives)?;
        let cache = KnnIndex::with_strategy(cache, dim, options.search)?;
        Ok(VectorFieldModel { dataset, params, options, reference, search, cache, derivatives })
    }

    pub fn dataset(&self) -> &TrajectoryDataset {
        &self.dataset
    }

    pub fn params(&self) -> &CalibrationParams {
        &self.params
    }

    pub fn options(&self) -> ModelOptions {
        self.options
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    /// Trajectories feeding flow estimation.
    pub fn reference_trajectories(&self) -> Range<usize> {
        self.reference.clone()
    }

    /// Trajectories carrying derivative estimates and searched by queries.
    pub fn search_trajectories(&self) -> Range<usize> {
        self.search.clone()
    }

    pub fn derivatives(&self) -> &DerivativeField {
        &self.derivatives
    }

    /// `(trajectories, interior times)` shape of the position cache.
    pub fn cache_shape(&self) -> (usize, usize) {
        (self.search.len(), self.derivatives.interior_len())
    }

    /// Cached flow estimate for dataset trajectory `i` at grid index `j`.
    pub fn cached_position(&self, i: usize, j: usize) -> Option<&[f64]> {
        let first = self.derivatives.first_time();
        let len = self.derivatives.interior_len();
        if !self.search.contains(&i) || j < first || j >= first + len {
            return None;
        }
        Some(self.cache.point((i - self.search.start) * len + j - first))
    }

    pub(crate) fn cache_values(&self) -> Vec<f64> {
        (0..self.cache.len()).flat_map(|p| self.cache.point(p).to_vec()).collect()
    }

    /// The `r` trajectories closest to `x`, in selection order.
    ///
    /// Each trajectory is ranked by its closest cached position; ties go to
    /// the lower trajectory index, then the earlier time.
    pub fn select(&self, x: &[f64]) -> Result<Vec<Selection>> {
        if x.len() != self.dim() {
            return Err(invalid(format!("query has dimension {}, model has {}", x.len(), self.dim())));
        }
        let len = self.derivatives.interior_len();
        Ok(self
            .cache
            .nearest_groups(x, len, self.params.r)
            .into_iter()
            .map(|c| Selection {
                trajectory: self.search.start + c.index / len,
                time: self.derivatives.first_time() + c.index % len,
                distance: c.d2.sqrt(),
            })
            .collect())
    }

    /// `f_hat(x)`: the mean derivative estimate over the selected trajectories.
    pub fn query(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.query_with_distance(x)?.0)
    }

    /// The estimate together with the distance from `x` to the nearest
    /// cached position; large distances flag extrapolation off the envelope.
    pub fn query_with_distance(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let picks = self.select(x)?;
        let mut out = vec![0.0; self.dim()];
        for p in &picks {
            let d = self.derivatives.at(p.trajectory, p.time).expect("selection lies in the interior");
            for (o, v) in out.iter_mut().zip(d) {
                *o += v;
            }
        }
        let count = picks.len() as f64;
        out.iter_mut().for_each(|o| *o /= count);
        Ok((out, picks[0].distance))
    }

    /// Answers a batch of queries given as a flat `len x D` array; returns a
    /// flat array of estimates in the same layout.
    pub fn query_batch(&self, points: &[f64]) -> Result<Vec<f64>> {
        let dim = self.dim();
        if points.len() % dim != 0 {
            return Err(invalid(format!("{} coordinates do not form points of dimension {dim}", points.len())));
        }
        let rows = points.par_chunks(dim).map(|x| self.query(x)).collect::<Result<Vec<_>>>()?;
        Ok(rows.concat())
    }
}

/// `f_hat(x)` for a built model.
pub fn query(model: &VectorFieldModel, x: &[f64]) -> Result<Vec<f64>> {
    model.query(x)
}
