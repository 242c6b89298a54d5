use std::ops::Range;

use crate::dataset::{DataSplit, TrajectoryDataset};
use crate::error::{invalid, Result};
use crate::neighbors::{knn_times, KnnIndex, SearchStrategy};

/// Spatio-temporal nearest-neighbor average of the observations of a
/// reference set of trajectories.
pub(crate) struct FlowEstimator<'a> {
    ds: &'a TrajectoryDataset,
    reference: Range<usize>,
    index: KnnIndex,
    k1: usize,
    k2: usize,
}

impl<'a> FlowEstimator<'a> {
    pub(crate) fn new(
        ds: &'a TrajectoryDataset,
        reference: Range<usize>,
        k1: usize,
        k2: usize,
        strategy: SearchStrategy,
    ) -> Result<Self> {
        if k1 == 0 || k1 > reference.len() {
            return Err(invalid(format!("k1 = {k1} must lie in 1..={}", reference.len())));
        }
        if k2 == 0 || k2 > ds.m() {
            return Err(invalid(format!("k2 = {k2} must lie in 1..={}", ds.m())));
        }
        let dim = ds.dim();
        let points = ds.initial_points()[reference.start * dim..reference.end * dim].to_vec();
        let index = KnnIndex::with_strategy(points, dim, strategy)?;
        Ok(FlowEstimator { ds, reference, index, k1, k2 })
    }

    /// Dataset indices of the `k1` reference initial points nearest `z`.
    pub(crate) fn spatial_neighbors(&self, z: &[f64]) -> Result<Vec<usize>> {
        let res = self.index.knn(z, self.k1)?;
        Ok(res.indices.into_iter().map(|i| i + self.reference.start).collect())
    }

    pub(crate) fn temporal_neighbors(&self, t: f64) -> Result<Vec<usize>> {
        Ok(knn_times(t, self.ds.grid(), self.k2)?.indices)
    }

    /// Mean of `Y[p][q]` over the given neighbor sets, written into `out`.
    pub(crate) fn average(&self, space: &[usize], time: &[usize], out: &mut [f64]) {
        out.fill(0.0);
        for &p in space {
            for &q in time {
                for (o, y) in out.iter_mut().zip(self.ds.observation(p, q)) {
                    *o += y;
                }
            }
        }
        let count = (space.len() * time.len()) as f64;
        out.iter_mut().for_each(|o| *o /= count);
    }

    pub(crate) fn estimate(&self, z: &[f64], t: f64) -> Result<Vec<f64>> {
        let space = self.spatial_neighbors(z)?;
        let time = self.temporal_neighbors(t)?;
        let mut out = vec![0.0; self.ds.dim()];
        self.average(&space, &time, &mut out);
        Ok(out)
    }
}

/// Step-1 flow estimate `phi_hat(z, t)`: the average of the observations of
/// the `k1` first-half trajectories whose initial points are nearest `z`, at
/// the `k2` grid times nearest `t`.
pub fn estimate_flow(
    z: &[f64],
    t: f64,
    ds: &TrajectoryDataset,
    split: &DataSplit,
    k1: usize,
    k2: usize,
) -> Result<Vec<f64>> {
    FlowEstimator::new(ds, split.first.clone(), k1, k2, SearchStrategy::BruteForce)?.estimate(z, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TemporalGrid;
    use crate::simulate::{generate_dataset, ConstantField, InitialSampler, IntegratorConfig};

    fn constant_ds(sigma: f64) -> TrajectoryDataset {
        let f = ConstantField::new(vec![0.5, -1.0]).unwrap();
        let sampler = InitialSampler::segment(vec![0.0, 1.0], vec![2.0, 3.0]).unwrap();
        let grid = TemporalGrid::new(2.0, 20).unwrap();
        generate_dataset(&f, &sampler, 12, &grid, sigma, &IntegratorConfig::default(), 5).unwrap()
    }

    #[test]
    fn singleton_average_is_the_observation() {
        let ds = constant_ds(0.1);
        let split = DataSplit::for_len(ds.n()).unwrap();
        for j in [0, 7, 19] {
            let est = estimate_flow(ds.initial_point(0), ds.grid().time(j), &ds, &split, 1, 1).unwrap();
            assert_eq!(est, ds.observation(0, j));
        }
    }

    #[test]
    fn constant_field_closed_form() {
        let ds = constant_ds(0.0);
        let split = DataSplit::for_len(ds.n()).unwrap();
        let z = [1.1, 2.05];
        let t = 0.83;
        let (k1, k2) = (3, 4);
        let est = estimate_flow(&z, t, &ds, &split, k1, k2).unwrap();

        let fe = FlowEstimator::new(&ds, split.first.clone(), k1, k2, SearchStrategy::BruteForce).unwrap();
        let space = fe.spatial_neighbors(&z).unwrap();
        let time = fe.temporal_neighbors(t).unwrap();
        let mean_t = time.iter().map(|&q| ds.grid().time(q)).sum::<f64>() / k2 as f64;
        for (c, vel) in [0.5, -1.0].iter().enumerate() {
            let mean_x = space.iter().map(|&p| ds.initial_point(p)[c]).sum::<f64>() / k1 as f64;
            assert!((est[c] - (mean_x + vel * mean_t)).abs() < 1e-12);
        }
    }

    #[test]
    fn full_window_is_grand_mean() {
        let ds = constant_ds(0.2);
        let split = DataSplit::for_len(ds.n()).unwrap();
        let est = estimate_flow(&[0.0, 0.0], 0.4, &ds, &split, 6, 20).unwrap();
        for c in 0..2 {
            let mut sum = 0.0;
            for i in 0..6 {
                for j in 0..20 {
                    sum += ds.observation(i, j)[c];
                }
            }
            assert!((est[c] - sum / 120.0).abs() < 1e-12);
        }
    }

    #[test]
    fn neighborhood_bounds() {
        let ds = constant_ds(0.0);
        let split = DataSplit::for_len(ds.n()).unwrap();
        assert!(estimate_flow(&[0.0, 0.0], 0.4, &ds, &split, 7, 1).is_err());
        assert!(estimate_flow(&[0.0, 0.0], 0.4, &ds, &split, 1, 21).is_err());
        assert!(estimate_flow(&[0.0], 0.4, &ds, &split, 1, 1).is_err());
    }
}
