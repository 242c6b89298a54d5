//! Trajectory containers, the positional data split, and the on-disk formats.

use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::TemporalGrid;

pub const DATASET_FORMAT: &str = "vfrecon-dataset";
pub const FORMAT_VERSION: u32 = 1;

/// Noisy observations `Y[i][j] = phi(X_i, t_j) + sigma * eps_ij` of `n`
/// trajectories on a shared temporal grid.
///
/// Storage is flat and row-major: initial points are `n x D`, observations
/// are `n x m x D` in `[i][j][component]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    dim: usize,
    grid: TemporalGrid,
    initial_points: Vec<f64>,
    observations: Vec<f64>,
    sigma: f64,
    seed: u64,
}

impl TrajectoryDataset {
    pub fn new(
        dim: usize,
        grid: TemporalGrid,
        initial_points: Vec<f64>,
        observations: Vec<f64>,
        sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("ambient dimension must be positive"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("sigma must be nonnegative, got {sigma}")));
        }
        if initial_points.len() % dim != 0 {
            return Err(invalid(format!(
                "{} initial coordinates is not a multiple of D = {dim}",
                initial_points.len()
            )));
        }
        let n = initial_points.len() / dim;
        let expected = n * grid.len() * dim;
        if observations.len() != expected {
            return Err(invalid(format!(
                "expected {expected} observation values for n = {n}, m = {}, D = {dim}, got {}",
                grid.len(),
                observations.len()
            )));
        }
        Ok(TrajectoryDataset { dim, grid, initial_points, observations, sigma, seed })
    }

    /// Ambient dimension `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of trajectories `n`.
    pub fn n(&self) -> usize {
        self.initial_points.len() / self.dim
    }

    /// Number of observation times `m`.
    pub fn m(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &TemporalGrid {
        &self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn initial_point(&self, i: usize) -> &[f64] {
        &self.initial_points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn initial_points(&self) -> &[f64] {
        &self.initial_points
    }

    /// All `m` observations of trajectory `i`, flat `m x D`.
    pub fn trajectory(&self, i: usize) -> &[f64] {
        let len = self.m() * self.dim;
        &self.observations[i * len..(i + 1) * len]
    }

    pub fn observation(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.m() + j) * self.dim;
        &self.observations[start..start + self.dim]
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    /// Writes the self-describing JSON container.
    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, &DatasetRecord::from(self))?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let record: DatasetRecord = serde_json::from_reader(reader)?;
        record.into_dataset()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_json(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_json(file)
    }

    /// CSV export with columns `traj_id, time_index, time, comp_0..comp_{D-1}`.
    ///
    /// Trajectory and time indices are 1-based in the export.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["traj_id".to_string(), "time_index".into(), "time".into()];
        header.extend((0..self.dim).map(|c| format!("comp_{c}")));
        w.write_record(&header)?;
        for i in 0..self.n() {
            for (j, &t) in self.grid.times().iter().enumerate() {
                let mut row = vec![(i + 1).to_string(), (j + 1).to_string(), t.to_string()];
                row.extend(self.observation(i, j).iter().map(f64::to_string));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Serialized form of a [`TrajectoryDataset`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct DatasetRecord {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub n: usize,
    pub m: usize,
    pub horizon: f64,
    pub sigma: f64,
    pub seed: u64,
    pub initial_points: Vec<f64>,
    pub observations: Vec<f64>,
}

impl From<&TrajectoryDataset> for DatasetRecord {
    fn from(ds: &TrajectoryDataset) -> Self {
        DatasetRecord {
            format: DATASET_FORMAT.into(),
            version: FORMAT_VERSION,
            dim: ds.dim,
            n: ds.n(),
            m: ds.m(),
            horizon: ds.grid.horizon(),
            sigma: ds.sigma,
            seed: ds.seed,
            initial_points: ds.initial_points.clone(),
            observations: ds.observations.clone(),
        }
    }
}

impl DatasetRecord {
    pub fn into_dataset(self) -> Result<TrajectoryDataset> {
        if self.format != DATASET_FORMAT {
            return Err(Error::Format(format!("unexpected format tag {:?}", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        if self.initial_points.len() != self.n * self.dim {
            return Err(Error::Format(format!(
                "header says n = {}, D = {} but {} initial coordinates are present",
                self.n,
                self.dim,
                self.initial_points.len()
            )));
        }
        let grid = TemporalGrid::new(self.horizon, self.m)?;
        TrajectoryDataset::new(
            self.dim,
            grid,
            self.initial_points,
            self.observations,
            self.sigma,
            self.seed,
        )
    }
}

/// Disjoint positional halves of the trajectory indices (0-based).
///
/// `first` holds `0..n/2` and feeds flow estimation; `second` holds the
/// rest and feeds derivative estimation and querying.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub first: Range<usize>,
    pub second: Range<usize>,
}

impl DataSplit {
    pub fn for_len(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "splitting needs at least 2 trajectories, got {n}"
            )));
        }
        Ok(DataSplit { first: 0..n / 2, second: n / 2..n })
    }
}

pub fn split_dataset(ds: &TrajectoryDataset) -> Result<DataSplit> {
    DataSplit::for_len(ds.n())
}
