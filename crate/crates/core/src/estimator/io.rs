use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::calibrate::CalibrationParams;
use super::model::{ModelOptions, VectorFieldModel};
use crate::dataset::DatasetRecord;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "vfrecon-model";

/// The dataset container plus the fitted arrays.
#[derive(Serialize, Deserialize)]
struct ModelRecord {
    #[serde(flatten)]
    dataset: DatasetRecord,
    calibration: CalibrationParams,
    options: ModelOptions,
    interior_start: usize,
    interior_len: usize,
    weights: Vec<f64>,
    /// Flow estimates, `[trajectory][interior time][component]`.
    cache: Vec<f64>,
    /// Derivative estimates, same layout as `cache`.
    derivatives: Vec<f64>,
}

impl VectorFieldModel {
    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        let mut dataset = DatasetRecord::from(self.dataset());
        dataset.format = MODEL_FORMAT.into();
        let record = ModelRecord {
            dataset,
            calibration: *self.params(),
            options: self.options(),
            interior_start: self.derivatives().first_time(),
            interior_len: self.derivatives().interior_len(),
            weights: self.derivatives().weights().to_vec(),
            cache: self.cache_values(),
            derivatives: self.derivatives().values().to_vec(),
        };
        serde_json::to_writer(writer, &record)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let mut record: ModelRecord = serde_json::from_reader(reader)?;
        if record.dataset.format != MODEL_FORMAT {
            return Err(Error::Format(format!("unexpected format tag {:?}", record.dataset.format)));
        }
        record.dataset.format = crate::dataset::DATASET_FORMAT.into();
        let dataset = record.dataset.into_dataset()?;
        let model = VectorFieldModel::from_parts(
            dataset,
            record.calibration,
            record.options,
            record.cache,
            record.derivatives,
        )?;
        if model.derivatives().first_time() != record.interior_start
            || model.derivatives().interior_len() != record.interior_len
        {
            return Err(Error::Format("interior range disagrees with the calibration".into()));
        }
        if model.derivatives().weights() != record.weights.as_slice() {
            return Err(Error::Format("stored weights disagree with the stencil half-width".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_json(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_json(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
