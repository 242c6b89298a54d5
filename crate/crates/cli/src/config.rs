//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vfrecon::baseline::DEFAULT_THRESHOLDS;
use vfrecon::metrics::DEFAULT_EPSILON_FLOOR;
use vfrecon::{
    calibrate, field_by_name, CalibrationParams, InitialSampler, IntegratorConfig, ModelOptions,
    NormMode, SearchStrategy, SplitMode, VectorField,
};

use crate::error::CliError;

/// Placeholder in `system.field` replaced by the dimension on a dimension sweep.
pub const DIM_PLACEHOLDER: &str = "{dim}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub sampler: SamplerConfig,
    pub data: DataConfig,
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub envelope: EnvelopeConfig,
    pub sweep: Option<SweepConfig>,
    pub baseline: Option<BaselineConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Registry name such as `vanderpol` or `vdp-highdim:6`.
    pub field: String,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

fn default_substeps() -> usize {
    IntegratorConfig::default().substeps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SamplerConfig {
    /// Uniform on the segment between two points.
    Segment { start: Vec<f64>, end: Vec<f64> },
    /// Uniform on `{(x, ..., x) : x in [lo, hi]}` in the field's dimension.
    Diagonal { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub n: usize,
    pub m: usize,
    pub horizon: f64,
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CalibrationConfig {
    /// Derived per `(n, m)` from the rate-optimal formulas.
    Auto {
        b: f64,
        #[serde(default)]
        norm: NormMode,
    },
    Explicit { k1: usize, k2: usize, k: usize, r: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default)]
    pub split: SplitMode,
    #[serde(default)]
    pub search: SearchStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    #[serde(default = "default_envelope_count")]
    pub count_x: usize,
    #[serde(default = "default_envelope_count")]
    pub count_t: usize,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_envelope_count() -> usize {
    100
}

fn default_floor() -> f64 {
    DEFAULT_EPSILON_FLOOR
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig { count_x: 100, count_t: 100, floor: DEFAULT_EPSILON_FLOOR }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// `n = m = value`.
    #[serde(rename = "n=m")]
    Diagonal,
    /// `n = fixed`, `m = value`.
    #[serde(rename = "fixed-n")]
    FixedN,
    /// `m = fixed`, `n = value`.
    #[serde(rename = "fixed-m")]
    FixedM,
    /// Ambient dimension; `n` and `m` from `[data]`.
    #[serde(rename = "dimension")]
    Dimension,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Diagonal => "n=m",
            SweepAxis::FixedN => "fixed-n",
            SweepAxis::FixedM => "fixed-m",
            SweepAxis::Dimension => "dimension",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
    /// The held value for `fixed-n` and `fixed-m`.
    pub fixed: Option<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

fn default_repetitions() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub degrees: Vec<usize>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    /// Libraries with more columns are skipped.
    #[serde(default = "default_max_library")]
    pub max_library: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Half-width of the finite-difference derivative targets.
    #[serde(default = "default_stencil")]
    pub stencil: usize,
}

fn default_thresholds() -> Vec<f64> {
    DEFAULT_THRESHOLDS.to_vec()
}

fn default_max_library() -> u64 {
    1000
}

fn default_max_iters() -> usize {
    10
}

fn default_stencil() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Points per side of the plotting grid written for planar systems.
    #[serde(default = "default_field_grid")]
    pub field_grid: usize,
    /// Also write the fitted model as JSON.
    #[serde(default)]
    pub save_model: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_field_grid() -> usize {
    25
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_out_dir(), field_grid: default_field_grid(), save_model: false }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.system.substeps == 0 {
            return Err(config_err("system.substeps must be >= 1"));
        }
        let d = &self.data;
        if d.n < 2 || d.m < 5 {
            return Err(config_err(format!("data needs n >= 2 and m >= 5, got n = {}, m = {}", d.n, d.m)));
        }
        positive("data.horizon", d.horizon)?;
        if !(d.sigma >= 0.0 && d.sigma.is_finite()) {
            return Err(config_err(format!("data.sigma must be nonnegative, got {}", d.sigma)));
        }
        match self.calibration {
            CalibrationConfig::Auto { b, .. } if !(b >= 0.0 && b.is_finite()) => {
                return Err(config_err(format!("calibration.b must be nonnegative, got {b}")));
            }
            CalibrationConfig::Explicit { k1, k2, k, r } if k1 == 0 || k2 == 0 || k == 0 || r == 0 => {
                return Err(config_err("explicit calibration values must be >= 1"));
            }
            _ => {}
        }
        if self.envelope.count_x == 0 || self.envelope.count_t == 0 {
            return Err(config_err("envelope counts must be >= 1"));
        }
        if !(self.envelope.floor >= 0.0) {
            return Err(config_err("envelope.floor must be nonnegative"));
        }
        if let SamplerConfig::Diagonal { lo, hi } = self.sampler {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(config_err("sampler bounds must be finite"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(config_err("sweep.values is empty"));
            }
            if s.repetitions == 0 {
                return Err(config_err("sweep.repetitions must be >= 1"));
            }
            match s.axis {
                SweepAxis::FixedN | SweepAxis::FixedM if s.fixed.is_none() => {
                    return Err(config_err(format!("sweep axis {} needs sweep.fixed", s.axis.label())));
                }
                SweepAxis::Dimension => {
                    if !self.system.field.contains(DIM_PLACEHOLDER) {
                        return Err(config_err(format!(
                            "a dimension sweep needs {DIM_PLACEHOLDER} in system.field"
                        )));
                    }
                    if matches!(self.sampler, SamplerConfig::Segment { .. }) {
                        return Err(config_err("a dimension sweep needs a diagonal sampler"));
                    }
                }
                _ => {}
            }
            if s.axis != SweepAxis::Dimension && s.values.iter().any(|&v| v < 2) {
                return Err(config_err("sweep values must be >= 2"));
            }
        }
        if let Some(b) = &self.baseline {
            if b.degrees.is_empty() || b.thresholds.is_empty() {
                return Err(config_err("baseline degrees and thresholds must be nonempty"));
            }
            if b.max_iters == 0 || b.stencil == 0 {
                return Err(config_err("baseline.max_iters and baseline.stencil must be >= 1"));
            }
            if b.thresholds.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(config_err("baseline thresholds must be nonnegative"));
            }
        }
        if self.output.field_grid < 2 {
            return Err(config_err("output.field_grid must be >= 2"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical form of every setting that affects results.
    /// The output directory is excluded.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output.dir = PathBuf::new();
        let text = toml::to_string(&canon).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig { substeps: self.system.substeps }
    }

    pub fn model_options(&self) -> ModelOptions {
        ModelOptions { split: self.estimator.split, search: self.estimator.search }
    }

    /// The field, with `{dim}` replaced when `dim` is given.
    pub fn field(&self, dim: Option<usize>) -> Result<Box<dyn VectorField>, CliError> {
        let name = match dim {
            Some(d) => self.system.field.replace(DIM_PLACEHOLDER, &d.to_string()),
            None => self.system.field.clone(),
        };
        field_by_name(&name).map_err(|e| config_err(format!("system.field: {e}")))
    }

    pub fn sampler(&self, dim: usize) -> Result<InitialSampler, CliError> {
        let s = match &self.sampler {
            SamplerConfig::Segment { start, end } => InitialSampler::segment(start.clone(), end.clone()),
            SamplerConfig::Diagonal { lo, hi } => InitialSampler::diagonal(dim, *lo, *hi),
        }
        .map_err(|e| config_err(format!("sampler: {e}")))?;
        if s.dim() != dim {
            return Err(config_err(format!("sampler dimension {} does not match field dimension {dim}", s.dim())));
        }
        Ok(s)
    }

    /// Estimator parameters for `n` trajectories and `m` times.
    pub fn params(&self, n: usize, m: usize) -> Result<CalibrationParams, CliError> {
        match self.calibration {
            CalibrationConfig::Auto { b, norm } => {
                calibrate(n, m, b, norm).map_err(|e| config_err(format!("calibration: {e}")))
            }
            CalibrationConfig::Explicit { k1, k2, k, r } => Ok(CalibrationParams::explicit(k1, k2, k, r)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[system]
field = "vanderpol"

[sampler]
kind = "segment"
start = [-1.0, -1.0]
end = [1.0, 1.0]

[data]
n = 300
m = 300
horizon = 4.0
sigma = 0.05
seed = 1

[calibration]
mode = "explicit"
k1 = 10
k2 = 7
k = 10
r = 10
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.system.substeps, 20);
        assert_eq!(cfg.envelope, EnvelopeConfig::default());
        assert_eq!(cfg.estimator.split, SplitMode::Split);
        assert!(cfg.sweep.is_none());
        assert_eq!(cfg.params(300, 300).unwrap(), CalibrationParams::explicit(10, 7, 10, 10));
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let mut b = a.clone();
        b.output.dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.data.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("n = 300", "n = 1"),
            ("sigma = 0.05", "sigma = -1.0"),
            ("k1 = 10", "k1 = 0"),
            ("horizon = 4.0", "horizon = 0.0"),
            ("seed = 1", "seed = 1\nbogus = 3"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(matches!(ExperimentConfig::from_toml(&text), Err(CliError::Config(_))), "{to}");
        }
    }

    #[test]
    fn sweep_sections() {
        let text = format!("{MINIMAL}\n[sweep]\naxis = \"fixed-n\"\nvalues = [10, 20]\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = format!("{MINIMAL}\n[sweep]\naxis = \"fixed-n\"\nvalues = [10, 20]\nfixed = 30\nrepetitions = 3\n");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.sweep.unwrap().axis, SweepAxis::FixedN);
        let text = format!("{MINIMAL}\n[sweep]\naxis = \"dimension\"\nvalues = [2, 6]\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn dimension_placeholder() {
        let text = MINIMAL
            .replace("field = \"vanderpol\"", "field = \"vdp-highdim:{dim}\"")
            .replace("kind = \"segment\"\nstart = [-1.0, -1.0]\nend = [1.0, 1.0]", "kind = \"diagonal\"\nlo = 1.0\nhi = 2.0");
        let text = format!("{text}\n[sweep]\naxis = \"dimension\"\nvalues = [2, 6]\n");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.field(Some(6)).unwrap().dim(), 6);
        assert_eq!(cfg.sampler(6).unwrap().dim(), 6);
    }
}
