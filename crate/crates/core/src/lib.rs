//! Nonparametric reconstruction of the vector field of an autonomous ODE
//! `y' = f(y)` from noisy, discretely sampled trajectories.
//!
//! The estimator denoises positions with a spatio-temporal nearest-neighbor
//! average, differentiates along trajectories with variance-optimal weighted
//! finite differences, and answers `f_hat(x)` by averaging the derivative
//! estimates of the trajectories passing closest to `x`. A SINDy baseline,
//! benchmark systems and experiment metrics are included for comparison.
//!
//! ```
//! use vfrecon::{
//!     build_model, generate_dataset, make_grid, CalibrationParams, InitialSampler,
//!     IntegratorConfig, VanDerPol,
//! };
//!
//! let grid = make_grid(4.0, 60).unwrap();
//! let sampler = InitialSampler::diagonal(2, -1.0, 1.0).unwrap();
//! let ds = generate_dataset(&VanDerPol, &sampler, 40, &grid, 0.05, &IntegratorConfig::default(), 7).unwrap();
//! let model = build_model(&ds, &CalibrationParams::explicit(3, 3, 3, 3)).unwrap();
//! let f_hat = model.query(&[0.5, 0.5]).unwrap();
//! assert_eq!(f_hat.len(), 2);
//! ```

pub mod baseline;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod metrics;
pub mod neighbors;
pub mod rng;
pub mod simulate;

pub use dataset::{split_dataset, DataSplit, TrajectoryDataset};
pub use error::{Error, Result};
pub use estimator::{
    build_model, build_model_no_split, calibrate, CalibrationParams, ModelOptions, NormMode,
    SplitMode, VectorFieldModel,
};
pub use grid::{make_grid, TemporalGrid};
pub use metrics::{normalized_error, EnvelopePoint, ErrorReport};
pub use neighbors::{NeighborResult, SearchStrategy};
pub use simulate::{
    field_by_name, generate_dataset, InitialSampler, IntegratorConfig, VanDerPol, VectorField,
};
