//! The three-step vector field estimator.
//!
//! 1. Flow estimation: a spatio-temporal nearest-neighbor average over the
//!    first half of the trajectories denoises positions.
//! 2. Derivative estimation: variance-optimal weighted symmetric differences
//!    along each second-half trajectory.
//! 3. Reconstruction: `f_hat(x)` averages the derivative estimates of the `r`
//!    second-half trajectories passing closest to `x`.

mod calibrate;
mod derivative;
mod flow;
mod io;
mod model;

pub use calibrate::{calibrate, calibrate_raw, CalibrationParams, NormMode, RawCalibration};
pub use derivative::{estimate_derivatives, estimate_derivatives_for, step2_weights, DerivativeField};
pub use flow::estimate_flow;
pub use io::MODEL_FORMAT;
pub use model::{
    build_model, build_model_no_split, query, ModelOptions, Selection, SplitMode, VectorFieldModel,
};
