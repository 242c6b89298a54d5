//! Sparse polynomial regression baseline (SINDy with sequential thresholded
//! least squares).

mod library;
mod sindy;
mod stlsq;

pub use library::{library_features, library_size, PolynomialLibrary};
pub use sindy::{derivative_targets, sindy_fit, SindyFit, SindyModel, SindyOptions, DEFAULT_THRESHOLDS};
pub use stlsq::{stlsq, SparseModel};
