use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::library::{library_features, PolynomialLibrary};
use super::stlsq::{check_and_factor, check_threshold, stlsq_with, SparseModel};
use crate::dataset::TrajectoryDataset;
use crate::error::{invalid, Result};
use crate::estimator::estimate_derivatives_for;
use crate::metrics::{normalized_error, DEFAULT_EPSILON_FLOOR};
use crate::simulate::VectorField;

/// Threshold grid used for selection unless configured otherwise.
///
/// Kept verbatim; the out-of-order `0.6` may be a misprint of `0.06`.
pub const DEFAULT_THRESHOLDS: [f64; 8] = [0.02, 0.6, 0.1, 0.14, 0.18, 0.22, 0.26, 0.3];

/// A polynomial dynamics model `f(x) = Xi^T theta(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SindyModel {
    pub library: PolynomialLibrary,
    pub sparse: SparseModel,
}

impl SindyModel {
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut features = vec![0.0; self.library.len()];
        self.library.eval_into(x, &mut features);
        let coef = &self.sparse.coefficients;
        (0..coef.ncols())
            .map(|s| features.iter().enumerate().map(|(q, f)| f * coef[(q, s)]).sum())
            .collect()
    }

    /// Predictions for a flat `len x D` array.
    pub fn predict_batch(&self, points: &[f64]) -> Vec<f64> {
        points.par_chunks(self.library.dim()).flat_map_iter(|x| self.predict(x)).collect()
    }

    /// CSV rows `target, multi_index, coefficient` for every nonzero
    /// coefficient; the multi-index is space-separated exponents.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["target", "multi_index", "coefficient"])?;
        let coef = &self.sparse.coefficients;
        for s in 0..coef.ncols() {
            for (q, alpha) in self.library.terms().iter().enumerate() {
                let c = coef[(q, s)];
                if c != 0.0 {
                    let idx = alpha.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
                    w.write_record([s.to_string(), idx, c.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SindyOptions {
    pub degree: usize,
    pub thresholds: Vec<f64>,
    /// Finite-difference half-width for the derivative targets.
    pub stencil: usize,
    pub max_iters: usize,
}

#[derive(Debug, Clone)]
pub struct SindyFit {
    pub model: SindyModel,
    pub threshold: f64,
    pub error: f64,
    /// Mean normalized error for every threshold, in grid order.
    pub errors: Vec<f64>,
}

/// Regression data for SINDy: observed states at interior times of every
/// trajectory and their weighted-difference derivative estimates.
pub fn derivative_targets(ds: &TrajectoryDataset, stencil: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let field = estimate_derivatives_for(ds, 0..ds.n(), stencil)?;
    let dim = ds.dim();
    let rows = ds.n() * field.interior_len();
    let mut states = Vec::with_capacity(rows * dim);
    for i in 0..ds.n() {
        for offset in 0..field.interior_len() {
            states.extend_from_slice(ds.observation(i, field.first_time() + offset));
        }
    }
    let targets = DMatrix::from_row_slice(rows, dim, field.values());
    Ok((states, targets))
}

/// Fits STLSQ for every threshold in `opts.thresholds` and keeps the one
/// with the lowest mean normalized error at `selection_points`, measured
/// against the true field `oracle`.
///
/// Selection peeks at the ground truth; it is only meaningful in simulation.
pub fn sindy_fit(
    ds: &TrajectoryDataset,
    opts: &SindyOptions,
    oracle: &dyn VectorField,
    selection_points: &[f64],
) -> Result<SindyFit> {
    if opts.thresholds.is_empty() {
        return Err(invalid("threshold grid is empty"));
    }
    let dim = ds.dim();
    if oracle.dim() != dim {
        return Err(invalid(format!("oracle dimension {} does not match data dimension {dim}", oracle.dim())));
    }
    for &l in &opts.thresholds {
        check_threshold(l, opts.max_iters)?;
    }
    let library = PolynomialLibrary::new(dim, opts.degree)?;
    let (states, targets) = derivative_targets(ds, opts.stencil)?;
    let theta = library_features(&states, &library)?;
    let solver = check_and_factor(&theta, &targets, opts.thresholds[0], opts.max_iters)?;
    let truths: Vec<f64> = selection_points.par_chunks(dim).flat_map_iter(|x| oracle.eval_vec(x)).collect();

    let fits: Vec<(SindyModel, f64)> = opts
        .thresholds
        .par_iter()
        .map(|&lambda| {
            let sparse = stlsq_with(&solver, library.len(), dim, lambda, opts.max_iters);
            let model = SindyModel { library: library.clone(), sparse };
            let estimates = model.predict_batch(selection_points);
            let err = normalized_error(&estimates, &truths, dim, DEFAULT_EPSILON_FLOOR)
                .map(|r| r.mean)
                .unwrap_or(f64::INFINITY);
            (model, err)
        })
        .collect();

    let errors: Vec<f64> = fits.iter().map(|(_, e)| *e).collect();
    let best = errors
        .iter()
        .enumerate()
        .fold(0, |best, (i, e)| if e.total_cmp(&errors[best]).is_lt() { i } else { best });
    let (model, error) = fits.into_iter().nth(best).expect("grid is nonempty");
    Ok(SindyFit { model, threshold: opts.thresholds[best], error, errors })
}
