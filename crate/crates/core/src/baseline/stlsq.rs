use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

/// Relative ridge added to the normal equations when an active submatrix is
/// rank deficient.
const RIDGE: f64 = 1e-10;

/// Output of sequential thresholded least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseModel {
    /// `library size x targets`.
    pub coefficients: DMatrix<f64>,
    pub threshold: f64,
    /// Largest number of least-squares rounds over the targets.
    pub iterations: usize,
    /// Per target: every column was thresholded away.
    pub eliminated: Vec<bool>,
    /// Per target: active-set size after each least-squares round.
    pub active_history: Vec<Vec<usize>>,
}

/// Least squares on column subsets of a fixed design matrix.
///
/// `Theta = Q R` is factored once. For any column subset `S`,
/// `min |Theta_S c - y|` has the same minimizer as `min |R_S c - Q^T y|`,
/// so every refit only touches the small triangular factor.
pub(crate) struct SubsetSolver {
    r: DMatrix<f64>,
    qty: DMatrix<f64>,
}

impl SubsetSolver {
    pub(crate) fn new(theta: &DMatrix<f64>, targets: &DMatrix<f64>) -> Self {
        let qr = theta.clone().qr();
        let qty = qr.q().transpose() * targets;
        SubsetSolver { r: qr.r(), qty }
    }

    pub(crate) fn solve(&self, columns: &[usize], target: usize) -> DVector<f64> {
        let a = self.r.select_columns(columns);
        let b = self.qty.column(target).into_owned();
        if a.nrows() >= a.ncols() {
            let qr = a.clone().qr();
            let r = qr.r();
            let diag = r.diagonal().map(f64::abs);
            let max = diag.max();
            if max > 0.0 && diag.min() > 1e-12 * max {
                let rhs = qr.q().transpose() * &b;
                if let Some(c) = r.solve_upper_triangular(&rhs) {
                    return c;
                }
            }
        }
        ridge_solve(&a, &b)
    }
}

fn ridge_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut gram = a.transpose() * a;
    let scale = gram.diagonal().max().max(1.0);
    for i in 0..gram.nrows() {
        gram[(i, i)] += RIDGE * scale;
    }
    let rhs = a.transpose() * b;
    match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(a.ncols())),
    }
}

/// Sequential thresholded least squares.
///
/// For each target column independently: fit on the active columns, drop
/// every coefficient with magnitude below `lambda`, refit, until the active
/// set stops changing or `max_iters` fits have been made.
pub fn stlsq(theta: &DMatrix<f64>, targets: &DMatrix<f64>, lambda: f64, max_iters: usize) -> Result<SparseModel> {
    let solver = check_and_factor(theta, targets, lambda, max_iters)?;
    Ok(stlsq_with(&solver, theta.ncols(), targets.ncols(), lambda, max_iters))
}

pub(crate) fn check_and_factor(
    theta: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    lambda: f64,
    max_iters: usize,
) -> Result<SubsetSolver> {
    if theta.nrows() != targets.nrows() {
        return Err(invalid(format!(
            "feature matrix has {} rows, targets have {}",
            theta.nrows(),
            targets.nrows()
        )));
    }
    if theta.nrows() == 0 || theta.ncols() == 0 {
        return Err(invalid("empty feature matrix"));
    }
    check_threshold(lambda, max_iters)?;
    Ok(SubsetSolver::new(theta, targets))
}

pub(crate) fn check_threshold(lambda: f64, max_iters: usize) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("threshold must be nonnegative, got {lambda}")));
    }
    if max_iters == 0 {
        return Err(invalid("max_iters must be >= 1"));
    }
    Ok(())
}

pub(crate) fn stlsq_with(
    solver: &SubsetSolver,
    library_len: usize,
    targets: usize,
    lambda: f64,
    max_iters: usize,
) -> SparseModel {
    let mut coefficients = DMatrix::zeros(library_len, targets);
    let mut eliminated = vec![false; targets];
    let mut active_history = Vec::with_capacity(targets);
    let mut iterations = 0;

    for s in 0..targets {
        let mut active: Vec<usize> = (0..library_len).collect();
        let mut coef = solver.solve(&active, s);
        let mut history = vec![active.len()];
        let mut rounds = 1;
        loop {
            let keep: Vec<usize> = active
                .iter()
                .zip(coef.iter())
                .filter(|(_, c)| c.abs() >= lambda)
                .map(|(&col, _)| col)
                .collect();
            if keep.len() == active.len() {
                break;
            }
            let kept: Vec<f64> = active
                .iter()
                .zip(coef.iter())
                .filter(|(_, c)| c.abs() >= lambda)
                .map(|(_, &c)| c)
                .collect();
            active = keep;
            coef = DVector::from_vec(kept);
            if active.is_empty() {
                eliminated[s] = true;
                history.push(0);
                break;
            }
            if rounds >= max_iters {
                history.push(active.len());
                break;
            }
            coef = solver.solve(&active, s);
            rounds += 1;
            history.push(active.len());
        }
        for (&col, &c) in active.iter().zip(coef.iter()) {
            coefficients[(col, s)] = c;
        }
        iterations = iterations.max(rounds);
        active_history.push(history);
    }
    SparseModel { coefficients, threshold: lambda, iterations, eliminated, active_history }
}
