use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Monomials `x^alpha` with `|alpha| <= degree`, constant first, then by
/// total degree, and within one degree in descending lexicographic order of
/// the exponent vector: `1, x1, x2, x1^2, x1 x2, x2^2, ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolynomialLibrary {
    dim: usize,
    degree: usize,
    terms: Vec<Vec<u32>>,
}

fn push_terms(dim: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == dim {
        prefix.push(remaining);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for e in (0..=remaining).rev() {
        prefix.push(e);
        push_terms(dim, remaining - e, prefix, out);
        prefix.pop();
    }
}

/// `binomial(dim + degree, degree)` without overflow for moderate inputs.
pub fn library_size(dim: usize, degree: usize) -> u128 {
    (1..=degree as u128).fold(1u128, |acc, i| acc * (dim as u128 + i) / i)
}

impl PolynomialLibrary {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("polynomial library needs a positive dimension"));
        }
        let mut terms = Vec::with_capacity(library_size(dim, degree) as usize);
        let mut prefix = Vec::with_capacity(dim);
        for d in 0..=degree as u32 {
            push_terms(dim, d, &mut prefix, &mut terms);
        }
        Ok(PolynomialLibrary { dim, degree, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Vec<u32>] {
        &self.terms
    }

    /// Evaluates every monomial at `x` into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        // powers[c * (degree + 1) + e] = x_c^e
        let stride = self.degree + 1;
        let mut powers = vec![1.0; self.dim * stride];
        for (c, &v) in x.iter().enumerate() {
            for e in 1..stride {
                powers[c * stride + e] = powers[c * stride + e - 1] * v;
            }
        }
        for (o, alpha) in out.iter_mut().zip(&self.terms) {
            *o = alpha
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(c, &e)| powers[c * stride + e as usize])
                .product();
        }
    }
}

/// Feature matrix: one row per point of the flat `len x D` array `points`,
/// one column per library term.
pub fn library_features(points: &[f64], lib: &PolynomialLibrary) -> Result<DMatrix<f64>> {
    let dim = lib.dim();
    if points.len() % dim != 0 {
        return Err(invalid(format!("{} coordinates do not form points of dimension {dim}", points.len())));
    }
    let rows = points.len() / dim;
    let mut theta = DMatrix::zeros(rows, lib.len());
    let mut row = vec![0.0; lib.len()];
    for (i, x) in points.chunks_exact(dim).enumerate() {
        lib.eval_into(x, &mut row);
        for (c, v) in row.iter().enumerate() {
            theta[(i, c)] = *v;
        }
    }
    Ok(theta)
}
