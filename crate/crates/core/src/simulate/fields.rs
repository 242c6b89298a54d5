use std::fmt;

use crate::error::{invalid, Result};

/// An autonomous vector field `x -> f(x)` on `R^D`.
///
/// Implementations must be deterministic: the same input always produces
/// bitwise-identical output.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `f(x)` into `out`. Both slices have length [`dim`](Self::dim).
    fn eval(&self, x: &[f64], out: &mut [f64]);

    /// Registry name, e.g. `"vanderpol"`.
    fn name(&self) -> String;

    /// Global Lipschitz constant, when one is known.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }

    /// Global bound on `|f|`, when one is known.
    fn sup_bound(&self) -> Option<f64> {
        None
    }

    fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval(x, &mut out);
        out
    }
}

impl fmt::Debug for dyn VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({}, D = {})", self.name(), self.dim())
    }
}

/// `x1' = x2`, `x2' = (1 - x1^2) x2 / 2 - x1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct VanDerPol;

impl VectorField for VanDerPol {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[1];
        out[1] = 0.5 * (1.0 - x[0] * x[0]) * x[1] - x[0];
    }

    fn name(&self) -> String {
        "vanderpol".into()
    }
}

/// `x1' = x1/2 - x1 x2`, `x2' = x1 x2 - x2/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LotkaVolterra;

impl VectorField for LotkaVolterra {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let prod = x[0] * x[1];
        out[0] = 0.5 * x[0] - prod;
        out[1] = prod - 0.5 * x[1];
    }

    fn name(&self) -> String {
        "lotka-volterra".into()
    }
}

/// Independent Van der Pol oscillators on consecutive coordinate pairs
/// `(x_{2p-1}, x_{2p})`.
#[derive(Debug, Clone, Copy)]
pub struct HighDimVanDerPol {
    dim: usize,
}

impl HighDimVanDerPol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(invalid(format!("paired Van der Pol needs an even positive dimension, got {dim}")));
        }
        Ok(HighDimVanDerPol { dim })
    }
}

impl VectorField for HighDimVanDerPol {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (xp, fp) in x.chunks_exact(2).zip(out.chunks_exact_mut(2)) {
            fp[0] = xp[1];
            fp[1] = 0.5 * (1.0 - xp[0] * xp[0]) * xp[1] - xp[0];
        }
    }

    fn name(&self) -> String {
        format!("vdp-highdim:{}", self.dim)
    }
}

/// `f(x) = c`.
#[derive(Debug, Clone)]
pub struct ConstantField {
    value: Vec<f64>,
}

impl ConstantField {
    pub fn new(value: Vec<f64>) -> Result<Self> {
        if value.is_empty() {
            return Err(invalid("constant field needs at least one component"));
        }
        Ok(ConstantField { value })
    }

    pub fn value(&self) -> &[f64] {
        &self.value
    }
}

impl VectorField for ConstantField {
    fn dim(&self) -> usize {
        self.value.len()
    }

    fn eval(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.value);
    }

    fn name(&self) -> String {
        format!("constant:{}", join(&self.value))
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn sup_bound(&self) -> Option<f64> {
        Some(self.value.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

/// `f(x) = A x` with `A` stored row-major.
#[derive(Debug, Clone)]
pub struct LinearField {
    dim: usize,
    matrix: Vec<f64>,
}

impl LinearField {
    pub fn new(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if dim == 0 || matrix.len() != dim * dim {
            return Err(invalid(format!(
                "linear field needs a {dim}x{dim} matrix, got {} entries",
                matrix.len()
            )));
        }
        Ok(LinearField { dim, matrix })
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (row, o) in self.matrix.chunks_exact(self.dim).zip(out.iter_mut()) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn name(&self) -> String {
        format!("linear:{}", join(&self.matrix))
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        // Frobenius norm bounds the operator norm.
        Some(self.matrix.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| invalid(format!("bad number {s:?} in field spec: {e}")))
        })
        .collect()
}

/// Looks up a benchmark field by registry name.
///
/// Recognized names: `vanderpol`, `lotka-volterra`, `vdp-highdim:D`,
/// `constant:c1,...,cD`, and `linear:a11,a12,...` (a square matrix,
/// row-major).
pub fn field_by_name(name: &str) -> Result<Box<dyn VectorField>> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h.trim(), Some(a)),
        None => (name.trim(), None),
    };
    match (head, arg) {
        ("vanderpol", None) => Ok(Box::new(VanDerPol)),
        ("lotka-volterra", None) => Ok(Box::new(LotkaVolterra)),
        ("vdp-highdim", Some(d)) => {
            let dim = d
                .trim()
                .parse::<usize>()
                .map_err(|e| invalid(format!("bad dimension {d:?}: {e}")))?;
            Ok(Box::new(HighDimVanDerPol::new(dim)?))
        }
        ("constant", Some(c)) => Ok(Box::new(ConstantField::new(parse_list(c)?)?)),
        ("linear", Some(a)) => {
            let matrix = parse_list(a)?;
            let dim = (matrix.len() as f64).sqrt().round() as usize;
            Ok(Box::new(LinearField::new(dim, matrix)?))
        }
        _ => Err(invalid(format!("unknown vector field {name:?}"))),
    }
}
