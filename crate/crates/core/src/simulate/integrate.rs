use serde::{Deserialize, Serialize};

use super::fields::VectorField;
use crate::error::{invalid, Error, Result};
use crate::grid::TemporalGrid;

/// Fixed-step classical RK4 settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// RK4 steps taken inside each grid interval of length `T / m`.
    pub substeps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { substeps: 20 }
    }
}

impl IntegratorConfig {
    pub fn new(substeps: usize) -> Result<Self> {
        let cfg = IntegratorConfig { substeps };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(invalid("integrator needs at least one substep"));
        }
        Ok(())
    }
}

/// Scratch buffers for RK4 stages.
pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub(crate) fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub(crate) fn step(&mut self, f: &dyn VectorField, y: &mut [f64], h: f64) {
        let half = 0.5 * h;
        f.eval(y, &mut self.k1);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *t = y + half * k;
        }
        f.eval(&self.tmp, &mut self.k2);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *t = y + half * k;
        }
        f.eval(&self.tmp, &mut self.k3);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *t = y + h * k;
        }
        f.eval(&self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for (i, y) in y.iter_mut().enumerate() {
            *y += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }

    /// Advances `y` from `t0` by `steps` equal steps of size `h`.
    pub(crate) fn advance(
        &mut self,
        f: &dyn VectorField,
        y: &mut [f64],
        t0: f64,
        h: f64,
        steps: usize,
    ) -> Result<()> {
        for s in 0..steps {
            self.step(f, y, h);
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::IntegrationDiverged { time: t0 + (s + 1) as f64 * h });
            }
        }
        Ok(())
    }
}

fn check_dims(f: &dyn VectorField, x0: &[f64]) -> Result<()> {
    if x0.len() != f.dim() {
        return Err(invalid(format!(
            "initial point has dimension {}, field expects {}",
            x0.len(),
            f.dim()
        )));
    }
    Ok(())
}

/// `phi(x0, t_j)` for every grid time, flat `m x D`.
///
/// Each grid interval is crossed with `cfg.substeps` RK4 steps, so the
/// whole horizon takes `substeps * m` steps.
pub fn integrate_flow(
    f: &dyn VectorField,
    x0: &[f64],
    grid: &TemporalGrid,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_dims(f, x0)?;
    let dim = f.dim();
    let h = grid.step() / cfg.substeps as f64;
    let mut rk = Rk4::new(dim);
    let mut y = x0.to_vec();
    let mut out = Vec::with_capacity(grid.len() * dim);
    for j in 0..grid.len() {
        let t0 = j as f64 * grid.step();
        rk.advance(f, &mut y, t0, h, cfg.substeps)?;
        out.extend_from_slice(&y);
    }
    Ok(out)
}

/// `phi(x0, t)` for each `t` in `times` (any order, all `>= 0`), using steps
/// no longer than `max_step`. Output is flat `len(times) x D` in input order.
pub fn integrate_to_times(
    f: &dyn VectorField,
    x0: &[f64],
    times: &[f64],
    max_step: f64,
) -> Result<Vec<f64>> {
    check_dims(f, x0)?;
    if !(max_step > 0.0) {
        return Err(invalid(format!("max_step must be positive, got {max_step}")));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(invalid(format!("integration times must be finite and nonnegative, got {t}")));
    }
    let dim = f.dim();
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
    let mut rk = Rk4::new(dim);
    let mut y = x0.to_vec();
    let mut now = 0.0;
    let mut out = vec![0.0; times.len() * dim];
    for idx in order {
        let target = times[idx];
        let gap = target - now;
        if gap > 0.0 {
            let steps = (gap / max_step).ceil().max(1.0) as usize;
            rk.advance(f, &mut y, now, gap / steps as f64, steps)?;
            now = target;
        }
        out[idx * dim..(idx + 1) * dim].copy_from_slice(&y);
    }
    Ok(out)
}
