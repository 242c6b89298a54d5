use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Which risk the calibration targets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    /// Pointwise expected error.
    #[default]
    Pointwise,
    /// Expected sup-norm error over the envelope (extra log factors in `k`, `r`).
    SupNorm,
}

/// Neighborhood sizes of the three estimation steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    /// Spatial neighbors in flow estimation.
    pub k1: usize,
    /// Temporal neighbors in flow estimation.
    pub k2: usize,
    /// Finite-difference half-width.
    pub k: usize,
    /// Trajectories averaged per query.
    pub r: usize,
    /// Standardness exponent the values were derived from; `None` when set by hand.
    pub b: Option<f64>,
    pub mode: NormMode,
}

impl CalibrationParams {
    pub fn explicit(k1: usize, k2: usize, k: usize, r: usize) -> Self {
        CalibrationParams { k1, k2, k, r, b: None, mode: NormMode::Pointwise }
    }

    /// Checks the parameters against `reference` Step-1 trajectories,
    /// `search` Step-2/3 trajectories and `m` observation times.
    pub fn validate(&self, reference: usize, search: usize, m: usize) -> Result<()> {
        let CalibrationParams { k1, k2, k, r, .. } = *self;
        if k1 == 0 || k2 == 0 || k == 0 || r == 0 {
            return Err(invalid(format!("calibration parameters must be >= 1, got {self:?}")));
        }
        if k1 > reference {
            return Err(invalid(format!("k1 = {k1} exceeds the {reference} flow-estimation trajectories")));
        }
        if k2 > m {
            return Err(invalid(format!("k2 = {k2} exceeds m = {m}")));
        }
        if r > search {
            return Err(invalid(format!("r = {r} exceeds the {search} query trajectories")));
        }
        if 2 * k + 2 >= m {
            return Err(invalid(format!("stencil half-width k = {k} needs 2k + 2 < m = {m}")));
        }
        Ok(())
    }

    /// Number of interior time indices `m - 2k - 1`.
    pub fn interior_len(&self, m: usize) -> usize {
        m - 2 * self.k - 1
    }
}

/// Unrounded values of the four calibration formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawCalibration {
    pub k1: f64,
    pub k2: f64,
    pub k: f64,
    pub r: f64,
}

fn check_inputs(n: usize, m: usize, b: f64) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("calibration needs n >= 2, got {n}")));
    }
    // Smallest grid with room for a unit stencil: 2 * 1 + 2 < m.
    if m < 5 {
        return Err(invalid(format!("calibration needs m >= 5, got {m}")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(invalid(format!("b must be finite and nonnegative, got {b}")));
    }
    Ok(())
}

/// The calibration formulas with unit proportionality constants, before
/// rounding and clamping. Logarithms are natural.
pub fn calibrate_raw(n: usize, m: usize, b: f64, mode: NormMode) -> Result<RawCalibration> {
    check_inputs(n, m, b)?;
    let (nf, mf) = (n as f64, m as f64);
    let ln_n = nf.ln();
    let ln_nm = (nf * mf).ln();

    let k1 = ((nf / ln_n).powf(3.0 / (b + 3.0)) / (mf / ln_nm).powf(b / (b + 3.0))).max(1.0);
    let k2 = (mf.powf((b + 2.0) / (b + 3.0)) / (nf / (ln_n * ln_nm)).powf(1.0 / (b + 3.0))).max(1.0);
    let (k, r) = match mode {
        NormMode::Pointwise => (
            mf.powf((4.0 + b) / (5.0 + b)) / nf.powf(1.0 / (5.0 + b)),
            nf.powf(5.0 / (5.0 + b)) / mf.powf(b / (5.0 + b)),
        ),
        NormMode::SupNorm => (
            mf.powf((b + 4.0) / (b + 5.0)) * (ln_nm * ln_n / nf).powf(1.0 / (b + 5.0)),
            (nf / ln_n).powf(5.0 / (b + 5.0)) * (ln_nm / mf).powf(b / (b + 5.0)),
        ),
    };
    Ok(RawCalibration { k1, k2, k: k.max(1.0), r: r.max(1.0) })
}

fn round_clamp(name: &str, v: f64, hi: usize) -> usize {
    let rounded = v.round() as usize;
    let out = rounded.clamp(1, hi.max(1));
    if out != rounded {
        log::warn!("calibration: {name} = {rounded} clamped to {out}");
    }
    out
}

/// Rounds each formula to the nearest integer and clamps it to the range
/// allowed by `n` trajectories split in half and `m` times.
pub fn calibrate(n: usize, m: usize, b: f64, mode: NormMode) -> Result<CalibrationParams> {
    let raw = calibrate_raw(n, m, b, mode)?;
    Ok(CalibrationParams {
        k1: round_clamp("k1", raw.k1, n / 2),
        k2: round_clamp("k2", raw.k2, m),
        k: round_clamp("k", raw.k, (m - 3) / 2),
        r: round_clamp("r", raw.r, n - n / 2),
        b: Some(b),
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent evaluation in log space.
    fn oracle(n: f64, m: f64, b: f64) -> [usize; 4] {
        let l = |x: f64| x.ln();
        let k1 = (3.0 / (b + 3.0) * (l(n) - l(l(n))) - b / (b + 3.0) * (l(m) - l(l(n * m)))).exp();
        let k2 = ((b + 2.0) / (b + 3.0) * l(m) - (l(n) - l(l(n)) - l(l(n * m))) / (b + 3.0)).exp();
        let r = (5.0 / (5.0 + b) * l(n) - b / (5.0 + b) * l(m)).exp();
        let k = ((4.0 + b) / (5.0 + b) * l(m) - l(n) / (5.0 + b)).exp();
        let clamp = |v: f64, hi: f64| v.max(1.0).round().clamp(1.0, hi) as usize;
        [
            clamp(k1, (n / 2.0).floor()),
            clamp(k2, m),
            clamp(k, ((m - 3.0) / 2.0).floor()),
            clamp(r, n - (n / 2.0).floor()),
        ]
    }

    #[test]
    fn minimal_sizes_clamp_to_valid() {
        let p = calibrate(2, 5, 1.0, NormMode::Pointwise).unwrap();
        assert_eq!((p.k1, p.k, p.r), (1, 1, 1));
        p.validate(1, 1, 5).unwrap();
        // No unit stencil fits on three times.
        assert!(calibrate(2, 3, 1.0, NormMode::Pointwise).is_err());
    }

    #[test]
    fn trajectory_rich_stencil_is_one() {
        let raw = calibrate_raw(1_000_000, 10, 1.0, NormMode::Pointwise).unwrap();
        assert_eq!(raw.k, 1.0);
        assert_eq!(calibrate(1_000_000, 10, 1.0, NormMode::Pointwise).unwrap().k, 1);
    }

    #[test]
    fn matches_log_space_oracle() {
        let p = calibrate(200, 200, 1.0, NormMode::Pointwise).unwrap();
        assert_eq!([p.k1, p.k2, p.k, p.r], oracle(200.0, 200.0, 1.0));
        assert_eq!([p.k1, p.k2, p.k, p.r], [7, 39, 34, 34]);
        for &(n, m) in &[(10, 10), (25, 25), (50, 100), (30, 200), (200, 30), (300, 300)] {
            for &b in &[0.5, 1.0, 2.0] {
                let p = calibrate(n, m, b, NormMode::Pointwise).unwrap();
                assert_eq!([p.k1, p.k2, p.k, p.r], oracle(n as f64, m as f64, b), "n={n} m={m} b={b}");
                p.validate(n / 2, n - n / 2, m).unwrap();
            }
        }
    }

    #[test]
    fn supnorm_formulas() {
        let (n, m, b) = (500.0f64, 400.0f64, 1.0);
        let raw = calibrate_raw(500, 400, b, NormMode::SupNorm).unwrap();
        let k = m.powf(5.0 / 6.0) * ((n * m).ln() * n.ln() / n).powf(1.0 / 6.0);
        let r = (n / n.ln()).powf(5.0 / 6.0) * ((n * m).ln() / m).powf(1.0 / 6.0);
        assert!((raw.k - k).abs() < 1e-9 * k);
        assert!((raw.r - r).abs() < 1e-9 * r);
        let point = calibrate_raw(500, 400, b, NormMode::Pointwise).unwrap();
        assert_eq!(raw.k1, point.k1);
        assert_eq!(raw.k2, point.k2);
    }

    #[test]
    fn zero_b_is_allowed() {
        let p = calibrate(100, 100, 0.0, NormMode::Pointwise).unwrap();
        p.validate(50, 50, 100).unwrap();
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(calibrate(1, 100, 1.0, NormMode::Pointwise).is_err());
        assert!(calibrate(100, 100, -1.0, NormMode::Pointwise).is_err());
        assert!(calibrate(100, 100, f64::NAN, NormMode::Pointwise).is_err());
    }

    #[test]
    fn validation() {
        let p = CalibrationParams::explicit(10, 7, 10, 10);
        p.validate(150, 150, 300).unwrap();
        assert!(p.validate(9, 150, 300).is_err());
        assert!(p.validate(150, 9, 300).is_err());
        assert!(p.validate(150, 150, 22).is_err());
        assert!(CalibrationParams::explicit(1, 301, 1, 1).validate(150, 150, 300).is_err());
        assert!(CalibrationParams::explicit(0, 1, 1, 1).validate(150, 150, 300).is_err());
        assert_eq!(p.interior_len(300), 279);
    }
}
