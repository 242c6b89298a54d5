//! Envelope sampling, error metrics, regime classification and rate fits.

mod envelope;

pub use envelope::{
    envelope_at, locations, sample_envelope, truths, write_envelope_csv, EnvelopePoint,
    ENVELOPE_INTERVALS,
};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Points whose true field has sup-norm below this are left out of the mean.
pub const DEFAULT_EPSILON_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub n: usize,
    pub m: usize,
    pub dim: usize,
    pub sigma: f64,
    pub seed: u64,
    pub estimator: String,
}

/// Per-point normalized sup-norm errors and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `None` for points excluded by the equilibrium guard.
    pub per_point: Vec<Option<f64>>,
    pub mean: f64,
    pub excluded: usize,
    pub meta: ReportMeta,
}

impl ErrorReport {
    pub fn with_meta(mut self, meta: ReportMeta) -> Self {
        self.meta = meta;
        self
    }

    /// One row per point (`x_*, f_*, fhat_*, normalized_error`) followed by a
    /// `summary` row carrying the mean and the exclusion count.
    pub fn write_csv<W: Write>(&self, locations: &[f64], truths: &[f64], estimates: &[f64], writer: W) -> Result<()> {
        let len = self.per_point.len();
        if len == 0 || locations.len() != truths.len() || truths.len() != estimates.len() || truths.len() % len != 0 {
            return Err(invalid("report arrays have inconsistent lengths"));
        }
        let dim = truths.len() / len;
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["point".to_string()];
        for prefix in ["x", "f", "fhat"] {
            header.extend((0..dim).map(|c| format!("{prefix}_{c}")));
        }
        header.push("normalized_error".into());
        w.write_record(&header)?;
        for (i, err) in self.per_point.iter().enumerate() {
            let span = i * dim..(i + 1) * dim;
            let mut row = vec![i.to_string()];
            for arr in [locations, truths, estimates] {
                row.extend(arr[span.clone()].iter().map(f64::to_string));
            }
            row.push(err.map_or_else(|| "excluded".to_string(), |e| e.to_string()));
            w.write_record(&row)?;
        }
        let mut summary = vec!["summary".to_string()];
        summary.extend(std::iter::repeat(String::new()).take(3 * dim - 1));
        summary.push(format!("excluded={}", self.excluded));
        summary.push(self.mean.to_string());
        w.write_record(&summary)?;
        w.flush()?;
        Ok(())
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Mean over points of `|f_hat - f|_inf / |f|_inf`, skipping points where
/// `|f|_inf < epsilon_floor`. Inputs are flat `len x dim` arrays.
pub fn normalized_error(estimates: &[f64], truths: &[f64], dim: usize, epsilon_floor: f64) -> Result<ErrorReport> {
    if dim == 0 || estimates.len() != truths.len() || truths.len() % dim != 0 {
        return Err(invalid(format!(
            "estimates ({}) and truths ({}) must be equal-length multiples of D = {dim}",
            estimates.len(),
            truths.len()
        )));
    }
    let mut per_point = Vec::with_capacity(truths.len() / dim);
    let (mut sum, mut count, mut excluded) = (0.0, 0usize, 0usize);
    for (est, truth) in estimates.chunks_exact(dim).zip(truths.chunks_exact(dim)) {
        let scale = sup_norm(truth);
        if scale < epsilon_floor {
            excluded += 1;
            per_point.push(None);
            continue;
        }
        let diff = est.iter().zip(truth).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        let e = diff / scale;
        sum += e;
        count += 1;
        per_point.push(Some(e));
    }
    if count == 0 {
        return Err(Error::EmptyReport { excluded });
    }
    Ok(ErrorReport { per_point, mean: sum / count as f64, excluded, meta: ReportMeta::default() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `1/m` dominates: temporal resolution limits accuracy.
    TrajectoryRich,
    /// `(ln n / n)^(1/b)` dominates: too few initial conditions.
    TimeRich,
    /// `(nm)^(-1/(5+b))` dominates: both axes help.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeLabel {
    pub regime: Regime,
    pub balanced_rate: f64,
    /// Absent when `b = 0`.
    pub time_rich_rate: Option<f64>,
    pub trajectory_rich_rate: f64,
}

/// Which term of the upper bound `max((nm)^(-1/(5+b)), (ln n/n)^(1/b), 1/m)`
/// is largest. Any tie is reported as balanced.
pub fn classify_regime(n: usize, m: usize, b: f64) -> Result<RegimeLabel> {
    if n < 2 || m < 2 {
        return Err(invalid(format!("regime needs n, m >= 2, got n = {n}, m = {m}")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(invalid(format!("b must be finite and nonnegative, got {b}")));
    }
    let (nf, mf) = (n as f64, m as f64);
    let balanced_rate = (1.0 / (nf * mf)).powf(1.0 / (5.0 + b));
    let time_rich_rate = (b > 0.0).then(|| (nf.ln() / nf).powf(1.0 / b));
    let trajectory_rich_rate = 1.0 / mf;
    let time = time_rich_rate.unwrap_or(f64::NEG_INFINITY);
    let top = balanced_rate.max(time).max(trajectory_rich_rate);
    let hits = [balanced_rate, time, trajectory_rich_rate].iter().filter(|&&v| v == top).count();
    let regime = if hits > 1 || balanced_rate == top {
        Regime::Balanced
    } else if time == top {
        Regime::TimeRich
    } else {
        Regime::TrajectoryRich
    };
    Ok(RegimeLabel { regime, balanced_rate, time_rich_rate, trajectory_rich_rate })
}

/// Ordinary least-squares slope of `ln(error)` against `ln(scale)`.
pub fn fit_loglog_slope(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(invalid(format!("slope fit needs at least 3 pairs, got {}", pairs.len())));
    }
    if let Some(p) = pairs.iter().find(|(s, e)| !(*s > 0.0 && *e > 0.0 && s.is_finite() && e.is_finite())) {
        return Err(invalid(format!("slope fit needs positive finite values, got {p:?}")));
    }
    let logs: Vec<(f64, f64)> = pairs.iter().map(|(s, e)| (s.ln(), e.ln())).collect();
    let len = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / len;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope fit needs at least two distinct scales"));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_estimates() {
        let t = [1.0, 2.0, -3.0, 0.5];
        assert_eq!(normalized_error(&t, &t, 2, DEFAULT_EPSILON_FLOOR).unwrap().mean, 0.0);
    }

    #[test]
    fn doubled_estimate() {
        let truth = [3.0, -1.0];
        let est = [6.0, -2.0];
        let rep = normalized_error(&est, &truth, 2, DEFAULT_EPSILON_FLOOR).unwrap();
        assert_eq!(rep.mean, 1.0);
    }

    #[test]
    fn equilibria_are_excluded() {
        let truth = [0.0, 0.0, 1.0, 1.0];
        let est = [5.0, 5.0, 1.5, 1.0];
        let rep = normalized_error(&est, &truth, 2, DEFAULT_EPSILON_FLOOR).unwrap();
        assert_eq!(rep.excluded, 1);
        assert_eq!(rep.per_point, vec![None, Some(0.5)]);
        assert_eq!(rep.mean, 0.5);
        assert!(matches!(
            normalized_error(&[1.0], &[0.0], 1, DEFAULT_EPSILON_FLOOR),
            Err(Error::EmptyReport { excluded: 1 })
        ));
    }

    #[test]
    fn regimes() {
        assert_eq!(classify_regime(1_000_000, 10, 1.0).unwrap().regime, Regime::TrajectoryRich);
        assert_eq!(classify_regime(10, 1_000_000, 1.0).unwrap().regime, Regime::TimeRich);
        assert_eq!(classify_regime(1000, 1000, 1.0).unwrap().regime, Regime::Balanced);
        let zero_b = classify_regime(10, 1_000_000, 0.0).unwrap();
        assert_eq!(zero_b.time_rich_rate, None);
        assert_ne!(zero_b.regime, Regime::TimeRich);
        assert!(classify_regime(1, 10, 1.0).is_err());
    }

    #[test]
    fn regime_is_argmax_of_the_three_rates() {
        for n in [2usize, 5, 30, 200, 10_000, 1_000_000] {
            for m in [2usize, 10, 30, 200, 10_000, 1_000_000] {
                for b in [0.5, 1.0, 2.0, 4.0] {
                    let l = classify_regime(n, m, b).unwrap();
                    let (nf, mf) = (n as f64, m as f64);
                    let rates = [
                        ((nf * mf).powf(-1.0 / (5.0 + b)), Regime::Balanced),
                        ((nf.ln() / nf).powf(1.0 / b), Regime::TimeRich),
                        (1.0 / mf, Regime::TrajectoryRich),
                    ];
                    let best = rates.iter().fold(rates[0], |a, r| if r.0 > a.0 { *r } else { a });
                    assert_eq!(l.regime, best.1, "n={n} m={m} b={b}");
                }
            }
        }
    }

    #[test]
    fn slope_of_power_laws() {
        let pairs: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 1e4].iter().map(|&s: &f64| (s, s.powf(-1.0 / 6.0))).collect();
        assert!((fit_loglog_slope(&pairs).unwrap() + 1.0 / 6.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = [1.0, 2.0, 3.0].iter().map(|&s| (s, 0.7)).collect();
        assert!(fit_loglog_slope(&flat).unwrap().abs() < 1e-15);
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_planted_exponent(slope in -2.0f64..0.0, c in 0.01f64..100.0) {
            let pairs: Vec<(f64, f64)> = (1..8).map(|i| {
                let s = 10f64.powi(i);
                (s, c * s.powf(slope))
            }).collect();
            prop_assert!((fit_loglog_slope(&pairs).unwrap() - slope).abs() < 1e-10);
        }

        #[test]
        fn scale_invariance(c in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0],
                            vals in proptest::collection::vec(-5.0f64..5.0, 12)) {
            let (est, truth) = vals.split_at(6);
            let truth: Vec<f64> = truth.iter().map(|v| v + 10.0).collect();
            let a = normalized_error(est, &truth, 3, DEFAULT_EPSILON_FLOOR).unwrap();
            let est_c: Vec<f64> = est.iter().map(|v| v * c).collect();
            let truth_c: Vec<f64> = truth.iter().map(|v| v * c).collect();
            let b = normalized_error(&est_c, &truth_c, 3, DEFAULT_EPSILON_FLOOR).unwrap();
            for (x, y) in a.per_point.iter().zip(&b.per_point) {
                prop_assert!((x.unwrap() - y.unwrap()).abs() <= 1e-12 * x.unwrap().max(1.0));
            }
        }
    }
}
