use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Regular observation times `t_j = j * T / m` for `j = 1..=m`.
///
/// Times are stored 0-based: `times()[j]` is the `(j + 1)`-th observation
/// time. There is no observation at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct TemporalGrid {
    horizon: f64,
    times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    horizon: f64,
    m: usize,
}

impl TryFrom<GridSpec> for TemporalGrid {
    type Error = crate::Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        TemporalGrid::new(spec.horizon, spec.m)
    }
}

impl From<TemporalGrid> for GridSpec {
    fn from(grid: TemporalGrid) -> Self {
        GridSpec { horizon: grid.horizon, m: grid.len() }
    }
}

impl TemporalGrid {
    pub fn new(horizon: f64, m: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive and finite, got {horizon}")));
        }
        if m == 0 {
            return Err(invalid("grid needs at least one time point"));
        }
        let mf = m as f64;
        let mut times: Vec<f64> = (1..=m).map(|j| j as f64 * horizon / mf).collect();
        times[m - 1] = horizon;
        Ok(TemporalGrid { horizon, times })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of observation times `m`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Spacing `T / m`.
    pub fn step(&self) -> f64 {
        self.horizon / self.len() as f64
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, j: usize) -> f64 {
        self.times[j]
    }
}

/// Convenience wrapper around [`TemporalGrid::new`].
pub fn make_grid(horizon: f64, m: usize) -> Result<TemporalGrid> {
    TemporalGrid::new(horizon, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_points_on_four() {
        let g = make_grid(4.0, 4).unwrap();
        assert_eq!(g.times(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn vanderpol_grid() {
        let g = make_grid(4.0, 300).unwrap();
        assert_eq!(g.len(), 300);
        assert!((g.time(0) - 4.0 / 300.0).abs() < 1e-15);
        assert_eq!(g.time(299), 4.0);
    }

    #[test]
    fn single_point_sits_at_horizon() {
        assert_eq!(make_grid(2.0, 1).unwrap().times(), &[2.0]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(make_grid(0.0, 3).is_err());
        assert!(make_grid(-1.0, 3).is_err());
        assert!(make_grid(f64::NAN, 3).is_err());
        assert!(make_grid(1.0, 0).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let g = make_grid(2.5, 17).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: TemporalGrid = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }

    proptest! {
        #[test]
        fn equally_spaced(horizon in 1e-3f64..1e3, m in 1usize..2000) {
            let g = make_grid(horizon, m).unwrap();
            prop_assert_eq!(g.len(), m);
            prop_assert_eq!(g.time(m - 1), horizon);
            let h = horizon / m as f64;
            for w in g.times().windows(2) {
                prop_assert!(w[1] > w[0]);
                prop_assert!((w[1] - w[0] - h).abs() <= 4.0 * f64::EPSILON * horizon);
            }
        }
    }
}
