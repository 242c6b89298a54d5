use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::rng::{self, tag};
use crate::simulate::{integrate_to_times, InitialSampler, IntegratorConfig, VectorField};

/// Envelope integration splits `[0, T]` into this many intervals, each
/// crossed with `substeps` RK4 steps.
pub const ENVELOPE_INTERVALS: usize = 100;

/// A point `x = phi(x_source, t)` of the solution envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint {
    pub location: Vec<f64>,
    pub source_initial: Vec<f64>,
    pub source_time: f64,
    pub true_field: Vec<f64>,
}

/// Envelope points for every pair of an initial point (flat `len x D`) and a
/// time, ordered initial-major.
pub fn envelope_at(
    f: &dyn VectorField,
    initials: &[f64],
    times: &[f64],
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<EnvelopePoint>> {
    cfg.validate()?;
    if !(horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let dim = f.dim();
    if initials.len() % dim != 0 {
        return Err(invalid("initial points do not match the field dimension"));
    }
    let max_step = horizon / (ENVELOPE_INTERVALS * cfg.substeps) as f64;
    let per_initial = initials
        .par_chunks(dim)
        .map(|x0| {
            let flows = integrate_to_times(f, x0, times, max_step)?;
            Ok(flows
                .chunks_exact(dim)
                .zip(times)
                .map(|(x, &t)| EnvelopePoint {
                    location: x.to_vec(),
                    source_initial: x0.to_vec(),
                    source_time: t,
                    true_field: f.eval_vec(x),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_initial.concat())
}

/// `count_x` random initial points crossed with `count_t` random times in
/// `[0, T]`; `count_x * count_t` points in total.
pub fn sample_envelope(
    f: &dyn VectorField,
    sampler: &InitialSampler,
    horizon: f64,
    count_x: usize,
    count_t: usize,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<Vec<EnvelopePoint>> {
    if count_x == 0 || count_t == 0 {
        return Err(invalid("envelope counts must be >= 1"));
    }
    if sampler.dim() != f.dim() {
        return Err(invalid("sampler and field dimensions differ"));
    }
    let initials = sampler.sample(count_x, rng::derive_seed(seed, &[tag::ENVELOPE_INITIALS]));
    let times: Vec<f64> = (0..count_t)
        .map(|b| {
            let u: f64 = rng::stream(seed, &[tag::ENVELOPE_TIMES, b as u64]).random();
            u * horizon
        })
        .collect();
    envelope_at(f, &initials, &times, horizon, cfg)
}

/// Flat `len x D` array of envelope locations.
pub fn locations(points: &[EnvelopePoint]) -> Vec<f64> {
    points.iter().flat_map(|p| p.location.iter().copied()).collect()
}

/// Flat `len x D` array of true field values.
pub fn truths(points: &[EnvelopePoint]) -> Vec<f64> {
    points.iter().flat_map(|p| p.true_field.iter().copied()).collect()
}

/// CSV with columns `x_*, source_*, t, f_*`.
pub fn write_envelope_csv<W: Write>(points: &[EnvelopePoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let dim = points.first().map_or(0, |p| p.location.len());
    let mut header: Vec<String> = (0..dim).map(|c| format!("x_{c}")).collect();
    header.extend((0..dim).map(|c| format!("source_{c}")));
    header.push("t".into());
    header.extend((0..dim).map(|c| format!("f_{c}")));
    w.write_record(&header)?;
    for p in points {
        let row: Vec<String> = p
            .location
            .iter()
            .chain(&p.source_initial)
            .chain(std::iter::once(&p.source_time))
            .chain(&p.true_field)
            .map(f64::to_string)
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{ConstantField, VanDerPol};

    #[test]
    fn hundred_by_hundred() {
        let sampler = InitialSampler::diagonal(2, -1.0, 1.0).unwrap();
        let pts = sample_envelope(&VanDerPol, &sampler, 4.0, 100, 100, &IntegratorConfig::default(), 1).unwrap();
        assert_eq!(pts.len(), 10_000);
        assert!(pts.iter().all(|p| (0.0..=4.0).contains(&p.source_time)));
        assert_eq!(pts[0].true_field, VanDerPol.eval_vec(&pts[0].location));
    }

    #[test]
    fn time_zero_is_the_initial_point() {
        let pts = envelope_at(&VanDerPol, &[0.3, 0.3], &[0.0], 4.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(pts[0].location, vec![0.3, 0.3]);
    }

    #[test]
    fn constant_field_translation() {
        let f = ConstantField::new(vec![1.0, -2.0]).unwrap();
        let sampler = InitialSampler::diagonal(2, 0.0, 1.0).unwrap();
        let pts = sample_envelope(&f, &sampler, 3.0, 5, 7, &IntegratorConfig::default(), 2).unwrap();
        for p in pts {
            assert!((p.location[0] - (p.source_initial[0] + p.source_time)).abs() < 1e-12);
            assert!((p.location[1] - (p.source_initial[1] - 2.0 * p.source_time)).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded() {
        let sampler = InitialSampler::diagonal(2, -1.0, 1.0).unwrap();
        let cfg = IntegratorConfig::default();
        let a = sample_envelope(&VanDerPol, &sampler, 4.0, 3, 4, &cfg, 5).unwrap();
        assert_eq!(a, sample_envelope(&VanDerPol, &sampler, 4.0, 3, 4, &cfg, 5).unwrap());
        assert_ne!(a, sample_envelope(&VanDerPol, &sampler, 4.0, 3, 4, &cfg, 6).unwrap());
        assert!(sample_envelope(&VanDerPol, &sampler, 4.0, 0, 4, &cfg, 5).is_err());
    }
}
