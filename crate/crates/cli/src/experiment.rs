//! Single runs, sweeps and the dimension comparison.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use vfrecon::baseline::{library_size, sindy_fit, SindyOptions};
use vfrecon::metrics::{
    classify_regime, fit_loglog_slope, locations, normalized_error, sample_envelope, truths,
    write_envelope_csv, EnvelopePoint, ErrorReport, ReportMeta,
};
use vfrecon::rng::{derive_seed, tag};
use vfrecon::{
    generate_dataset, make_grid, CalibrationParams, InitialSampler, ModelOptions, SplitMode,
    TrajectoryDataset, VectorField, VectorFieldModel,
};

use crate::config::{CalibrationConfig, ExperimentConfig, SweepAxis};
use crate::error::{CliError, Stage};
use crate::output;

/// Seed of repetition `rep` under master seed `master`.
pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    derive_seed(master, &[tag::REPETITION, rep as u64])
}

/// Wall-clock seconds for model construction and the envelope queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub build_seconds: f64,
    pub query_seconds: f64,
}

impl Timing {
    pub fn total(&self) -> f64 {
        self.build_seconds + self.query_seconds
    }
}

/// Everything produced by one estimation run.
#[derive(Debug)]
pub struct SingleRun {
    pub params: CalibrationParams,
    pub envelope: Vec<EnvelopePoint>,
    pub estimates: Vec<f64>,
    pub report: ErrorReport,
    pub model: VectorFieldModel,
    pub timing: Timing,
}

/// The field and sampler for a run, in dimension `dim` on a dimension sweep.
struct System {
    field: Box<dyn VectorField>,
    sampler: InitialSampler,
}

fn system(cfg: &ExperimentConfig, dim: Option<usize>) -> Result<System, CliError> {
    let field = cfg.field(dim)?;
    let sampler = cfg.sampler(field.dim())?;
    Ok(System { field, sampler })
}

fn dataset(cfg: &ExperimentConfig, sys: &System, n: usize, m: usize, seed: u64) -> Result<TrajectoryDataset, CliError> {
    let grid = make_grid(cfg.data.horizon, m).stage("grid")?;
    generate_dataset(&*sys.field, &sys.sampler, n, &grid, cfg.data.sigma, &cfg.integrator(), seed).stage("simulate")
}

fn envelope(cfg: &ExperimentConfig, sys: &System, seed: u64) -> Result<Vec<EnvelopePoint>, CliError> {
    let e = &cfg.envelope;
    sample_envelope(&*sys.field, &sys.sampler, cfg.data.horizon, e.count_x, e.count_t, &cfg.integrator(), seed)
        .stage("envelope")
}

fn estimate(
    ds: &TrajectoryDataset,
    params: &CalibrationParams,
    options: ModelOptions,
    points: &[f64],
) -> Result<(VectorFieldModel, Vec<f64>, Timing), CliError> {
    let start = Instant::now();
    let model = VectorFieldModel::build(ds, params, options).stage("build")?;
    let built = Instant::now();
    let estimates = model.query_batch(points).stage("query")?;
    let timing = Timing {
        build_seconds: (built - start).as_secs_f64(),
        query_seconds: built.elapsed().as_secs_f64(),
    };
    Ok((model, estimates, timing))
}

fn meta(ds: &TrajectoryDataset, estimator: &str) -> ReportMeta {
    ReportMeta {
        n: ds.n(),
        m: ds.m(),
        dim: ds.dim(),
        sigma: ds.sigma(),
        seed: ds.seed(),
        estimator: estimator.into(),
    }
}

fn split_tag(split: SplitMode) -> &'static str {
    match split {
        SplitMode::Split => "ours-split",
        SplitMode::NoSplit => "ours-nosplit",
    }
}

fn run_at(cfg: &ExperimentConfig, dim: Option<usize>, n: usize, m: usize, seed: u64) -> Result<SingleRun, CliError> {
    let sys = system(cfg, dim)?;
    let ds = dataset(cfg, &sys, n, m, seed)?;
    let env = envelope(cfg, &sys, seed)?;
    let params = cfg.params(n, m)?;
    let xs = locations(&env);
    let (model, estimates, timing) = estimate(&ds, &params, cfg.model_options(), &xs)?;
    let report = normalized_error(&estimates, &truths(&env), ds.dim(), cfg.envelope.floor)
        .stage("metrics")?
        .with_meta(meta(&ds, split_tag(cfg.estimator.split)));
    Ok(SingleRun { params, envelope: env, estimates, report, model, timing })
}

/// Generates data with `data.seed`, fits the estimator, and evaluates it on
/// the envelope sample.
pub fn run_single(cfg: &ExperimentConfig) -> Result<SingleRun, CliError> {
    run_at(cfg, None, cfg.data.n, cfg.data.m, cfg.data.seed)
}

fn fmt(v: f64) -> String {
    v.to_string()
}

/// `estimate`: per-point report, planar plotting grid, timing, and
/// optionally the model.
pub fn write_single(cfg: &ExperimentConfig, out: &Path, hash: &str) -> Result<(SingleRun, Vec<PathBuf>), CliError> {
    let run = run_single(cfg)?;
    let mut written = Vec::new();
    let (path, mut w) = output::create(out, "report.csv", hash)?;
    run.report
        .write_csv(&locations(&run.envelope), &truths(&run.envelope), &run.estimates, &mut w)
        .stage("report")?;
    output::finish(&path, w)?;
    written.push(path);

    let p = run.params;
    written.push(output::write_table(
        out,
        "params.csv",
        hash,
        &["k1", "k2", "k", "r", "excluded", "mean_error"],
        [vec![
            p.k1.to_string(),
            p.k2.to_string(),
            p.k.to_string(),
            p.r.to_string(),
            run.report.excluded.to_string(),
            fmt(run.report.mean),
        ]],
    )?);
    if run.model.dim() == 2 {
        written.push(write_field_grid(cfg, &run, out, hash)?);
    }
    written.push(output::write_table(
        out,
        "estimate_timing.csv",
        hash,
        &["build_seconds", "query_seconds"],
        [vec![fmt(run.timing.build_seconds), fmt(run.timing.query_seconds)]],
    )?);
    if cfg.output.save_model {
        let path = out.join("model.json");
        run.model.save(&path).stage("save model")?;
        written.push(path);
    }
    Ok((run, written))
}

/// Regular grid over the envelope's bounding box (padded by 10%) with the
/// true field, the estimate, and the distance to the nearest cached
/// position, which flags extrapolation.
fn write_field_grid(cfg: &ExperimentConfig, run: &SingleRun, out: &Path, hash: &str) -> Result<PathBuf, CliError> {
    let field = cfg.field(None)?;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in &run.envelope {
        for c in 0..2 {
            lo[c] = lo[c].min(p.location[c]);
            hi[c] = hi[c].max(p.location[c]);
        }
    }
    for c in 0..2 {
        let pad = 0.1 * (hi[c] - lo[c]).max(1e-9);
        lo[c] -= pad;
        hi[c] += pad;
    }
    let res = cfg.output.field_grid;
    let at = |c: usize, i: usize| lo[c] + (hi[c] - lo[c]) * i as f64 / (res - 1) as f64;
    let points: Vec<[f64; 2]> = (0..res).flat_map(|i| (0..res).map(move |j| (i, j))).map(|(i, j)| [at(0, i), at(1, j)]).collect();
    let rows = points
        .par_iter()
        .map(|x| {
            let (est, dist) = run.model.query_with_distance(x)?;
            let f = field.eval_vec(x);
            Ok(vec![fmt(x[0]), fmt(x[1]), fmt(f[0]), fmt(f[1]), fmt(est[0]), fmt(est[1]), fmt(dist)])
        })
        .collect::<vfrecon::Result<Vec<_>>>()
        .stage("field grid")?;
    output::write_table(out, "field_grid.csv", hash, &["x_0", "x_1", "f_0", "f_1", "fhat_0", "fhat_1", "nearest_distance"], rows)
}

/// `generate`: the simulated dataset as CSV and JSON.
pub fn write_generate(cfg: &ExperimentConfig, out: &Path, hash: &str) -> Result<Vec<PathBuf>, CliError> {
    let sys = system(cfg, None)?;
    let ds = dataset(cfg, &sys, cfg.data.n, cfg.data.m, cfg.data.seed)?;
    let (path, mut w) = output::create(out, "dataset.csv", hash)?;
    ds.write_csv(&mut w).stage("write dataset")?;
    output::finish(&path, w)?;
    let json = out.join("dataset.json");
    ds.save(&json).stage("write dataset")?;
    Ok(vec![path, json])
}

/// `envelope`: the evaluation points and the true field there.
pub fn write_envelope(cfg: &ExperimentConfig, out: &Path, hash: &str) -> Result<Vec<PathBuf>, CliError> {
    let sys = system(cfg, None)?;
    let env = envelope(cfg, &sys, cfg.data.seed)?;
    let (path, mut w) = output::create(out, "envelope.csv", hash)?;
    write_envelope_csv(&env, &mut w).stage("write envelope")?;
    output::finish(&path, w)?;
    Ok(vec![path])
}

/// One `(axis value, repetition)` cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: usize,
    pub n: usize,
    pub m: usize,
    pub dim: usize,
    pub repetition: usize,
    pub seed: u64,
    pub params: CalibrationParams,
    pub regime: Option<&'static str>,
    pub mean_error: f64,
    pub excluded: usize,
    pub timing: Timing,
}

/// `(n, m, dimension override)` at an axis value.
fn axis_point(cfg: &ExperimentConfig, axis: SweepAxis, value: usize, fixed: Option<usize>) -> (usize, usize, Option<usize>) {
    match axis {
        SweepAxis::Diagonal => (value, value, None),
        SweepAxis::FixedN => (fixed.unwrap_or(cfg.data.n), value, None),
        SweepAxis::FixedM => (value, fixed.unwrap_or(cfg.data.m), None),
        SweepAxis::Dimension => (cfg.data.n, cfg.data.m, Some(value)),
    }
}

fn regime_label(cfg: &ExperimentConfig, n: usize, m: usize) -> Option<&'static str> {
    let CalibrationConfig::Auto { b, .. } = cfg.calibration else { return None };
    classify_regime(n, m, b).ok().map(|l| match l.regime {
        vfrecon::metrics::Regime::TrajectoryRich => "trajectory-rich",
        vfrecon::metrics::Regime::TimeRich => "time-rich",
        vfrecon::metrics::Regime::Balanced => "balanced",
    })
}

/// Runs every `(axis value, repetition)` pair. Repetition `q` uses
/// [`repetition_seed`]`(data.seed, q)` for data and envelope alike, so a
/// single-value sweep matches `q` single runs with those seeds.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
    let jobs: Vec<(usize, usize)> = sweep
        .values
        .iter()
        .flat_map(|&v| (0..sweep.repetitions).map(move |q| (v, q)))
        .collect();
    jobs.par_iter()
        .map(|&(value, rep)| {
            let (n, m, dim) = axis_point(cfg, sweep.axis, value, sweep.fixed);
            let seed = repetition_seed(cfg.data.seed, rep);
            let run = run_at(cfg, dim, n, m, seed)?;
            Ok(SweepRow {
                value,
                n,
                m,
                dim: run.model.dim(),
                repetition: rep,
                seed,
                params: run.params,
                regime: regime_label(cfg, n, m),
                mean_error: run.report.mean,
                excluded: run.report.excluded,
                timing: run.timing,
            })
        })
        .collect()
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1.0);
    (mean, var.sqrt())
}

/// Per axis value: `(value, n, m, mean error, sd)` in axis order.
pub fn summarize_sweep(rows: &[SweepRow]) -> Vec<(usize, usize, usize, f64, f64)> {
    let mut out: Vec<(usize, usize, usize, f64, f64)> = Vec::new();
    for row in rows {
        if out.iter().any(|o| o.0 == row.value) {
            continue;
        }
        let errs: Vec<f64> = rows.iter().filter(|r| r.value == row.value).map(|r| r.mean_error).collect();
        let (mean, sd) = mean_sd(&errs);
        out.push((row.value, row.n, row.m, mean, sd));
    }
    out
}

/// `sweep`: rows, per-value summary, log-log slope against `n m`, timings.
pub fn write_sweep(cfg: &ExperimentConfig, out: &Path, hash: &str) -> Result<(Vec<SweepRow>, Vec<PathBuf>), CliError> {
    let rows = run_sweep(cfg)?;
    let axis = cfg.sweep.as_ref().map(|s| s.axis.label()).unwrap_or_default();
    let mut written = vec![output::write_table(
        out,
        "sweep.csv",
        hash,
        &["axis", "value", "n", "m", "dim", "repetition", "seed", "k1", "k2", "k", "r", "regime", "mean_error", "excluded"],
        rows.iter().map(|r| {
            vec![
                axis.to_string(),
                r.value.to_string(),
                r.n.to_string(),
                r.m.to_string(),
                r.dim.to_string(),
                r.repetition.to_string(),
                r.seed.to_string(),
                r.params.k1.to_string(),
                r.params.k2.to_string(),
                r.params.k.to_string(),
                r.params.r.to_string(),
                r.regime.unwrap_or("").to_string(),
                fmt(r.mean_error),
                r.excluded.to_string(),
            ]
        }),
    )?];
    let summary = summarize_sweep(&rows);
    written.push(output::write_table(
        out,
        "sweep_summary.csv",
        hash,
        &["value", "n", "m", "mean_error", "sd_error"],
        summary.iter().map(|s| vec![s.0.to_string(), s.1.to_string(), s.2.to_string(), fmt(s.3), fmt(s.4)]),
    )?);
    let pairs: Vec<(f64, f64)> = summary.iter().map(|s| ((s.1 * s.2) as f64, s.3)).collect();
    if let Ok(slope) = fit_loglog_slope(&pairs) {
        written.push(output::write_table(out, "sweep_fit.csv", hash, &["scale", "slope"], [vec!["nm".into(), fmt(slope)]])?);
    }
    written.push(output::write_table(
        out,
        "sweep_timing.csv",
        hash,
        &["value", "repetition", "build_seconds", "query_seconds"],
        rows.iter().map(|r| {
            vec![r.value.to_string(), r.repetition.to_string(), fmt(r.timing.build_seconds), fmt(r.timing.query_seconds)]
        }),
    )?);
    Ok((rows, written))
}

/// One method at one dimension and repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub method: String,
    pub dim: usize,
    pub repetition: usize,
    pub seed: u64,
    /// `None` when the run was skipped (library over the size cap).
    pub mean_error: Option<f64>,
    pub excluded: usize,
    pub library_size: Option<u128>,
    pub threshold: Option<f64>,
    pub seconds: Option<f64>,
}

/// For every dimension and repetition: both estimator variants and SINDy at
/// each configured degree, on a shared dataset and envelope sample.
///
/// Jobs run one after another so that their timings do not compete for
/// cores; each job is itself parallel.
pub fn run_dimension_compare(cfg: &ExperimentConfig) -> Result<Vec<CompareRow>, CliError> {
    let baseline = cfg.baseline.as_ref().ok_or_else(|| CliError::Config("missing [baseline] section".into()))?;
    let (dims, reps): (Vec<Option<usize>>, usize) = match &cfg.sweep {
        Some(s) if s.axis == SweepAxis::Dimension => (s.values.iter().map(|&d| Some(d)).collect(), s.repetitions),
        Some(_) => return Err(CliError::Config("compare needs a dimension sweep or no [sweep] section".into())),
        None => (vec![None], 1),
    };
    let (n, m) = (cfg.data.n, cfg.data.m);
    let params = cfg.params(n, m)?;
    let mut rows = Vec::new();
    for dim in dims {
        let sys = system(cfg, dim)?;
        let d = sys.field.dim();
        for rep in 0..reps {
            let seed = repetition_seed(cfg.data.seed, rep);
            let ds = dataset(cfg, &sys, n, m, seed)?;
            let env = envelope(cfg, &sys, seed)?;
            let (xs, fs) = (locations(&env), truths(&env));
            for split in [SplitMode::Split, SplitMode::NoSplit] {
                let opts = ModelOptions { split, search: cfg.estimator.search };
                let (_, est, timing) = estimate(&ds, &params, opts, &xs)?;
                let report = normalized_error(&est, &fs, d, cfg.envelope.floor).stage("metrics")?;
                rows.push(CompareRow {
                    method: split_tag(split).into(),
                    dim: d,
                    repetition: rep,
                    seed,
                    mean_error: Some(report.mean),
                    excluded: report.excluded,
                    library_size: None,
                    threshold: None,
                    seconds: Some(timing.total()),
                });
            }
            for &degree in &baseline.degrees {
                let size = library_size(d, degree);
                let method = format!("sindy-{degree}");
                if size > baseline.max_library as u128 {
                    log::info!("{method} at D = {d}: library of {size} columns exceeds the cap, skipped");
                    rows.push(CompareRow {
                        method,
                        dim: d,
                        repetition: rep,
                        seed,
                        mean_error: None,
                        excluded: 0,
                        library_size: Some(size),
                        threshold: None,
                        seconds: None,
                    });
                    continue;
                }
                let opts = SindyOptions {
                    degree,
                    thresholds: baseline.thresholds.clone(),
                    stencil: baseline.stencil,
                    max_iters: baseline.max_iters,
                };
                let start = Instant::now();
                let fit = sindy_fit(&ds, &opts, &*sys.field, &xs).stage("sindy")?;
                let seconds = start.elapsed().as_secs_f64();
                let est = fit.model.predict_batch(&xs);
                let report = normalized_error(&est, &fs, d, cfg.envelope.floor).stage("metrics")?;
                rows.push(CompareRow {
                    method,
                    dim: d,
                    repetition: rep,
                    seed,
                    mean_error: Some(report.mean),
                    excluded: report.excluded,
                    library_size: Some(size),
                    threshold: Some(fit.threshold),
                    seconds: Some(seconds),
                });
            }
        }
    }
    Ok(rows)
}

/// `compare`: per-run errors, per-(method, D) summary, and timings.
pub fn write_compare(cfg: &ExperimentConfig, out: &Path, hash: &str) -> Result<(Vec<CompareRow>, Vec<PathBuf>), CliError> {
    let rows = run_dimension_compare(cfg)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    let mut written = vec![output::write_table(
        out,
        "compare.csv",
        hash,
        &["method", "dim", "repetition", "seed", "status", "library_size", "threshold", "mean_error", "excluded"],
        rows.iter().map(|r| {
            vec![
                r.method.clone(),
                r.dim.to_string(),
                r.repetition.to_string(),
                r.seed.to_string(),
                if r.mean_error.is_some() { "ok" } else { "skipped" }.to_string(),
                opt(r.library_size.map(|s| s.to_string())),
                opt(r.threshold.map(fmt)),
                opt(r.mean_error.map(fmt)),
                r.excluded.to_string(),
            ]
        }),
    )?];
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in &rows {
        if !keys.iter().any(|(m, d)| *m == r.method && *d == r.dim) {
            keys.push((r.method.clone(), r.dim));
        }
    }
    written.push(output::write_table(
        out,
        "compare_summary.csv",
        hash,
        &["method", "dim", "runs", "mean_error", "sd_error"],
        keys.iter().map(|(method, dim)| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == *method && r.dim == *dim)
                .filter_map(|r| r.mean_error)
                .collect();
            if errs.is_empty() {
                return vec![method.clone(), dim.to_string(), "0".into(), "skipped".into(), String::new()];
            }
            let (mean, sd) = mean_sd(&errs);
            vec![method.clone(), dim.to_string(), errs.len().to_string(), fmt(mean), fmt(sd)]
        }),
    )?);
    written.push(output::write_table(
        out,
        "compare_timing.csv",
        hash,
        &["method", "dim", "repetition", "seconds"],
        rows.iter().filter_map(|r| {
            r.seconds.map(|s| vec![r.method.clone(), r.dim.to_string(), r.repetition.to_string(), fmt(s)])
        }),
    )?);
    Ok((rows, written))
}
