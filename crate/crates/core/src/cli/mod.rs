//! Batch jobs: a JSON job file (or the equivalent flags) expands into a grid
//! of points, and every point is written as one record.
//!
//! A JSON record is itself a valid job: it carries the single-point job and
//! a `result` object, which is ignored (and recomputed) on input.

pub mod args;
mod presets;

pub use presets::{preset, preset_names};

use crate::closedforms::{brownian_identity_check, IdentityVariant};
use crate::error::{Error, Result};
use crate::laplace::{laplace_sup_broken, laplace_sup_exp_t, LaplaceQuery, RandomHorizonSpec};
use crate::models::{BrokenDrift, LevyModel};
use crate::montecarlo::{self as mc, McConfig, TwoCompanyEvent};
use crate::quadrature::{Estimate, QuadConfig};
use crate::ruin::{ruin_report, TwoCompanyParams};
use crate::supdist::{sup_broken_sn, sup_broken_sp, sup_linear_sn, sup_linear_sp, sup_linear_sp_inf, Horizon};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::io::Write;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Which supremum theorem to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Spectrally positive formulas.
    #[default]
    Sp,
    /// Spectrally negative formulas.
    Sn,
}

/// Law of the extra time after the break in Laplace jobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VLaw {
    /// No extra time: the supremum over `[0, T)` with slope `c1`.
    None,
    Infinite,
    Exponential { theta: f64 },
}

impl VLaw {
    fn spec(&self) -> Option<RandomHorizonSpec> {
        match *self {
            VLaw::None => None,
            VLaw::Infinite => Some(RandomHorizonSpec::Infinite),
            VLaw::Exponential { theta } => Some(RandomHorizonSpec::Exponential { theta }),
        }
    }
}

/// Single-point Monte Carlo targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum McTarget {
    SupBroken { model: LevyModel, c1: f64, c2: f64, t: f64, u: f64, horizon: Horizon },
    SupLinear { model: LevyModel, c: f64, u: f64, horizon: Horizon },
    TwoCompany { company: TwoCompanyParams, horizon: Horizon, event: TwoCompanyEvent },
    Laplace { model: LevyModel, c1: f64, c2: f64, lambda: f64, gamma: f64, v: VLaw },
    JointSupEndpoint { model: LevyModel, c: f64, u: f64, t: f64, z: f64, width: f64 },
    CmsCalibration { alpha: f64, n: u64, knots: usize },
}

/// The computation. List-valued fields span a grid (cartesian product,
/// last field fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Job {
    Density { model: LevyModel, t: Vec<f64>, x: Vec<f64> },
    /// Integral of the density over the real line.
    Mass { model: LevyModel, t: Vec<f64> },
    Sup {
        model: LevyModel,
        c: Vec<f64>,
        u: Vec<f64>,
        horizon: Horizon,
        #[serde(default)]
        side: Side,
    },
    BrokenSup {
        model: LevyModel,
        c1: Vec<f64>,
        c2: Vec<f64>,
        t: Vec<f64>,
        u: Vec<f64>,
        horizon: Horizon,
        #[serde(default)]
        side: Side,
    },
    Ruin {
        model: LevyModel,
        x1: Vec<f64>,
        x2: Vec<f64>,
        p1: f64,
        p2: f64,
        delta1: f64,
        delta2: f64,
        horizon: Horizon,
    },
    Laplace { model: LevyModel, c1: Vec<f64>, c2: Vec<f64>, lambda: Vec<f64>, gamma: Vec<f64>, v: VLaw },
    IdentityCheck { c: Vec<f64>, t: Vec<f64>, u: Vec<f64>, variant: IdentityVariant },
    Mc { target: McTarget, #[serde(default)] config: McConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub job: Job,
    #[serde(default)]
    pub output: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<QuadConfig>,
    /// Filled in on output records; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
}

impl JobSpec {
    pub fn new(job: Job) -> Self {
        JobSpec { job, output: OutputFormat::Json, quad: None, result: None }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Job(e.to_string()))
    }

    fn quad(&self) -> QuadConfig {
        self.quad.unwrap_or_default()
    }
}

/// Cartesian product of the lists, last list fastest.
fn product(lists: &[&[f64]]) -> Vec<Vec<f64>> {
    lists.iter().fold(vec![Vec::new()], |acc, list| {
        acc.iter().flat_map(|prefix| list.iter().map(move |&v| [prefix.as_slice(), &[v]].concat())).collect()
    })
}

fn check_lists(pairs: &[(&str, &[f64])]) -> Result<()> {
    match pairs.iter().find(|(_, l)| l.is_empty()) {
        Some((name, _)) => Err(Error::Job(format!("list `{name}` is empty"))),
        None => Ok(()),
    }
}

impl Job {
    /// The single-point jobs this job spans, in output order.
    pub fn points(&self) -> Result<Vec<Job>> {
        let one = |v: f64| vec![v];
        Ok(match self {
            Job::Density { model, t, x } => {
                check_lists(&[("t", t), ("x", x)])?;
                product(&[t, x]).into_iter().map(|p| Job::Density { model: *model, t: one(p[0]), x: one(p[1]) }).collect()
            }
            Job::Mass { model, t } => {
                check_lists(&[("t", t)])?;
                t.iter().map(|&v| Job::Mass { model: *model, t: one(v) }).collect()
            }
            Job::Sup { model, c, u, horizon, side } => {
                check_lists(&[("c", c), ("u", u)])?;
                product(&[c, u])
                    .into_iter()
                    .map(|p| Job::Sup { model: *model, c: one(p[0]), u: one(p[1]), horizon: *horizon, side: *side })
                    .collect()
            }
            Job::BrokenSup { model, c1, c2, t, u, horizon, side } => {
                check_lists(&[("c1", c1), ("c2", c2), ("t", t), ("u", u)])?;
                product(&[c1, c2, t, u])
                    .into_iter()
                    .map(|p| Job::BrokenSup {
                        model: *model,
                        c1: one(p[0]),
                        c2: one(p[1]),
                        t: one(p[2]),
                        u: one(p[3]),
                        horizon: *horizon,
                        side: *side,
                    })
                    .collect()
            }
            Job::Ruin { model, x1, x2, p1, p2, delta1, delta2, horizon } => {
                check_lists(&[("x1", x1), ("x2", x2)])?;
                product(&[x1, x2])
                    .into_iter()
                    .map(|p| Job::Ruin {
                        model: *model,
                        x1: one(p[0]),
                        x2: one(p[1]),
                        p1: *p1,
                        p2: *p2,
                        delta1: *delta1,
                        delta2: *delta2,
                        horizon: *horizon,
                    })
                    .collect()
            }
            Job::Laplace { model, c1, c2, lambda, gamma, v } => {
                check_lists(&[("c1", c1), ("c2", c2), ("lambda", lambda), ("gamma", gamma)])?;
                product(&[c1, c2, lambda, gamma])
                    .into_iter()
                    .map(|p| Job::Laplace { model: *model, c1: one(p[0]), c2: one(p[1]), lambda: one(p[2]), gamma: one(p[3]), v: *v })
                    .collect()
            }
            Job::IdentityCheck { c, t, u, variant } => {
                check_lists(&[("c", c), ("t", t), ("u", u)])?;
                product(&[c, t, u])
                    .into_iter()
                    .map(|p| Job::IdentityCheck { c: one(p[0]), t: one(p[1]), u: one(p[2]), variant: *variant })
                    .collect()
            }
            Job::Mc { .. } => vec![self.clone()],
        })
    }
}

/// Result of one point, plus the quadrature estimate that must meet the
/// requested tolerance.
struct Computed {
    result: Value,
    checked: Option<Estimate>,
}

fn with_estimate(result: Value, e: Estimate) -> Computed {
    Computed { result, checked: Some(e) }
}

fn plain(result: Value) -> Computed {
    Computed { result, checked: None }
}

fn horizon_tag(h: &Horizon) -> Option<f64> {
    match *h {
        Horizon::Finite { s } => Some(s),
        Horizon::Infinite => None,
    }
}

/// Evaluates a single-point job.
fn compute(job: &Job, quad: &QuadConfig) -> Result<Computed> {
    quad.validate()?;
    match job {
        Job::Density { model, t, x } => Ok(plain(json!({ "value": model.density(x[0], t[0])? }))),
        Job::Mass { model, t } => {
            let e = model.total_mass(t[0], quad)?;
            Ok(with_estimate(json!({ "value": e.value, "err_est": e.err_est }), e))
        }
        Job::Sup { model, c, u, horizon, side } => {
            let (c, u) = (c[0], u[0]);
            let e = match (side, horizon_tag(horizon)) {
                (Side::Sp, Some(s)) => sup_linear_sp(model, c, u, s, quad)?,
                (Side::Sn, Some(s)) => sup_linear_sn(model, c, u, s, quad)?,
                (Side::Sp, None) => sup_linear_sp_inf(model, c, u, quad)?,
                (Side::Sn, None) => {
                    let d = BrokenDrift::new(c, c, 1.0)?;
                    let r = sup_broken_sn(model, &d, u, horizon, quad)?;
                    Estimate::new(r.probability, r.err_est)
                }
            };
            Ok(with_estimate(json!({ "value": e.value, "err_est": e.err_est }), e))
        }
        Job::BrokenSup { model, c1, c2, t, u, horizon, side } => {
            let d = BrokenDrift::new(c1[0], c2[0], t[0])?;
            let r = match side {
                Side::Sp => sup_broken_sp(model, &d, u[0], horizon, quad)?,
                Side::Sn => sup_broken_sn(model, &d, u[0], horizon, quad)?,
            };
            let v = json!({ "value": r.probability, "a_term": r.a_term, "b_term": r.b_term, "err_est": r.err_est });
            Ok(with_estimate(v, Estimate::new(r.probability, r.err_est)))
        }
        Job::Ruin { model, x1, x2, p1, p2, delta1, delta2, horizon } => {
            let params = TwoCompanyParams { x1: x1[0], x2: x2[0], p1: *p1, p2: *p2, delta1: *delta1, delta2: *delta2, model: *model };
            let r = ruin_report(&params, horizon, quad)?;
            Ok(plain(serde_json::to_value(r).map_err(|e| Error::Job(e.to_string()))?))
        }
        Job::Laplace { model, c1, c2, lambda, gamma, v } => {
            let value = match v.spec() {
                None => laplace_sup_exp_t(model, c1[0], gamma[0], lambda[0])?,
                Some(spec) => {
                    let q = LaplaceQuery { model: *model, c1: c1[0], c2: c2[0], lambda: lambda[0], gamma: gamma[0] };
                    laplace_sup_broken(&q, &spec)?
                }
            };
            Ok(plain(json!({ "value": value })))
        }
        Job::IdentityCheck { c, t, u, variant } => {
            let (lhs, rhs) = brownian_identity_check(c[0], t[0], u[0], *variant, quad)?;
            Ok(plain(json!({ "lhs": lhs, "rhs": rhs, "abs_diff": (lhs - rhs).abs() })))
        }
        Job::Mc { target, config } => {
            let est = match *target {
                McTarget::SupBroken { model, c1, c2, t, u, horizon } => {
                    mc::simulate_sup_broken(&model, &BrokenDrift::new(c1, c2, t)?, u, &horizon, config)?
                }
                McTarget::SupLinear { model, c, u, horizon } => mc::simulate_sup_linear(&model, c, u, &horizon, config)?,
                McTarget::TwoCompany { company, horizon, event } => mc::simulate_two_company(&company, &horizon, config, event)?,
                McTarget::Laplace { model, c1, c2, lambda, gamma, v } => match v.spec() {
                    None => mc::simulate_laplace_exp_t(&model, c1, gamma, lambda, config)?,
                    Some(spec) => mc::simulate_laplace_transform(&model, c1, c2, lambda, &spec, gamma, config)?,
                },
                McTarget::JointSupEndpoint { model, c, u, t, z, width } => {
                    mc::simulate_joint_sup_endpoint(&model, c, u, t, z, width, config)?
                }
                McTarget::CmsCalibration { alpha, n, knots } => {
                    let r = mc::cms_calibration(alpha, n, knots, config.seed)?;
                    return Ok(plain(serde_json::to_value(r).map_err(|e| Error::Job(e.to_string()))?));
                }
            };
            Ok(plain(serde_json::to_value(est).map_err(|e| Error::Job(e.to_string()))?))
        }
    }
}

/// One output record: the single-point job with its result.
fn record(spec: &JobSpec, point: Job, computed: &Computed) -> JobSpec {
    JobSpec { job: point, output: spec.output, quad: spec.quad, result: Some(computed.result.clone()) }
}

/// Flattens nested objects into `a_b` keys; one-element lists become scalars.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}_{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) if a.len() == 1 => flatten(prefix, &a[0], out),
        Value::Array(a) => out.push((prefix.to_string(), a.iter().map(Value::to_string).collect::<Vec<_>>().join(";"))),
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// CSV columns of a record: the job's inputs followed by the result.
fn csv_row(rec: &JobSpec) -> Result<Vec<(String, String)>> {
    let mut cols = Vec::new();
    let job = serde_json::to_value(&rec.job).map_err(|e| Error::Job(e.to_string()))?;
    flatten("", &job, &mut cols);
    if let Some(r) = &rec.result {
        flatten("", r, &mut cols);
    }
    Ok(cols)
}

/// Runs every point of the job, writing records to `out` and wall times
/// and diagnostics to `diag`. Returns the process exit code.
pub fn run(spec: &JobSpec, out: &mut dyn Write, diag: &mut dyn Write) -> i32 {
    match run_inner(spec, out, diag, None) {
        Ok(()) => 0,
        Err(e) => report(e, diag),
    }
}

/// Like [`run`] but writes a CSV with only the inputs that vary across the
/// grid plus the result columns, for external plotting.
pub fn emit_plot_data(spec: &JobSpec, out: &mut dyn Write, diag: &mut dyn Write) -> i32 {
    let mut rows = Vec::new();
    let status = run_inner(spec, &mut std::io::sink(), diag, Some(&mut rows));
    if let Err(e) = status {
        return report(e, diag);
    }
    match write_plot_csv(&rows, out) {
        Ok(()) => 0,
        Err(e) => report(e, diag),
    }
}

fn report(e: Error, diag: &mut dyn Write) -> i32 {
    let _ = writeln!(diag, "error: {e}");
    e.exit_code()
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Job(format!("output failed: {e}"))
}

/// Flattened record columns and how many of them are job inputs.
type PlotRow = (Vec<(String, String)>, usize);

fn run_inner(spec: &JobSpec, out: &mut dyn Write, diag: &mut dyn Write, mut keep: Option<&mut Vec<PlotRow>>) -> Result<()> {
    let quad = spec.quad();
    let points = spec.job.points()?;
    for (i, point) in points.into_iter().enumerate() {
        let start = Instant::now();
        let computed = compute(&point, &quad)?;
        let _ = writeln!(diag, "record {i}: wall time {:.6} s", start.elapsed().as_secs_f64());
        let rec = record(spec, point, &computed);
        let input_cols = {
            let mut c = Vec::new();
            flatten("", &serde_json::to_value(&rec.job).map_err(|e| Error::Job(e.to_string()))?, &mut c);
            c.len()
        };
        if let Some(rows) = keep.as_deref_mut() {
            rows.push((csv_row(&rec)?, input_cols));
        }
        if spec.output == OutputFormat::Csv {
            let row = csv_row(&rec)?;
            let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
            if i == 0 {
                w.write_record(row.iter().map(|c| c.0.as_str())).map_err(io_err)?;
            }
            w.write_record(row.iter().map(|c| c.1.as_str())).map_err(io_err)?;
            out.write_all(&w.into_inner().map_err(io_err)?).map_err(io_err)?;
        } else {
            let line = serde_json::to_string(&rec).map_err(io_err)?;
            writeln!(out, "{line}").map_err(io_err)?;
        }
        out.flush().map_err(io_err)?;
        if let Some(e) = computed.checked {
            if !(e.err_est <= quad.target(e.value)) {
                return Err(Error::NonConvergence { value: e.value, err_est: e.err_est });
            }
        }
    }
    Ok(())
}

fn write_plot_csv(rows: &[PlotRow], out: &mut dyn Write) -> Result<()> {
    let Some((first, n_inputs)) = rows.first() else {
        return Ok(());
    };
    let keep: Vec<usize> = (0..first.len())
        .filter(|&j| j >= *n_inputs || rows.iter().any(|(r, _)| r[j].1 != first[j].1))
        .collect();
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(keep.iter().map(|&j| first[j].0.as_str())).map_err(io_err)?;
    for (r, _) in rows {
        w.write_record(keep.iter().map(|&j| r[j].1.as_str())).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(io_err)?;
    out.write_all(&bytes).map_err(io_err)
}

/// Overrides applied to a preset or config file from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct McOverrides {
    pub seed: Option<u64>,
    pub n_paths: Option<u64>,
    pub grid_step: Option<f64>,
    pub scheme: Option<mc::SupScheme>,
}

impl McOverrides {
    pub fn apply(&self, spec: &mut JobSpec) -> Result<()> {
        let any = self.seed.is_some() || self.n_paths.is_some() || self.grid_step.is_some() || self.scheme.is_some();
        let Job::Mc { config, .. } = &mut spec.job else {
            return if any { Err(Error::Job("Monte Carlo overrides need an `mc` job".into())) } else { Ok(()) };
        };
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(n) = self.n_paths {
            config.n_paths = n;
        }
        if let Some(h) = self.grid_step {
            config.grid_step = Some(h);
        }
        if let Some(s) = self.scheme {
            config.scheme = s;
        }
        Ok(())
    }
}

/// Reads a job file, `-` meaning standard input.
pub fn load_job(path: &str) -> Result<JobSpec> {
    let text = if path == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| Error::Job(format!("reading stdin: {e}")))?
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Job(format!("reading {path}: {e}")))?
    };
    JobSpec::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_order_is_last_fastest() {
        let p = product(&[&[1.0, 2.0], &[3.0, 4.0, 5.0]]);
        assert_eq!(p.len(), 6);
        assert_eq!(p[1], vec![1.0, 4.0]);
        assert_eq!(p[3], vec![2.0, 3.0]);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let ok = r#"{"job":{"command":"mass","model":{"family":"brownian"},"t":[1]}}"#;
        assert!(JobSpec::from_json(ok).is_ok());
        let bad = r#"{"job":{"command":"mass","model":{"family":"brownian"},"t":[1],"x":[0]}}"#;
        assert!(JobSpec::from_json(bad).is_err());
        let bad = r#"{"job":{"command":"mass","model":{"family":"brownian"},"t":[1]},"extra":1}"#;
        assert!(JobSpec::from_json(bad).is_err());
    }
}
