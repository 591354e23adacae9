//! Config-driven experiments: dispatch to the numerical modules, evaluate
//! assertions, and persist `<id>.csv` plus `<id>.summary.json`.

mod config;
mod report;

pub use config::{
    default_schedule, load_config, point_for, Assertion, Cmp, DualSpec, ExperimentConfig,
    ExperimentKind, HRule, Metric, ObservableSpec, SeminormSpec, SystemSpec, WeightSpec,
};
pub use report::{read_rows, write_rows, Row, Verdict, CSV_HEADER};

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::averages::{dual_system_avg, AverageSpec, Weight};
use crate::error::{Error, Result};
use crate::fourier::SupEstimate;
use crate::joinings::product_formula_check;
use crate::nilseq::cesaro_nilseq;
use crate::seminorms::{ghk_seminorm, local_seminorm, vanishing_experiment, SeminormEstimate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;

/// Environment variable that sets the output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "NILREC_OUT_DIR";

#[derive(Clone, Debug, Default, PartialEq)]
struct Point {
    n: u64,
    value: Option<Complex64>,
    abs: Option<f64>,
    sup: Option<SupEstimate>,
    seminorm: Option<SeminormEstimate>,
    error: Option<f64>,
}

impl Point {
    fn at(n: u64) -> Point {
        Point {
            n,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Series {
    label: String,
    points: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub id: String,
    /// Canonical config echo.
    pub config: Value,
    pub rows: Vec<Row>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
    /// Per-series extras (error budgets, right-hand sides, regimes).
    pub details: Value,
    pub wall_time_seconds: f64,
}

impl ExperimentReport {
    pub fn summary_json(&self) -> Result<String> {
        let v = json!({
            "id": self.id,
            "config": self.config,
            "pass": self.pass,
            "verdicts": self.verdicts,
            "details": self.details,
            "rows": self.rows.len(),
            "wall_time_seconds": self.wall_time_seconds,
        });
        Ok(serde_json::to_string_pretty(&v)?)
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_rows(&mut buf, &self.rows)?;
        Ok(buf)
    }

    /// Writes `<id>.csv` and `<id>.summary.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}.csv", self.id));
        let summary = dir.join(format!("{}.summary.json", self.id));
        fs::write(&csv, self.csv_bytes()?)?;
        fs::write(&summary, self.summary_json()? + "\n")?;
        Ok((csv, summary))
    }
}

fn series_label(id: &str, i: usize, count: usize) -> String {
    if count == 1 {
        id.to_string()
    } else {
        format!("{id}:x{i}")
    }
}

fn compute(cfg: &ExperimentConfig) -> Result<(Vec<Series>, Value)> {
    use ExperimentKind::*;
    let schedule = &cfg.schedule;
    let orbit = cfg.system.as_ref().map(|s| s.build()).transpose()?;
    let dim = orbit.as_ref().map_or(0, |s| s.dim());
    let f1 = cfg.obs1.as_ref().map(|o| o.build(dim)).transpose()?;
    let f2 = cfg.obs2.as_ref().map(|o| o.build(dim)).transpose()?;
    let weight = cfg.weight.as_ref().map(|w| w.build(&cfg.base_dir)).transpose()?;
    let points = match &orbit {
        Some(s) => cfg.x0.iter().map(|p| point_for(s, p)).collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let (a, b) = (cfg.a.unwrap_or(1), cfg.b.unwrap_or(2));
    let label = |i: usize| series_label(&cfg.id, i, points.len());
    let missing = |name: &str| Error::Config {
        field: name.into(),
        message: "required".into(),
    };

    let mut details = Vec::new();
    let series = match cfg.kind {
        BirkhoffAvg | WwAvg | WwSup | DoubleAvg | WwdrAvg | PolyWwdrAvg | NilWwdrAvg => {
            let system = orbit.as_ref().ok_or_else(|| missing("system"))?;
            let f1 = f1.as_ref().ok_or_else(|| missing("obs1"))?;
            let mut out = Vec::new();
            for (i, x0) in points.iter().enumerate() {
                let spec = match cfg.kind {
                    BirkhoffAvg | WwAvg | WwSup => AverageSpec::birkhoff(system, f1, x0)?,
                    _ => AverageSpec::double(system, f1, f2.as_ref().ok_or_else(|| missing("obs2"))?, x0, a, b)?,
                };
                let spec = match cfg.kind {
                    WwAvg | WwdrAvg => spec.with_weight(Weight::Frequency(cfg.frequency.ok_or_else(|| missing("frequency"))?)),
                    PolyWwdrAvg | NilWwdrAvg => spec.with_weight(Weight::Sequence(weight.as_ref().ok_or_else(|| missing("weight"))?)),
                    _ => spec,
                }
                .with_index_base(cfg.index_base);
                let rep = spec.run_schedule(schedule)?;
                let mut pts = Vec::with_capacity(schedule.len());
                for (&n, v) in schedule.iter().zip(&rep.values) {
                    let mut p = Point::at(n);
                    p.value = Some(*v);
                    if let Some(eps) = cfg.epsilon {
                        p.sup = Some(spec.sup_over_frequency(n, eps)?);
                    }
                    pts.push(p);
                }
                details.push(json!({ "series": label(i), "error_budget": rep.error_budget, "bound": spec.bound() }));
                out.push(Series { label: label(i), points: pts });
            }
            out
        }
        DualSystemAvg => {
            let system = orbit.as_ref().ok_or_else(|| missing("system"))?;
            let d = cfg.dual.as_ref().ok_or_else(|| missing("dual"))?;
            let s = d.system.build()?;
            let g: Vec<_> = d.g_list.iter().map(|o| o.build(s.dim())).collect::<Result<_>>()?;
            let (f1, f2) = (f1.as_ref().ok_or_else(|| missing("obs1"))?, f2.as_ref().ok_or_else(|| missing("obs2"))?);
            let mut out = Vec::new();
            for (i, x0) in points.iter().enumerate() {
                let mut pts = Vec::new();
                for &n in schedule {
                    let r = dual_system_avg(system, f1, f2, x0, a, b, &s, &g, d.nodes_per_axis, n, cfg.index_base)?;
                    let mut p = Point::at(n);
                    p.abs = Some(r.l2_norm);
                    pts.push(p);
                }
                out.push(Series { label: label(i), points: pts });
            }
            out
        }
        CesaroNilseq => {
            let w = weight.as_ref().ok_or_else(|| missing("weight"))?;
            let rep = cesaro_nilseq(w, schedule)?;
            details.push(json!({ "series": cfg.id, "error_budget": rep.error_budget }));
            let mut pts = Vec::new();
            for (&n, v) in schedule.iter().zip(&rep.values) {
                let mut p = Point { value: Some(*v), ..Point::at(n) };
                if let Some(eps) = cfg.epsilon {
                    p.sup = Some(crate::fourier::sup_over_frequency(&w.values(0, n as usize)?, eps)?);
                }
                pts.push(p);
            }
            vec![Series { label: cfg.id.clone(), points: pts }]
        }
        LocalSeminorm => {
            let w = weight.as_ref().ok_or_else(|| missing("weight"))?;
            let s = cfg.seminorm.as_ref().ok_or_else(|| missing("seminorm"))?;
            let last = *schedule.last().expect("validated");
            let len = last as usize + s.k * (s.h.at(last).max(1) - 1);
            let seq = w.values(0, len)?;
            let mut pts = Vec::new();
            for &n in schedule {
                let est = local_seminorm(&seq, s.k, s.h.at(n), n as usize)?;
                pts.push(Point { seminorm: Some(est), ..Point::at(n) });
            }
            vec![Series { label: cfg.id.clone(), points: pts }]
        }
        GhkSeminorm => {
            let system = orbit.as_ref().ok_or_else(|| missing("system"))?;
            let f1 = f1.as_ref().ok_or_else(|| missing("obs1"))?;
            let s = cfg.seminorm.as_ref().ok_or_else(|| missing("seminorm"))?;
            let mut out = Vec::new();
            for (i, x0) in points.iter().enumerate() {
                let mut pts = Vec::new();
                for &n in schedule {
                    let est = ghk_seminorm(system, f1, x0, s.k, s.h.at(n), n as usize)?;
                    pts.push(Point { seminorm: Some(est), ..Point::at(n) });
                }
                out.push(Series { label: label(i), points: pts });
            }
            out
        }
        VanishingExperiment => {
            let system = orbit.as_ref().ok_or_else(|| missing("system"))?;
            let (f1, f2) = (f1.as_ref().ok_or_else(|| missing("obs1"))?, f2.as_ref().ok_or_else(|| missing("obs2"))?);
            let w = weight.as_ref().ok_or_else(|| missing("weight"))?;
            let k = cfg.seminorm.as_ref().ok_or_else(|| missing("seminorm"))?.k;
            let mut out = Vec::new();
            for (i, x0) in points.iter().enumerate() {
                let rep = vanishing_experiment(system, f1, f2, x0, a, b, w, k, schedule)?;
                let sems = rep.seminorms.clone().unwrap_or_default();
                let pts = schedule
                    .iter()
                    .zip(&rep.values)
                    .zip(sems)
                    .map(|((&n, v), s)| Point { value: Some(*v), seminorm: Some(s), ..Point::at(n) })
                    .collect();
                details.push(json!({ "series": label(i), "error_budget": rep.error_budget }));
                out.push(Series { label: label(i), points: pts });
            }
            out
        }
        ProductFormulaCheck => {
            let system = orbit.as_ref().ok_or_else(|| missing("system"))?;
            let (f1, f2) = (f1.as_ref().ok_or_else(|| missing("obs1"))?, f2.as_ref().ok_or_else(|| missing("obs2"))?);
            let tol = cfg.tolerance.unwrap_or(1e-2);
            let mut out = Vec::new();
            for (i, x0) in points.iter().enumerate() {
                let mut pts = Vec::new();
                let mut last = None;
                for &n in schedule {
                    let r = product_formula_check(system, f1, f2, x0, a, b, n, tol)?;
                    pts.push(Point { value: Some(r.lhs), error: Some((r.lhs - r.rhs).norm()), ..Point::at(n) });
                    last = Some(r);
                }
                let r = last.expect("nonempty schedule");
                details.push(json!({
                    "series": label(i),
                    "rhs": [r.rhs.re, r.rhs.im],
                    "regime": r.regime,
                    "tolerance": tol,
                    "pass_at_last_n": r.pass,
                }));
                out.push(Series { label: label(i), points: pts });
            }
            out
        }
    };
    Ok((series, Value::Array(details)))
}

fn metric_value(p: &Point, m: Metric) -> Option<f64> {
    match m {
        Metric::Re => p.value.map(|v| v.re),
        Metric::Im => p.value.map(|v| v.im),
        Metric::Abs => p.value.map(|v| v.norm()).or(p.abs),
        Metric::Sup => p.sup.map(|s| s.value),
        Metric::Seminorm => p.seminorm.map(|s| s.value),
        Metric::Error => p.error,
        Metric::Delta => None,
    }
}

fn metric_at(s: &Series, m: Metric, n: Option<u64>) -> Option<f64> {
    let len = s.points.len();
    if m == Metric::Delta {
        let i = match n {
            Some(n) => s.points.iter().position(|p| p.n == n)?,
            None => len.checked_sub(2)?,
        };
        let (p, q) = (s.points.get(i)?, s.points.get(i + 1)?);
        return match (p.value, q.value) {
            (Some(x), Some(y)) => Some((y - x).norm()),
            _ => Some((metric_value(q, Metric::Abs)? - metric_value(p, Metric::Abs)?).abs()),
        };
    }
    let p = match n {
        Some(n) => s.points.iter().find(|p| p.n == n)?,
        None => s.points.last()?,
    };
    metric_value(p, m)
}

fn cmp_str(op: Cmp) -> &'static str {
    match op {
        Cmp::Lt => "<",
        Cmp::Le => "<=",
        Cmp::Gt => ">",
        Cmp::Ge => ">=",
    }
}

fn describe(a: &Assertion) -> String {
    let name = |m: &Metric| serde_json::to_value(m).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let at = |n: &Option<u64>| n.map_or("last".to_string(), |n| n.to_string());
    match a {
        Assertion::Compare { metric, n, op, value } => {
            format!("{}(N={}) {} {value}", name(metric), at(n), cmp_str(*op))
        }
        Assertion::Range { metric, n, lo, hi } => format!("{}(N={}) in [{lo}, {hi}]", name(metric), at(n)),
        Assertion::StrictlyDecreasing { metric, from } => format!("{} strictly decreasing from N={from}", name(metric)),
        Assertion::SmallerThanAt { metric, n, than } => format!("{}(N={n}) < {}(N={than})", name(metric), name(metric)),
        Assertion::Every { metric, op, value } => format!("{}(N) {} {value} for every N", name(metric), cmp_str(*op)),
        Assertion::AllZero { metric } => format!("{} identically zero", name(metric)),
    }
}

fn evaluate(a: &Assertion, s: &Series) -> Verdict {
    let (observed, pass) = match a {
        Assertion::Compare { metric, n, op, value } => {
            let v = metric_at(s, *metric, *n);
            (v, v.is_some_and(|v| op.holds(v, *value)))
        }
        Assertion::Range { metric, n, lo, hi } => {
            let v = metric_at(s, *metric, *n);
            (v, v.is_some_and(|v| *lo <= v && v <= *hi))
        }
        Assertion::StrictlyDecreasing { metric, from } => {
            let vals: Vec<Option<f64>> = s
                .points
                .iter()
                .filter(|p| p.n >= *from)
                .map(|p| metric_at(s, *metric, Some(p.n)))
                .take_while(Option::is_some)
                .collect();
            let vals: Vec<f64> = vals.into_iter().flatten().collect();
            let bad = vals.windows(2).find(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less)).map(|w| w[1]);
            (bad, vals.len() >= 2 && bad.is_none())
        }
        Assertion::SmallerThanAt { metric, n, than } => {
            match (metric_at(s, *metric, Some(*n)), metric_at(s, *metric, Some(*than))) {
                (Some(x), Some(y)) => (Some(x), x < y),
                (x, _) => (x, false),
            }
        }
        Assertion::Every { metric, op, value } => {
            let vals: Vec<f64> = s.points.iter().filter_map(|p| metric_at(s, *metric, Some(p.n))).collect();
            let bad = vals.iter().copied().find(|v| !op.holds(*v, *value));
            (bad.or(vals.last().copied()), !vals.is_empty() && bad.is_none())
        }
        Assertion::AllZero { metric } => {
            let vals: Vec<Option<f64>> = s.points.iter().map(|p| metric_at(s, *metric, Some(p.n))).collect();
            let worst = vals.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
            let defined = vals.iter().any(Option::is_some);
            (Some(worst), defined && worst == 0.0 && vals.iter().all(|v| v.is_none() || *v == Some(0.0)))
        }
    };
    Verdict {
        assertion: describe(a),
        series: s.label.clone(),
        observed,
        pass,
    }
}

fn rows_of(series: &[Series]) -> Vec<Row> {
    series
        .iter()
        .flat_map(|s| {
            s.points.iter().map(move |p| Row {
                experiment_id: s.label.clone(),
                n: p.n,
                re: p.value.map(|v| v.re),
                im: p.value.map(|v| v.im),
                abs: metric_value(p, Metric::Abs),
                sup: p.sup.map(|x| x.value),
                t_star: p.sup.map(|x| x.t_star),
                seminorm: p.seminorm.map(|x| x.value),
                clamped: p.seminorm.map(|x| x.clamped),
            })
        })
        .collect()
}

/// Runs one experiment in the current thread pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (series, details) = compute(cfg)?;
    let verdicts: Vec<Verdict> = cfg
        .assertions
        .iter()
        .flat_map(|a| series.iter().map(move |s| evaluate(a, s)))
        .collect();
    Ok(ExperimentReport {
        id: cfg.id.clone(),
        config: serde_json::to_value(cfg)?,
        rows: rows_of(&series),
        pass: verdicts.iter().all(|v| v.pass),
        verdicts,
        details,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs experiments concurrently on a pool of `workers` threads (the rayon
/// default when `None`). Results come back in input order.
pub fn run_experiments(cfgs: &[ExperimentConfig], workers: Option<usize>) -> Result<Vec<Result<ExperimentReport>>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(|| cfgs.par_iter().map(run_experiment).collect()))
}

/// Exit-code class of an error: config problems are `2`, anything raised
/// while computing is `3`.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::ConfigParse { .. } | Error::InvalidExponents { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}
