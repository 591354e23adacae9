//! Weight sequences `b_n`: polynomial phases, torus and Heisenberg
//! nilsequences, their products and scalar multiples, and table-backed
//! sequences standing in for uniform limits.

mod heisenberg;

pub use heisenberg::{
    check_gamma_invariance, check_gamma_invariance_with, heisenberg_pow, reduce_fundamental,
    HeisenbergElement, InvarianceReport, InvariantFunction,
};

use std::ops::{Add, Neg};
use std::path::Path;

use num_complex::Complex64;

use crate::averages::ConvergenceReport;
use crate::dd::{expi, expi_dd, frac_mul_int, Dd};
use crate::error::{Error, Result};
use crate::sum;
use crate::systems::Observable;

/// Products `c·n^j` are only meaningful mod 1 while `n^j < 2^106`.
const MAX_EXACT_POWER: i128 = 1 << 106;

/// Finite table of weights with an explicit uniform approximation budget.
#[derive(Clone, Debug, PartialEq)]
pub struct TableWeight {
    values: Vec<Complex64>,
    bound: f64,
    sup_error_budget: f64,
}

impl TableWeight {
    pub fn new(values: Vec<Complex64>, sup_error_budget: f64) -> Result<TableWeight> {
        if !(sup_error_budget >= 0.0 && sup_error_budget.is_finite()) {
            return Err(Error::InvalidParameter(
                "sup_error_budget must be finite and nonnegative".into(),
            ));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite table value".into()));
        }
        let bound = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(TableWeight {
            values,
            bound,
            sup_error_budget,
        })
    }

    /// Reads a CSV with header `n,re,im`; `n` must run `0, 1, 2, …` without gaps.
    pub fn from_csv(path: &Path, sup_error_budget: f64) -> Result<TableWeight> {
        let shown = path.display().to_string();
        let bad = |message: String| Error::TableFormat {
            path: shown.clone(),
            message,
        };
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let cols: Vec<&str> = headers.iter().map(str::trim).collect();
        if cols != ["n", "re", "im"] {
            return Err(bad(format!("expected header n,re,im, found {}", cols.join(","))));
        }
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let field = |i: usize| record.get(i).map(str::trim).unwrap_or("");
            let n: u64 = field(0)
                .parse()
                .map_err(|_| bad(format!("row {}: bad index {:?}", row + 1, field(0))))?;
            if n != row as u64 {
                return Err(bad(format!("row {}: expected n = {row}, found {n}", row + 1)));
            }
            let re: f64 = field(1)
                .parse()
                .map_err(|_| bad(format!("row {}: bad re {:?}", row + 1, field(1))))?;
            let im: f64 = field(2)
                .parse()
                .map_err(|_| bad(format!("row {}: bad im {:?}", row + 1, field(2))))?;
            values.push(Complex64::new(re, im));
        }
        TableWeight::new(values, sup_error_budget)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_error_budget(&self) -> f64 {
        self.sup_error_budget
    }
}

/// A bounded complex weight sequence `b_n`, `n ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSequence {
    /// `e(p(n))` with `p(n) = Σ c_j n^j`.
    PolynomialPhase { coefficients: Vec<f64> },
    /// `F(base + nα)` on `T^d`.
    TorusNilseq {
        alpha: Vec<f64>,
        f: Observable,
        base: Vec<f64>,
    },
    /// `F(gⁿ·base·Γ)` on the Heisenberg nilmanifold.
    HeisenbergNilseq {
        g: HeisenbergElement,
        base: HeisenbergElement,
        f: InvariantFunction,
    },
    Product(Box<WeightSequence>, Box<WeightSequence>),
    Scaled {
        factor: Complex64,
        inner: Box<WeightSequence>,
    },
    Table(TableWeight),
}

impl WeightSequence {
    pub fn constant_one() -> WeightSequence {
        WeightSequence::PolynomialPhase {
            coefficients: vec![0.0],
        }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Result<WeightSequence> {
        if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "polynomial needs finite coefficients c0..cd".into(),
            ));
        }
        Ok(WeightSequence::PolynomialPhase { coefficients })
    }

    pub fn torus(alpha: Vec<f64>, f: Observable, base: Vec<f64>) -> Result<WeightSequence> {
        if f.dim() != alpha.len() || base.len() != alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                actual: if f.dim() != alpha.len() { f.dim() } else { base.len() },
            });
        }
        if base.iter().any(|b| !(0.0..1.0).contains(b)) || alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("torus base must lie in [0, 1)".into()));
        }
        Ok(WeightSequence::TorusNilseq { alpha, f, base })
    }

    pub fn heisenberg(
        g: HeisenbergElement,
        base: HeisenbergElement,
        f: InvariantFunction,
    ) -> WeightSequence {
        WeightSequence::HeisenbergNilseq { g, base, f }
    }

    pub fn scaled(factor: Complex64, inner: WeightSequence) -> WeightSequence {
        WeightSequence::Scaled {
            factor,
            inner: Box::new(inner),
        }
    }

    /// Uniform bound on `|b_n|`.
    pub fn bound(&self) -> f64 {
        match self {
            WeightSequence::PolynomialPhase { .. } => 1.0,
            WeightSequence::TorusNilseq { f, .. } => f.sup_bound(),
            WeightSequence::HeisenbergNilseq { f, .. } => f.bound(),
            WeightSequence::Product(l, r) => l.bound() * r.bound(),
            WeightSequence::Scaled { factor, inner } => factor.norm() * inner.bound(),
            WeightSequence::Table(t) => t.bound,
        }
    }

    /// Sup-distance budget to the exact nilsequence the table approximates.
    pub fn error_budget(&self) -> f64 {
        match self {
            WeightSequence::Table(t) => t.sup_error_budget,
            WeightSequence::Product(l, r) => {
                let (el, er) = (l.error_budget(), r.error_budget());
                l.bound() * er + r.bound() * el + el * er
            }
            WeightSequence::Scaled { factor, inner } => factor.norm() * inner.error_budget(),
            _ => 0.0,
        }
    }

    /// Checks that indices `0..end` can be evaluated.
    pub fn check_len(&self, end: u64) -> Result<()> {
        match self {
            WeightSequence::Table(t) => {
                if end > t.len() as u64 {
                    return Err(Error::TableTooShort {
                        needed: end,
                        len: t.len(),
                    });
                }
                Ok(())
            }
            WeightSequence::PolynomialPhase { coefficients } => {
                let deg = coefficients.len() as u32 - 1;
                // the difference table evaluates p up to end - 1 + deg
                let top = end as i128 + deg as i128;
                match top.checked_pow(deg) {
                    Some(v) if v < MAX_EXACT_POWER => Ok(()),
                    _ => Err(Error::PrecisionLimit(format!(
                        "degree-{deg} phase at n = {top} exceeds 2^106"
                    ))),
                }
            }
            WeightSequence::Product(l, r) => {
                l.check_len(end)?;
                r.check_len(end)
            }
            WeightSequence::Scaled { inner, .. } => inner.check_len(end),
            _ => Ok(()),
        }
    }

    /// `b_n` by direct evaluation.
    pub fn eval(&self, n: u64) -> Result<Complex64> {
        if let WeightSequence::Table(t) = self {
            return t
                .values
                .get(n as usize)
                .copied()
                .ok_or(Error::TableIndexOutOfRange { index: n, len: t.len() });
        }
        self.check_len(n + 1)?;
        Ok(self.eval_unchecked(n))
    }

    fn eval_unchecked(&self, n: u64) -> Complex64 {
        match self {
            WeightSequence::PolynomialPhase { coefficients } => {
                expi_dd(poly_phase(coefficients, n as i128))
            }
            WeightSequence::TorusNilseq { alpha, f, base } => {
                let x: Vec<f64> = alpha
                    .iter()
                    .zip(base)
                    .map(|(&a, &b)| frac_mul_int(a, n as i128).add_f64(b).frac_f64())
                    .collect();
                f.eval_real(&x)
            }
            WeightSequence::HeisenbergNilseq { g, base, f } => {
                let [x, y, z] = heisenberg::orbit_coords(g, base, n);
                f.eval(x, y, z)
            }
            WeightSequence::Product(l, r) => l.eval_unchecked(n) * r.eval_unchecked(n),
            WeightSequence::Scaled { factor, inner } => *factor * inner.eval_unchecked(n),
            WeightSequence::Table(t) => t.values[n as usize],
        }
    }

    /// Writes `b_start, b_{start+1}, …` into `out`. Polynomial phases run a
    /// forward-difference table reduced mod 1 at every step. The caller must
    /// have validated the range with [`check_len`](Self::check_len).
    pub(crate) fn fill(&self, start: u64, out: &mut [Complex64]) {
        match self {
            WeightSequence::PolynomialPhase { coefficients } => {
                fill_poly(coefficients, start, out)
            }
            WeightSequence::Product(l, r) => {
                l.fill(start, out);
                let mut tmp = vec![Complex64::new(0.0, 0.0); out.len()];
                r.fill(start, &mut tmp);
                for (o, t) in out.iter_mut().zip(&tmp) {
                    *o *= t;
                }
            }
            WeightSequence::Scaled { factor, inner } => {
                inner.fill(start, out);
                for o in out.iter_mut() {
                    *o = *factor * *o;
                }
            }
            WeightSequence::Table(t) => {
                let s = start as usize;
                out.copy_from_slice(&t.values[s..s + out.len()]);
            }
            _ => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.eval_unchecked(start + i as u64);
                }
            }
        }
    }

    /// Materialized `b_n` for `n` in `start..start + len`.
    pub fn values(&self, start: u64, len: usize) -> Result<Vec<Complex64>> {
        self.check_len(start + len as u64)?;
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (j, chunk) in out.chunks_mut(sum::BLOCK_LEN).enumerate() {
            self.fill(start + (j * sum::BLOCK_LEN) as u64, chunk);
        }
        Ok(out)
    }
}

/// `p(n) mod 1`, summing `frac(c_j · n^j)` in double-double.
fn poly_phase(coefficients: &[f64], n: i128) -> Dd {
    let mut acc = Dd::ZERO;
    let mut pow: i128 = 1;
    for (j, &c) in coefficients.iter().enumerate() {
        if j > 0 {
            pow *= n;
        }
        if c != 0.0 {
            acc = acc.add(frac_mul_int(c, pow)).frac();
        }
    }
    acc
}

fn fill_poly(coefficients: &[f64], start: u64, out: &mut [Complex64]) {
    let deg = coefficients.len() - 1;
    if deg == 0 {
        out.fill(expi_dd(poly_phase(coefficients, 0)));
        return;
    }
    // diffs[j] = Δ^j p(start) mod 1
    let mut diffs: Vec<Dd> = (0..=deg)
        .map(|i| poly_phase(coefficients, start as i128 + i as i128))
        .collect();
    for j in 1..=deg {
        for i in (j..=deg).rev() {
            diffs[i] = diffs[i].add(diffs[i - 1].neg()).frac();
        }
    }
    for o in out.iter_mut() {
        *o = expi(diffs[0].frac_f64());
        for j in 0..deg {
            diffs[j] = diffs[j].add(diffs[j + 1]).frac();
        }
    }
}

pub fn eval_weight(w: &WeightSequence, n: u64) -> Result<Complex64> {
    w.eval(n)
}

pub fn product_weight(w1: WeightSequence, w2: WeightSequence) -> WeightSequence {
    WeightSequence::Product(Box::new(w1), Box::new(w2))
}

/// Cesàro averages `A_N = (1/N) Σ_{n<N} b_n` along `schedule`, in one pass.
pub fn cesaro_nilseq(w: &WeightSequence, schedule: &[u64]) -> Result<ConvergenceReport> {
    crate::averages::check_schedule(schedule)?;
    let max = *schedule.last().expect("checked nonempty");
    w.check_len(max)?;
    let fill = |start: i64, out: &mut [Complex64]| w.fill(start as u64, out);
    let totals = sum::prefix_totals(0, schedule, &fill);
    let values = totals
        .iter()
        .zip(schedule)
        .map(|(s, &n)| s / n as f64)
        .collect();
    let mut report = ConvergenceReport::new(schedule.to_vec(), values);
    report.error_budget = w.error_budget();
    Ok(report)
}
