//! Weighted ergodic averages along closed-form orbits.
//!
//! Every average here has the shape
//!
//! ```text
//! A_N = (1/N) Σ_n  f₁(T^{a n} x₀) · f₂(T^{b n} x₀) · w(n)
//! ```
//!
//! with some of the factors absent. [`AverageSpec`] describes one such
//! average; the free functions are thin constructors for the named cases.
//! By default `n` runs over `1..=N`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::{expi_dd, frac_mul_int};
use crate::error::{Error, Result};
use crate::fourier::{self, SupEstimate};
use crate::nilseq::WeightSequence;
use crate::seminorms::SeminormEstimate;
use crate::sum;
use crate::systems::{Observable, Param, Point, System};

/// First summation index: `n = 0..N−1` or `n = 1..N`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum IndexBase {
    Zero,
    #[default]
    One,
}

impl TryFrom<u8> for IndexBase {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(IndexBase::Zero),
            1 => Ok(IndexBase::One),
            _ => Err(format!("index_base must be 0 or 1, got {v}")),
        }
    }
}

impl From<IndexBase> for u8 {
    fn from(b: IndexBase) -> u8 {
        b.first() as u8
    }
}

impl IndexBase {
    pub fn first(self) -> i64 {
        match self {
            IndexBase::Zero => 0,
            IndexBase::One => 1,
        }
    }
}

/// Averages along a list of lengths, with the gaps between consecutive
/// entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceReport {
    pub schedule: Vec<u64>,
    pub values: Vec<Complex64>,
    /// `dyadic_deltas[i] = |A_{N_{i+1}} − A_{N_i}|`; one shorter than `values`.
    pub dyadic_deltas: Vec<f64>,
    pub sup_data: Option<Vec<SupEstimate>>,
    pub seminorms: Option<Vec<SeminormEstimate>>,
    /// Additive error carried in from table-backed weights.
    pub error_budget: f64,
}

impl ConvergenceReport {
    pub fn new(schedule: Vec<u64>, values: Vec<Complex64>) -> ConvergenceReport {
        let dyadic_deltas = values.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
        ConvergenceReport {
            schedule,
            values,
            dyadic_deltas,
            ..Default::default()
        }
    }

    /// `|A_{N'} − A_N|` where `N'` is the schedule entry after `n`.
    pub fn delta_at(&self, n: u64) -> Option<f64> {
        let i = self.schedule.iter().position(|&m| m == n)?;
        self.dyadic_deltas.get(i).copied()
    }

    pub fn value_at(&self, n: u64) -> Option<Complex64> {
        let i = self.schedule.iter().position(|&m| m == n)?;
        Some(self.values[i])
    }
}

pub(crate) fn check_schedule(schedule: &[u64]) -> Result<()> {
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSchedule);
    }
    Ok(())
}

/// `{2^lo, …, 2^hi}`.
pub fn dyadic_schedule(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|k| 1u64 << k).collect()
}

#[derive(Clone, Copy, Debug)]
pub enum Weight<'a> {
    Unit,
    /// `e(nt)`, with `n·t` reduced in double-double.
    Frequency(f64),
    Sequence(&'a WeightSequence),
}

/// One weighted multiple average along orbits of `system` from `x0`.
#[derive(Clone, Debug)]
pub struct AverageSpec<'a> {
    system: &'a System,
    x0: &'a Point,
    factors: Vec<(&'a Observable, i64)>,
    weight: Weight<'a>,
    index_base: IndexBase,
}

fn check_exponents(a: i64, b: i64) -> Result<()> {
    if a == b || a == 0 || b == 0 {
        return Err(Error::InvalidExponents { a, b });
    }
    Ok(())
}

impl<'a> AverageSpec<'a> {
    /// `(1/N) Σ Π_i f_i(T^{s_i n} x₀) · w(n)` for arbitrary factor steps.
    pub fn new(
        system: &'a System,
        x0: &'a Point,
        factors: Vec<(&'a Observable, i64)>,
        weight: Weight<'a>,
    ) -> Result<Self> {
        system.check_point(x0)?;
        for (f, _) in &factors {
            if f.dim() != system.dim() {
                return Err(Error::DimensionMismatch {
                    expected: system.dim(),
                    actual: f.dim(),
                });
            }
        }
        if let Weight::Frequency(t) = weight {
            if !t.is_finite() {
                return Err(Error::InvalidParameter("frequency must be finite".into()));
            }
        }
        Ok(AverageSpec {
            system,
            x0,
            factors,
            weight,
            index_base: IndexBase::One,
        })
    }

    pub fn birkhoff(system: &'a System, obs: &'a Observable, x0: &'a Point) -> Result<Self> {
        Self::new(system, x0, vec![(obs, 1)], Weight::Unit)
    }

    pub fn double(
        system: &'a System,
        obs1: &'a Observable,
        obs2: &'a Observable,
        x0: &'a Point,
        a: i64,
        b: i64,
    ) -> Result<Self> {
        check_exponents(a, b)?;
        Self::new(system, x0, vec![(obs1, a), (obs2, b)], Weight::Unit)
    }

    pub fn with_weight(mut self, weight: Weight<'a>) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_index_base(mut self, base: IndexBase) -> Self {
        self.index_base = base;
        self
    }

    pub fn index_base(&self) -> IndexBase {
        self.index_base
    }

    /// `Π ‖f_i‖_sup · bound(w)`, an upper bound for every `|A_N|`.
    pub fn bound(&self) -> f64 {
        let w = match self.weight {
            Weight::Sequence(s) => s.bound(),
            _ => 1.0,
        };
        self.factors.iter().map(|(f, _)| f.sup_bound()).product::<f64>() * w
    }

    pub fn error_budget(&self) -> f64 {
        match self.weight {
            Weight::Sequence(s) => {
                s.error_budget() * self.factors.iter().map(|(f, _)| f.sup_bound()).product::<f64>()
            }
            _ => 0.0,
        }
    }

    fn check_len(&self, n: u64) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if let Weight::Sequence(s) = self.weight {
            s.check_len(self.index_base.first() as u64 + n)?;
        }
        Ok(())
    }

    /// Term values for indices `start..start + out.len()`.
    fn fill(&self, start: i64, out: &mut [Complex64]) {
        let mut tmp = vec![Complex64::new(0.0, 0.0); out.len()];
        match self.factors.split_first() {
            Some(((f, step), rest)) => {
                self.system.fill_orbit(f, self.x0, *step, start, out);
                for (g, s) in rest {
                    self.system.fill_orbit(g, self.x0, *s, start, &mut tmp);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o *= t;
                    }
                }
            }
            None => out.fill(Complex64::new(1.0, 0.0)),
        }
        match self.weight {
            Weight::Unit => {}
            Weight::Frequency(t) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let n = start as i128 + i as i128;
                    *o *= expi_dd(frac_mul_int(t, n));
                }
            }
            Weight::Sequence(w) => {
                w.fill(start as u64, &mut tmp);
                for (o, t) in out.iter_mut().zip(&tmp) {
                    *o *= t;
                }
            }
        }
    }

    /// `A_N`.
    pub fn mean(&self, n: u64) -> Result<Complex64> {
        self.check_len(n)?;
        let fill = |s: i64, out: &mut [Complex64]| self.fill(s, out);
        Ok(sum::block_total(self.index_base.first(), n, &fill) / n as f64)
    }

    /// The `N` summands, in index order.
    pub fn terms(&self, n: u64) -> Result<Vec<Complex64>> {
        self.check_len(n)?;
        let mut out = vec![Complex64::new(0.0, 0.0); n as usize];
        let first = self.index_base.first();
        for (j, chunk) in out.chunks_mut(sum::BLOCK_LEN).enumerate() {
            self.fill(first + (j * sum::BLOCK_LEN) as i64, chunk);
        }
        Ok(out)
    }

    /// `A_N` along `schedule` in a single pass; each value equals [`mean`](Self::mean).
    pub fn run_schedule(&self, schedule: &[u64]) -> Result<ConvergenceReport> {
        check_schedule(schedule)?;
        self.check_len(*schedule.last().expect("nonempty"))?;
        let fill = |s: i64, out: &mut [Complex64]| self.fill(s, out);
        let totals = sum::prefix_totals(self.index_base.first(), schedule, &fill);
        let values = totals
            .iter()
            .zip(schedule)
            .map(|(s, &n)| s / n as f64)
            .collect();
        let mut report = ConvergenceReport::new(schedule.to_vec(), values);
        report.error_budget = self.error_budget();
        Ok(report)
    }

    /// Certified `sup_t |(1/N) Σ term_n · e(nt)|` on a grid of spacing
    /// `ε/(2πNB)`.
    pub fn sup_over_frequency(&self, n: u64, eps: f64) -> Result<SupEstimate> {
        fourier::sup_over_frequency(&self.terms(n)?, eps)
    }
}

pub fn run_schedule(spec: &AverageSpec<'_>, schedule: &[u64]) -> Result<ConvergenceReport> {
    spec.run_schedule(schedule)
}

/// `(1/N) Σ_{n=1}^{N} f(Tⁿx₀)`.
pub fn birkhoff_avg(system: &System, obs: &Observable, x0: &Point, n: u64) -> Result<Complex64> {
    AverageSpec::birkhoff(system, obs, x0)?.mean(n)
}

/// `(1/N) Σ_{n=1}^{N} f(Tⁿx₀) e(nt)`.
pub fn ww_avg(system: &System, obs: &Observable, x0: &Point, t: f64, n: u64) -> Result<Complex64> {
    AverageSpec::birkhoff(system, obs, x0)?
        .with_weight(Weight::Frequency(t))
        .mean(n)
}

/// Certified supremum over `t` of `|ww_avg(…, t, N)|`.
pub fn ww_sup(system: &System, obs: &Observable, x0: &Point, n: u64, eps: f64) -> Result<SupEstimate> {
    AverageSpec::birkhoff(system, obs, x0)?.sup_over_frequency(n, eps)
}

/// `(1/N) Σ f₁(T^{an}x₀) f₂(T^{bn}x₀)`.
pub fn double_avg(
    system: &System,
    obs1: &Observable,
    obs2: &Observable,
    x0: &Point,
    a: i64,
    b: i64,
    n: u64,
) -> Result<Complex64> {
    AverageSpec::double(system, obs1, obs2, x0, a, b)?.mean(n)
}

/// `W_N(f₁, f₂, x₀, t) = (1/N) Σ f₁(T^{an}x₀) f₂(T^{bn}x₀) e(nt)`.
#[allow(clippy::too_many_arguments)]
pub fn wwdr_avg(
    system: &System,
    obs1: &Observable,
    obs2: &Observable,
    x0: &Point,
    a: i64,
    b: i64,
    t: f64,
    n: u64,
) -> Result<Complex64> {
    AverageSpec::double(system, obs1, obs2, x0, a, b)?
        .with_weight(Weight::Frequency(t))
        .mean(n)
}

/// Double average weighted by `e(p(n))`.
#[allow(clippy::too_many_arguments)]
pub fn poly_wwdr_avg(
    system: &System,
    obs1: &Observable,
    obs2: &Observable,
    x0: &Point,
    a: i64,
    b: i64,
    p: &[f64],
    n: u64,
) -> Result<Complex64> {
    let w = WeightSequence::polynomial(p.to_vec())?;
    AverageSpec::double(system, obs1, obs2, x0, a, b)?
        .with_weight(Weight::Sequence(&w))
        .mean(n)
}

/// Double average weighted by a nilsequence. For table-backed weights the
/// true limit may differ by up to [`AverageSpec::error_budget`].
#[allow(clippy::too_many_arguments)]
pub fn nil_wwdr_avg(
    system: &System,
    obs1: &Observable,
    obs2: &Observable,
    x0: &Point,
    a: i64,
    b: i64,
    w: &WeightSequence,
    n: u64,
) -> Result<Complex64> {
    AverageSpec::double(system, obs1, obs2, x0, a, b)?
        .with_weight(Weight::Sequence(w))
        .mean(n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSystemAverage {
    pub nodes: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
    /// `(mean over nodes of |value|²)^{1/2}`: exact for trigonometric
    /// polynomials of degree below the per-axis node count.
    pub l2_norm: f64,
}

/// For each node `y` of a uniform grid on `Y`, the average
/// `(1/N) Σ f₁(T^{an}x₀) f₂(T^{bn}x₀) Π_{i=1}^{k} g_i(S^{in} y)`.
#[allow(clippy::too_many_arguments)]
pub fn dual_system_avg(
    system_t: &System,
    obs1: &Observable,
    obs2: &Observable,
    x0: &Point,
    a: i64,
    b: i64,
    system_s: &System,
    g_list: &[Observable],
    nodes_per_axis: usize,
    n: u64,
    index_base: IndexBase,
) -> Result<DualSystemAverage> {
    if g_list.is_empty() || g_list.len() > 3 {
        return Err(Error::Unsupported(format!(
            "dual-system averages take 1 to 3 functions, got {}",
            g_list.len()
        )));
    }
    let alpha: &[Param] = match system_s {
        System::RotationTorus { alpha } => alpha,
        _ => {
            return Err(Error::Unsupported(
                "the dual system must be a rotation torus".into(),
            ))
        }
    };
    let d = alpha.len();
    for g in g_list {
        if g.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: g.dim(),
            });
        }
    }
    let total_nodes = nodes_per_axis
        .checked_pow(d as u32)
        .ok_or_else(|| Error::InvalidParameter("quadrature grid too large".into()))?;
    if total_nodes < 64 {
        return Err(Error::InvalidParameter(format!(
            "quadrature grid needs at least 64 nodes, got {total_nodes}"
        )));
    }

    let base = AverageSpec::double(system_t, obs1, obs2, x0, a, b)?.with_index_base(index_base);
    let prefix = base.terms(n)?;
    let first = index_base.first();

    let nodes: Vec<Vec<f64>> = (0..total_nodes)
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let j = idx % nodes_per_axis;
                    idx /= nodes_per_axis;
                    j as f64 / nodes_per_axis as f64
                })
                .collect()
        })
        .collect();

    let mut values = Vec::with_capacity(total_nodes);
    for y in &nodes {
        let y0 = Point::Real(y.clone());
        let fill = |s: i64, out: &mut [Complex64]| {
            let off = (s - first) as usize;
            out.copy_from_slice(&prefix[off..off + out.len()]);
            let mut tmp = vec![Complex64::new(0.0, 0.0); out.len()];
            for (i, g) in g_list.iter().enumerate() {
                system_s.fill_orbit(g, &y0, i as i64 + 1, s, &mut tmp);
                for (o, t) in out.iter_mut().zip(&tmp) {
                    *o *= t;
                }
            }
        };
        values.push(sum::block_total(first, n, &fill) / n as f64);
    }
    let sq: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
    let l2_norm = (sum::pairwise_sum_f64(&sq) / total_nodes as f64).sqrt();
    Ok(DualSystemAverage {
        nodes,
        values,
        l2_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::expi;

    const PHI: f64 = 0.618_033_988_749_894_9;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rot(a: f64) -> System {
        System::rotation(vec![Param::Irrational(a)]).unwrap()
    }

    fn e1() -> Observable {
        Observable::character(vec![1])
    }

    #[test]
    fn constant_observable_averages_to_one() {
        let s = rot(PHI);
        let one = Observable::constant(1, c(1.0, 0.0));
        let x0 = Point::real(vec![0.3]).unwrap();
        for n in [1u64, 7, 4096, 10_000] {
            assert_eq!(birkhoff_avg(&s, &one, &x0, n).unwrap(), c(1.0, 0.0));
        }
    }

    #[test]
    fn golden_rotation_birkhoff_geometric_bound() {
        let s = rot(PHI);
        let x0 = Point::real(vec![0.0]).unwrap();
        let n = 1u64 << 16;
        let v = birkhoff_avg(&s, &e1(), &x0, n).unwrap();
        let bound = 2.0 / (n as f64 * (c(1.0, 0.0) - expi(PHI)).norm());
        assert!(v.norm() <= bound + 1e-15);
        assert!(v.norm() < 1e-3);
    }

    #[test]
    fn cat_map_birkhoff_is_small() {
        // oracle run: |A| ≈ 2.6e-3 for e(x) from (1/q, 0); frozen with margin
        let cat = System::cat_map();
        let x0 = Point::lattice(1, 0, crate::systems::DEFAULT_MODULUS).unwrap();
        let f = Observable::character(vec![1, 0]);
        let v = birkhoff_avg(&cat, &f, &x0, 1 << 16).unwrap();
        assert!(v.norm() < 0.05, "{v}");
    }

    #[test]
    fn ww_examples() {
        let s = rot(PHI);
        let x0 = Point::real(vec![0.17]).unwrap();
        for n in [1u64, 100, 5000] {
            assert_eq!(ww_avg(&s, &e1(), &x0, 0.0, n).unwrap(), birkhoff_avg(&s, &e1(), &x0, n).unwrap());
            // t = 1 − α: every summand equals e(x₀)
            let v = ww_avg(&s, &e1(), &x0, 1.0 - PHI, n).unwrap();
            assert!((v - expi(0.17)).norm() < 1e-12);
        }
        let one = Observable::constant(1, c(1.0, 0.0));
        for n in [1u64, 2, 3, 1000, 1001] {
            let v = ww_avg(&s, &one, &x0, 0.5, n).unwrap();
            let want = if n % 2 == 0 { 0.0 } else { -1.0 / n as f64 };
            assert_eq!(v, c(want, 0.0));
        }
    }

    #[test]
    fn ww_sup_examples() {
        let s = rot(PHI);
        let x0 = Point::real(vec![0.4]).unwrap();
        for n in [256u64, 1000, 4096] {
            let r = ww_sup(&s, &e1(), &x0, n, 0.01).unwrap();
            assert!(r.value >= 1.0 - 0.01, "N = {n}: {r:?}");
        }
        let zero = Observable::zero(1);
        assert_eq!(ww_sup(&s, &zero, &x0, 1000, 0.01).unwrap().value, 0.0);

        // oracle run: ≈ 0.0196 for e(x) on the cat map from (1/q, 0)
        let cat = System::cat_map();
        let p = Point::lattice(1, 0, crate::systems::DEFAULT_MODULUS).unwrap();
        let r = ww_sup(&cat, &Observable::character(vec![1, 0]), &p, 1 << 15, 0.01).unwrap();
        assert!(r.value < 0.05, "{r:?}");
    }

    #[test]
    fn double_avg_examples() {
        let s = rot(PHI);
        let x0 = Point::real(vec![0.21]).unwrap();
        let one = Observable::constant(1, c(1.0, 0.0));
        let n = 3000;
        // obs2 ≡ 1 reduces to the Birkhoff average of T^a
        let pow3 = rot((3.0 * PHI).fract());
        let lhs = double_avg(&s, &e1(), &one, &x0, 3, 1, n).unwrap();
        let rhs = birkhoff_avg(&pow3, &e1(), &x0, n).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);

        // a = 1, b = 2: e(2x₀)·(1/N)Σ e(3nα)
        let v = double_avg(&s, &e1(), &e1(), &x0, 1, 2, n).unwrap();
        let bound = 2.0 / (n as f64 * (c(1.0, 0.0) - expi(3.0 * PHI)).norm());
        assert!(v.norm() <= bound + 1e-14);

        // a = 1, b = −1: the nα terms cancel
        let v = double_avg(&s, &e1(), &e1(), &x0, 1, -1, n).unwrap();
        assert!((v - expi(0.42)).norm() < 1e-12);
    }

    #[test]
    fn invalid_exponents() {
        let s = rot(PHI);
        let x0 = Point::real(vec![0.0]).unwrap();
        for (a, b) in [(2, 2), (0, 1), (1, 0)] {
            assert!(matches!(
                double_avg(&s, &e1(), &e1(), &x0, a, b, 10),
                Err(Error::InvalidExponents { .. })
            ));
        }
    }

    #[test]
    fn wwdr_examples() {
        let s = rot(PHI);
        let x0 = Point::real(vec![0.33]).unwrap();
        let n = 2048;
        assert_eq!(
            wwdr_avg(&s, &e1(), &e1(), &x0, 1, 2, 0.0, n).unwrap(),
            double_avg(&s, &e1(), &e1(), &x0, 1, 2, n).unwrap()
        );
        let c1 = Observable::constant(1, c(0.7, 0.0));
        let c2 = Observable::constant(1, c(-2.0, 0.5));
        for n in [10u64, 11] {
            let v = wwdr_avg(&s, &c1, &c2, &x0, 1, 2, 0.5, n).unwrap();
            let want = if n % 2 == 0 { c(0.0, 0.0) } else { -(c(0.7, 0.0) * c(-2.0, 0.5)) / n as f64 };
            assert!((v - want).norm() < 1e-15);
        }
        // t = 1 − frac(3α) is resonant: |A_N| = 1
        let t = 1.0 - (3.0 * PHI).fract();
        for n in [1u64, 100, 4097] {
            let v = wwdr_avg(&s, &e1(), &e1(), &x0, 1, 2, t, n).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn polynomial_and_nilsequence_reductions() {
        let s = System::anzai(Param::Irrational(PHI)).unwrap();
        let x0 = Point::real(vec![0.1, 0.8]).unwrap();
        let f1 = Observable::new(2, vec![(vec![0, 1], c(1.0, 0.0)), (vec![1, 0], c(0.0, 0.5))]).unwrap();
        let f2 = Observable::character(vec![1, 1]);
        let (t, n) = (0.2718, 5000);
        let base = wwdr_avg(&s, &f1, &f2, &x0, 1, 2, t, n).unwrap();
        let poly = poly_wwdr_avg(&s, &f1, &f2, &x0, 1, 2, &[0.0, t], n).unwrap();
        assert!((base - poly).norm() < 1e-12);
        let w = WeightSequence::polynomial(vec![0.0, t]).unwrap();
        let nil = nil_wwdr_avg(&s, &f1, &f2, &x0, 1, 2, &w, n).unwrap();
        assert!((base - nil).norm() < 1e-12);
        let dbl = double_avg(&s, &f1, &f2, &x0, 1, 2, n).unwrap();
        assert_eq!(poly_wwdr_avg(&s, &f1, &f2, &x0, 1, 2, &[0.0], n).unwrap(), dbl);
        let one = WeightSequence::constant_one();
        assert_eq!(nil_wwdr_avg(&s, &f1, &f2, &x0, 1, 2, &one, n).unwrap(), dbl);
    }

    #[test]
    fn weyl_average_through_double_recurrence() {
        let s = rot(PHI);
        let one = Observable::constant(1, c(1.0, 0.0));
        let x0 = Point::real(vec![0.0]).unwrap();
        let v = poly_wwdr_avg(&s, &one, &one, &x0, 1, 2, &[0.0, 0.0, PHI], 1 << 16).unwrap();
        assert!(v.norm() < 0.02);
    }

    #[test]
    fn table_weight_needs_enough_values() {
        use crate::nilseq::TableWeight;
        let s = rot(PHI);
        let x0 = Point::real(vec![0.0]).unwrap();
        let w = WeightSequence::Table(TableWeight::new(vec![c(1.0, 0.0); 100], 0.01).unwrap());
        // n = 1..=100 needs index 100
        assert!(matches!(
            nil_wwdr_avg(&s, &e1(), &e1(), &x0, 1, 2, &w, 100),
            Err(Error::TableTooShort { .. })
        ));
        assert!(nil_wwdr_avg(&s, &e1(), &e1(), &x0, 1, 2, &w, 99).is_ok());
        let f = e1();
        let spec = AverageSpec::double(&s, &f, &f, &x0, 1, 2).unwrap().with_weight(Weight::Sequence(&w));
        assert_eq!(spec.run_schedule(&[10, 20]).unwrap().error_budget, 0.01);
    }

    #[test]
    fn dual_system_reductions() {
        let t_sys = System::anzai(Param::Irrational(PHI)).unwrap();
        let x0 = Point::real(vec![0.3, 0.6]).unwrap();
        let f1 = Observable::character(vec![0, 1]);
        let f2 = Observable::new(2, vec![(vec![1, 1], c(0.5, 0.0)), (vec![0, 0], c(0.25, 0.0))]).unwrap();
        let t = 0.377;
        let s_sys = rot(t);
        let n = 3000;
        let r = dual_system_avg(&t_sys, &f1, &f2, &x0, 1, 2, &s_sys, &[e1()], 64, n, IndexBase::One).unwrap();
        let w = wwdr_avg(&t_sys, &f1, &f2, &x0, 1, 2, t, n).unwrap();
        for (y, v) in r.nodes.iter().zip(&r.values) {
            assert!((v - expi(y[0]) * w).norm() < 1e-12);
        }
        assert!((r.l2_norm - w.norm()).abs() < 1e-12);

        let one = Observable::constant(1, c(1.0, 0.0));
        let r = dual_system_avg(&t_sys, &f1, &f2, &x0, 1, 2, &s_sys, &[one.clone(), one], 64, n, IndexBase::One).unwrap();
        let d = double_avg(&t_sys, &f1, &f2, &x0, 1, 2, n).unwrap();
        assert!(r.values.iter().all(|v| (v - d).norm() < 1e-12));

        assert!(dual_system_avg(&t_sys, &f1, &f2, &x0, 1, 2, &s_sys, &[], 64, n, IndexBase::One).is_err());
        assert!(dual_system_avg(&t_sys, &f1, &f2, &x0, 1, 2, &s_sys, &[e1()], 32, n, IndexBase::One).is_err());
        assert!(dual_system_avg(&t_sys, &f1, &f2, &x0, 1, 2, &t_sys, std::slice::from_ref(&f1), 64, n, IndexBase::One).is_err());
    }

    #[test]
    fn dual_system_l2_trend_for_two_functions() {
        // trend oracle: the limit exists, so late dyadic gaps shrink relative to early ones
        let t_sys = rot(2f64.sqrt() - 1.0);
        let x0 = Point::real(vec![0.15]).unwrap();
        let s_sys = rot(PHI);
        let g = [e1(), Observable::character(vec![-1])];
        let norms: Vec<f64> = [1u64 << 8, 1 << 9, 1 << 13, 1 << 14]
            .iter()
            .map(|&n| dual_system_avg(&t_sys, &e1(), &e1(), &x0, 1, 2, &s_sys, &g, 64, n, IndexBase::One).unwrap().l2_norm)
            .collect();
        assert!((norms[3] - norms[2]).abs() < (norms[1] - norms[0]).abs());
    }

    #[test]
    fn schedule_matches_pointwise_means() {
        let s = System::cat_map();
        let x0 = Point::lattice(7, 11, crate::systems::DEFAULT_MODULUS).unwrap();
        let f = Observable::new(2, vec![(vec![1, 0], c(1.0, 0.0)), (vec![0, 0], c(0.5, 0.0))]).unwrap();
        let g = Observable::character(vec![1, 2]);
        let spec = AverageSpec::double(&s, &f, &g, &x0, 1, -2).unwrap();
        let sched = dyadic_schedule(10, 13);
        let rep = spec.run_schedule(&sched).unwrap();
        for (&n, v) in sched.iter().zip(&rep.values) {
            assert_eq!(spec.mean(n).unwrap(), *v);
        }
        assert_eq!(rep.dyadic_deltas.len(), 3);
        assert_eq!(rep.delta_at(1024), Some((rep.values[1] - rep.values[0]).norm()));
    }

    #[test]
    fn invalid_schedules() {
        let s = rot(PHI);
        let x0 = Point::real(vec![0.0]).unwrap();
        let f = e1();
        let spec = AverageSpec::birkhoff(&s, &f, &x0).unwrap();
        assert!(matches!(spec.run_schedule(&[]), Err(Error::InvalidSchedule)));
        assert!(matches!(spec.run_schedule(&[4, 4]), Err(Error::InvalidSchedule)));
        assert!(matches!(spec.run_schedule(&[0, 4]), Err(Error::InvalidSchedule)));
    }
}
