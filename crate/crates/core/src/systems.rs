//! Measure-preserving systems on tori.
//!
//! Three model families are supported, each with a closed-form orbit:
//!
//! * [`System::RotationTorus`]: `x ↦ x + α` on `T^d`.
//! * [`System::AnzaiSkew`]: `(x, y) ↦ (x + α, y + x)` on `T²`, with
//!   `Tⁿ(x, y) = (x + nα, y + nx + n(n−1)/2·α)`.
//! * [`System::ToralAutomorphism`]: a hyperbolic matrix in `GL₂(ℤ)` acting
//!   exactly on the lattice `(ℤ/q)²`, i.e. on the points `(p₁/q, p₂/q)`.
//!
//! All of them preserve normalized Lebesgue (Haar) measure.

use std::fmt;
use std::ops::Add;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::{expi, frac_mul_int, Dd};
use crate::error::{Error, Result};

/// Default lattice modulus `2³¹ − 1` for toral automorphism orbits.
pub const DEFAULT_MODULUS: u64 = 2_147_483_647;

/// A real parameter of a system.
///
/// Decimal literals are treated as irrational; a rational value has to be
/// declared as an explicit fraction. The two are never compared numerically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Param {
    Irrational(f64),
    Rational { num: i64, den: u64 },
}

impl Param {
    pub fn rational(num: i64, den: u64) -> Result<Param> {
        if den == 0 {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        let g = gcd(num.unsigned_abs(), den);
        Ok(Param::Rational {
            num: num / g as i64,
            den: den / g,
        })
    }

    pub fn value(&self) -> f64 {
        match *self {
            Param::Irrational(v) => v,
            Param::Rational { num, den } => num as f64 / den as f64,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Param::Rational { .. })
    }

    /// `frac(m · self)` as a double-double.
    pub fn frac_times(&self, m: i128) -> Dd {
        match *self {
            Param::Irrational(v) => frac_mul_int(v, m),
            Param::Rational { num, den } => {
                let r = (m * num as i128).rem_euclid(den as i128);
                // r / den is correctly rounded; the residue is below one ulp.
                Dd::new(r as f64 / den as f64)
            }
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Irrational(v) => write!(f, "{v:?}"),
            Param::Rational { num, den } => write!(f, "{num}/{den}"),
        }
    }
}

impl std::str::FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Param> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let num: i64 = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad numerator in {s:?}")))?;
            let den: u64 = q
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad denominator in {s:?}")))?;
            Param::rational(num, den)
        } else {
            let v: f64 = s
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad number {s:?}")))?;
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite value {s:?}")));
            }
            Ok(Param::Irrational(v))
        }
    }
}

impl Serialize for Param {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Param::Irrational(v) => s.serialize_f64(*v),
            Param::Rational { .. } => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Param, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Param::Irrational(v)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// A point of a system's phase space.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    /// Coordinates in `[0, 1)`.
    Real(Vec<f64>),
    /// The lattice point `(p₁/q, p₂/q)`.
    Lattice { residues: [u64; 2], modulus: u64 },
}

impl Point {
    pub fn real(coords: Vec<f64>) -> Result<Point> {
        if coords.iter().any(|c| !(0.0..1.0).contains(c)) {
            return Err(Error::InvalidPoint(format!(
                "coordinates must lie in [0, 1): {coords:?}"
            )));
        }
        Ok(Point::Real(coords))
    }

    pub fn lattice(p1: u64, p2: u64, modulus: u64) -> Result<Point> {
        if p1 >= modulus || p2 >= modulus {
            return Err(Error::InvalidPoint(format!(
                "residues ({p1}, {p2}) must lie in [0, {modulus})"
            )));
        }
        Ok(Point::Lattice {
            residues: [p1, p2],
            modulus,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Point::Real(c) => c.len(),
            Point::Lattice { .. } => 2,
        }
    }

    /// Coordinates as reals; lattice points become `p/q`.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            Point::Real(c) => c.clone(),
            Point::Lattice { residues, modulus } => {
                residues.iter().map(|&p| p as f64 / *modulus as f64).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub freq: Vec<i64>,
    pub coef: Complex64,
}

/// A trigonometric polynomial `f(x) = Σ c_k e(k·x)` on `T^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    dim: usize,
    // sorted by frequency, frequencies distinct
    terms: Vec<Term>,
    sup_bound: f64,
}

impl Observable {
    pub fn new(dim: usize, terms: Vec<(Vec<i64>, Complex64)>) -> Result<Observable> {
        if dim == 0 {
            return Err(Error::InvalidObservable("dimension must be positive".into()));
        }
        let mut out: Vec<Term> = Vec::with_capacity(terms.len());
        for (freq, coef) in terms {
            if freq.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: freq.len(),
                });
            }
            if !coef.re.is_finite() || !coef.im.is_finite() {
                return Err(Error::InvalidObservable("non-finite coefficient".into()));
            }
            out.push(Term { freq, coef });
        }
        out.sort_by(|a, b| a.freq.cmp(&b.freq));
        if out.windows(2).any(|w| w[0].freq == w[1].freq) {
            return Err(Error::InvalidObservable("repeated frequency".into()));
        }
        Ok(Observable::from_sorted(dim, out))
    }

    fn from_sorted(dim: usize, terms: Vec<Term>) -> Observable {
        let sup_bound = terms.iter().map(|t| t.coef.norm()).sum();
        Observable {
            dim,
            terms,
            sup_bound,
        }
    }

    pub fn constant(dim: usize, c: Complex64) -> Observable {
        Observable::from_sorted(
            dim,
            vec![Term {
                freq: vec![0; dim],
                coef: c,
            }],
        )
    }

    pub fn zero(dim: usize) -> Observable {
        Observable::from_sorted(dim, Vec::new())
    }

    /// The character `e(k·x)`.
    pub fn character(freq: Vec<i64>) -> Observable {
        let dim = freq.len();
        Observable::from_sorted(
            dim,
            vec![Term {
                freq,
                coef: Complex64::new(1.0, 0.0),
            }],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ |c_k|`, an upper bound for `sup |f|`.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// Sub-polynomial of the terms accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&[i64]) -> bool) -> Observable {
        let terms = self
            .terms
            .iter()
            .filter(|t| keep(&t.freq))
            .cloned()
            .collect();
        Observable::from_sorted(self.dim, terms)
    }

    pub fn scale(&self, s: Complex64) -> Observable {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                freq: t.freq.clone(),
                coef: t.coef * s,
            })
            .collect();
        Observable::from_sorted(self.dim, terms)
    }

    /// Complex conjugate `x ↦ conj f(x)`: frequencies negate.
    pub fn conj(&self) -> Observable {
        let mut terms: Vec<Term> = self
            .terms
            .iter()
            .map(|t| Term {
                freq: t.freq.iter().map(|k| -k).collect(),
                coef: t.coef.conj(),
            })
            .collect();
        terms.sort_by(|a, b| a.freq.cmp(&b.freq));
        Observable::from_sorted(self.dim, terms)
    }

    pub fn has_frequency(&self, freq: &[i64]) -> bool {
        self.terms
            .binary_search_by(|t| t.freq.as_slice().cmp(freq))
            .is_ok()
    }

    /// Coefficient of frequency `freq`, zero if absent.
    pub fn coefficient(&self, freq: &[i64]) -> Complex64 {
        self.terms
            .binary_search_by(|t| t.freq.as_slice().cmp(freq))
            .map(|i| self.terms[i].coef)
            .unwrap_or_default()
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: d,
            });
        }
        Ok(())
    }

    /// `f(x)`. Lattice points are evaluated through exact residue arithmetic.
    pub fn eval(&self, x: &Point) -> Result<Complex64> {
        self.check_dim(x.dim())?;
        Ok(match x {
            Point::Real(c) => self.eval_real(c),
            Point::Lattice { residues, modulus } => self.eval_lattice(*residues, *modulus),
        })
    }

    pub(crate) fn eval_real(&self, x: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut phase = Dd::ZERO;
            for (&k, &xi) in t.freq.iter().zip(x) {
                if k != 0 {
                    phase = phase.add(Dd::mul_exact(k as f64, xi));
                }
            }
            acc += t.coef * expi(phase.frac_f64());
        }
        acc
    }

    pub(crate) fn eval_lattice(&self, p: [u64; 2], q: u64) -> Complex64 {
        let qi = q as i128;
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let r = (t.freq[0] as i128 * p[0] as i128 + t.freq[1] as i128 * p[1] as i128)
                .rem_euclid(qi);
            acc += t.coef * expi(r as f64 / q as f64);
        }
        acc
    }

    /// `∫ f dμ`: the zero-frequency coefficient.
    pub fn integral(&self) -> Complex64 {
        self.coefficient(&vec![0; self.dim])
    }
}

pub fn eval_observable(obs: &Observable, x: &Point) -> Result<Complex64> {
    obs.eval(x)
}

pub fn integrate_observable(obs: &Observable) -> Complex64 {
    obs.integral()
}

/// `A mod q` for a 2×2 integer matrix.
type Mat2 = [[u64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2, q: u64) -> Mat2 {
    let q = q as u128;
    let mut c = [[0u64; 2]; 2];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let s = (a[i][0] as u128 * b[0][j] as u128 + a[i][1] as u128 * b[1][j] as u128) % q;
            *cell = s as u64;
        }
    }
    c
}

fn mat_pow(a: &Mat2, mut n: u64, q: u64) -> Mat2 {
    let mut result = [[1 % q, 0], [0, 1 % q]];
    let mut base = *a;
    while n > 0 {
        if n & 1 == 1 {
            result = mat_mul(&result, &base, q);
        }
        base = mat_mul(&base, &base, q);
        n >>= 1;
    }
    result
}

fn mat_apply(a: &Mat2, p: [u64; 2], q: u64) -> [u64; 2] {
    let qq = q as u128;
    [
        ((a[0][0] as u128 * p[0] as u128 + a[0][1] as u128 * p[1] as u128) % qq) as u64,
        ((a[1][0] as u128 * p[0] as u128 + a[1][1] as u128 * p[1] as u128) % qq) as u64,
    ]
}

fn is_probable_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        r
    };
    // deterministic witness set for 64-bit integers
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    RotationTorus,
    AnzaiSkew,
    ToralAutomorphism,
}

/// An explicit measure-preserving transformation of a torus.
#[derive(Clone, Debug, PartialEq)]
pub enum System {
    RotationTorus {
        alpha: Vec<Param>,
    },
    AnzaiSkew {
        alpha: Param,
    },
    ToralAutomorphism {
        matrix: [[i64; 2]; 2],
        modulus: u64,
        // matrix and its inverse reduced mod q
        forward: Mat2,
        backward: Mat2,
    },
}

impl System {
    pub fn rotation(alpha: Vec<Param>) -> Result<System> {
        if alpha.is_empty() {
            return Err(Error::InvalidSystem("rotation needs at least one angle".into()));
        }
        if alpha.iter().any(|a| !a.value().is_finite()) {
            return Err(Error::InvalidSystem("non-finite rotation angle".into()));
        }
        Ok(System::RotationTorus { alpha })
    }

    pub fn anzai(alpha: Param) -> Result<System> {
        if !alpha.value().is_finite() {
            return Err(Error::InvalidSystem("non-finite skew angle".into()));
        }
        Ok(System::AnzaiSkew { alpha })
    }

    /// Hyperbolic toral automorphism on the lattice `(ℤ/q)²`, `q` prime.
    pub fn toral(matrix: [[i64; 2]; 2], modulus: u64) -> Result<System> {
        let [[a, b], [c, d]] = matrix;
        let det = a * d - b * c;
        if det.abs() != 1 {
            return Err(Error::InvalidSystem(format!("|det A| must be 1, got {det}")));
        }
        if (a + d).abs() < 3 {
            return Err(Error::InvalidSystem(format!(
                "|trace A| must be at least 3 for a hyperbolic map, got {}",
                a + d
            )));
        }
        // A^k = I for some k would make the map periodic.
        let mut p = [[1i64, 0], [0, 1]];
        for k in 1..=12 {
            p = [
                [p[0][0] * a + p[0][1] * c, p[0][0] * b + p[0][1] * d],
                [p[1][0] * a + p[1][1] * c, p[1][0] * b + p[1][1] * d],
            ];
            if p == [[1, 0], [0, 1]] {
                return Err(Error::InvalidSystem(format!("A^{k} is the identity")));
            }
        }
        if !is_probable_prime(modulus) {
            return Err(Error::InvalidSystem(format!("modulus {modulus} is not prime")));
        }
        let q = modulus as i64;
        let red = |v: i64| v.rem_euclid(q) as u64;
        let forward = [[red(a), red(b)], [red(c), red(d)]];
        // A^{-1} = det · adj(A)
        let backward = [
            [red(det * d), red(-det * b)],
            [red(-det * c), red(det * a)],
        ];
        Ok(System::ToralAutomorphism {
            matrix,
            modulus,
            forward,
            backward,
        })
    }

    /// The cat map `[[2, 1], [1, 1]]` on `(ℤ/(2³¹−1))²`.
    pub fn cat_map() -> System {
        System::toral([[2, 1], [1, 1]], DEFAULT_MODULUS).expect("cat map is valid")
    }

    pub fn kind(&self) -> SystemKind {
        match self {
            System::RotationTorus { .. } => SystemKind::RotationTorus,
            System::AnzaiSkew { .. } => SystemKind::AnzaiSkew,
            System::ToralAutomorphism { .. } => SystemKind::ToralAutomorphism,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            System::RotationTorus { alpha } => alpha.len(),
            System::AnzaiSkew { .. } | System::ToralAutomorphism { .. } => 2,
        }
    }

    pub fn modulus(&self) -> Option<u64> {
        match self {
            System::ToralAutomorphism { modulus, .. } => Some(*modulus),
            _ => None,
        }
    }

    /// Rejects points of the wrong dimension or representation.
    pub fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.dim(),
            });
        }
        match (self, x) {
            (System::ToralAutomorphism { modulus, .. }, Point::Lattice { residues, modulus: m }) => {
                if m != modulus {
                    return Err(Error::InvalidPoint(format!(
                        "lattice point modulus {m} does not match system modulus {modulus}"
                    )));
                }
                if residues.iter().any(|p| p >= modulus) {
                    return Err(Error::InvalidPoint("residue out of range".into()));
                }
                Ok(())
            }
            (System::ToralAutomorphism { .. }, Point::Real(_)) => Err(Error::InvalidPoint(
                "toral automorphism orbits need a lattice point".into(),
            )),
            (_, Point::Lattice { .. }) => Err(Error::InvalidPoint(
                "lattice points are only valid for toral automorphisms".into(),
            )),
            (_, Point::Real(c)) => {
                if c.iter().any(|v| !(0.0..1.0).contains(v)) {
                    return Err(Error::InvalidPoint("coordinates must lie in [0, 1)".into()));
                }
                Ok(())
            }
        }
    }

    fn lattice_step(&self, n: i64) -> (Mat2, u64) {
        match self {
            System::ToralAutomorphism {
                modulus,
                forward,
                backward,
                ..
            } => {
                let base = if n >= 0 { forward } else { backward };
                (mat_pow(base, n.unsigned_abs(), *modulus), *modulus)
            }
            _ => unreachable!("lattice_step on a non-lattice system"),
        }
    }

    /// `Tⁿ(x₀)` by the closed form of the system. Negative `n` uses the
    /// inverse map.
    pub fn orbit_point(&self, x0: &Point, n: i64) -> Result<Point> {
        self.check_point(x0)?;
        Ok(match (self, x0) {
            (System::ToralAutomorphism { .. }, Point::Lattice { residues, modulus }) => {
                let (m, q) = self.lattice_step(n);
                Point::Lattice {
                    residues: mat_apply(&m, *residues, q),
                    modulus: *modulus,
                }
            }
            (_, Point::Real(c)) => Point::Real(self.real_orbit(c, n)),
            _ => unreachable!("checked above"),
        })
    }

    fn real_orbit(&self, x: &[f64], n: i64) -> Vec<f64> {
        let n = n as i128;
        match self {
            System::RotationTorus { alpha } => x
                .iter()
                .zip(alpha)
                .map(|(&xi, a)| a.frac_times(n).add_f64(xi).frac_f64())
                .collect(),
            System::AnzaiSkew { alpha } => {
                let (x0, y0) = (x[0], x[1]);
                let nx = alpha.frac_times(n).add_f64(x0).frac_f64();
                let tri = n * (n - 1) / 2;
                let ny = alpha
                    .frac_times(tri)
                    .add(frac_mul_int(x0, n))
                    .add_f64(y0)
                    .frac_f64();
                vec![nx, ny]
            }
            System::ToralAutomorphism { .. } => unreachable!("lattice system"),
        }
    }

    /// Writes `f(T^{step·n} x₀)` for `n = start, start+1, ...` into `out`.
    ///
    /// Real systems use the closed form per index; lattice systems jump to the
    /// first index with a matrix power and then iterate exactly.
    pub(crate) fn fill_orbit(
        &self,
        obs: &Observable,
        x0: &Point,
        step: i64,
        start: i64,
        out: &mut [Complex64],
    ) {
        match (self, x0) {
            (System::ToralAutomorphism { .. }, Point::Lattice { residues, modulus }) => {
                let (jump, q) = self.lattice_step(step * start);
                let (m, _) = self.lattice_step(step);
                let mut p = mat_apply(&jump, *residues, q);
                for o in out.iter_mut() {
                    *o = obs.eval_lattice(p, *modulus);
                    p = mat_apply(&m, p, q);
                }
            }
            (_, Point::Real(c)) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let n = step * (start + i as i64);
                    *o = obs.eval_real(&self.real_orbit(c, n));
                }
            }
            _ => unreachable!("point validated by caller"),
        }
    }

    /// Materialized `f(T^{step·n} x₀)` for `n` in `start..start + len`.
    pub fn observe(
        &self,
        obs: &Observable,
        x0: &Point,
        step: i64,
        start: i64,
        len: usize,
    ) -> Result<Vec<Complex64>> {
        self.check_point(x0)?;
        obs.check_dim(self.dim())?;
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (chunk_idx, chunk) in out.chunks_mut(crate::sum::BLOCK_LEN).enumerate() {
            let s = start + (chunk_idx * crate::sum::BLOCK_LEN) as i64;
            self.fill_orbit(obs, x0, step, s, chunk);
        }
        Ok(out)
    }
}

pub fn orbit_point(system: &System, x0: &Point, n: i64) -> Result<Point> {
    system.orbit_point(x0, n)
}

/// `E[f | Z_k]` for the model systems.
///
/// * rotation: the system is its own Kronecker factor, so `f` is kept.
/// * toral automorphism: all factors are trivial, so only the constant term
///   survives.
/// * Anzai skew: `Z₁` is the `x`-rotation (terms with zero `y`-frequency);
///   from `k = 2` on the whole system is its own factor.
///
/// `k = 0` is the trivial factor (constants) for every system.
pub fn project_zk(system: &System, obs: &Observable, k: u32) -> Result<Observable> {
    obs.check_dim(system.dim())?;
    let zero = vec![0i64; obs.dim()];
    Ok(match (system.kind(), k) {
        (_, 0) | (SystemKind::ToralAutomorphism, _) => obs.filter(|f| f == zero.as_slice()),
        (SystemKind::RotationTorus, _) => obs.clone(),
        (SystemKind::AnzaiSkew, 1) => obs.filter(|f| f[1] == 0),
        (SystemKind::AnzaiSkew, _) => obs.clone(),
    })
}

/// `f − E[f | Z_k]`: the terms dropped by [`project_zk`].
pub fn project_zk_complement(system: &System, obs: &Observable, k: u32) -> Result<Observable> {
    let kept = project_zk(system, obs, k)?;
    Ok(obs.filter(|f| !kept.has_frequency(f)))
}
