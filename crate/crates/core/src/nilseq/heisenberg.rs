//! The Heisenberg group in coordinates `(a, b, c)` with
//! `(a, b, c)·(a′, b′, c′) = (a + a′, b + b′, c + c′ + a·b′)` and its integer
//! lattice `Γ = ℤ³`.

use std::ops::Add;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dd::{expi, frac_mul_dd_int, frac_mul_int, Dd, ONE_MINUS_ULP};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HeisenbergElement {
    pub const IDENTITY: HeisenbergElement = HeisenbergElement {
        a: 0.0,
        b: 0.0,
        c: 0.0,
    };

    pub fn new(a: f64, b: f64, c: f64) -> Self {
        HeisenbergElement { a, b, c }
    }

    pub fn mul(&self, o: &HeisenbergElement) -> HeisenbergElement {
        HeisenbergElement {
            a: self.a + o.a,
            b: self.b + o.b,
            c: self.c + o.c + self.a * o.b,
        }
    }

    pub fn inverse(&self) -> HeisenbergElement {
        HeisenbergElement {
            a: -self.a,
            b: -self.b,
            c: self.a * self.b - self.c,
        }
    }

    /// Right translation by a lattice element.
    pub fn translate(&self, g: [i64; 3]) -> HeisenbergElement {
        self.mul(&HeisenbergElement::new(g[0] as f64, g[1] as f64, g[2] as f64))
    }

    /// `gⁿ = (na, nb, nc + ab·n(n−1)/2)`.
    pub fn pow(&self, n: u64) -> HeisenbergElement {
        let nf = n as f64;
        let tri = (n as u128 * n.saturating_sub(1) as u128 / 2) as f64;
        HeisenbergElement {
            a: nf * self.a,
            b: nf * self.b,
            c: nf * self.c + self.a * self.b * tri,
        }
    }

    pub fn max_abs_diff(&self, o: &HeisenbergElement) -> f64 {
        (self.a - o.a)
            .abs()
            .max((self.b - o.b).abs())
            .max((self.c - o.c).abs())
    }
}

pub fn heisenberg_pow(g: &HeisenbergElement, n: u64) -> HeisenbergElement {
    g.pow(n)
}

/// `floor(x)` and `x − floor(x)` with the remainder kept strictly below one.
fn wrap_unit(x: f64) -> (f64, i64) {
    let f = x.floor();
    let r = x - f;
    if r >= 1.0 {
        (ONE_MINUS_ULP, f as i64)
    } else {
        (r, f as i64)
    }
}

/// Canonical representative of `eΓ` in the half-open cube `[0, 1)³`.
///
/// Returns `(e·γ, γ)` with `γ = (p, q, r)`, `p = −⌊a⌋`, `q = −⌊b⌋`, and `r`
/// chosen so the third coordinate lands in `[0, 1)`.
pub fn reduce_fundamental(e: &HeisenbergElement) -> (HeisenbergElement, [i64; 3]) {
    let (x, fa) = wrap_unit(e.a);
    let (y, fb) = wrap_unit(e.b);
    let (p, q) = (-fa, -fb);
    // c + r + a·q; the integer part of a·q cancels against r
    let shifted = e.c + e.a * q as f64;
    let (z, fz) = wrap_unit(shifted);
    (HeisenbergElement::new(x, y, z), [p, q, -fz])
}

/// A continuous function on `G/Γ`, given by a `Γ`-invariant function on `G`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InvariantFunction {
    /// `F(x, y, z) = e(mx + ky)`: factors through the base torus.
    TorusChar { m: i64, k: i64 },
    /// `F(x, y, z) = e(ℓz) · Σ_{|j|≤J} w(y + j) e(ℓjx)` with
    /// `w(u) = exp(−π u²/σ²)`.
    ///
    /// Under `(x, y, z) ↦ (x + p, y + q, z + r + xq)` the central factor picks
    /// up `e(ℓxq)` and the shifted sum picks up `e(−ℓqx)`, so the untruncated
    /// function is exactly invariant. For `y ∈ [0, 1)` the dropped tail is at
    /// most `2·Σ_{m≥J} exp(−π m²/σ²)`.
    Theta {
        level: i64,
        #[serde(default = "default_truncation")]
        truncation: u32,
        #[serde(default = "default_width")]
        width: f64,
    },
}

fn default_truncation() -> u32 {
    InvariantFunction::DEFAULT_TRUNCATION
}

fn default_width() -> f64 {
    InvariantFunction::DEFAULT_WIDTH
}

impl InvariantFunction {
    pub const DEFAULT_TRUNCATION: u32 = 8;
    pub const DEFAULT_WIDTH: f64 = 1.0;

    pub fn theta(level: i64) -> Result<Self> {
        Self::theta_with(level, Self::DEFAULT_TRUNCATION, Self::DEFAULT_WIDTH)
    }

    pub fn theta_with(level: i64, truncation: u32, width: f64) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidParameter("theta level must be nonzero".into()));
        }
        if truncation == 0 || !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter(
                "theta truncation and width must be positive".into(),
            ));
        }
        Ok(InvariantFunction::Theta {
            level,
            truncation,
            width,
        })
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> Complex64 {
        match *self {
            InvariantFunction::TorusChar { m, k } => {
                let phase = Dd::mul_exact(m as f64, x).add(Dd::mul_exact(k as f64, y));
                expi(phase.frac_f64())
            }
            InvariantFunction::Theta {
                level,
                truncation,
                width,
            } => {
                let l = level as f64;
                let j_max = truncation as i64;
                let mut acc = Complex64::new(0.0, 0.0);
                for j in -j_max..=j_max {
                    let u = (y + j as f64) / width;
                    let w = (-std::f64::consts::PI * u * u).exp();
                    if w == 0.0 {
                        continue;
                    }
                    let ph = Dd::mul_exact(l * j as f64, x).frac_f64();
                    acc += expi(ph) * w;
                }
                let central = Dd::mul_exact(l, z).frac_f64();
                expi(central) * acc
            }
        }
    }

    pub fn eval_element(&self, e: &HeisenbergElement) -> Complex64 {
        self.eval(e.a, e.b, e.c)
    }

    /// Bound on `|F|` over the fundamental domain `[0, 1)³`.
    pub fn bound(&self) -> f64 {
        match *self {
            InvariantFunction::TorusChar { .. } => 1.0,
            InvariantFunction::Theta {
                truncation, width, ..
            } => {
                // min over y in [0,1) of |y + j| is j for j >= 0 and |j| - 1 for j < 0
                let w = |u: f64| (-std::f64::consts::PI * (u / width).powi(2)).exp();
                let j_max = truncation as i64;
                (-j_max..=j_max)
                    .map(|j| if j >= 0 { w(j as f64) } else { w((-j - 1) as f64) })
                    .sum()
            }
        }
    }

    /// Upper bound on the truncation error for `y ∈ [0, 1)`.
    pub fn tail_bound(&self) -> f64 {
        match *self {
            InvariantFunction::TorusChar { .. } => 0.0,
            InvariantFunction::Theta {
                truncation, width, ..
            } => {
                let w = |u: f64| (-std::f64::consts::PI * (u / width).powi(2)).exp();
                2.0 * (truncation as u64..truncation as u64 + 64)
                    .map(|m| w(m as f64))
                    .sum::<f64>()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvarianceReport {
    pub max_violation: f64,
    pub pass: bool,
}

/// Samples `e ∈ [0, 1)³` and `γ ∈ {−3, …, 3}³` and reports
/// `max |F(e·γ) − F(e)|`.
pub fn check_gamma_invariance_with<F>(
    f: F,
    sample_count: usize,
    tol: f64,
    seed: u64,
) -> Result<InvarianceReport>
where
    F: Fn(f64, f64, f64) -> Complex64,
{
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_violation = 0.0f64;
    for _ in 0..sample_count {
        let e = HeisenbergElement::new(rng.gen(), rng.gen(), rng.gen());
        let g = [
            rng.gen_range(-3..=3),
            rng.gen_range(-3..=3),
            rng.gen_range(-3..=3),
        ];
        let moved = e.translate(g);
        let d = (f(moved.a, moved.b, moved.c) - f(e.a, e.b, e.c)).norm();
        max_violation = max_violation.max(d);
    }
    Ok(InvarianceReport {
        max_violation,
        pass: max_violation <= tol,
    })
}

pub fn check_gamma_invariance(
    f: &InvariantFunction,
    sample_count: usize,
    tol: f64,
    seed: u64,
) -> Result<InvarianceReport> {
    check_gamma_invariance_with(|x, y, z| f.eval(x, y, z), sample_count, tol, seed)
}

/// Reduced coordinates of `gⁿ·base` in `[0, 1)³`, computed in
/// double-double so that the central coordinate keeps its fractional part
/// for large `n`.
pub(crate) fn orbit_coords(g: &HeisenbergElement, base: &HeisenbergElement, n: u64) -> [f64; 3] {
    let ni = n as i128;
    // gⁿ·base = (na + a₀, nb + b₀, nc + ab·n(n−1)/2 + c₀ + na·b₀)
    let na = Dd::mul_exact(g.a, n as f64);
    let big_a = na.add_f64(base.a);
    let big_b = Dd::mul_exact(g.b, n as f64).add_f64(base.b);
    let ab = Dd::mul_exact(g.a, g.b);
    let tri = ni * (ni - 1) / 2;
    let mut c = frac_mul_int(g.c, ni)
        .add(frac_mul_dd_int(ab, tri))
        .add_f64(base.c)
        .add(na.mul_f64(base.b).frac())
        .frac();
    // right-multiply by (p, q, r): z ↦ z + r + A·q; only frac(A)·q matters mod 1
    let q = -(big_b.floor() as i128);
    let x = big_a.frac();
    c = c.add(frac_mul_dd_int(x, q)).frac();
    [x.frac_f64(), big_b.frac().frac_f64(), c.frac_f64()]
}
