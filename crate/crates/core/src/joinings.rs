//! Conditional expectations on the σ-field of `T^m`-invariant sets, and the
//! limit identity they give for double averages.
//!
//! For the model systems `E[f | I]` keeps exactly the Fourier modes fixed by
//! `T^m`, so everything reduces to coefficient bookkeeping.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::averages::double_avg;
use crate::error::{Error, Result};
use crate::systems::{Observable, Param, Point, System};

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantExpectation {
    pub system: System,
    pub power: i64,
    pub result: Observable,
    /// `T^m` is ergodic; `result` is then the constant `∫f`.
    pub ergodic_flag: bool,
}

/// Whether `e(k·x)` is fixed by `x ↦ x + mα`. A nonzero frequency on a
/// decimal (irrational) coordinate never is: the declared irrationals are
/// taken to be rationally independent.
fn rotation_mode_invariant(alpha: &[Param], freq: &[i64], m: i64) -> bool {
    let mut num: i128 = 0;
    let mut den: i128 = 1;
    for (a, &k) in alpha.iter().zip(freq) {
        if k == 0 {
            continue;
        }
        match *a {
            Param::Irrational(_) => return false,
            Param::Rational { num: p, den: q } => {
                // num/den += k·m·p/q, kept reduced mod 1
                let q = q as i128;
                let g = gcd(den, q);
                let l = den / g * q;
                num = (num * (l / den) + (k as i128 * m as i128 % q) * p as i128 % q * (l / q)).rem_euclid(l);
                den = l;
                let r = gcd(num, den);
                num /= r;
                den /= r;
            }
        }
    }
    num == 0
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// `E[f | I_m]` where `I_m` is the σ-field of `T^m`-invariant sets.
pub fn invariant_conditional_expectation(
    system: &System,
    obs: &Observable,
    m: i64,
) -> Result<InvariantExpectation> {
    if m == 0 {
        return Err(Error::InvalidParameter("power m must be nonzero".into()));
    }
    obs.check_dim(system.dim())?;
    let zero = vec![0i64; obs.dim()];
    let constant = || obs.filter(|f| f == zero.as_slice());
    let (result, ergodic_flag) = match system {
        System::RotationTorus { alpha } => {
            let ergodic = alpha.iter().all(|a| !a.is_rational());
            if ergodic {
                (constant(), true)
            } else {
                (obs.filter(|f| rotation_mode_invariant(alpha, f, m)), false)
            }
        }
        System::ToralAutomorphism { .. } => (constant(), true),
        System::AnzaiSkew { alpha } => {
            if alpha.is_rational() {
                return Err(Error::Unsupported(
                    "invariant σ-field of an Anzai skew with rational α".into(),
                ));
            }
            (constant(), true)
        }
    };
    Ok(InvariantExpectation {
        system: system.clone(),
        power: m,
        result,
        ergodic_flag,
    })
}

/// `∫ f g dμ` for trigonometric polynomials: `Σ_k f̂(k) ĝ(−k)`.
pub fn integrate_product(f: &Observable, g: &Observable) -> Complex64 {
    let terms: Vec<Complex64> = f
        .terms()
        .iter()
        .map(|t| {
            let neg: Vec<i64> = t.freq.iter().map(|k| -k).collect();
            t.coef * g.coefficient(&neg)
        })
        .collect();
    crate::sum::pairwise_sum(&terms)
}

/// Which limit statement a [`ProductFormulaReport`] compares against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `T^{b−a}` is ergodic: the pointwise limit at a generic `x₀` equals `rhs`.
    Pointwise,
    /// Only the `x`-integral of the limit equals `rhs`; the pointwise value
    /// at `x₀` may differ.
    Integrated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProductFormulaReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub pass: bool,
    pub regime: Regime,
}

/// Compares the double average at `(x₀, N)` with `∫ E[f₁|I] E[f₂|I] dμ`,
/// `I` the `T^{b−a}`-invariant σ-field.
#[allow(clippy::too_many_arguments)]
pub fn product_formula_check(
    system: &System,
    obs1: &Observable,
    obs2: &Observable,
    x0: &Point,
    a: i64,
    b: i64,
    n: u64,
    tol: f64,
) -> Result<ProductFormulaReport> {
    let lhs = double_avg(system, obs1, obs2, x0, a, b, n)?;
    let e1 = invariant_conditional_expectation(system, obs1, b - a)?;
    let e2 = invariant_conditional_expectation(system, obs2, b - a)?;
    let rhs = integrate_product(&e1.result, &e2.result);
    Ok(ProductFormulaReport {
        lhs,
        rhs,
        pass: (lhs - rhs).norm() <= tol,
        regime: if e1.ergodic_flag {
            Regime::Pointwise
        } else {
            Regime::Integrated
        },
    })
}
