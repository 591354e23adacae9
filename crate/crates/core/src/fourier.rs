//! Certified maximum of `|(1/N) Σ u_n e(nt)|` over `t ∈ [0, 1)`.
//!
//! For a sequence bounded by `B`, `t ↦ (1/N) Σ_{n<N} u_n e(nt)` has derivative
//! at most `2πNB`, so on a grid of spacing `δ = ε/(2πNB)` the grid maximum
//! is within `ε` of the true supremum. The grid of `M = L·P` points
//! (`P ≥ N` a power of two) is covered by `L` zero-padded FFTs of length `P`:
//! residue class `r` evaluates the points `t = p/P + r/M`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::dd::expi;
use crate::error::{Error, Result};

/// Largest frequency grid accepted; below the matching ε the request is rejected.
pub const MAX_GRID_POINTS: u128 = 1 << 36;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupEstimate {
    /// Maximum of the normalized modulus over the grid.
    pub value: f64,
    /// Grid frequency attaining `value` (smallest on ties).
    pub t_star: f64,
    pub grid_spacing: f64,
    pub grid_size: u64,
    /// The grid maximum is at least `sup − error_bound`.
    pub error_bound: f64,
}

/// Grid maximum of `|(1/N) Σ_{n<N} u_n e(nt)|` with `N = u.len()`.
///
/// Index offsets only rotate the sum by a unimodular factor, so the modulus
/// is the same for any starting index.
pub fn sup_over_frequency(u: &[Complex64], eps: f64) -> Result<SupEstimate> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let n = u.len();
    if n == 0 {
        return Err(Error::InsufficientData("empty sequence".into()));
    }
    let bound = u.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if bound == 0.0 {
        return Ok(SupEstimate {
            value: 0.0,
            t_star: 0.0,
            grid_spacing: 1.0,
            grid_size: 1,
            error_bound: eps,
        });
    }

    let p = n.next_power_of_two();
    let required = (TAU * n as f64 * bound / eps).ceil() as u128;
    let l = required.div_ceil(p as u128).max(1);
    let m = l * p as u128;
    if m > MAX_GRID_POINTS {
        return Err(Error::GridTooLarge {
            size: m,
            limit: MAX_GRID_POINTS,
        });
    }
    let (l, m) = (l as u64, m as u64);

    // e^{+2πi np/P}: rustfft's inverse transform, unnormalized
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(p);
    let inv_n = 1.0 / n as f64;

    let best = (0..l)
        .into_par_iter()
        .map_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); p],
                    vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), r| {
                for (k, slot) in buf.iter_mut().enumerate() {
                    *slot = if k < n {
                        if r == 0 {
                            u[k]
                        } else {
                            let phase = ((k as u128 * r as u128) % m as u128) as f64 / m as f64;
                            u[k] * expi(phase)
                        }
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                }
                fft.process_with_scratch(buf, scratch);
                let mut local = (f64::NEG_INFINITY, u64::MAX);
                for (q, v) in buf.iter().enumerate() {
                    let val = v.norm() * inv_n;
                    let idx = q as u64 * l + r;
                    if val > local.0 || (val == local.0 && idx < local.1) {
                        local = (val, idx);
                    }
                }
                local
            },
        )
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    Ok(SupEstimate {
        value: best.0,
        t_star: best.1 as f64 / m as f64,
        grid_spacing: 1.0 / m as f64,
        grid_size: m,
        error_bound: eps,
    })
}
