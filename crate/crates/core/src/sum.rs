//! Deterministic block-parallel summation.
//!
//! A range of terms is cut into blocks of [`BLOCK_LEN`] consecutive indices.
//! Each block is summed with a fixed pairwise tree, and the block sums are
//! combined with the same tree. The tree shape depends only on the number of
//! terms, so results are bit-identical for any rayon pool size.

use num_complex::Complex64;
use rayon::prelude::*;

pub const BLOCK_LEN: usize = 4096;

const LEAF_LEN: usize = 8;

/// Balanced pairwise sum with a fixed split at `len / 2`.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= LEAF_LEN {
        let mut acc = Complex64::new(0.0, 0.0);
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let (left, right) = xs.split_at(xs.len() / 2);
    pairwise_sum(left) + pairwise_sum(right)
}

/// Real counterpart of [`pairwise_sum`].
pub fn pairwise_sum_f64(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF_LEN {
        return xs.iter().sum();
    }
    let (left, right) = xs.split_at(xs.len() / 2);
    pairwise_sum_f64(left) + pairwise_sum_f64(right)
}

/// Sum of `len` terms starting at index `first`.
///
/// `fill(start, out)` must write the terms for indices `start..start + out.len()`
/// and must produce the same value for an index regardless of where the
/// block containing it starts or ends.
pub fn block_total<F>(first: i64, len: u64, fill: &F) -> Complex64
where
    F: Fn(i64, &mut [Complex64]) + Sync,
{
    let nblocks = len.div_ceil(BLOCK_LEN as u64) as usize;
    let sums: Vec<Complex64> = (0..nblocks)
        .into_par_iter()
        .map_init(
            || vec![Complex64::new(0.0, 0.0); BLOCK_LEN],
            |buf, j| {
                let start = j as u64 * BLOCK_LEN as u64;
                let this = ((len - start) as usize).min(BLOCK_LEN);
                let out = &mut buf[..this];
                fill(first + start as i64, out);
                pairwise_sum(out)
            },
        )
        .collect();
    pairwise_sum(&sums)
}

/// Sums of the prefixes of length `lengths[i]` in one pass over the longest
/// prefix. Each entry equals `block_total(first, lengths[i], fill)` exactly.
///
/// `lengths` must be nonempty and strictly increasing.
pub fn prefix_totals<F>(first: i64, lengths: &[u64], fill: &F) -> Vec<Complex64>
where
    F: Fn(i64, &mut [Complex64]) + Sync,
{
    let max = *lengths.last().expect("nonempty schedule");
    let nblocks = max.div_ceil(BLOCK_LEN as u64) as usize;
    let block = BLOCK_LEN as u64;

    // For block j: the full sum (if the block lies inside [0, max)) plus the
    // partial sums for each requested length that ends strictly inside it.
    let per_block: Vec<(Complex64, Vec<(usize, Complex64)>)> = (0..nblocks)
        .into_par_iter()
        .map_init(
            || vec![Complex64::new(0.0, 0.0); BLOCK_LEN],
            |buf, j| {
                let start = j as u64 * block;
                let this = ((max - start) as usize).min(BLOCK_LEN);
                let out = &mut buf[..this];
                fill(first + start as i64, out);
                let partials = lengths
                    .iter()
                    .enumerate()
                    .filter(|&(_, &n)| n > start && n < start + block && n % block != 0)
                    .map(|(i, &n)| (i, pairwise_sum(&out[..(n - start) as usize])))
                    .collect();
                (pairwise_sum(out), partials)
            },
        )
        .collect();

    let full: Vec<Complex64> = per_block.iter().map(|(s, _)| *s).collect();
    let mut partial = vec![None; lengths.len()];
    for (_, ps) in &per_block {
        for &(i, s) in ps {
            partial[i] = Some(s);
        }
    }

    lengths
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let whole = (n / block) as usize;
            match partial[i] {
                Some(p) => {
                    let mut sums = full[..whole].to_vec();
                    sums.push(p);
                    pairwise_sum(&sums)
                }
                None => pairwise_sum(&full[..whole]),
            }
        })
        .collect()
}
