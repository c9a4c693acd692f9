//! Residual-slope comparison against a per-row shuffled copy of the data.

use rayon::prelude::*;

use super::savgol::{savgol_derivative, DEFAULT_SAVGOL_POLYORDER, DEFAULT_SAVGOL_WINDOW};
use super::{FitPlan, Selection};
use crate::error::{Error, Result};
use crate::matcore::{shuffle_columns_per_row, DenseMatrix};
use crate::rng;
use crate::solver::{fit, relative_residual};

/// Relative tolerance under which two slopes count as equal.
pub const DEFAULT_SLOPE_RTOL: f64 = 1e-8;

pub(crate) const PERMUTATION_TAG: &str = "permutation";

/// Relative residual per rank of one run fitted to `a`.
pub(crate) fn residual_curve(a: &DenseMatrix, plan: &FitPlan<'_>, r: usize) -> Result<Vec<f64>> {
    plan.ranks()
        .map(|k| {
            let (w0, h0) = plan.inits.slice(r, k)?;
            let f = fit(a, &w0, &h0, plan.algorithm, plan.iterations)?;
            relative_residual(a, &f)
        })
        .collect()
}

/// Relative residual per rank after shuffling every row of `a` with the
/// repeat's own stream; run `r` of the init set is the starting point.
pub fn permuted_residual_curve(a: &DenseMatrix, plan: &FitPlan<'_>, r: usize) -> Result<Vec<f64>> {
    let mut stream = rng::stream(plan.seed, PERMUTATION_TAG, &[r as u64]);
    let shuffled = shuffle_columns_per_row(a, &mut stream);
    residual_curve(&shuffled, plan, r)
}

/// Per-repeat rule on slope estimates: find the first rank where the
/// unpermuted slope is at least the permuted one. Equality selects that rank;
/// a strict overtake selects the rank before it, or is undetermined when it
/// already happens at the first rank. No overtake at all means the range was
/// too short.
pub fn select_from_slopes(k_min: usize, unpermuted: &[f64], permuted: &[f64], rtol: f64) -> Selection {
    let k_max = k_min + unpermuted.len() - 1;
    for (t, (&u, &p)) in unpermuted.iter().zip(permuted).enumerate() {
        if (u - p).abs() <= rtol * u.abs().max(p.abs()) {
            return Selection::Rank { rank: k_min + t };
        }
        if u > p {
            return match t {
                0 => Selection::Undetermined,
                _ => Selection::Rank { rank: k_min + t - 1 },
            };
        }
    }
    Selection::RangeExceeded { k_max }
}

fn slopes(curve: &[f64]) -> Result<Vec<f64>> {
    let mut window = DEFAULT_SAVGOL_WINDOW.min(curve.len());
    if window.is_multiple_of(2) {
        window -= 1;
    }
    if window < 3 {
        return Err(Error::Parameter("slope comparison needs at least 3 ranks".into()));
    }
    savgol_derivative(curve, window, DEFAULT_SAVGOL_POLYORDER.min(window - 1))
}

/// Applies the per-repeat rule to every pair of residual curves and combines
/// the outcomes: undetermined when most repeats are, otherwise the lower
/// median of the remaining choices. Also returns the mean slope difference
/// (unpermuted minus permuted) per rank.
pub fn select_from_curves(
    k_min: usize,
    unpermuted: &[Vec<f64>],
    permuted: &[Vec<f64>],
    rtol: f64,
) -> Result<(Vec<f64>, Selection)> {
    if unpermuted.is_empty() || unpermuted.len() != permuted.len() {
        return Err(Error::Parameter("need one permuted curve per unpermuted curve".into()));
    }
    let len = unpermuted[0].len();
    if unpermuted.iter().chain(permuted).any(|c| c.len() != len) {
        return Err(Error::Shape("residual curves differ in length".into()));
    }
    let mut diff = vec![0.0; len];
    let mut picks = Vec::with_capacity(unpermuted.len());
    for (u, p) in unpermuted.iter().zip(permuted) {
        let (su, sp) = (slopes(u)?, slopes(p)?);
        for (d, (a, b)) in diff.iter_mut().zip(su.iter().zip(&sp)) {
            *d += (a - b) / unpermuted.len() as f64;
        }
        picks.push(select_from_slopes(k_min, &su, &sp, rtol));
    }
    let undetermined = picks.iter().filter(|s| **s == Selection::Undetermined).count();
    if 2 * undetermined > picks.len() {
        return Ok((diff, Selection::Undetermined));
    }
    let k_max = k_min + len - 1;
    let mut numeric: Vec<usize> = picks
        .iter()
        .filter_map(|s| match s {
            Selection::Rank { rank } => Some(*rank),
            Selection::RangeExceeded { .. } => Some(k_max + 1),
            _ => None,
        })
        .collect();
    numeric.sort_unstable();
    let mid = numeric[(numeric.len() - 1) / 2];
    let sel = if mid > k_max {
        Selection::RangeExceeded { k_max }
    } else {
        Selection::Rank { rank: mid }
    };
    Ok((diff, sel))
}

/// Fits `a` and `repeats` shuffled copies across the plan's ranks and applies
/// [`select_from_curves`].
pub fn permutation_select(a: &DenseMatrix, plan: &FitPlan<'_>, repeats: usize) -> Result<(Vec<f64>, Selection)> {
    if repeats == 0 || repeats > plan.inits.runs() {
        return Err(Error::Parameter(format!(
            "permutation repeats must lie in 1..={}",
            plan.inits.runs()
        )));
    }
    let curves = (0..repeats)
        .into_par_iter()
        .map(|r| Ok((residual_curve(a, plan, r)?, permuted_residual_curve(a, plan, r)?)))
        .collect::<Result<Vec<_>>>()?;
    let (unpermuted, permuted): (Vec<_>, Vec<_>) = curves.into_iter().unzip();
    select_from_curves(plan.inits.k_min(), &unpermuted, &permuted, DEFAULT_SLOPE_RTOL)
}
