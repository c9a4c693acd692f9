use super::Selection;
use crate::error::{Error, Result};

/// Normalized chord distance below which a curve counts as straight.
pub const DEFAULT_ELBOW_TOLERANCE: f64 = 0.01;

/// Rank farthest from the chord joining the curve's endpoints, after scaling
/// ranks and values to `[0, 1]`. Returns the per-rank distances too.
pub fn elbow_select(k_min: usize, curve: &[f64], tol: f64) -> Result<(Vec<f64>, Selection)> {
    if curve.len() < 3 {
        return Err(Error::Parameter(format!(
            "elbow needs at least 3 ranks, got {}",
            curve.len()
        )));
    }
    let last = (curve.len() - 1) as f64;
    let lo = curve.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok((vec![0.0; curve.len()], Selection::Undetermined));
    }
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .enumerate()
        .map(|(t, &v)| (t as f64 / last, (v - lo) / (hi - lo)))
        .collect();
    let (x0, y0) = pts[0];
    let (x1, y1) = pts[pts.len() - 1];
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len = dx.hypot(dy);
    let dist: Vec<f64> = pts
        .iter()
        .map(|&(x, y)| (dy * (x - x0) - dx * (y - y0)).abs() / len)
        .collect();
    let t = super::argmax(&dist);
    let sel = if dist[t] < tol {
        Selection::Undetermined
    } else {
        Selection::Rank { rank: k_min + t }
    };
    Ok((dist, sel))
}
