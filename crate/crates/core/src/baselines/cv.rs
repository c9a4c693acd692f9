//! Selectors over repeated masked-error samples.

use super::{argmin, median, Selection};
use crate::error::{Error, Result};

/// Unscaled median absolute deviation from the median.
pub fn mad(samples: &[f64]) -> f64 {
    let m = median(samples);
    let dev: Vec<f64> = samples.iter().map(|x| (x - m).abs()).collect();
    median(&dev)
}

fn check(samples: &[Vec<f64>]) -> Result<()> {
    if samples.is_empty() || samples.iter().any(|s| s.len() < 2) {
        return Err(Error::Parameter("every rank needs at least two masked-error samples".into()));
    }
    Ok(())
}

/// Rank with the lowest mean masked error; returns the per-rank means too.
pub fn ks_cv_select(k_min: usize, samples: &[Vec<f64>]) -> Result<(Vec<f64>, Selection)> {
    check(samples)?;
    let means: Vec<f64> = samples
        .iter()
        .map(|s| s.iter().sum::<f64>() / s.len() as f64)
        .collect();
    let rank = k_min + argmin(&means);
    Ok((means, Selection::Rank { rank }))
}

/// Rank with the lowest MAD of its masked errors; returns the per-rank MADs too.
pub fn madimput_select(k_min: usize, samples: &[Vec<f64>]) -> Result<(Vec<f64>, Selection)> {
    check(samples)?;
    let mads: Vec<f64> = samples.iter().map(|s| mad(s)).collect();
    let rank = k_min + argmin(&mads);
    Ok((mads, Selection::Rank { rank }))
}
