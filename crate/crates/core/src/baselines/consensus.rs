//! Consensus matrices and the two selectors built on them.

use log::warn;
use serde::{Deserialize, Serialize};

use super::linkage::average_linkage_cophenetic;
use super::{argmax, Selection};
use crate::error::{Error, Result};
use crate::solver::FactorPair;

/// Absolute drop in cophenetic correlation that ends the search.
pub const DEFAULT_COPHENETIC_DROP: f64 = 1e-3;

/// Sample labels from a fit: the index of the largest entry of each `W` row,
/// smallest index on ties.
pub fn cluster_labels(f: &FactorPair) -> Vec<usize> {
    (0..f.w.rows()).map(|i| super::argmax(f.w.row(i))).collect()
}

/// Fraction of runs in which two samples share a cluster label.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusMatrix {
    size: usize,
    data: Vec<f64>,
}

impl ConsensusMatrix {
    /// Wraps a symmetric `size x size` matrix with entries in `[0, 1]`.
    /// Matrices built by [`consensus`] also have a unit diagonal.
    pub fn new(size: usize, data: Vec<f64>) -> Result<Self> {
        if size == 0 || data.len() != size * size {
            return Err(Error::Shape(format!("consensus data is not {size}x{size}")));
        }
        for i in 0..size {
            for j in 0..size {
                let v = data[i * size + j];
                if !(0.0..=1.0).contains(&v) || v != data[j * size + i] {
                    return Err(Error::Domain(format!(
                        "consensus entry ({i}, {j}) = {v} breaks symmetry or [0, 1]"
                    )));
                }
            }
        }
        Ok(Self { size, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

pub fn consensus(fits: &[FactorPair]) -> Result<ConsensusMatrix> {
    let first = fits
        .first()
        .ok_or_else(|| Error::Parameter("consensus needs at least one fit".into()))?;
    let (m, k) = (first.w.rows(), first.rank());
    if fits.iter().any(|f| f.rank() != k || f.w.rows() != m) {
        return Err(Error::Parameter("consensus fits must share rank and sample count".into()));
    }
    let mut counts = vec![0u32; m * m];
    for f in fits {
        let labels = cluster_labels(f);
        for i in 0..m {
            for j in 0..m {
                if labels[i] == labels[j] {
                    counts[i * m + j] += 1;
                }
            }
        }
    }
    let runs = fits.len() as f64;
    Ok(ConsensusMatrix {
        size: m,
        data: counts.into_iter().map(|c| f64::from(c) / runs).collect(),
    })
}

/// Mean of `4 (C_ij - 1/2)^2` over all entries.
pub fn dispersion_coefficient(c: &ConsensusMatrix) -> f64 {
    let total: f64 = c.data.iter().map(|v| 4.0 * (v - 0.5) * (v - 0.5)).sum();
    total / (c.size * c.size) as f64
}

/// Cophenetic correlation and whether it fell back on a degenerate input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cophenetic {
    pub coefficient: f64,
    pub degenerate: bool,
}

/// Pearson correlation between `1 - C` and the cophenetic distances of its
/// average-linkage dendrogram, over pairs `i < j`.
///
/// A constant-zero dissimilarity counts as perfect (1). Any other input with
/// zero variance on either side yields 0 and is marked degenerate.
pub fn cophenetic_coefficient(c: &ConsensusMatrix) -> Result<Cophenetic> {
    let m = c.size;
    if m < 3 {
        return Err(Error::Parameter(format!(
            "cophenetic correlation needs at least 3 samples, got {m}"
        )));
    }
    let d: Vec<f64> = c.data.iter().map(|v| 1.0 - v).collect();
    let coph = average_linkage_cophenetic(&d, m)?;
    let pairs = m * (m - 1) / 2;
    let (mut x, mut y) = (Vec::with_capacity(pairs), Vec::with_capacity(pairs));
    for i in 0..m {
        for j in i + 1..m {
            x.push(d[i * m + j]);
            y.push(coph[i * m + j]);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&x), mean(&y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        if x.iter().all(|&v| v == 0.0) {
            return Ok(Cophenetic {
                coefficient: 1.0,
                degenerate: false,
            });
        }
        warn!("cophenetic correlation undefined for a constant dissimilarity; reporting 0");
        return Ok(Cophenetic {
            coefficient: 0.0,
            degenerate: true,
        });
    }
    Ok(Cophenetic {
        coefficient: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Smallest rank whose successor's coefficient falls by more than `drop`.
pub fn select_cophenetic(k_min: usize, curve: &[f64], drop: f64) -> Selection {
    curve
        .windows(2)
        .position(|w| w[1] < w[0] - drop)
        .map_or(Selection::Undetermined, |t| Selection::Rank { rank: k_min + t })
}

/// Rank of maximal dispersion; out of range when that is the last rank.
pub fn select_dispersion(k_min: usize, curve: &[f64]) -> Selection {
    if curve.is_empty() {
        return Selection::Undetermined;
    }
    let t = argmax(curve);
    let k_max = k_min + curve.len() - 1;
    if t + 1 == curve.len() {
        Selection::RangeExceeded { k_max }
    } else {
        Selection::Rank { rank: k_min + t }
    }
}
