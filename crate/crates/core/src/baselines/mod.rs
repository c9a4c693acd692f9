//! Rank-selection baselines and their numeric building blocks.
//!
//! Each selector turns a per-rank curve into a [`Selection`]. The sweep driver
//! in [`crate::sweep`] produces the curves; the functions here are pure apart
//! from the two self-comparison methods, which run their own fits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::InitSet;
use crate::solver::Algorithm;

mod ari;
mod consensus;
mod cv;
mod elbow;
mod hungarian;
mod linkage;
mod permutation;
mod savgol;
mod split;

pub use ari::{adjusted_rand_index, cosine_distance};
pub use consensus::{
    cluster_labels, consensus, cophenetic_coefficient, dispersion_coefficient, select_cophenetic,
    select_dispersion, Cophenetic, ConsensusMatrix, DEFAULT_COPHENETIC_DROP,
};
pub use cv::{ks_cv_select, mad, madimput_select};
pub use elbow::{elbow_select, DEFAULT_ELBOW_TOLERANCE};
pub use hungarian::hungarian;
pub use linkage::average_linkage_cophenetic;
pub use permutation::{
    permutation_select, permuted_residual_curve, select_from_curves, select_from_slopes,
    DEFAULT_SLOPE_RTOL,
};
pub use savgol::{savgol_derivative, DEFAULT_SAVGOL_POLYORDER, DEFAULT_SAVGOL_WINDOW};
pub use split::{ari_split_select, split_half_ari, split_task};

/// Starting points and solver settings shared by the methods that fit.
#[derive(Clone, Copy, Debug)]
pub struct FitPlan<'a> {
    pub inits: &'a InitSet,
    pub algorithm: Algorithm,
    pub iterations: usize,
    /// Root seed for the method's own randomness (shuffles, splits).
    pub seed: u64,
}

impl FitPlan<'_> {
    pub fn ranks(&self) -> std::ops::RangeInclusive<usize> {
        self.inits.k_min()..=self.inits.k_max()
    }
}

/// A rank-selection method as named on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mci,
    Elbow,
    Cophenetic,
    Dispersion,
    Permutation,
    Ari,
    Kscv,
    Madimput,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Mci,
        Method::Elbow,
        Method::Cophenetic,
        Method::Dispersion,
        Method::Permutation,
        Method::Ari,
        Method::Kscv,
        Method::Madimput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mci => "mci",
            Method::Elbow => "elbow",
            Method::Cophenetic => "cophenetic",
            Method::Dispersion => "dispersion",
            Method::Permutation => "permutation",
            Method::Ari => "ari",
            Method::Kscv => "kscv",
            Method::Madimput => "madimput",
        }
    }

    /// Whether the method fits with held-out entries.
    pub fn is_masked(self) -> bool {
        matches!(self, Method::Kscv | Method::Madimput)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown method '{s}'")))
    }
}

/// Outcome of a rank selector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selection {
    Rank { rank: usize },
    Ranks { ranks: Vec<usize> },
    /// The rule did not fire anywhere in the tested range.
    Undetermined,
    /// The optimum sits at the largest tested rank; the true choice may be higher.
    RangeExceeded { k_max: usize },
    /// The method was not run.
    NotApplicable { reason: String },
}

impl Selection {
    /// Numeric ranks carried by the selection, if any.
    pub fn ranks(&self) -> Vec<usize> {
        match self {
            Selection::Rank { rank } => vec![*rank],
            Selection::Ranks { ranks } => ranks.clone(),
            _ => Vec::new(),
        }
    }
}

/// A per-rank metric curve together with the rank it selects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    /// What `per_rank_metric` measures.
    pub metric: String,
    pub k_min: usize,
    /// One value per rank from `k_min`; empty when the method did not run.
    pub per_rank_metric: Vec<f64>,
    pub selected: Selection,
    /// Estimated multiplications for the fits the method needs.
    pub projected_cost: u128,
}

/// Position of the largest value, smallest index on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    crate::rsic::quantile_sorted(&v, 0.5)
}
