//! Split-half agreement of sample clusterings.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::ari::{adjusted_rand_index, cosine_distance};
use super::consensus::cluster_labels;
use super::hungarian::hungarian;
use super::{argmax, FitPlan, Selection};
use crate::error::{Error, Result};
use crate::matcore::DenseMatrix;
use crate::rng;
use crate::solver::{fit, Algorithm};

pub(crate) const SPLIT_TAG: &str = "ari-split";

/// Fits both halves from the given starts, matches the `W` columns of the
/// second fit to the first by minimal total cosine distance, and returns the
/// ARI of the resulting sample labels.
#[allow(clippy::too_many_arguments)]
pub fn split_half_ari(
    left: &DenseMatrix,
    right: &DenseMatrix,
    w0: &DenseMatrix,
    h0_left: &DenseMatrix,
    h0_right: &DenseMatrix,
    algorithm: Algorithm,
    iterations: usize,
) -> Result<f64> {
    let f1 = fit(left, w0, h0_left, algorithm, iterations)?;
    let f2 = fit(right, w0, h0_right, algorithm, iterations)?;
    let k = f1.rank();
    let (c1, c2) = (f1.w.transpose(), f2.w.transpose());
    let mut cost = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            cost[i * k + j] = cosine_distance(c1.row(i), c2.row(j));
        }
    }
    let matched = hungarian(&cost, k)?;
    let aligned = DenseMatrix::from_fn(f2.w.rows(), k, |r, i| f2.w.get(r, matched[i]));
    let labels1 = cluster_labels(&f1);
    let labels2: Vec<usize> = (0..aligned.rows()).map(|r| argmax(aligned.row(r))).collect();
    adjusted_rand_index(&labels1, &labels2)
}

/// ARI of one (run, rank) task: the columns are shuffled with the task's
/// stream and cut into two equal halves (an odd last column is dropped).
pub fn split_task(a: &DenseMatrix, plan: &FitPlan<'_>, r: usize, k: usize) -> Result<f64> {
    let n = a.cols();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(plan.seed, SPLIT_TAG, &[r as u64, k as u64]));
    let half = n / 2;
    let (cols1, cols2) = (&order[..half], &order[half..2 * half]);
    let (w0, h0) = plan.inits.slice(r, k)?;
    split_half_ari(
        &a.select_columns(cols1),
        &a.select_columns(cols2),
        &w0,
        &h0.select_columns(cols1),
        &h0.select_columns(cols2),
        plan.algorithm,
        plan.iterations,
    )
}

/// Mean split-half ARI per rank over all runs of the plan; selects the rank
/// with the highest mean.
pub fn ari_split_select(a: &DenseMatrix, plan: &FitPlan<'_>) -> Result<(Vec<f64>, Selection)> {
    let k_max = plan.inits.k_max();
    if a.cols() < 2 * k_max {
        return Err(Error::Parameter(format!(
            "split-half ARI needs at least {} columns for rank {k_max}, got {}",
            2 * k_max,
            a.cols()
        )));
    }
    let ranks: Vec<usize> = plan.ranks().collect();
    let runs = plan.inits.runs();
    let tasks: Vec<(usize, usize)> = ranks.iter().flat_map(|&k| (0..runs).map(move |r| (r, k))).collect();
    let values = tasks
        .par_iter()
        .map(|&(r, k)| split_task(a, plan, r, k))
        .collect::<Result<Vec<f64>>>()?;
    let means: Vec<f64> = values
        .chunks(runs)
        .map(|c| c.iter().sum::<f64>() / runs as f64)
        .collect();
    let rank = plan.inits.k_min() + argmax(&means);
    Ok((means, Selection::Rank { rank }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::make_init_set;
    use rand::Rng;

    #[test]
    fn identical_halves_agree_perfectly() {
        let mut r = rng::stream(1, "t", &[]);
        let half = DenseMatrix::from_fn(12, 6, |_, _| r.random::<f64>());
        let inits = make_init_set(12, 6, 2, 4, 1, 5).unwrap();
        for k in 2..=4 {
            let (w0, h0) = inits.slice(0, k).unwrap();
            let v = split_half_ari(&half, &half, &w0, &h0, &h0, Algorithm::Scd, 20).unwrap();
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn rejects_too_few_columns() {
        let a = DenseMatrix::from_fn(10, 7, |i, j| (i + j) as f64);
        let inits = make_init_set(10, 7, 2, 4, 2, 0).unwrap();
        let plan = FitPlan {
            inits: &inits,
            algorithm: Algorithm::Scd,
            iterations: 5,
            seed: 0,
        };
        assert!(matches!(ari_split_select(&a, &plan), Err(Error::Parameter(_))));
    }
}
