//! Progressive random initialization.
//!
//! Run `r` owns one `m x k_max` matrix and one `k_max x n` matrix with entries
//! uniform on `[0, 1)`. The starting point at rank `k` is the left `m x k`
//! block of the first and the top `k x n` block of the second, so the rank
//! `k - 1` start is always a prefix of the rank `k` start.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matcore::DenseMatrix;
use crate::rng;

const STREAM_TAG: &str = "progressive-init";

/// Nested initial factors for `runs` runs and ranks `k_min..=k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitSet {
    k_min: usize,
    k_max: usize,
    w: Vec<DenseMatrix>,
    h: Vec<DenseMatrix>,
}

impl InitSet {
    pub fn runs(&self) -> usize {
        self.w.len()
    }

    pub fn k_min(&self) -> usize {
        self.k_min
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Full stored `W_init` of run `r` (`m x k_max`).
    pub fn w_full(&self, r: usize) -> &DenseMatrix {
        &self.w[r]
    }

    /// Full stored `H_init` of run `r` (`k_max x n`).
    pub fn h_full(&self, r: usize) -> &DenseMatrix {
        &self.h[r]
    }

    /// Starting factors for run `r` at rank `k`, returned as copies.
    pub fn slice(&self, r: usize, k: usize) -> Result<(DenseMatrix, DenseMatrix)> {
        slice_init(self, r, k)
    }
}

/// Draws one run's matrices: `W` filled column by column, then `H` row by row.
fn draw_run(m: usize, n: usize, k_max: usize, seed: u64, run: usize) -> (DenseMatrix, DenseMatrix) {
    let mut stream = rng::stream(seed, STREAM_TAG, &[run as u64]);
    let mut w = DenseMatrix::zeros(m, k_max);
    for j in 0..k_max {
        for i in 0..m {
            w.set(i, j, stream.random::<f64>());
        }
    }
    let mut h = DenseMatrix::zeros(k_max, n);
    for v in h.as_mut_slice() {
        *v = stream.random::<f64>();
    }
    (w, h)
}

pub fn make_init_set(
    m: usize,
    n: usize,
    k_min: usize,
    k_max: usize,
    runs: usize,
    seed: u64,
) -> Result<InitSet> {
    if k_min < 1 || k_min > k_max || k_max > m.min(n) {
        return Err(Error::Parameter(format!(
            "rank bounds must satisfy 1 <= k_min <= k_max <= min(m, n); got k_min={k_min}, k_max={k_max}, m={m}, n={n}"
        )));
    }
    if runs < 1 {
        return Err(Error::Parameter("at least one run is required".into()));
    }
    let (w, h) = (0..runs).map(|r| draw_run(m, n, k_max, seed, r)).unzip();
    Ok(InitSet { k_min, k_max, w, h })
}

pub fn slice_init(s: &InitSet, r: usize, k: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    if r >= s.runs() {
        return Err(Error::Parameter(format!("run {r} out of range (runs = {})", s.runs())));
    }
    if k < s.k_min || k > s.k_max {
        return Err(Error::Parameter(format!(
            "rank {k} outside [{}, {}]",
            s.k_min, s.k_max
        )));
    }
    let w = &s.w[r];
    let h = &s.h[r];
    Ok((w.top_left(w.rows(), k), h.top_left(k, h.cols())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_sets_repeat() {
        assert_eq!(make_init_set(5, 6, 1, 4, 3, 9).unwrap(), make_init_set(5, 6, 1, 4, 3, 9).unwrap());
        assert_ne!(make_init_set(5, 6, 1, 4, 3, 9).unwrap(), make_init_set(5, 6, 1, 4, 3, 10).unwrap());
    }

    #[test]
    fn entries_in_unit_interval() {
        let s = make_init_set(20, 30, 2, 10, 4, 1).unwrap();
        for r in 0..4 {
            for v in s.w_full(r).as_slice().iter().chain(s.h_full(r).as_slice()) {
                assert!((0.0..1.0).contains(v));
            }
        }
    }

    #[test]
    fn empirical_mean_near_half() {
        let s = make_init_set(100, 100, 100, 100, 1, 123_456_789).unwrap();
        let w = s.w_full(0).as_slice();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn bounds_are_checked() {
        assert!(make_init_set(5, 6, 0, 3, 1, 0).is_err());
        assert!(make_init_set(5, 6, 4, 3, 1, 0).is_err());
        assert!(make_init_set(5, 6, 2, 6, 1, 0).is_err());
        assert!(make_init_set(5, 6, 2, 3, 0, 0).is_err());
        let s = make_init_set(5, 6, 2, 4, 2, 0).unwrap();
        assert!(s.slice(2, 3).is_err());
        assert!(s.slice(0, 1).is_err());
        assert!(s.slice(0, 5).is_err());
    }

    #[test]
    fn full_rank_slice_is_identity() {
        let s = make_init_set(5, 6, 2, 4, 2, 0).unwrap();
        let (w, h) = s.slice(1, 4).unwrap();
        assert_eq!(&w, s.w_full(1));
        assert_eq!(&h, s.h_full(1));
    }

    #[test]
    fn slices_are_copies() {
        let s = make_init_set(5, 6, 2, 4, 2, 0).unwrap();
        let before = s.clone();
        let (mut w, mut h) = s.slice(0, 3).unwrap();
        w.set(0, 0, 42.0);
        h.set(0, 0, 42.0);
        assert_eq!(s, before);
    }

    #[test]
    fn adding_runs_keeps_earlier_runs() {
        let three = make_init_set(7, 8, 2, 5, 3, 77).unwrap();
        let five = make_init_set(7, 8, 2, 5, 5, 77).unwrap();
        for r in 0..3 {
            assert_eq!(three.w_full(r), five.w_full(r));
            assert_eq!(three.h_full(r), five.h_full(r));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn lower_rank_start_is_a_prefix(m in 2usize..9, n in 2usize..9, seed: u64) {
                let k_max = m.min(n);
                let s = make_init_set(m, n, 1, k_max, 2, seed).unwrap();
                for r in 0..2 {
                    for k in 2..=k_max {
                        let (w_hi, h_hi) = s.slice(r, k).unwrap();
                        let (w_lo, h_lo) = s.slice(r, k - 1).unwrap();
                        prop_assert_eq!(w_lo, w_hi.top_left(m, k - 1));
                        prop_assert_eq!(h_lo, h_hi.top_left(k - 1, n));
                    }
                }
            }
        }
    }
}
