//! Residual sensitivity to initial conditions.
//!
//! For one rank, the signed residuals `A - WH` of `a` independently
//! initialized runs are flattened (row-major) into the rows of an
//! `a x mn` stack. The interquartile range of every column measures how much
//! that coordinate of the reconstruction depends on the starting point; the
//! mean over coordinates is the MCI of the rank. Ranks where the MCI is flat
//! and then jumps are reported as islands of stability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::DenseMatrix;
use crate::solver::{check_conform, reconstruct_row, FactorPair};

/// Default threshold for a significant forward increase of the MCI.
pub const DEFAULT_THETA: f64 = 0.25;
/// Default tolerance for "flat" between consecutive ranks.
pub const DEFAULT_THETA_FLAT: f64 = 0.05;
/// Default relative window for the max-delta diagnostic.
pub const DEFAULT_MAX_DELTA_TOL: f64 = 0.10;

/// Signed residuals of several runs at one rank, one run per row.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualStack {
    rank: usize,
    runs: usize,
    coords: usize,
    data: Vec<f64>,
}

impl ResidualStack {
    /// Builds a stack from pre-flattened residual rows.
    pub fn from_rows(rank: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Parameter(format!(
                "a residual stack needs at least two runs, got {}",
                rows.len()
            )));
        }
        let coords = rows[0].len();
        if coords == 0 || rows.iter().any(|r| r.len() != coords) {
            return Err(Error::Shape("residual rows must be non-empty and equally long".into()));
        }
        let runs = rows.len();
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("residual stack contains non-finite values".into()));
        }
        Ok(Self {
            rank,
            runs,
            coords,
            data,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    /// Number of matrix coordinates (`m * n`).
    pub fn coords(&self) -> usize {
        self.coords
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.coords..(r + 1) * self.coords]
    }

    /// Copy with every residual multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }
}

/// Stacks `vec(A - WH)` for every fit, flattened row-major.
pub fn build_residual_stack(a: &DenseMatrix, fits: &[FactorPair]) -> Result<ResidualStack> {
    if fits.len() < 2 {
        return Err(Error::Parameter(format!(
            "a residual stack needs at least two runs, got {}",
            fits.len()
        )));
    }
    let rank = fits[0].rank();
    if let Some(f) = fits.iter().find(|f| f.rank() != rank) {
        return Err(Error::Parameter(format!(
            "fits mix ranks {rank} and {}",
            f.rank()
        )));
    }
    let coords = a.rows() * a.cols();
    let mut data = vec![0.0; fits.len() * coords];
    for (f, out) in fits.iter().zip(data.chunks_mut(coords)) {
        check_conform(a, &f.w, &f.h)?;
        let mut buf = vec![0.0; a.cols()];
        for i in 0..a.rows() {
            reconstruct_row(&f.w, &f.h, i, &mut buf);
            let dst = &mut out[i * a.cols()..(i + 1) * a.cols()];
            for ((d, &x), &y) in dst.iter_mut().zip(a.row(i)).zip(&buf) {
                *d = x - y;
            }
        }
    }
    Ok(ResidualStack {
        rank,
        runs: fits.len(),
        coords,
        data,
    })
}

/// Quantile of sorted data by linear interpolation between order statistics
/// at (1-based) position `1 + (len - 1) q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Interquartile range of `values` (reordered in place).
pub fn iqr_in_place(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25)
}

const COORD_CHUNK: usize = 4096;

/// IQR of every column of the stack.
pub fn coordinatewise_iqr(stack: &ResidualStack) -> Vec<f64> {
    let mut out = vec![0.0; stack.coords];
    out.par_chunks_mut(COORD_CHUNK)
        .enumerate()
        .for_each(|(chunk, dst)| {
            let mut column = vec![0.0; stack.runs];
            for (offset, d) in dst.iter_mut().enumerate() {
                let j = chunk * COORD_CHUNK + offset;
                for (r, c) in column.iter_mut().enumerate() {
                    *c = stack.data[r * stack.coords + j];
                }
                *d = iqr_in_place(&mut column);
            }
        });
    out
}

/// Mean coordinatewise IQR.
pub fn mci(stack: &ResidualStack) -> f64 {
    let iqr = coordinatewise_iqr(stack);
    iqr.iter().sum::<f64>() / iqr.len() as f64
}

/// MCI values over a contiguous rank range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MciCurve {
    pub k_min: usize,
    pub values: Vec<f64>,
}

impl MciCurve {
    pub fn new(k_min: usize, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain("MCI values must be finite and non-negative".into()));
        }
        Ok(Self { k_min, values })
    }

    pub fn ranks(&self) -> impl Iterator<Item = usize> + '_ {
        self.k_min..self.k_min + self.values.len()
    }

    pub fn k_max(&self) -> usize {
        self.k_min + self.values.len() - 1
    }

    /// Moving median over a window of three; the two endpoints are kept.
    pub fn smoothed(&self) -> Self {
        let v = &self.values;
        let mut out = v.clone();
        for i in 1..v.len().saturating_sub(1) {
            let mut w = [v[i - 1], v[i], v[i + 1]];
            w.sort_unstable_by(f64::total_cmp);
            out[i] = w[1];
        }
        Self {
            k_min: self.k_min,
            values: out,
        }
    }
}

/// Thresholds for [`detect_islands`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IslandParams {
    /// Relative forward increase that counts as significant.
    pub theta: f64,
    /// Relative increase over the previous rank still counted as flat.
    pub theta_flat: f64,
    /// Values below this are treated as this when testing for an increase.
    pub floor: f64,
}

impl IslandParams {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            theta_flat: DEFAULT_THETA_FLAT,
            floor: 0.0,
        }
    }

    /// Default thresholds with the numerical floor `1e-12 ||A||_F / sqrt(mn)`.
    pub fn for_matrix(a: &DenseMatrix, theta: f64) -> Self {
        let coords = (a.rows() * a.cols()) as f64;
        Self {
            floor: 1e-12 * a.frobenius_norm() / coords.sqrt(),
            ..Self::new(theta)
        }
    }
}

impl Default for IslandParams {
    fn default() -> Self {
        Self::new(DEFAULT_THETA)
    }
}

/// Ranks at which the MCI is flat (or ends the leading plateau) and the next
/// rank's MCI is at least `1 + theta` times larger. The last rank is never
/// reported.
pub fn detect_islands(curve: &MciCurve, params: &IslandParams) -> Result<Vec<usize>> {
    let v = &curve.values;
    if v.len() < 3 {
        return Err(Error::Parameter(format!(
            "island detection needs at least 3 ranks, got {}",
            v.len()
        )));
    }
    if !(params.theta > 0.0) || params.theta_flat < 0.0 {
        return Err(Error::Parameter("theta must be positive and theta_flat non-negative".into()));
    }
    let flat = |t: usize| t > 0 && v[t] <= v[t - 1] * (1.0 + params.theta_flat);
    let plateau_end = (1..v.len()).take_while(|&t| flat(t)).last().unwrap_or(0);
    let islands = (0..v.len() - 1)
        .filter(|&t| {
            let jump = v[t + 1] >= (1.0 + params.theta) * v[t].max(params.floor);
            jump && (flat(t) || t == plateau_end)
        })
        .map(|t| curve.k_min + t)
        .collect();
    Ok(islands)
}

/// Coordinatewise spread of absolute reconstruction errors among the fits
/// whose residual norm lies within `tol` (relative) of the median residual
/// norm: entry `(i, j)` is `max - min` of `|A - WH|_ij` over those fits.
pub fn max_delta_map(a: &DenseMatrix, fits: &[FactorPair], tol: f64) -> Result<DenseMatrix> {
    if fits.is_empty() {
        return Err(Error::Parameter("max-delta map needs at least one fit".into()));
    }
    let residuals = fits
        .iter()
        .map(|f| f.residual(a))
        .collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = residuals.iter().map(DenseMatrix::frobenius_norm).collect();
    let mut sorted = norms.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let median = quantile_sorted(&sorted, 0.5);
    let qualifying: Vec<&DenseMatrix> = residuals
        .iter()
        .zip(&norms)
        .filter(|(_, &n)| (n - median).abs() <= tol * median)
        .map(|(r, _)| r)
        .collect();
    let mut out = DenseMatrix::zeros(a.rows(), a.cols());
    if qualifying.len() < 2 {
        return Ok(out);
    }
    for (p, o) in out.as_mut_slice().iter_mut().enumerate() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in &qualifying {
            let e = r.as_slice()[p].abs();
            lo = lo.min(e);
            hi = hi.max(e);
        }
        *o = hi - lo;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack(rows: &[&[f64]]) -> ResidualStack {
        ResidualStack::from_rows(1, rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn pair(w: &[&[f64]], h: &[&[f64]]) -> FactorPair {
        FactorPair::new(DenseMatrix::from_rows(w).unwrap(), DenseMatrix::from_rows(h).unwrap()).unwrap()
    }

    #[test]
    fn stack_rows_are_flattened_residuals() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let f = pair(&[&[1.0], &[2.0]], &[&[1.0, 1.0]]);
        let s = build_residual_stack(&a, &[f.clone(), f]).unwrap();
        assert_eq!(s.row(0), &[0.0, 1.0, 1.0, 2.0]);
        assert_eq!(s.row(0), s.row(1));

        let exact = pair(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[1.0, 2.0], &[3.0, 4.0]]);
        let s = build_residual_stack(&a, &[exact.clone(), exact]).unwrap();
        assert!(s.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stack_preconditions() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let f1 = pair(&[&[1.0]], &[&[1.0, 1.0]]);
        let f2 = pair(&[&[1.0, 1.0]], &[&[1.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(build_residual_stack(&a, std::slice::from_ref(&f1)), Err(Error::Parameter(_))));
        assert!(matches!(build_residual_stack(&a, &[f1, f2]), Err(Error::Parameter(_))));
    }

    #[test]
    fn iqr_examples() {
        assert_eq!(coordinatewise_iqr(&stack(&[&[3.0], &[3.0], &[3.0]])), vec![0.0]);
        assert_eq!(coordinatewise_iqr(&stack(&[&[1.0], &[2.0], &[3.0], &[4.0]])), vec![1.5]);
        assert_eq!(coordinatewise_iqr(&stack(&[&[0.0], &[2.0]])), vec![1.0]);
        let mut v = [4.0, 1.0, 3.0, 2.0];
        v.sort_by(f64::total_cmp);
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
        assert_eq!(quantile_sorted(&v, 0.75), 3.25);
    }

    #[test]
    fn mci_examples() {
        assert_eq!(mci(&stack(&[&[0.0], &[2.0]])), 1.0);
        assert_eq!(mci(&stack(&[&[1.0, -2.0, 5.0], &[1.0, -2.0, 5.0]])), 0.0);
        // columns: [0,2] -> 1, [1,1] -> 0, [4,0] -> 2
        assert_eq!(mci(&stack(&[&[0.0, 1.0, 4.0], &[2.0, 1.0, 0.0]])), 1.0);
    }

    fn curve(v: &[f64]) -> MciCurve {
        MciCurve::new(1, v.to_vec()).unwrap()
    }

    #[test]
    fn island_after_plateau() {
        let c = curve(&[1.0, 1.0, 1.0, 1.0, 1.0, 3.0, 2.0, 2.0, 2.0]);
        assert_eq!(detect_islands(&c, &IslandParams::default()).unwrap(), vec![5]);
    }

    #[test]
    fn gentle_growth_has_no_island() {
        let c = curve(&(0..12).map(|i| 1.1f64.powi(i)).collect::<Vec<_>>());
        assert!(detect_islands(&c, &IslandParams::default()).unwrap().is_empty());
    }

    #[test]
    fn two_plateaus_two_islands() {
        let c = curve(&[1.0, 1.0, 1.0, 3.0, 3.0, 3.0, 9.0, 9.0]);
        assert_eq!(detect_islands(&c, &IslandParams::default()).unwrap(), vec![3, 6]);
    }

    #[test]
    fn leading_rank_can_be_an_island() {
        let c = curve(&[1.0, 2.0, 2.0, 2.0]);
        assert_eq!(detect_islands(&c, &IslandParams::default()).unwrap(), vec![1]);
        // falling into a minimum still counts as flat
        let c = curve(&[4.0, 2.0, 1.0, 5.0, 5.0]);
        assert_eq!(detect_islands(&c, &IslandParams::default()).unwrap(), vec![3]);
    }

    #[test]
    fn last_rank_never_reported_and_short_curves_rejected() {
        let c = curve(&[1.0, 1.0, 1.0]);
        assert!(detect_islands(&c, &IslandParams::default()).unwrap().is_empty());
        assert!(detect_islands(&curve(&[1.0, 2.0]), &IslandParams::default()).is_err());
    }

    #[test]
    fn floor_suppresses_noise_level_jumps() {
        let c = curve(&[1e-20, 1e-20, 5e-20, 5e-20]);
        assert_eq!(detect_islands(&c, &IslandParams::default()).unwrap(), vec![2]);
        let params = IslandParams {
            floor: 1e-15,
            ..IslandParams::default()
        };
        assert!(detect_islands(&c, &params).unwrap().is_empty());
    }

    #[test]
    fn smoothing_is_a_moving_median() {
        let c = curve(&[1.0, 9.0, 1.0, 1.0, 4.0]).smoothed();
        assert_eq!(c.values, vec![1.0, 1.0, 1.0, 1.0, 4.0]);
    }

    #[test]
    fn max_delta_examples() {
        let a = DenseMatrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let f = pair(&[&[1.0]], &[&[0.5, 1.0]]);
        assert_eq!(max_delta_map(&a, std::slice::from_ref(&f), 0.1).unwrap(), DenseMatrix::zeros(1, 2));
        assert_eq!(max_delta_map(&a, &[f.clone(), f], 0.1).unwrap(), DenseMatrix::zeros(1, 2));

        // errors 0.2 and 0.7 at (0,0); norms differ by less than 10%
        let a = DenseMatrix::from_rows(&[[1.0, 5.0]]).unwrap();
        let f1 = pair(&[&[1.0]], &[&[0.8, 1.0]]);
        let f2 = pair(&[&[1.0]], &[&[0.3, 1.0]]);
        let d = max_delta_map(&a, &[f1, f2], 0.1).unwrap();
        assert!((d.get(0, 0) - 0.5).abs() < 1e-15);
        assert_eq!(d.get(0, 1), 0.0);
    }

    #[test]
    fn max_delta_excludes_outlying_fits() {
        let a = DenseMatrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let good = pair(&[&[1.0]], &[&[0.9, 0.9]]);
        let bad = pair(&[&[0.0]], &[&[0.0, 0.0]]);
        let d = max_delta_map(&a, &[good.clone(), good, bad], 0.1).unwrap();
        assert_eq!(d, DenseMatrix::zeros(1, 2));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn stacks() -> impl Strategy<Value = ResidualStack> {
            (2usize..10, 1usize..30).prop_flat_map(|(runs, coords)| {
                proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, coords), runs)
                    .prop_map(|rows| ResidualStack::from_rows(1, rows).unwrap())
            })
        }

        proptest! {
            #[test]
            fn mci_is_run_order_invariant(s in stacks(), rot in 0usize..10) {
                let mut rows: Vec<Vec<f64>> = (0..s.runs()).map(|r| s.row(r).to_vec()).collect();
                rows.rotate_left(rot % s.runs());
                rows.reverse();
                let t = ResidualStack::from_rows(1, rows).unwrap();
                prop_assert_eq!(mci(&s), mci(&t));
            }

            #[test]
            fn mci_scales_linearly(s in stacks(), c in 0.01f64..100.0) {
                let base = mci(&s);
                let scaled = mci(&s.scaled(c));
                prop_assert!((scaled - c * base).abs() <= 1e-12 * (c * base).max(1e-300));
            }

            #[test]
            fn islands_are_scale_invariant(
                v in proptest::collection::vec(0.1f64..10.0, 3..20),
                c in prop::sample::select(vec![0.125, 0.5, 2.0, 4.0, 1024.0]),
            ) {
                // power-of-two scaling is exact in floating point
                let p = IslandParams::default();
                let a = detect_islands(&MciCurve::new(2, v.clone()).unwrap(), &p).unwrap();
                let b = detect_islands(&MciCurve::new(2, v.iter().map(|x| x * c).collect()).unwrap(), &p).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn max_delta_is_bounded(seed in 0u64..1000) {
                use rand::Rng;
                let mut r = crate::rng::stream(seed, "t", &[]);
                let a = DenseMatrix::from_fn(3, 4, |_, _| r.random::<f64>());
                let fits: Vec<FactorPair> = (0..5)
                    .map(|_| FactorPair::new(
                        DenseMatrix::from_fn(3, 2, |_, _| r.random::<f64>()),
                        DenseMatrix::from_fn(2, 4, |_, _| r.random::<f64>()),
                    ).unwrap())
                    .collect();
                let d = max_delta_map(&a, &fits, 1.0).unwrap();
                for p in 0..12 {
                    let hi = fits.iter().map(|f| f.residual(&a).unwrap().as_slice()[p].abs()).fold(0.0, f64::max);
                    prop_assert!(d.as_slice()[p] >= 0.0 && d.as_slice()[p] <= hi);
                }
            }
        }
    }
}
