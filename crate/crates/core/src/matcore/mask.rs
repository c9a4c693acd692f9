use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// Holdout fraction used when none is given.
pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.10;

/// Binary holdout pattern: `true` marks a held-out entry.
///
/// Every row and every column keeps at least one observed entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskMatrix {
    rows: usize,
    cols: usize,
    held: Vec<bool>,
}

impl MaskMatrix {
    /// A mask with nothing held out.
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            held: vec![false; rows * cols],
        }
    }

    /// Builds a mask from row-major flags, checking that no row or column is
    /// fully held out.
    pub fn from_flags(rows: usize, cols: usize, held: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 || held.len() != rows * cols {
            return Err(Error::Shape(format!(
                "mask of {rows}x{cols} needs {} flags, got {}",
                rows * cols,
                held.len()
            )));
        }
        let m = Self { rows, cols, held };
        if let Some(i) = (0..rows).find(|&i| m.row_observed(i) == 0) {
            return Err(Error::Domain(format!("mask row {i} is fully held out")));
        }
        if let Some(j) = (0..cols).find(|&j| m.col_observed(j) == 0) {
            return Err(Error::Domain(format!("mask column {j} is fully held out")));
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_held(&self, i: usize, j: usize) -> bool {
        self.held[i * self.cols + j]
    }

    pub fn row_flags(&self, i: usize) -> &[bool] {
        &self.held[i * self.cols..(i + 1) * self.cols]
    }

    pub fn held_count(&self) -> usize {
        self.held.iter().filter(|&&h| h).count()
    }

    pub fn row_has_held(&self, i: usize) -> bool {
        self.row_flags(i).iter().any(|&h| h)
    }

    pub fn col_has_held(&self, j: usize) -> bool {
        (0..self.rows).any(|i| self.is_held(i, j))
    }

    fn row_observed(&self, i: usize) -> usize {
        self.row_flags(i).iter().filter(|&&h| !h).count()
    }

    fn col_observed(&self, j: usize) -> usize {
        (0..self.rows).filter(|&i| !self.is_held(i, j)).count()
    }

    /// Flags as 0/1 rows, 1 = held out.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.held
            .chunks(self.cols)
            .map(|r| r.iter().map(|&h| u8::from(h)).collect())
            .collect()
    }
}

/// Draws a Wold holdout pattern holding out `round(fraction * rows * cols)`
/// uniformly chosen entries, then repairs any fully held-out row or column by
/// releasing one of its entries and holding a random eligible entry elsewhere.
pub fn generate_wold_mask<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    fraction: f64,
    rng: &mut R,
) -> Result<MaskMatrix> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "holdout fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Shape("mask must be non-empty".into()));
    }
    let total = rows * cols;
    let target = ((fraction * total as f64).round() as usize).max(1);
    // smallest observed set touching every row and column has max(rows, cols) entries
    let capacity = total - rows.max(cols);
    if target > capacity {
        return Err(Error::Parameter(format!(
            "cannot hold out {target} of {rows}x{cols} entries and keep every row and column observed"
        )));
    }

    let mut held = vec![false; total];
    for p in index::sample(rng, total, target) {
        held[p] = true;
    }
    let mut row_obs: Vec<usize> = (0..rows)
        .map(|i| held[i * cols..(i + 1) * cols].iter().filter(|&&h| !h).count())
        .collect();
    let mut col_obs: Vec<usize> = (0..cols)
        .map(|j| (0..rows).filter(|&i| !held[i * cols + j]).count())
        .collect();

    loop {
        // each pass fixes one empty line; re-holding only eligible entries never empties another
        let line: Vec<usize> = if let Some(i) = row_obs.iter().position(|&c| c == 0) {
            (0..cols).map(|j| i * cols + j).collect()
        } else if let Some(j) = col_obs.iter().position(|&c| c == 0) {
            (0..rows).map(|i| i * cols + j).collect()
        } else {
            break;
        };
        let released = line[rng.random_range(0..line.len())];
        held[released] = false;
        row_obs[released / cols] += 1;
        col_obs[released % cols] += 1;

        let eligible: Vec<usize> = (0..total)
            .filter(|&p| {
                p != released && !held[p] && row_obs[p / cols] >= 2 && col_obs[p % cols] >= 2
            })
            .collect();
        if !eligible.is_empty() {
            let p = eligible[rng.random_range(0..eligible.len())];
            held[p] = true;
            row_obs[p / cols] -= 1;
            col_obs[p % cols] -= 1;
        }
    }
    MaskMatrix::from_flags(rows, cols, held)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn fraction_bounds() {
        let mut r = rng::stream(0, "t", &[]);
        for f in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(generate_wold_mask(4, 4, f, &mut r), Err(Error::Parameter(_))));
        }
        // a single row cannot hold anything out
        assert!(generate_wold_mask(1, 10, 0.3, &mut r).is_err());
    }

    #[test]
    fn half_of_two_by_two_is_a_diagonal() {
        // valid 2x2 masks with two held entries: main or anti diagonal
        for seed in 0..50 {
            let m = generate_wold_mask(2, 2, 0.5, &mut rng::stream(seed, "t", &[])).unwrap();
            assert_eq!(m.held_count(), 2);
            let rows = m.to_rows();
            assert!(rows == vec![vec![1, 0], vec![0, 1]] || rows == vec![vec![0, 1], vec![1, 0]]);
        }
    }

    #[test]
    fn seeded_masks_repeat() {
        let a = generate_wold_mask(13, 7, 0.2, &mut rng::stream(5, "t", &[])).unwrap();
        let b = generate_wold_mask(13, 7, 0.2, &mut rng::stream(5, "t", &[])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn from_flags_checks_lines() {
        assert!(MaskMatrix::from_flags(2, 2, vec![true, true, false, false]).is_err());
        assert!(MaskMatrix::from_flags(2, 2, vec![true, false, true, false]).is_err());
        assert!(MaskMatrix::from_flags(2, 2, vec![true, false, false, false]).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn every_line_keeps_an_observed_entry(
                rows in 2usize..12, cols in 2usize..12, fraction in 0.01f64..0.6, seed: u64
            ) {
                let target = ((fraction * (rows * cols) as f64).round() as usize).max(1);
                prop_assume!(target <= rows * cols - rows.max(cols));
                let m = generate_wold_mask(rows, cols, fraction, &mut rng::stream(seed, "t", &[])).unwrap();
                for i in 0..rows {
                    prop_assert!(m.row_flags(i).iter().any(|&h| !h));
                }
                for j in 0..cols {
                    prop_assert!((0..rows).any(|i| !m.is_held(i, j)));
                }
                prop_assert!((m.held_count() as i64 - target as i64).abs() <= (rows + cols) as i64);
            }
        }
    }
}
