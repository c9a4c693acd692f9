use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// A dense real matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix({}x{})", self.rows, self.cols)?;
        if self.data.len() <= 64 {
            f.debug_list().entries(self.data.chunks(self.cols)).finish()?;
        }
        Ok(())
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major data. Entries must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite entry {} at ({}, {})",
                data[p],
                p / cols,
                p % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be non-empty");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().position(|r| r.as_ref().len() != cols) {
            return Err(Error::Shape(format!(
                "row {bad} has {} entries, expected {cols}",
                rows[bad].as_ref().len()
            )));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                t.data[j * self.rows + i] = v;
            }
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Plain triple-loop product.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                for (o, &b) in orow.iter_mut().zip(rhs.row(l)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::Shape(format!(
                "cannot subtract {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, c: f64) -> DenseMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Copy of the leading `rows x cols` block.
    pub fn top_left(&self, rows: usize, cols: usize) -> DenseMatrix {
        assert!(rows <= self.rows && cols <= self.cols);
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[..cols]);
        }
        out
    }

    /// Copy of the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> DenseMatrix {
        let mut out = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            let src = self.row(i);
            for (o, &c) in out.row_mut(i).iter_mut().zip(cols) {
                *o = src[c];
            }
        }
        out
    }

    /// Fails with a domain error naming the first negative entry.
    pub fn ensure_non_negative(&self) -> Result<()> {
        match self.data.iter().position(|&v| v < 0.0) {
            Some(p) => Err(Error::Domain(format!(
                "negative entry {} at ({}, {})",
                self.data[p],
                p / self.cols,
                p % self.cols
            ))),
            None => Ok(()),
        }
    }

    pub fn is_non_negative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }
}

/// Returns a copy of `a` in which every row is independently and uniformly
/// permuted.
pub fn shuffle_columns_per_row<R: Rng + ?Sized>(a: &DenseMatrix, rng: &mut R) -> DenseMatrix {
    let mut out = a.clone();
    for i in 0..out.rows {
        out.row_mut(i).shuffle(rng);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(matches!(DenseMatrix::new(0, 3, vec![]), Err(Error::Shape(_))));
        assert!(matches!(DenseMatrix::new(2, 2, vec![1.0; 3]), Err(Error::Shape(_))));
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::Domain(_))
        ));
        assert!(DenseMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn negative_entry_is_located() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, -4.0]]).unwrap();
        let err = m.ensure_non_negative().unwrap_err().to_string();
        assert!(err.contains("(1, 1)"), "{err}");
    }

    #[test]
    fn matmul_and_transpose() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let p = a.matmul(&a.transpose()).unwrap();
        assert_eq!(p.to_rows(), vec![vec![14.0, 32.0], vec![32.0, 77.0]]);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn shuffle_single_element() {
        let a = DenseMatrix::from_rows(&[[5.0]]).unwrap();
        let mut r = rng::stream(1, "t", &[]);
        assert_eq!(shuffle_columns_per_row(&a, &mut r), a);
    }

    #[test]
    fn shuffle_is_seeded() {
        let a = DenseMatrix::from_fn(6, 9, |i, j| (i * 9 + j) as f64);
        let x = shuffle_columns_per_row(&a, &mut rng::stream(3, "t", &[]));
        let y = shuffle_columns_per_row(&a, &mut rng::stream(3, "t", &[]));
        assert_eq!(x, y);
        assert_ne!(x, a);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn shuffle_preserves_row_multisets(rows in 1usize..6, cols in 1usize..12, seed: u64) {
                let a = DenseMatrix::from_fn(rows, cols, |i, j| ((i * 31 + j * 17) % 7) as f64 * 0.37);
                let s = shuffle_columns_per_row(&a, &mut rng::stream(seed, "t", &[]));
                for i in 0..rows {
                    let mut x = a.row(i).to_vec();
                    let mut y = s.row(i).to_vec();
                    x.sort_by(f64::total_cmp);
                    y.sort_by(f64::total_cmp);
                    prop_assert_eq!(x, y);
                }
            }

            #[test]
            fn shuffle_preserves_frobenius_norm(rows in 1usize..8, cols in 1usize..16, seed: u64) {
                // integer entries keep every partial sum exact
                let a = DenseMatrix::from_fn(rows, cols, |i, j| ((i * 13 + j * 7) % 11) as f64);
                let s = shuffle_columns_per_row(&a, &mut rng::stream(seed, "t", &[]));
                prop_assert_eq!(a.frobenius_norm(), s.frobenius_norm());
            }
        }
    }
}
