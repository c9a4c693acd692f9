//! Dense NMF under the Frobenius objective `1/2 ||A - WH||_F^2`.
//!
//! Two update rules are available: sequential coordinate descent (SCD), which
//! minimizes exactly over one row of `H` (resp. one column of `W`) at a time
//! and clips at zero, and the classic multiplicative updates (MU). One
//! iteration always updates the whole of `H` first, then the whole of `W`, with
//! the Gram and cross-product matrices recomputed in between.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::DenseMatrix;
use crate::ZERO_GUARD;

/// Update rule used by [`fit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Scd,
    Mu,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Scd => "scd",
            Algorithm::Mu => "mu",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scd" => Ok(Algorithm::Scd),
            "mu" => Ok(Algorithm::Mu),
            other => Err(Error::Parameter(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// One factorization `W (m x k)`, `H (k x n)` and its objective history.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub w: DenseMatrix,
    pub h: DenseMatrix,
    /// Objective value after each completed iteration.
    pub objective_trace: Vec<f64>,
}

impl FactorPair {
    /// Pairs two non-negative factors with an empty trace.
    pub fn new(w: DenseMatrix, h: DenseMatrix) -> Result<Self> {
        if w.cols() != h.rows() {
            return Err(Error::Shape(format!(
                "W is {}x{} but H is {}x{}",
                w.rows(),
                w.cols(),
                h.rows(),
                h.cols()
            )));
        }
        w.ensure_non_negative()?;
        h.ensure_non_negative()?;
        Ok(Self {
            w,
            h,
            objective_trace: Vec::new(),
        })
    }

    pub fn rank(&self) -> usize {
        self.w.cols()
    }

    /// The product `WH`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.w.matmul(&self.h).expect("factor shapes conform")
    }

    /// The signed residual `A - WH`.
    pub fn residual(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        check_conform(a, &self.w, &self.h)?;
        let mut out = DenseMatrix::zeros(a.rows(), a.cols());
        let mut buf = vec![0.0; a.cols()];
        for i in 0..a.rows() {
            reconstruct_row(&self.w, &self.h, i, &mut buf);
            for ((o, &x), &y) in out.row_mut(i).iter_mut().zip(a.row(i)).zip(&buf) {
                *o = x - y;
            }
        }
        Ok(out)
    }
}

/// Cross products and Gram matrices of one factorization.
///
/// `b_w = AᵀW (n x k)`, `b_h = AHᵀ (m x k)`, `g_w = WᵀW`, `g_h = HHᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramCache {
    pub b_w: DenseMatrix,
    pub b_h: DenseMatrix,
    pub g_w: DenseMatrix,
    pub g_h: DenseMatrix,
}

impl GramCache {
    pub fn compute(a: &DenseMatrix, f: &FactorPair) -> Result<Self> {
        check_conform(a, &f.w, &f.h)?;
        let k = f.rank();
        let wrap = |rows, data| DenseMatrix::new(rows, k, data).expect("finite products");
        Ok(Self {
            b_w: wrap(a.cols(), at_times(a, &f.w)),
            b_h: wrap(a.rows(), a_times_t(a, &f.h.transpose())),
            g_w: wrap(k, gram_of_columns(&f.w)),
            g_h: wrap(k, gram_of_rows(&f.h)),
        })
    }
}

pub(crate) fn check_conform(a: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<()> {
    if w.rows() != a.rows() || h.cols() != a.cols() || w.cols() != h.rows() {
        return Err(Error::Shape(format!(
            "A is {}x{}, W is {}x{}, H is {}x{}",
            a.rows(),
            a.cols(),
            w.rows(),
            w.cols(),
            h.rows(),
            h.cols()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// kernels; all k x k results are row-major and exactly symmetric

/// `WᵀW` for `W` of shape `m x k`.
pub(crate) fn gram_of_columns(w: &DenseMatrix) -> Vec<f64> {
    let k = w.cols();
    let mut g = vec![0.0; k * k];
    for r in 0..w.rows() {
        let row = w.row(r);
        for i in 0..k {
            let wi = row[i];
            if wi == 0.0 {
                continue;
            }
            for j in i..k {
                g[i * k + j] += wi * row[j];
            }
        }
    }
    mirror_upper(&mut g, k);
    g
}

/// `HHᵀ` for `H` of shape `k x n`.
pub(crate) fn gram_of_rows(h: &DenseMatrix) -> Vec<f64> {
    let k = h.rows();
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            g[i * k + j] = dot(h.row(i), h.row(j));
        }
    }
    mirror_upper(&mut g, k);
    g
}

fn mirror_upper(g: &mut [f64], k: usize) {
    for i in 0..k {
        for j in 0..i {
            g[i * k + j] = g[j * k + i];
        }
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `AᵀW` as an `n x k` row-major buffer; zero entries of `A` are skipped.
pub(crate) fn at_times(a: &DenseMatrix, w: &DenseMatrix) -> Vec<f64> {
    let k = w.cols();
    let mut out = vec![0.0; a.cols() * k];
    for r in 0..a.rows() {
        let wr = w.row(r);
        for (c, &v) in a.row(r).iter().enumerate() {
            if v != 0.0 {
                axpy(v, wr, &mut out[c * k..(c + 1) * k]);
            }
        }
    }
    out
}

/// `AHᵀ` as an `m x k` buffer, given `Hᵀ` (`n x k`).
pub(crate) fn a_times_t(a: &DenseMatrix, ht: &DenseMatrix) -> Vec<f64> {
    let k = ht.cols();
    let mut out = vec![0.0; a.rows() * k];
    for r in 0..a.rows() {
        let orow = &mut out[r * k..(r + 1) * k];
        for (c, &v) in a.row(r).iter().enumerate() {
            if v != 0.0 {
                axpy(v, ht.row(c), orow);
            }
        }
    }
    out
}

/// Row `i` of `WH` into `buf`.
#[inline]
pub(crate) fn reconstruct_row(w: &DenseMatrix, h: &DenseMatrix, i: usize, buf: &mut [f64]) {
    buf.fill(0.0);
    for (l, &wl) in w.row(i).iter().enumerate() {
        if wl != 0.0 {
            axpy(wl, h.row(l), buf);
        }
    }
}

/// `1/2 ||A - WH||_F^2` evaluated entry by entry.
pub(crate) fn half_squared_residual(a: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> f64 {
    let mut buf = vec![0.0; a.cols()];
    let mut total = 0.0;
    for i in 0..a.rows() {
        reconstruct_row(w, h, i, &mut buf);
        total += a
            .row(i)
            .iter()
            .zip(&buf)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>();
    }
    0.5 * total
}

/// SCD sweep over the rows of `H` with `W` fixed.
pub(crate) fn scd_update_h(a: &DenseMatrix, w: &DenseMatrix, h: &mut DenseMatrix) {
    let k = w.cols();
    let n = a.cols();
    let g = gram_of_columns(w);
    let b = at_times(a, w);
    let mut t = vec![0.0; n];
    for i in 0..k {
        let gii = g[i * k + i];
        if gii <= ZERO_GUARD {
            continue;
        }
        t.fill(0.0);
        for l in 0..k {
            axpy_scaled_row(h, l, g[l * k + i], &mut t);
        }
        let hi = h.row_mut(i);
        for c in 0..n {
            hi[c] = (hi[c] + (b[c * k + i] - t[c]) / gii).max(0.0);
        }
    }
}

#[inline]
fn axpy_scaled_row(h: &DenseMatrix, l: usize, alpha: f64, t: &mut [f64]) {
    for (tc, &x) in t.iter_mut().zip(h.row(l)) {
        *tc += x * alpha;
    }
}

/// SCD update of one row of `W` given that row's Gram matrix and right-hand side.
#[inline]
pub(crate) fn scd_update_w_row(wr: &mut [f64], g: &[f64], b: &[f64]) {
    let k = wr.len();
    for j in 0..k {
        let gjj = g[j * k + j];
        if gjj <= ZERO_GUARD {
            continue;
        }
        let mut s = 0.0;
        for l in 0..k {
            s += wr[l] * g[l * k + j];
        }
        wr[j] = (wr[j] + (b[j] - s) / gjj).max(0.0);
    }
}

/// SCD sweep over the columns of `W` with `H` fixed.
pub(crate) fn scd_update_w(a: &DenseMatrix, h: &DenseMatrix, w: &mut DenseMatrix) {
    let k = h.rows();
    let g = gram_of_rows(h);
    let b = a_times_t(a, &h.transpose());
    for r in 0..a.rows() {
        scd_update_w_row(w.row_mut(r), &g, &b[r * k..(r + 1) * k]);
    }
}

fn mu_update_h(a: &DenseMatrix, w: &DenseMatrix, h: &mut DenseMatrix) {
    let k = w.cols();
    let n = a.cols();
    let g = gram_of_columns(w);
    let b = at_times(a, w);
    let mut denom = vec![0.0; k * n];
    for i in 0..k {
        let d = &mut denom[i * n..(i + 1) * n];
        for l in 0..k {
            axpy(g[i * k + l], h.row(l), d);
        }
    }
    for i in 0..k {
        let d = &denom[i * n..(i + 1) * n];
        for (c, hc) in h.row_mut(i).iter_mut().enumerate() {
            *hc *= b[c * k + i] / d[c].max(ZERO_GUARD);
        }
    }
}

fn mu_update_w(a: &DenseMatrix, h: &DenseMatrix, w: &mut DenseMatrix) {
    let k = h.rows();
    let g = gram_of_rows(h);
    let b = a_times_t(a, &h.transpose());
    let mut denom = vec![0.0; k];
    for r in 0..a.rows() {
        let wr = w.row_mut(r);
        for (j, d) in denom.iter_mut().enumerate() {
            *d = (0..k).map(|l| wr[l] * g[l * k + j]).sum();
        }
        for j in 0..k {
            wr[j] *= b[r * k + j] / denom[j].max(ZERO_GUARD);
        }
    }
}

fn step_in_place(a: &DenseMatrix, w: &mut DenseMatrix, h: &mut DenseMatrix, algorithm: Algorithm) {
    match algorithm {
        Algorithm::Scd => {
            scd_update_h(a, w, h);
            scd_update_w(a, h, w);
        }
        Algorithm::Mu => {
            mu_update_h(a, w, h);
            mu_update_w(a, h, w);
        }
    }
}

/// `1/2 ||A - WH||_F^2`.
pub fn objective(a: &DenseMatrix, f: &FactorPair) -> Result<f64> {
    check_conform(a, &f.w, &f.h)?;
    Ok(half_squared_residual(a, &f.w, &f.h))
}

/// `||A - WH||_F / ||A||_F`.
pub fn relative_residual(a: &DenseMatrix, f: &FactorPair) -> Result<f64> {
    check_conform(a, &f.w, &f.h)?;
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::Domain("relative residual of a zero matrix".into()));
    }
    Ok((2.0 * half_squared_residual(a, &f.w, &f.h)).sqrt() / norm)
}

fn single_step(a: &DenseMatrix, f: &FactorPair, algorithm: Algorithm) -> Result<FactorPair> {
    check_conform(a, &f.w, &f.h)?;
    let mut out = f.clone();
    step_in_place(a, &mut out.w, &mut out.h, algorithm);
    out.objective_trace.push(half_squared_residual(a, &out.w, &out.h));
    Ok(out)
}

/// One SCD iteration; the new objective is appended to the trace.
pub fn scd_step(a: &DenseMatrix, f: &FactorPair) -> Result<FactorPair> {
    single_step(a, f, Algorithm::Scd)
}

/// One MU iteration; the new objective is appended to the trace.
pub fn mu_step(a: &DenseMatrix, f: &FactorPair) -> Result<FactorPair> {
    single_step(a, f, Algorithm::Mu)
}

/// Runs exactly `iterations` updates from `(w0, h0)`, with no early stopping.
pub fn fit(
    a: &DenseMatrix,
    w0: &DenseMatrix,
    h0: &DenseMatrix,
    algorithm: Algorithm,
    iterations: usize,
) -> Result<FactorPair> {
    if iterations == 0 {
        return Err(Error::Parameter("iterations must be at least 1".into()));
    }
    check_conform(a, w0, h0)?;
    let mut f = FactorPair::new(w0.clone(), h0.clone())?;
    f.objective_trace.reserve_exact(iterations);
    for _ in 0..iterations {
        step_in_place(a, &mut f.w, &mut f.h, algorithm);
        f.objective_trace.push(half_squared_residual(a, &f.w, &f.h));
    }
    Ok(f)
}
