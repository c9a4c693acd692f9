//! Coordinate descent with held-out entries, for imputation cross-validation.
//!
//! Held-out entries of `A` are never read. Every column of `H` whose column of
//! the mask holds something out gets its own Gram matrix `Wᵀ diag(~M_j) W`, and
//! likewise every affected row of `W` gets `H diag(~M_i) Hᵀ`. Columns and rows
//! without held-out entries share one Gram matrix, built only when needed, so
//! with an empty mask the iterates coincide with the dense solver.

use crate::error::{Error, Result};
use crate::matcore::{DenseMatrix, MaskMatrix};
use crate::solver::{axpy, check_conform, gram_of_columns, gram_of_rows, FactorPair};
use crate::ZERO_GUARD;

fn check_mask(a: &DenseMatrix, mask: &MaskMatrix) -> Result<()> {
    if (mask.rows(), mask.cols()) != a.shape() {
        return Err(Error::Shape(format!(
            "mask is {}x{} but A is {}x{}",
            mask.rows(),
            mask.cols(),
            a.rows(),
            a.cols()
        )));
    }
    Ok(())
}

/// Gram constructions performed by one masked step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub gram_constructions: usize,
}

fn update_h(a: &DenseMatrix, mask: &MaskMatrix, w: &DenseMatrix, h: &mut DenseMatrix, stats: &mut StepStats) {
    let k = w.cols();
    let (m, n) = a.shape();
    let col_held: Vec<bool> = (0..n).map(|j| mask.col_has_held(j)).collect();

    let shared = if col_held.iter().any(|&x| !x) {
        stats.gram_constructions += 1;
        // Aᵀ W restricted to fully observed columns, accumulated in row order
        let mut b = vec![0.0; n * k];
        for r in 0..m {
            let wr = w.row(r);
            for (c, &v) in a.row(r).iter().enumerate() {
                if v != 0.0 && !col_held[c] {
                    axpy(v, wr, &mut b[c * k..(c + 1) * k]);
                }
            }
        }
        Some((gram_of_columns(w), b))
    } else {
        None
    };

    let mut g_own = vec![0.0; k * k];
    let mut b_own = vec![0.0; k];
    for j in 0..n {
        let (g, rhs): (&[f64], &[f64]) = if col_held[j] {
            stats.gram_constructions += 1;
            g_own.fill(0.0);
            b_own.fill(0.0);
            for r in (0..m).filter(|&r| !mask.is_held(r, j)) {
                let wr = w.row(r);
                for i in 0..k {
                    let wi = wr[i];
                    if wi == 0.0 {
                        continue;
                    }
                    for l in i..k {
                        g_own[i * k + l] += wi * wr[l];
                    }
                }
                let v = a.get(r, j);
                if v != 0.0 {
                    axpy(v, wr, &mut b_own);
                }
            }
            for i in 0..k {
                for l in 0..i {
                    g_own[i * k + l] = g_own[l * k + i];
                }
            }
            (&g_own, &b_own)
        } else {
            let (g, b) = shared.as_ref().expect("shared Gram built for observed columns");
            (g, &b[j * k..(j + 1) * k])
        };
        for i in 0..k {
            let gii = g[i * k + i];
            if gii <= ZERO_GUARD {
                continue;
            }
            let mut s = 0.0;
            for l in 0..k {
                s += h.get(l, j) * g[l * k + i];
            }
            let v = (h.get(i, j) + (rhs[i] - s) / gii).max(0.0);
            h.set(i, j, v);
        }
    }
}

fn update_w(a: &DenseMatrix, mask: &MaskMatrix, h: &DenseMatrix, w: &mut DenseMatrix, stats: &mut StepStats) {
    let k = h.rows();
    let m = a.rows();
    let ht = h.transpose();
    let row_held: Vec<bool> = (0..m).map(|i| mask.row_has_held(i)).collect();
    let shared_g = if row_held.iter().any(|&x| !x) {
        stats.gram_constructions += 1;
        Some(gram_of_rows(h))
    } else {
        None
    };

    let mut g_own = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for r in 0..m {
        b.fill(0.0);
        let flags = mask.row_flags(r);
        for (c, &v) in a.row(r).iter().enumerate() {
            if v != 0.0 && !flags[c] {
                axpy(v, ht.row(c), &mut b);
            }
        }
        let g: &[f64] = if row_held[r] {
            stats.gram_constructions += 1;
            g_own.fill(0.0);
            for c in (0..a.cols()).filter(|&c| !flags[c]) {
                let hc = ht.row(c);
                for i in 0..k {
                    let hi = hc[i];
                    if hi == 0.0 {
                        continue;
                    }
                    for l in i..k {
                        g_own[i * k + l] += hi * hc[l];
                    }
                }
            }
            for i in 0..k {
                for l in 0..i {
                    g_own[i * k + l] = g_own[l * k + i];
                }
            }
            &g_own
        } else {
            shared_g.as_deref().expect("shared Gram built for observed rows")
        };
        crate::solver::scd_update_w_row(w.row_mut(r), g, &b);
    }
}

/// `1/2` the squared residual over observed entries only.
pub fn masked_objective(a: &DenseMatrix, mask: &MaskMatrix, f: &FactorPair) -> Result<f64> {
    check_conform(a, &f.w, &f.h)?;
    check_mask(a, mask)?;
    Ok(0.5 * squared_residual_where(a, mask, f, false))
}

fn squared_residual_where(a: &DenseMatrix, mask: &MaskMatrix, f: &FactorPair, held: bool) -> f64 {
    let mut buf = vec![0.0; a.cols()];
    let mut total = 0.0;
    for i in 0..a.rows() {
        crate::solver::reconstruct_row(&f.w, &f.h, i, &mut buf);
        for (j, (&x, &y)) in a.row(i).iter().zip(&buf).enumerate() {
            if mask.is_held(i, j) == held {
                total += (x - y) * (x - y);
            }
        }
    }
    total
}

/// One masked SCD iteration, also reporting how many Gram matrices it built.
pub fn masked_scd_step_counted(
    a: &DenseMatrix,
    mask: &MaskMatrix,
    f: &FactorPair,
) -> Result<(FactorPair, StepStats)> {
    check_conform(a, &f.w, &f.h)?;
    check_mask(a, mask)?;
    let mut out = f.clone();
    let mut stats = StepStats::default();
    update_h(a, mask, &out.w, &mut out.h, &mut stats);
    update_w(a, mask, &out.h, &mut out.w, &mut stats);
    out.objective_trace.push(0.5 * squared_residual_where(a, mask, &out, false));
    Ok((out, stats))
}

/// One masked SCD iteration; the masked objective is appended to the trace.
pub fn masked_scd_step(a: &DenseMatrix, mask: &MaskMatrix, f: &FactorPair) -> Result<FactorPair> {
    masked_scd_step_counted(a, mask, f).map(|(f, _)| f)
}

/// Runs exactly `iterations` masked SCD updates. The trace holds the masked
/// objective.
pub fn masked_fit(
    a: &DenseMatrix,
    mask: &MaskMatrix,
    w0: &DenseMatrix,
    h0: &DenseMatrix,
    iterations: usize,
) -> Result<FactorPair> {
    masked_fit_counted(a, mask, w0, h0, iterations).map(|(f, _)| f)
}

/// As [`masked_fit`], with per-iteration Gram construction counts.
pub fn masked_fit_counted(
    a: &DenseMatrix,
    mask: &MaskMatrix,
    w0: &DenseMatrix,
    h0: &DenseMatrix,
    iterations: usize,
) -> Result<(FactorPair, Vec<StepStats>)> {
    if iterations == 0 {
        return Err(Error::Parameter("iterations must be at least 1".into()));
    }
    check_conform(a, w0, h0)?;
    check_mask(a, mask)?;
    let mut f = FactorPair::new(w0.clone(), h0.clone())?;
    let mut stats = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut s = StepStats::default();
        update_h(a, mask, &f.w, &mut f.h, &mut s);
        update_w(a, mask, &f.h, &mut f.w, &mut s);
        f.objective_trace.push(0.5 * squared_residual_where(a, mask, &f, false));
        stats.push(s);
    }
    Ok((f, stats))
}

/// Mean squared error over the held-out entries:
/// `||M ∘ (A - WH)||_F^2 / ||M||_F^2`.
pub fn masked_error(a: &DenseMatrix, mask: &MaskMatrix, f: &FactorPair) -> Result<f64> {
    check_conform(a, &f.w, &f.h)?;
    check_mask(a, mask)?;
    let held = mask.held_count();
    if held == 0 {
        return Err(Error::Domain("masked error needs at least one held-out entry".into()));
    }
    Ok(squared_residual_where(a, mask, f, true) / held as f64)
}

/// Multiplications and divisions in one coordinate-descent iteration:
/// `2mnk + 2mk² + 2nk²` without missing values and
/// `2mnk² + 2mnk + mk² + nk²` when every row and column has one.
pub fn estimate_iteration_cost(m: u64, n: u64, k: u64, masked: bool) -> u128 {
    let (m, n, k) = (u128::from(m), u128::from(n), u128::from(k));
    if masked {
        2 * m * n * k * k + 2 * m * n * k + m * k * k + n * k * k
    } else {
        2 * m * n * k + 2 * m * k * k + 2 * n * k * k
    }
}
