//! Savitzky-Golay first-derivative estimates on a unit-spaced sequence.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_SAVGOL_WINDOW: usize = 5;
pub const DEFAULT_SAVGOL_POLYORDER: usize = 2;

/// Least-squares polynomial coefficients (lowest degree first) as a linear map
/// from window values, with abscissae centered on the window middle.
fn coefficient_map(window: usize, polyorder: usize) -> Result<DMatrix<f64>> {
    let half = (window / 2) as f64;
    let vander = DMatrix::from_fn(window, polyorder + 1, |i, j| (i as f64 - half).powi(j as i32));
    vander
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Parameter(format!("Savitzky-Golay design: {e}")))
}

/// Slope of the polynomial with coefficients `c` at abscissa `x`.
fn slope(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(j, cj)| j as f64 * cj * x.powi(j as i32 - 1))
        .sum()
}

/// Derivative of `y` at every index. Interior points use the centered window;
/// the first and last `window / 2` points use the polynomial of the nearest
/// full window evaluated at their offset.
pub fn savgol_derivative(y: &[f64], window: usize, polyorder: usize) -> Result<Vec<f64>> {
    if window.is_multiple_of(2) || polyorder >= window || window > y.len() {
        return Err(Error::Parameter(format!(
            "Savitzky-Golay needs an odd window <= {} and polyorder < window; got window {window}, polyorder {polyorder}",
            y.len()
        )));
    }
    let map = coefficient_map(window, polyorder)?;
    let half = window / 2;
    let fit = |start: usize| -> Vec<f64> {
        (0..=polyorder)
            .map(|j| (0..window).map(|i| map[(j, i)] * y[start + i]).sum())
            .collect()
    };
    let n = y.len();
    let mut out = vec![0.0; n];
    for (t, o) in out.iter_mut().enumerate() {
        let start = t.saturating_sub(half).min(n - window);
        let c = fit(start);
        *o = slope(&c, t as f64 - (start + half) as f64);
    }
    Ok(out)
}
