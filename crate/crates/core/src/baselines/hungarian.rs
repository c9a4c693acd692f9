//! Minimum-cost perfect assignment (Hungarian method with potentials).

use crate::error::{Error, Result};

/// For a square `n x n` cost matrix (row-major), returns `p` with row `i`
/// assigned to column `p[i]` at minimal total cost. `O(n^3)`.
pub fn hungarian(cost: &[f64], n: usize) -> Result<Vec<usize>> {
    if cost.len() != n * n {
        return Err(Error::Shape(format!("cost of length {} is not {n}x{n}", cost.len())));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("assignment costs must be finite".into()));
    }
    // 1-based arrays; index 0 is the virtual start column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn total(cost: &[f64], n: usize, p: &[usize]) -> f64 {
        p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
    }

    fn brute_force(cost: &[f64], n: usize) -> f64 {
        fn go(cost: &[f64], n: usize, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    go(cost, n, row + 1, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        go(cost, n, 0, &mut vec![false; n], 0.0, &mut best);
        best
    }

    #[test]
    fn small_examples() {
        assert_eq!(hungarian(&[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0], 3).unwrap(), vec![0, 1, 2]);
        let c = [1.0, 2.0, 2.0, 1.0];
        let p = hungarian(&c, 2).unwrap();
        assert_eq!(p, vec![0, 1]);
        assert_eq!(total(&c, 2, &p), 2.0);
        assert_eq!(hungarian(&[4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0], 3).unwrap(), vec![1, 0, 2]);
        assert_eq!(hungarian(&[], 0).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(hungarian(&[1.0, 2.0, 3.0], 2).is_err());
        assert!(hungarian(&[f64::NAN], 1).is_err());
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut r = rng::stream(7, "hungarian", &[]);
        for n in 1..=6 {
            for _ in 0..40 {
                let c: Vec<f64> = (0..n * n).map(|_| r.random_range(-5.0..5.0)).collect();
                let p = hungarian(&c, n).unwrap();
                let mut seen = p.clone();
                seen.sort_unstable();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
                assert!((total(&c, n, &p) - brute_force(&c, n)).abs() < 1e-9);
            }
        }
    }
}
