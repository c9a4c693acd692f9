use std::collections::HashMap;

use crate::error::{Error, Result};

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// Hubert-Arabie adjusted Rand index of two labelings.
///
/// When the expected and maximal index coincide (for instance when one
/// labeling puts everything in one cluster) the result is 1 for identical
/// partitions and 0 otherwise.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Parameter(format!(
            "ARI needs two labelings of equal length >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let expected = sum_a * sum_b / choose2(a.len() as u64);
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom == 0.0 {
        let same = index == sum_a && index == sum_b;
        return Ok(if same { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// `1 - cos(x, y)`; a zero vector is at distance 1 from everything.
pub fn cosine_distance(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return 1.0;
    }
    1.0 - dot / (nx * ny)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    /// Pair counting over all `n choose 2` sample pairs.
    fn pair_oracle(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let (mut both, mut only_a, mut only_b, mut neither) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                match (a[i] == a[j], b[i] == b[j]) {
                    (true, true) => both += 1.0,
                    (true, false) => only_a += 1.0,
                    (false, true) => only_b += 1.0,
                    (false, false) => neither += 1.0,
                }
            }
        }
        let pairs = both + only_a + only_b + neither;
        let same_a = both + only_a;
        let same_b = both + only_b;
        let expected = same_a * same_b / pairs;
        let max = 0.5 * (same_a + same_b);
        if max == expected {
            return if only_a == 0.0 && only_b == 0.0 { 1.0 } else { 0.0 };
        }
        (both - expected) / (max - expected)
    }

    #[test]
    fn examples() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 2], &[0, 0, 1, 2]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[5, 5, 1, 1], &[0, 0, 3, 3]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 0, 0], &[0, 1, 0, 1]).unwrap(), 0.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[1, 1, 1]).unwrap(), 1.0);
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        // index 0, expected 2*2/6, max 2
        assert!((v - (-0.5)).abs() < 1e-15);
        assert_eq!(v, pair_oracle(&[0, 0, 1, 1], &[0, 1, 0, 1]));
        assert!(adjusted_rand_index(&[0], &[0]).is_err());
        assert!(adjusted_rand_index(&[0, 1], &[0, 1, 2]).is_err());
    }

    #[test]
    fn matches_pair_enumeration() {
        let mut r = rng::stream(3, "ari", &[]);
        for _ in 0..200 {
            let n = r.random_range(2..30);
            let ka = r.random_range(1..6);
            let kb = r.random_range(1..6);
            let a: Vec<usize> = (0..n).map(|_| r.random_range(0..ka)).collect();
            let b: Vec<usize> = (0..n).map(|_| r.random_range(0..kb)).collect();
            let v = adjusted_rand_index(&a, &b).unwrap();
            assert!((v - pair_oracle(&a, &b)).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_examples() {
        assert!(cosine_distance(&[1.0, 2.0], &[1.0, 2.0]).abs() < 1e-15);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 3.0]), 1.0);
        assert_eq!(cosine_distance(&[0.0, 0.0], &[0.0, 3.0]), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn symmetric_and_relabeling_invariant(
                pairs in proptest::collection::vec((0usize..4, 0usize..4), 2..40),
                shift in 1usize..10,
            ) {
                let (a, b): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
                let ab = adjusted_rand_index(&a, &b).unwrap();
                prop_assert_eq!(ab, adjusted_rand_index(&b, &a).unwrap());
                let relabeled: Vec<usize> = a.iter().map(|x| (3 - x) * 7 + shift).collect();
                prop_assert!((ab - adjusted_rand_index(&relabeled, &b).unwrap()).abs() < 1e-12);
                prop_assert!(ab <= 1.0 + 1e-12);
            }
        }
    }
}
