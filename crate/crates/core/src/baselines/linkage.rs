//! Average-linkage agglomerative clustering via the nearest-neighbor chain.

use crate::error::{Error, Result};

/// Cophenetic distances (row-major `m x m`) of the average-linkage dendrogram
/// built from the symmetric dissimilarity `d`.
pub fn average_linkage_cophenetic(d: &[f64], m: usize) -> Result<Vec<f64>> {
    if d.len() != m * m || m == 0 {
        return Err(Error::Shape(format!(
            "dissimilarity of length {} is not {m}x{m}",
            d.len()
        )));
    }
    let mut dist = d.to_vec();
    let mut size = vec![1usize; m];
    let mut members: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
    let mut active = vec![true; m];
    let mut coph = vec![0.0; m * m];
    let mut chain: Vec<usize> = Vec::with_capacity(m);

    for _ in 1..m {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).unwrap());
        }
        let (a, b) = loop {
            let top = *chain.last().unwrap();
            let prev = chain.len().checked_sub(2).map(|i| chain[i]);
            // stay with the previous chain element on ties to avoid cycles
            let mut best = prev;
            let mut best_d = prev.map_or(f64::INFINITY, |p| dist[top * m + p]);
            for c in 0..m {
                if active[c] && c != top && dist[top * m + c] < best_d {
                    best = Some(c);
                    best_d = dist[top * m + c];
                }
            }
            let best = best.unwrap();
            if Some(best) == prev {
                chain.pop();
                chain.pop();
                break (top, best);
            }
            chain.push(best);
        };
        let height = dist[a * m + b];
        for &x in &members[a] {
            for &y in &members[b] {
                coph[x * m + y] = height;
                coph[y * m + x] = height;
            }
        }
        // merge b into a with the Lance-Williams average update
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for c in 0..m {
            if active[c] && c != a && c != b {
                let v = (na * dist[a * m + c] + nb * dist[b * m + c]) / (na + nb);
                dist[a * m + c] = v;
                dist[c * m + a] = v;
            }
        }
        active[b] = false;
        size[a] += size[b];
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
    }
    Ok(coph)
}
