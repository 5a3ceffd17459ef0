//! Permutation-invariant agreement between two labelings.
//!
//! Community labels are arbitrary, so accuracy against a reference labeling
//! is measured after the best one-to-one relabeling, found by solving a
//! maximum-weight assignment on the label overlap counts.

use crate::error::{Error, Result};

/// Fraction of elements whose labels agree under the best one-to-one mapping
/// of predicted labels onto reference labels.
pub fn matched_accuracy(predicted: &[usize], reference: &[usize]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != reference.len() {
        return Err(Error::data(format!(
            "labelings must be nonempty and equal length ({} vs {})",
            predicted.len(),
            reference.len()
        )));
    }
    let p = predicted.iter().max().unwrap() + 1;
    let t = reference.iter().max().unwrap() + 1;
    let size = p.max(t);
    let mut overlap = vec![vec![0i64; size]; size];
    for (&a, &b) in predicted.iter().zip(reference.iter()) {
        overlap[a][b] += 1;
    }
    let assignment = max_assignment(&overlap);
    let matched: i64 = assignment
        .iter()
        .enumerate()
        .map(|(row, &col)| overlap[row][col])
        .sum();
    Ok(matched as f64 / predicted.len() as f64)
}

/// Maximum-weight perfect assignment on a square matrix; returns the column
/// chosen for each row.
pub fn max_assignment(weights: &[Vec<i64>]) -> Vec<usize> {
    let max = weights
        .iter()
        .flat_map(|r| r.iter())
        .cloned()
        .max()
        .unwrap_or(0);
    let cost: Vec<Vec<i64>> = weights
        .iter()
        .map(|row| row.iter().map(|&w| max - w).collect())
        .collect();
    min_assignment(&cost)
}

/// Hungarian algorithm with potentials, O(n^3), minimizing total cost.
fn min_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    // 1-indexed; column 0 is the virtual start, p[j] the row matched to j.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}
