//! External agreement scores between a predicted partition and ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub ami: f64,
    pub ari: f64,
    pub accuracy: f64,
    pub f1: f64,
}

/// Contingency table with rows indexed by predicted label and columns by
/// true label (both compacted to `0..k` in sorted label order).
struct Contingency {
    table: Vec<Vec<u64>>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    n: u64,
}

impl Contingency {
    fn new(predicted: &[usize], truth: &[usize]) -> Self {
        let compact = |labels: &[usize]| {
            let ids: BTreeMap<usize, usize> = labels
                .iter()
                .copied()
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .enumerate()
                .map(|(i, l)| (l, i))
                .collect();
            (labels.iter().map(|l| ids[l]).collect::<Vec<_>>(), ids.len())
        };
        let (p, kp) = compact(predicted);
        let (t, kt) = compact(truth);
        let mut table = vec![vec![0u64; kt]; kp];
        for (&a, &b) in p.iter().zip(&t) {
            table[a][b] += 1;
        }
        let rows = table.iter().map(|r| r.iter().sum()).collect();
        let cols = (0..kt).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        Self {
            table,
            rows,
            cols,
            n: predicted.len() as u64,
        }
    }
}

fn comb2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

fn adjusted_rand(c: &Contingency) -> f64 {
    let sum_ij: f64 = c.table.iter().flatten().map(|&v| comb2(v)).sum();
    let sum_a: f64 = c.rows.iter().map(|&v| comb2(v)).sum();
    let sum_b: f64 = c.cols.iter().map(|&v| comb2(v)).sum();
    let expected = sum_a * sum_b / comb2(c.n);
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (sum_ij - expected) / (max - expected)
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn mutual_information(c: &Contingency) -> f64 {
    let n = c.n as f64;
    let mut mi = 0.0;
    for (i, row) in c.table.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > 0 {
                let v = v as f64;
                mi += v / n * (v * n / (c.rows[i] as f64 * c.cols[j] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

fn ln_factorial(k: u64) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

/// Expected mutual information under the hypergeometric (permutation) model.
fn expected_mutual_information(c: &Contingency) -> f64 {
    let n = c.n;
    let nf = n as f64;
    let mut emi = 0.0;
    for &a in &c.rows {
        for &b in &c.cols {
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            for k in lo..=hi {
                let kf = k as f64;
                let term = kf / nf * (nf * kf / (a as f64 * b as f64)).ln();
                let log_p =
                    ln_factorial(a) + ln_factorial(b) + ln_factorial(n - a) + ln_factorial(n - b)
                        - ln_factorial(n)
                        - ln_factorial(k)
                        - ln_factorial(a - k)
                        - ln_factorial(b - k)
                        - ln_factorial(n + k - a - b);
                emi += term * log_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information with arithmetic-mean normalization.
fn adjusted_mutual_information(c: &Contingency) -> f64 {
    let n = c.n as f64;
    let (kp, kt) = (c.rows.len(), c.cols.len());
    if (kp == 1 && kt == 1) || (kp as u64 == c.n && kt as u64 == c.n) {
        return 1.0;
    }
    let mi = mutual_information(c);
    let emi = expected_mutual_information(c);
    let mean_h = (entropy(&c.rows, n) + entropy(&c.cols, n)) / 2.0;
    let mut denom = mean_h - emi;
    if denom.abs() < f64::EPSILON {
        denom = if denom < 0.0 {
            -f64::EPSILON
        } else {
            f64::EPSILON
        };
    }
    (mi - emi) / denom
}

/// Maximum-weight assignment of rows to columns on a rectangular matrix via
/// the Hungarian method on the padded square cost matrix. Returns
/// `col_of_row[i]`, with `None` for rows matched to padding.
fn max_weight_matching(weights: &[Vec<f64>], cols: usize) -> Vec<Option<usize>> {
    let rows = weights.len();
    let size = rows.max(cols);
    let max = weights.iter().flatten().copied().fold(0.0, f64::max);
    // cost[i][j] = max - w, padding costs max
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            max - weights[i][j]
        } else {
            max
        }
    };
    // potentials-based O(size^3) Hungarian algorithm, 1-indexed
    let inf = f64::INFINITY;
    let mut u = vec![0.0; size + 1];
    let mut v = vec![0.0; size + 1];
    let mut p = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for i in 1..=size {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=size {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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
            for j in 0..=size {
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
    let mut col_of_row = vec![None; rows];
    for (j, &i) in p.iter().enumerate().skip(1) {
        if i >= 1 && i <= rows && j <= cols {
            col_of_row[i - 1] = Some(j - 1);
        }
    }
    col_of_row
}

fn matched_total(weights: &[Vec<f64>], cols: usize) -> f64 {
    max_weight_matching(weights, cols)
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| weights[i][j]))
        .sum()
}

/// Accuracy under the matching that maximizes agreement and macro-F1
/// (averaged over true classes) under the matching that maximizes it.
fn matched_accuracy_f1(c: &Contingency) -> (f64, f64) {
    let cols = c.cols.len();
    let counts: Vec<Vec<f64>> = c
        .table
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    let f1: Vec<Vec<f64>> = c
        .table
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, &tp)| 2.0 * tp as f64 / (c.rows[i] + c.cols[j]) as f64)
                .collect()
        })
        .collect();
    let correct = matched_total(&counts, cols);
    (correct / c.n as f64, matched_total(&f1, cols) / cols as f64)
}

/// Scores a predicted partition against ground truth labels.
pub fn score(predicted: &[usize], truth: &[usize]) -> Result<ScoreCard> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    let c = Contingency::new(predicted, truth);
    if c.cols.len() < 2 {
        return Err(invalid("truth", "need at least 2 distinct labels"));
    }
    let (accuracy, f1) = matched_accuracy_f1(&c);
    Ok(ScoreCard {
        ami: adjusted_mutual_information(&c),
        ari: adjusted_rand(&c),
        accuracy,
        f1,
    })
}
