//! Shared oracles and invariant checks for the integration suites.
#![allow(dead_code)]

use fermat_core::alpha_select::{
    alpha_bound_clutter, alpha_bound_covering, alpha_bound_discontinuous, alpha_bound_geodesic,
    AlphaBoundInput,
};
use fermat_core::clustering::{initial_medoids, kmedoids, kmedoids_from, score, Init};
use fermat_core::datasets::PointCloud;
use fermat_core::{fermat_matrix, FermatGraphConfig, FermatMatrix};
use proptest::prelude::*;

/// Clouds of 2 to `max_n` points in dimension 1 to 3.
pub fn points(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=3).prop_flat_map(move |d| {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), 2..=max_n)
    })
}

pub fn labels(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..k, n)
}

/// Predicted labels over 4 names paired with truth over 3 names.
pub fn label_pairs() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (10usize..200).prop_flat_map(|n| (labels(n, 4), labels(n, 3)))
}

pub fn distinct(pts: &[Vec<f64>]) -> bool {
    (1..pts.len()).all(|i| !pts[..i].contains(&pts[i]))
}

/// All-pairs minimum over every simple path, by depth-first enumeration.
pub fn brute_force_fermat(points: &[Vec<f64>], alpha: f64) -> Vec<f64> {
    let n = points.len();
    let w = |a: usize, b: usize| -> f64 {
        let s: f64 = points[a]
            .iter()
            .zip(&points[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        s.sqrt().powf(alpha)
    };
    let mut out = vec![0.0; n * n];
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut visited = vec![false; n];
            visited[s] = true;
            dfs(s, t, 0.0, &mut visited, &mut best, &w);
            out[s * n + t] = best;
        }
    }
    out
}

fn dfs(
    u: usize,
    t: usize,
    acc: f64,
    visited: &mut [bool],
    best: &mut f64,
    w: &dyn Fn(usize, usize) -> f64,
) {
    for v in 0..visited.len() {
        if visited[v] {
            continue;
        }
        let c = acc + w(u, v);
        if v == t {
            *best = best.min(c);
        } else {
            visited[v] = true;
            dfs(v, t, c, visited, best, w);
            visited[v] = false;
        }
    }
}

pub fn max_relative_error(got: &[f64], want: &[f64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| {
            if *w == 0.0 {
                g.abs()
            } else {
                (g - w).abs() / w.abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn cloud_of(points: &[Vec<f64>]) -> PointCloud {
    PointCloud::new(points.to_vec(), None).unwrap()
}

pub fn complete(points: &[Vec<f64>], alpha: f64) -> FermatMatrix {
    fermat_matrix(&cloud_of(points), &FermatGraphConfig::complete(alpha)).unwrap()
}

// Each check returns a description of the first violation.

pub fn check_symmetric_zero_diagonal(m: &FermatMatrix) -> Result<(), String> {
    for i in 0..m.n() {
        if m.get(i, i) != 0.0 {
            return Err(format!("diagonal ({i},{i}) = {}", m.get(i, i)));
        }
        for j in 0..i {
            if m.get(i, j) != m.get(j, i) {
                return Err(format!("({i},{j}) != ({j},{i})"));
            }
        }
    }
    Ok(())
}

pub fn check_triangle(m: &FermatMatrix) -> Result<(), String> {
    let n = m.n();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (ij, ik, kj) = (m.get(i, j), m.get(i, k), m.get(k, j));
                if ij > (ik + kj) * (1.0 + 1e-12) {
                    return Err(format!(
                        "D({i},{j})={ij} > D({i},{k})+D({k},{j})={}",
                        ik + kj
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn check_scale_equivariance(points: &[Vec<f64>], alpha: f64, c: f64) -> Result<(), String> {
    let base = complete(points, alpha);
    let scaled_points: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().map(|x| x * c).collect())
        .collect();
    let scaled = complete(&scaled_points, alpha);
    let factor = c.powf(alpha);
    for (a, b) in base.values().iter().zip(scaled.values()) {
        let want = a * factor;
        if (b - want).abs() > 1e-9 * want.abs().max(1e-300) {
            return Err(format!("scaled {b} vs c^alpha * base {want}"));
        }
    }
    Ok(())
}

pub fn check_alpha_one_euclidean(points: &[Vec<f64>]) -> Result<(), String> {
    let m = complete(points, 1.0);
    for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            let e: f64 = p
                .iter()
                .zip(q)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            if (m.get(i, j) - e).abs() > 1e-12 * e.max(1.0) {
                return Err(format!("({i},{j}) {} vs euclidean {e}", m.get(i, j)));
            }
        }
    }
    Ok(())
}

pub fn check_kmedoids_monotone(
    points: &[Vec<f64>],
    alpha: f64,
    m: usize,
    seed: u64,
) -> Result<(), String> {
    let matrix = complete(points, alpha);
    let model = kmedoids(&matrix, m, seed, 100).map_err(|e| e.to_string())?;
    for w in model.trace.windows(2) {
        if w[1] > w[0] * (1.0 + 1e-12) {
            return Err(format!("objective rose from {} to {}", w[0], w[1]));
        }
    }
    // the assignment step commutes with reordering the points
    let n = points.len();
    let init = initial_medoids(&matrix, m, seed, Init::default()).map_err(|e| e.to_string())?;
    let reversed: Vec<Vec<f64>> = points.iter().rev().cloned().collect();
    let rm = complete(&reversed, alpha);
    let mirrored: Vec<usize> = init.iter().map(|&c| n - 1 - c).collect();
    let first = kmedoids_from(&matrix, init, 0).map_err(|e| e.to_string())?;
    let again = kmedoids_from(&rm, mirrored, 0).map_err(|e| e.to_string())?;
    let back: Vec<usize> = again.assignment.iter().rev().copied().collect();
    if back != first.assignment {
        return Err(format!(
            "reversed order assigned {back:?}, expected {:?}",
            first.assignment
        ));
    }
    // any input order, once put in canonical order, reproduces the model exactly
    let canonical = |pts: &[Vec<f64>]| {
        let mut c = pts.to_vec();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        kmedoids(&complete(&c, alpha), m, seed, 100).map_err(|e| e.to_string())
    };
    if canonical(points)? != canonical(&reversed)? {
        return Err("canonical order did not reproduce the model".into());
    }
    Ok(())
}

pub fn check_score_permutation(
    pred: &[usize],
    truth: &[usize],
    relabel: &[usize],
) -> Result<(), String> {
    let a = score(pred, truth).map_err(|e| e.to_string())?;
    let renamed: Vec<usize> = pred.iter().map(|&p| relabel[p]).collect();
    let b = score(&renamed, truth).map_err(|e| e.to_string())?;
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12;
    if close(a.ami, b.ami)
        && close(a.ari, b.ari)
        && close(a.accuracy, b.accuracy)
        && close(a.f1, b.f1)
    {
        Ok(())
    } else {
        Err(format!("{a:?} vs {b:?}"))
    }
}

/// Every bound must not increase when the density ratio grows.
pub fn check_bound_monotone(
    d: usize,
    a0: f64,
    ratio: f64,
    factor: f64,
    lambda: f64,
) -> Result<(), String> {
    let lo = AlphaBoundInput {
        geodesic_bound: Some(10.0),
        eta: Some(0.1),
        r: Some(0.2),
        ..AlphaBoundInput::new(d, a0, a0 * ratio, 0.5, 4.0)
    };
    let hi = AlphaBoundInput {
        a1: a0 * ratio * factor,
        ..lo.clone()
    };
    for (name, f) in [
        (
            "covering",
            alpha_bound_covering as fn(&AlphaBoundInput) -> _,
        ),
        ("geodesic", alpha_bound_geodesic),
        ("discontinuous", alpha_bound_discontinuous),
    ] {
        let (x, y) = (f(&lo).unwrap(), f(&hi).unwrap());
        if y > x || y < 1.0 {
            return Err(format!("{name}: {x} -> {y}"));
        }
    }
    let spec = |l: f64| fermat_core::ClutterSpec::new(d.max(2), l, 100);
    let l2 = lambda + (1.0 - lambda) * 0.5;
    if let (Ok(a), Ok(b)) = (
        alpha_bound_clutter(&spec(lambda)),
        alpha_bound_clutter(&spec(l2)),
    ) {
        if b.bound > a.bound {
            return Err(format!("clutter: lambda {lambda} -> {l2} raised the bound"));
        }
    }
    Ok(())
}
