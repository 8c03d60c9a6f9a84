//! Variability of the sample Fermat distance.
//!
//! In one dimension the distance between the endpoints of `[0,1]` is the sum
//! of powered uniform spacings, whose normalized mean and variance have
//! closed-form limits. In higher dimensions we estimate moments by Monte
//! Carlo and provide the greedy staircase path that upper-bounds the
//! distance on a Poisson sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{uniform_cube_stream, PointCloud};
use crate::error::{invalid, Error, Result};
use crate::fermat::{normalization_factor, pair_distance, FermatGraphConfig};
use crate::rng::Stream;

/// `Gamma(x)` for `x > 0` via `exp(lgamma(x))`.
pub fn gamma(x: f64) -> f64 {
    libm::lgamma(x).exp()
}

/// `sum_i Delta_i^alpha` over the spacings of the sorted sample with 0 and 1
/// appended. For `alpha = 1` the spacings telescope and the result is exactly 1.
pub fn spacing_statistic_1d(cloud: &PointCloud, alpha: f64) -> Result<f64> {
    if cloud.dim() != 1 {
        return Err(invalid(
            "cloud",
            "spacing statistic needs one-dimensional points",
        ));
    }
    if !(alpha >= 1.0) {
        return Err(invalid("alpha", format!("{alpha} (need alpha >= 1)")));
    }
    if let Some(p) = cloud.coords().iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::OutsideDomain { point: vec![*p] });
    }
    if alpha == 1.0 {
        return Ok(1.0);
    }
    let mut xs = cloud.coords().to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(spacing_sum(&xs, alpha))
}

fn spacing_sum(sorted: &[f64], alpha: f64) -> f64 {
    let mut prev = 0.0;
    let mut total = 0.0;
    for &x in sorted.iter().chain(std::iter::once(&1.0)) {
        total += (x - prev).powf(alpha);
        prev = x;
    }
    total
}

/// Large-sample limits of the normalized one-dimensional statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormMoments {
    /// `lim E[n^{alpha-1} D] = Gamma(alpha + 1)`.
    pub limit_mean: f64,
    /// `lim n Var[n^{alpha-1} D] = Gamma(2 alpha + 1) - (alpha^2 + 1) Gamma(alpha + 1)^2`.
    pub limit_nvar: f64,
}

pub fn closed_form_moments_1d(alpha: f64) -> Result<ClosedFormMoments> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("{alpha} (need alpha >= 1)")));
    }
    let g1 = gamma(alpha + 1.0);
    let g2 = gamma(2.0 * alpha + 1.0);
    Ok(ClosedFormMoments {
        limit_mean: g1,
        limit_nvar: g2 - (alpha * alpha + 1.0) * g1 * g1,
    })
}

/// Monte-Carlo summary of the normalized Fermat statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub alpha: f64,
    pub d: usize,
    pub n: usize,
    pub replicates: usize,
    pub mean_hat: f64,
    pub mean_se: f64,
    pub var_hat: f64,
    pub var_se: f64,
    pub cv_hat: f64,
    pub cv_se: f64,
    /// `Gamma(alpha + 1)`, one-dimensional runs only.
    pub closed_form_mean: Option<f64>,
    /// Limit variance divided by `n`, one-dimensional runs only.
    pub closed_form_var: Option<f64>,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl MomentReport {
    fn from_samples(alpha: f64, d: usize, n: usize, samples: Vec<f64>) -> Result<Self> {
        let r = samples.len();
        if r < 2 {
            return Err(invalid("replicates", "need at least 2"));
        }
        let rf = r as f64;
        let mean = samples.iter().sum::<f64>() / rf;
        let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
        let var = ss / (rf - 1.0);
        let cv = if mean > 0.0 {
            var.sqrt() / mean
        } else {
            f64::NAN
        };

        // jackknife over leave-one-out replicate sets
        let (var_se, cv_se) = if r >= 3 {
            let loo: Vec<(f64, f64)> = samples
                .iter()
                .map(|&x| {
                    let dev = x - mean;
                    let m_i = mean - dev / (rf - 1.0);
                    let ss_i = (ss - dev * dev * rf / (rf - 1.0)).max(0.0);
                    let v_i = ss_i / (rf - 2.0);
                    (v_i, v_i.sqrt() / m_i)
                })
                .collect();
            (
                jackknife_se(loo.iter().map(|p| p.0), rf),
                jackknife_se(loo.iter().map(|p| p.1), rf),
            )
        } else {
            (f64::NAN, f64::NAN)
        };

        let closed = if d == 1 {
            closed_form_moments_1d(alpha).ok()
        } else {
            None
        };
        Ok(Self {
            alpha,
            d,
            n,
            replicates: r,
            mean_hat: mean,
            mean_se: (var / rf).sqrt(),
            var_hat: var,
            var_se,
            cv_hat: cv,
            cv_se,
            closed_form_mean: closed.map(|c| c.limit_mean),
            closed_form_var: closed.map(|c| c.limit_nvar / n as f64),
            samples,
        })
    }

    /// Empirical `E[X^k]` of the normalized statistic.
    pub fn raw_moment(&self, k: i32) -> f64 {
        self.samples.iter().map(|x| x.powi(k)).sum::<f64>() / self.samples.len() as f64
    }
}

fn jackknife_se(values: impl Iterator<Item = f64> + Clone, r: f64) -> f64 {
    let mean = values.clone().sum::<f64>() / r;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    ((r - 1.0) / r * ss).sqrt()
}

/// Endpoints between which the statistic is measured in `d >= 2`.
pub type Anchors = (Vec<f64>, Vec<f64>);

/// Opposite corners `0` and `(1,...,1)`.
pub fn corner_anchors(d: usize) -> Anchors {
    (vec![0.0; d], vec![1.0; d])
}

/// Estimates mean, variance and coefficient of variation of
/// `n^{(alpha-1)/d} D` on uniform samples of `[0,1]^d`.
///
/// `d = 1` uses the spacing statistic between 0 and 1 (`anchors` must be
/// `None`); otherwise the distance between the samples nearest to the
/// anchors, opposite corners by default.
pub fn mc_moments(
    d: usize,
    n: usize,
    alpha: f64,
    replicates: usize,
    anchors: Option<Anchors>,
    seed: u64,
) -> Result<MomentReport> {
    let mut reports = mc_moments_sweep(d, n, &[alpha], replicates, anchors, seed)?;
    Ok(reports.remove(0))
}

/// [`mc_moments`] for several `alpha` on common samples: replicate `r` uses
/// the same cloud for every `alpha`.
pub fn mc_moments_sweep(
    d: usize,
    n: usize,
    alphas: &[f64],
    replicates: usize,
    anchors: Option<Anchors>,
    seed: u64,
) -> Result<Vec<MomentReport>> {
    if replicates < 2 {
        return Err(invalid("replicates", "need at least 2"));
    }
    if d < 1 || n < 1 {
        return Err(invalid("d/n", "need d >= 1 and n >= 1"));
    }
    if let Some(&a) = alphas.iter().find(|&&a| !(a >= 1.0 && a.is_finite())) {
        return Err(invalid("alpha", format!("{a} (need alpha >= 1)")));
    }
    let anchors = match (d, anchors) {
        (1, None) => None,
        (1, Some(_)) => {
            return Err(invalid(
                "anchors",
                "one-dimensional runs always use 0 and 1",
            ))
        }
        (_, None) => Some(corner_anchors(d)),
        (_, Some(a)) => {
            for p in [&a.0, &a.1] {
                if p.len() != d || p.iter().any(|c| !(0.0..=1.0).contains(c)) {
                    return Err(Error::OutsideDomain { point: p.clone() });
                }
            }
            Some(a)
        }
    };

    let per_replicate: Vec<Vec<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>> {
            let cloud = uniform_cube_stream(n, d, seed, Stream::MomentReplicate, rep)?;
            match &anchors {
                None => {
                    let mut xs = cloud.coords().to_vec();
                    xs.sort_by(f64::total_cmp);
                    Ok(alphas
                        .iter()
                        .map(|&a| {
                            let raw = if a == 1.0 { 1.0 } else { spacing_sum(&xs, a) };
                            normalization_factor(n, a, 1) * raw
                        })
                        .collect())
                }
                Some((x, y)) => {
                    let i = cloud.nearest(x)?;
                    let j = cloud.nearest(y)?;
                    alphas
                        .iter()
                        .map(|&a| {
                            let raw = pair_distance(&cloud, &FermatGraphConfig::complete(a), i, j)?;
                            Ok(normalization_factor(n, a, d) * raw)
                        })
                        .collect()
                }
            }
        })
        .collect::<Result<_>>()?;

    alphas
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let samples = per_replicate.iter().map(|v| v[k]).collect();
            MomentReport::from_samples(a, d, n, samples)
        })
        .collect()
}

/// Least-squares line `y = slope x + intercept` with its coefficient of
/// determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(invalid("points", "need at least 2"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("x", "all abscissae are equal"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// Greedy monotone path from the start point towards `start + e_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircasePath {
    /// Start, the captured sample points, then the target.
    pub points: Vec<Vec<f64>>,
    /// Sample indices of the captured points.
    pub indices: Vec<usize>,
    /// Cone growth `X_k` at each capture step.
    pub increments: Vec<f64>,
    /// `sum |p_k - p_{k-1}|^alpha` including the final hop to the target.
    pub cost: f64,
    /// `alpha / d`.
    pub theta: f64,
}

/// Staircase path from the origin to `e_1`. See [`staircase_path_from`].
pub fn staircase_path(cloud: &PointCloud, alpha: f64, l: usize) -> Result<StaircasePath> {
    let d = cloud.dim();
    let start = vec![0.0; d];
    staircase_path_from(cloud, alpha, l, &start, 1.0)
}

/// Builds the greedy path from `start` to `start + length * e_1`.
///
/// From the current point `q`, the search region of size `t` is the cone
/// `{q + b : 0 <= b_1 <= t, 0 <= s_i b_i <= b_1 for i >= 2}` where `s_i = -1`
/// if `q_i > start_i` and `+1` otherwise, so the path drifts back towards
/// the axis. The first sample captured as `t` grows (smallest `b_1`, ties to
/// the lowest index) becomes the next point and `X_k` is its `b_1`. The walk
/// stops after `l` captures or when no sample is left before the target's
/// first coordinate, then hops to the target.
pub fn staircase_path_from(
    cloud: &PointCloud,
    alpha: f64,
    l: usize,
    start: &[f64],
    length: f64,
) -> Result<StaircasePath> {
    if cloud.is_empty() {
        return Err(Error::NoPoints);
    }
    let d = cloud.dim();
    if start.len() != d {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: d,
            found: start.len(),
        });
    }
    if !(alpha >= 1.0) {
        return Err(invalid("alpha", format!("{alpha} (need alpha >= 1)")));
    }
    if l < 1 {
        return Err(invalid("l", "need at least one step"));
    }
    if !(length > 0.0) {
        return Err(invalid("length", "must be > 0"));
    }
    let mut target = start.to_vec();
    target[0] += length;

    let mut q = start.to_vec();
    let mut points = vec![q.clone()];
    let mut indices = Vec::new();
    let mut increments = Vec::new();
    let mut cost = 0.0;
    let mut used = vec![false; cloud.len()];
    for _ in 0..l {
        let t_max = target[0] - q[0];
        let signs: Vec<f64> = (1..d)
            .map(|i| if q[i] > start[i] { -1.0 } else { 1.0 })
            .collect();
        let mut best: Option<(f64, usize)> = None;
        for (idx, p) in cloud.points().enumerate() {
            if used[idx] {
                continue;
            }
            let b1 = p[0] - q[0];
            if !(b1 > 0.0 && b1 <= t_max) {
                continue;
            }
            let inside = (1..d).all(|i| {
                let sb = signs[i - 1] * (p[i] - q[i]);
                (0.0..=b1).contains(&sb)
            });
            if inside && best.is_none_or(|(bb, _)| b1 < bb) {
                best = Some((b1, idx));
            }
        }
        let Some((x_k, idx)) = best else { break };
        used[idx] = true;
        let p = cloud.point(idx).to_vec();
        cost += crate::datasets::dist(&q, &p).powf(alpha);
        increments.push(x_k);
        indices.push(idx);
        points.push(p.clone());
        q = p;
    }
    cost += crate::datasets::dist(&q, &target).powf(alpha);
    points.push(target);
    Ok(StaircasePath {
        points,
        indices,
        increments,
        cost,
        theta: alpha / d as f64,
    })
}

/// Upper bound `2e d^{theta + alpha/2} theta^theta (1 + Gamma(k theta + 1))`
/// on the `k`-th moment of the normalized distance between `0` and `e_1`
/// for a Poisson sample in the unit cube, with `theta = alpha / d`.
pub fn moment_bound_constant(alpha: f64, d: usize, k: u32) -> Result<f64> {
    if !(alpha >= 1.0) || d < 1 || k < 1 {
        return Err(invalid("alpha/d/k", "need alpha >= 1, d >= 1, k >= 1"));
    }
    let df = d as f64;
    let theta = alpha / df;
    Ok(2.0
        * std::f64::consts::E
        * df.powf(theta + alpha / 2.0)
        * theta.powf(theta)
        * (1.0 + gamma(k as f64 * theta + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::new(xs.iter().map(|&x| vec![x]).collect(), None).unwrap()
    }

    #[test]
    fn gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for k in 1..=50u32 {
            // Gamma(k) = (k-1)!
            let g = gamma(k as f64);
            assert!((g - fact).abs() <= 1e-12 * fact, "Gamma({k})");
            fact *= k as f64;
        }
        assert!((gamma(2.5) - 1.329_340_388_179_137).abs() < 1e-14);
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn spacing_examples() {
        assert_eq!(
            spacing_statistic_1d(&line(&[0.3, 0.9, 0.1]), 1.0).unwrap(),
            1.0
        );
        assert_eq!(spacing_statistic_1d(&line(&[0.5]), 2.0).unwrap(), 0.5);
        assert!(spacing_statistic_1d(&line(&[1.5]), 2.0).is_err());
        let two_d = PointCloud::new(vec![vec![0.1, 0.2]], None).unwrap();
        assert!(spacing_statistic_1d(&two_d, 2.0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let c = closed_form_moments_1d(1.0).unwrap();
        assert!((c.limit_mean - 1.0).abs() < 1e-14);
        assert!(c.limit_nvar.abs() < 1e-13);
        let c = closed_form_moments_1d(2.0).unwrap();
        assert!((c.limit_mean - 2.0).abs() < 1e-13);
        assert!((c.limit_nvar - 4.0).abs() < 1e-12);
        let c = closed_form_moments_1d(3.0).unwrap();
        assert!((c.limit_mean - 6.0).abs() < 1e-12);
        assert!((c.limit_nvar - 360.0).abs() < 1e-9);
        assert!(closed_form_moments_1d(0.5).is_err());
    }

    #[test]
    fn limit_variance_is_nonnegative() {
        for k in 0..=50 {
            let alpha = 1.0 + 0.1 * k as f64;
            let c = closed_form_moments_1d(alpha).unwrap();
            assert!(
                c.limit_nvar >= -1e-12 * c.limit_mean.powi(2),
                "alpha {alpha}: {}",
                c.limit_nvar
            );
        }
    }

    #[test]
    fn alpha_one_has_zero_variance() {
        let r = mc_moments(1, 200, 1.0, 50, None, 3).unwrap();
        assert_eq!(r.var_hat, 0.0);
        assert_eq!(r.mean_hat, 1.0);
        assert_eq!(r.cv_hat, 0.0);
    }

    #[test]
    fn mc_rejects_bad_inputs() {
        assert!(mc_moments(1, 10, 2.0, 1, None, 0).is_err());
        assert!(mc_moments(2, 10, 2.0, 5, Some((vec![0.0, 0.0], vec![1.5, 1.0])), 0).is_err());
        assert!(mc_moments(1, 10, 2.0, 5, Some((vec![0.0], vec![1.0])), 0).is_err());
    }

    #[test]
    fn jackknife_se_of_mean_statistic_reduces_to_classical() {
        let r = MomentReport::from_samples(2.0, 2, 10, vec![1.0, 2.0, 4.0, 7.0, 11.0]).unwrap();
        assert!((r.mean_hat - 5.0).abs() < 1e-15);
        assert!((r.var_hat - 16.5).abs() < 1e-12);
        assert!((r.cv_hat - 16.5f64.sqrt() / 5.0).abs() < 1e-15);
        assert!(r.var_se.is_finite() && r.cv_se.is_finite());
        // jackknife of the mean equals sd / sqrt(R)
        let se = jackknife_se(r.samples.iter().map(|&x| (25.0 - x) / 4.0), 5.0);
        assert!((se - r.mean_se).abs() < 1e-12);
        // leave-one-out variances recomputed from scratch
        let xs = [1.0, 2.0, 4.0, 7.0, 11.0];
        let loo: Vec<f64> = (0..5)
            .map(|i| {
                let rest: Vec<f64> = xs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, &x)| x)
                    .collect();
                let m = rest.iter().sum::<f64>() / 4.0;
                rest.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 3.0
            })
            .collect();
        let lm = loo.iter().sum::<f64>() / 5.0;
        let brute = (0.8 * loo.iter().map(|v| (v - lm) * (v - lm)).sum::<f64>()).sqrt();
        assert!((brute - r.var_se).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn staircase_single_point_at_target() {
        let cloud = PointCloud::new(vec![vec![1.0, 0.0]], None).unwrap();
        let path = staircase_path(&cloud, 2.0, 5).unwrap();
        assert_eq!(path.indices, vec![0]);
        // captured point coincides with the target; the closing hop is free
        assert!((path.cost - 1.0).abs() < 1e-15);
        assert_eq!(path.points.len(), 3);

        let off_axis = PointCloud::new(vec![vec![0.5, 0.9]], None).unwrap();
        let path = staircase_path(&off_axis, 2.0, 5).unwrap();
        assert!(path.indices.is_empty());
        assert!((path.cost - 1.0).abs() < 1e-15);
    }

    #[test]
    fn staircase_increments_are_bounded_by_cone_growth() {
        let cloud = crate::datasets::gen_poisson_cube(400.0, 3, 9).unwrap();
        let path = staircase_path(&cloud, 2.0, 50).unwrap();
        assert!(!path.increments.is_empty());
        for (k, x) in path.increments.iter().enumerate() {
            let hop = crate::datasets::dist(&path.points[k], &path.points[k + 1]);
            assert!(hop <= 3f64.sqrt() * x * (1.0 + 1e-12));
            assert!(path.points[k + 1][0] >= path.points[k][0]);
        }
        assert!((path.theta - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            staircase_path(&PointCloud::from_flat(vec![], 2, None).unwrap(), 2.0, 3),
            Err(Error::NoPoints)
        ));
    }

    #[test]
    fn moment_bound_examples() {
        for d in 1..5 {
            let b = moment_bound_constant(d as f64, d, 1).unwrap();
            let expected = 2.0 * std::f64::consts::E * (d as f64).powf(1.0 + d as f64 / 2.0) * 2.0;
            assert!((b - expected).abs() <= 1e-12 * expected);
        }
        for (alpha, d) in [(2.0, 2), (3.0, 2), (4.5, 3)] {
            let theta: f64 = alpha / d as f64;
            let mut prev = 0.0;
            for k in 1..8u32 {
                let b = moment_bound_constant(alpha, d, k).unwrap();
                if k as f64 * theta >= 1.0 {
                    assert!(b >= prev);
                }
                prev = b;
            }
        }
    }
}
