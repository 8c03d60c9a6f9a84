//! Sufficient lower bounds on the power parameter.
//!
//! All bounds share the shape `1 + d * log(numerator) / log(a1 / a0)`: below
//! it, the in-cluster path cost `numerator * a1^{(1-alpha)/d}` may exceed the
//! cost of the shortest excursion through the low-density region. Values
//! below 1 are clamped to 1.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::datasets::ClutterSpec;
use crate::error::{invalid, Error, Result};

/// Geometric and density parameters of a clustering problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBoundInput {
    /// Intrinsic dimension.
    pub d: usize,
    /// Upper bound of the density outside the clusters.
    pub a0: f64,
    /// Lower bound of the density on the clusters.
    pub a1: f64,
    /// Reach of the union of clusters.
    pub tau: f64,
    /// Constant `c` in the covering bound `N_r <= c r^{-d} v 1`.
    pub covering_constant: f64,
    /// Uniform bound on in-cluster geodesic lengths.
    pub geodesic_bound: Option<f64>,
    /// Gap between the low and high density level sets.
    pub eta: Option<f64>,
    /// Offset radius.
    pub r: Option<f64>,
}

impl AlphaBoundInput {
    pub fn new(d: usize, a0: f64, a1: f64, tau: f64, covering_constant: f64) -> Self {
        Self {
            d,
            a0,
            a1,
            tau,
            covering_constant,
            geodesic_bound: None,
            eta: None,
            r: None,
        }
    }

    fn log_ratio(&self) -> Result<f64> {
        if !(self.a0 > 0.0 && self.a1 > self.a0 && self.a1.is_finite()) {
            return Err(Error::DegenerateDensityRatio {
                ratio: self.a1 / self.a0,
            });
        }
        Ok((self.a1 / self.a0).ln())
    }

    fn check_common(&self) -> Result<()> {
        if self.d < 1 {
            return Err(invalid("d", "dimension must be >= 1"));
        }
        if !(self.tau > 0.0) {
            return Err(invalid("tau", "reach must be > 0"));
        }
        Ok(())
    }

    /// `c r^{-d} v 1`.
    pub fn covering_count(&self, r: f64) -> f64 {
        (self.covering_constant * r.powi(-(self.d as i32))).max(1.0)
    }
}

/// Which closed form produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundFormula {
    Covering,
    Geodesic,
    Discontinuous,
    Clutter,
}

impl BoundFormula {
    pub const ALL: [BoundFormula; 4] = [
        BoundFormula::Covering,
        BoundFormula::Geodesic,
        BoundFormula::Discontinuous,
        BoundFormula::Clutter,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BoundFormula::Covering => "covering",
            BoundFormula::Geodesic => "geodesic",
            BoundFormula::Discontinuous => "discontinuous",
            BoundFormula::Clutter => "clutter",
        }
    }
}

impl std::str::FromStr for BoundFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundFormula::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| {
                let ids: Vec<&str> = BoundFormula::ALL.iter().map(|f| f.id()).collect();
                invalid(
                    "formula",
                    format!("unknown formula `{s}` (valid: {})", ids.join(", ")),
                )
            })
    }
}

fn assemble(d: usize, numerator: f64, log_ratio: f64) -> f64 {
    if numerator.is_infinite() {
        return f64::INFINITY;
    }
    (1.0 + d as f64 * numerator.ln() / log_ratio).max(1.0)
}

/// Covering-number bound with `r = tau/2`:
/// `1 + d log(c (tau/2)^{-d} v 1) / log(a1/a0)`.
pub fn alpha_bound_covering(input: &AlphaBoundInput) -> Result<f64> {
    input.check_common()?;
    let lr = input.log_ratio()?;
    Ok(assemble(input.d, input.covering_count(input.tau / 2.0), lr))
}

/// Bound for clusters whose geodesics are at most `R` long:
/// `1 + d log(R / 2 tau) / log(a1/a0)`.
pub fn alpha_bound_geodesic(input: &AlphaBoundInput) -> Result<f64> {
    input.check_common()?;
    let lr = input.log_ratio()?;
    let big_r = input
        .geodesic_bound
        .ok_or_else(|| invalid("geodesic_bound", "required for the geodesic bound"))?;
    if !(big_r > 0.0) {
        return Err(invalid("geodesic_bound", "must be > 0"));
    }
    Ok(assemble(input.d, big_r / (2.0 * input.tau), lr))
}

fn check_discontinuous(input: &AlphaBoundInput) -> Result<f64> {
    input.check_common()?;
    let eta = input
        .eta
        .ok_or_else(|| invalid("eta", "required for the discontinuous bound"))?;
    if !(eta > 0.0 && eta < input.tau) {
        return Err(invalid("eta", format!("{eta} must lie in (0, tau)")));
    }
    Ok(eta)
}

fn discontinuous_at(input: &AlphaBoundInput, eta: f64, r: f64, lr: f64) -> f64 {
    let gap = input.tau - (r + eta);
    let numerator = if gap <= 0.0 {
        f64::INFINITY
    } else {
        r / gap * input.covering_count(r)
    };
    assemble(input.d, numerator, lr)
}

/// Bound for densities whose level sets `{f <= a0}` and `{f >= a1}` are `eta`
/// apart: `1 + d log(r/(tau-(r+eta)) (c r^{-d} v 1)) / log(a1/a0)`.
///
/// Tends to `+inf` as `r -> tau - eta`.
pub fn alpha_bound_discontinuous(input: &AlphaBoundInput) -> Result<f64> {
    let eta = check_discontinuous(input)?;
    let lr = input.log_ratio()?;
    let r = input
        .r
        .ok_or_else(|| invalid("r", "required for the discontinuous bound"))?;
    if !(r > 0.0 && r < input.tau - eta) {
        return Err(invalid("r", format!("{r} must lie in (0, tau - eta)")));
    }
    Ok(discontinuous_at(input, eta, r, lr))
}

/// Minimizes the discontinuous bound over `r` on the grid
/// `r_k = (tau - eta) k / (points + 1)`, `k = 1..=points`.
/// Returns `(bound, r)`; ties keep the smallest `r`.
pub fn optimize_discontinuous(input: &AlphaBoundInput, points: usize) -> Result<(f64, f64)> {
    let eta = check_discontinuous(input)?;
    let lr = input.log_ratio()?;
    if points == 0 {
        return Err(invalid("points", "need at least one grid point"));
    }
    let span = input.tau - eta;
    let mut best = (f64::INFINITY, f64::NAN);
    for k in 1..=points {
        let r = span * k as f64 / (points + 1) as f64;
        let b = discontinuous_at(input, eta, r, lr);
        if b < best.0 || best.1.is_nan() {
            best = (b, r);
        }
    }
    Ok(best)
}

/// Explicit clutter-model quantities and the resulting bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterBound {
    pub bound: f64,
    pub a0: f64,
    pub a1: f64,
    /// Longest in-cluster geodesic bound `L`.
    pub geodesic_bound: f64,
    /// Reach of the ring union, half the ring gap.
    pub tau: f64,
}

/// Bound for the two-ring clutter model: `1 + d log(L) / log(a1/a0)` with
/// `a1 = lambda / (|C1| + |C2|)`, `a0 = (1 - lambda) / |K|` and `L` half the
/// circumference of the outer ring (`5 pi / 2` for the default radii).
pub fn alpha_bound_clutter(spec: &ClutterSpec) -> Result<ClutterBound> {
    spec.validate()?;
    if !(spec.lambda > 0.0 && spec.lambda < 1.0) {
        return Err(Error::DegenerateDensityRatio {
            ratio: if spec.lambda >= 1.0 {
                f64::INFINITY
            } else {
                0.0
            },
        });
    }
    let a1 = spec.lambda / (spec.inner_volume() + spec.outer_volume());
    let a0 = (1.0 - spec.lambda) / spec.cube_volume();
    let geodesic_bound = PI * spec.outer_ring.1;
    let tau = (spec.outer_ring.0 - spec.inner_ring.1) / 2.0;
    if a1 <= a0 {
        return Err(Error::DegenerateDensityRatio { ratio: a1 / a0 });
    }
    let bound = assemble(spec.d, geodesic_bound, (a1 / a0).ln());
    Ok(ClutterBound {
        bound,
        a0,
        a1,
        geodesic_bound,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_examples() {
        // c (tau/2)^{-d} = 0.1 * 4 <= 1 collapses the log
        let small = AlphaBoundInput::new(2, 1.0, 5.0, 1.0, 0.1);
        assert_eq!(alpha_bound_covering(&small).unwrap(), 1.0);

        let input = AlphaBoundInput::new(2, 1.0, 16.0, 1.0, 4.0);
        let b = alpha_bound_covering(&input).unwrap();
        assert!((b - 3.0).abs() < 1e-12, "{b}");

        let huge = AlphaBoundInput::new(2, 1e-300, 1.0, 1.0, 4.0);
        assert!(alpha_bound_covering(&huge).unwrap() < 1.02);
    }

    #[test]
    fn degenerate_ratio_is_an_error() {
        let input = AlphaBoundInput::new(2, 2.0, 2.0, 1.0, 4.0);
        assert!(matches!(
            alpha_bound_covering(&input),
            Err(Error::DegenerateDensityRatio { .. })
        ));
        let input = AlphaBoundInput::new(2, 3.0, 2.0, 1.0, 4.0);
        assert!(alpha_bound_covering(&input).is_err());
    }

    #[test]
    fn geodesic_examples() {
        let mut input = AlphaBoundInput::new(2, 0.01 / 36.0, 0.99 / (7.0 * PI / 4.0), 0.5, 1.0);
        input.geodesic_bound = Some(1.0);
        assert_eq!(alpha_bound_geodesic(&input).unwrap(), 1.0);

        input.geodesic_bound = Some(5.0 * PI / 2.0);
        let b = alpha_bound_geodesic(&input).unwrap();
        // R / 2 tau = L when tau = 1/2
        let expected = 1.0 + 2.0 * (5.0 * PI / 2.0).ln() / (input.a1 / input.a0).ln();
        assert!((b - expected).abs() < 1e-12);
        assert!((b - 1.637).abs() < 1e-3, "{b}");

        input.geodesic_bound = None;
        assert!(alpha_bound_geodesic(&input).is_err());
    }

    #[test]
    fn clutter_examples() {
        let hi = alpha_bound_clutter(&ClutterSpec::new(2, 0.99, 1000)).unwrap();
        assert!((hi.a1 - 0.18007).abs() < 1e-5);
        assert!((hi.a0 - 2.7778e-4).abs() < 1e-8);
        assert!((hi.a1 / hi.a0 - 648.26).abs() < 0.01);
        assert!((hi.bound - 1.637).abs() < 1e-3, "{}", hi.bound);
        assert_eq!(hi.tau, 0.5);
        assert!((hi.geodesic_bound - 5.0 * PI / 2.0).abs() < 1e-15);

        let lo = alpha_bound_clutter(&ClutterSpec::new(2, 2.0 / 3.0, 1500)).unwrap();
        assert!((lo.a1 - 0.12126).abs() < 1e-5);
        assert!((lo.a0 - 9.2593e-3).abs() < 1e-7);
        assert!((lo.bound - 2.602).abs() < 1e-3, "{}", lo.bound);

        assert!(alpha_bound_clutter(&ClutterSpec::new(2, 1.0, 10)).is_err());
        assert!(alpha_bound_clutter(&ClutterSpec::new(2, 0.0, 10)).is_err());
    }

    #[test]
    fn clutter_bound_equals_two_when_ratio_is_l_squared() {
        // a1/a0 = L^2 solved for lambda: lambda/V_C = L^2 (1-lambda)/|K|
        let spec = ClutterSpec::new(2, 0.5, 10);
        let l2 = (5.0 * PI / 2.0).powi(2);
        let vc = spec.inner_volume() + spec.outer_volume();
        let k = l2 * vc / spec.cube_volume();
        let lambda = k / (1.0 + k);
        let b = alpha_bound_clutter(&ClutterSpec::new(2, lambda, 10)).unwrap();
        assert!((b.a1 / b.a0 - l2).abs() < 1e-9);
        assert!((b.bound - 2.0).abs() < 1e-12);
    }

    fn disc_input() -> AlphaBoundInput {
        let mut input = AlphaBoundInput::new(2, 0.01, 1.0, 1.0, 0.01);
        input.eta = Some(0.2);
        input
    }

    #[test]
    fn discontinuous_reduces_to_covering_as_eta_vanishes() {
        let mut input = AlphaBoundInput::new(2, 0.01, 1.0, 1.0, 0.5);
        input.eta = Some(1e-12);
        input.r = Some(0.5);
        assert!(input.covering_count(0.5) >= 1.0);
        let a = alpha_bound_discontinuous(&input).unwrap();
        let b = alpha_bound_covering(&input).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn discontinuous_blows_up_at_the_edge() {
        let mut input = disc_input();
        input.r = Some(0.8 - 1e-13);
        assert!(alpha_bound_discontinuous(&input).unwrap() > 10.0);
        assert_eq!(
            discontinuous_at(&input, 0.2, 0.8, (100f64).ln()),
            f64::INFINITY
        );
        input.r = Some(0.8);
        assert!(alpha_bound_discontinuous(&input).is_err());
        input.r = None;
        assert!(alpha_bound_discontinuous(&input).is_err());
        input.eta = Some(1.5);
        input.r = Some(0.1);
        assert!(alpha_bound_discontinuous(&input).is_err());
    }

    #[test]
    fn optimizer_finds_grid_minimum() {
        let input = disc_input();
        let (best, r) = optimize_discontinuous(&input, 100).unwrap();
        let lr = (input.a1 / input.a0).ln();
        for k in 1..=100 {
            let rk = 0.8 * k as f64 / 101.0;
            assert!(best <= discontinuous_at(&input, 0.2, rk, lr));
        }
        let mut at = input.clone();
        at.r = Some(r);
        assert_eq!(alpha_bound_discontinuous(&at).unwrap(), best);
        assert!(best.is_finite() && best >= 1.0);
    }

    #[test]
    fn bounds_grow_with_dimension_when_numerator_exceeds_one() {
        let mut prev = 1.0;
        for d in 1..6 {
            let input = AlphaBoundInput::new(d, 0.01, 1.0, 1.0, 4.0);
            let b = alpha_bound_covering(&input).unwrap();
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn formula_ids_parse() {
        assert_eq!(
            "clutter".parse::<BoundFormula>().unwrap(),
            BoundFormula::Clutter
        );
        let err = "bogus".parse::<BoundFormula>().unwrap_err().to_string();
        assert!(
            err.contains("covering, geodesic, discontinuous, clutter"),
            "{err}"
        );
    }
}
