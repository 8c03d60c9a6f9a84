use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermat::FermatMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Smallest gap between a cross-group and a within-group distance seen
    /// from a common point.
    pub epsilon_hat: f64,
}

/// Empirical feasibility of a labeled partition under a normalized matrix.
/// Points labeled `None` are left out of every group.
pub fn feasibility_audit(
    matrix: &FermatMatrix,
    groups: &[Option<usize>],
) -> Result<FeasibilityReport> {
    if !matrix.is_normalized() {
        return Err(Error::NotNormalized);
    }
    if groups.len() != matrix.n() {
        return Err(Error::LengthMismatch {
            left: matrix.n(),
            right: groups.len(),
        });
    }
    let mut sizes = std::collections::BTreeMap::new();
    for g in groups.iter().flatten() {
        *sizes.entry(*g).or_insert(0usize) += 1;
    }
    if sizes.len() < 2 {
        return Err(crate::error::invalid(
            "truth",
            "need at least 2 nonempty groups",
        ));
    }
    if let Some((&group, &size)) = sizes.iter().find(|(_, &s)| s < 2) {
        return Err(Error::SmallGroup { group, size });
    }

    let mut epsilon = f64::INFINITY;
    for (x, gx) in groups.iter().enumerate() {
        let Some(gx) = gx else { continue };
        let row = matrix.row(x);
        let mut within = 0.0f64;
        let mut across = f64::INFINITY;
        for (y, gy) in groups.iter().enumerate() {
            match gy {
                Some(g) if g == gx => within = within.max(row[y]),
                Some(_) => across = across.min(row[y]),
                None => {}
            }
        }
        epsilon = epsilon.min(across - within);
    }
    Ok(FeasibilityReport {
        feasible: epsilon > 0.0,
        epsilon_hat: epsilon,
    })
}

/// Maps clutter labels to audit groups, dropping the background label 0.
pub fn clutter_groups(labels: &[usize]) -> Vec<Option<usize>> {
    labels.iter().map(|&l| (l != 0).then_some(l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(values: Vec<f64>, n: usize) -> FermatMatrix {
        FermatMatrix::from_values(values, n, 2.0)
            .unwrap()
            .normalize(1)
            .unwrap()
    }

    #[test]
    fn disconnected_components_are_feasible() {
        let inf = f64::INFINITY;
        let m = matrix(
            vec![
                0.0, 1.0, inf, inf, //
                1.0, 0.0, inf, inf, //
                inf, inf, 0.0, 2.0, //
                inf, inf, 2.0, 0.0,
            ],
            4,
        );
        let r = feasibility_audit(&m, &[Some(0), Some(0), Some(1), Some(1)]).unwrap();
        assert!(r.feasible);
        assert_eq!(r.epsilon_hat, inf);
    }

    #[test]
    fn equidistant_point_is_infeasible() {
        // point 1 sits halfway between 0 and 2
        let m = matrix(
            vec![
                0.0, 1.0, 2.0, 3.0, //
                1.0, 0.0, 1.0, 2.0, //
                2.0, 1.0, 0.0, 1.0, //
                3.0, 2.0, 1.0, 0.0,
            ],
            4,
        );
        let r = feasibility_audit(&m, &[Some(0), Some(0), Some(1), Some(1)]).unwrap();
        assert!(r.epsilon_hat <= 0.0);
        assert!(!r.feasible);
    }

    #[test]
    fn unlabeled_points_are_ignored_and_scale_does_not_matter() {
        let m = matrix(
            vec![
                0.0, 1.0, 0.5, 9.0, 9.0, //
                1.0, 0.0, 0.5, 9.0, 9.0, //
                0.5, 0.5, 0.0, 0.5, 0.5, //
                9.0, 9.0, 0.5, 0.0, 1.0, //
                9.0, 9.0, 0.5, 1.0, 0.0,
            ],
            5,
        );
        let groups = clutter_groups(&[1, 1, 0, 2, 2]);
        let r = feasibility_audit(&m, &groups).unwrap();
        assert!(r.feasible);
        assert_eq!(
            r.epsilon_hat,
            8.0 * crate::fermat::normalization_factor(5, 2.0, 1)
        );
        let r3 = feasibility_audit(&m.scaled(3.0), &groups).unwrap();
        assert_eq!(r3.feasible, r.feasible);
    }

    #[test]
    fn errors() {
        let raw = FermatMatrix::from_values(vec![0.0, 1.0, 1.0, 0.0], 2, 2.0).unwrap();
        assert!(matches!(
            feasibility_audit(&raw, &[Some(0), Some(1)]),
            Err(Error::NotNormalized)
        ));
        let m = raw.normalize(1).unwrap();
        assert!(matches!(
            feasibility_audit(&m, &[Some(0), Some(1)]),
            Err(Error::SmallGroup { size: 1, .. })
        ));
    }
}
