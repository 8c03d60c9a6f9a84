//! Fermat K-medoids, external agreement scores and the empirical
//! feasibility audit.

mod feasibility;
mod kmedoids;
mod metrics;

pub use feasibility::{clutter_groups, feasibility_audit, FeasibilityReport};
pub use kmedoids::{
    farthest_point_init, initial_medoids, kmedoids, kmedoids_from, kmedoids_with, ClusterModel,
    Init,
};
pub use metrics::{score, ScoreCard};
