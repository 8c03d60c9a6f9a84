//! Sample and macroscopic Fermat distances, closed-form bounds on the power
//! parameter, Fermat K-medoids, and variability statistics of the sample
//! distance.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha_select;
pub mod clustering;
pub mod datasets;
pub mod error;
pub mod fermat;
mod graph;
pub mod macro_fermat;
pub mod rng;
pub mod spacing_stats;

pub use datasets::{ClutterSpec, PointCloud, SwissRollSpec};
pub use error::{Error, Result};
pub use fermat::{fermat_matrix, fermat_query, FermatGraphConfig, FermatMatrix, GraphKind};
