//! Counting lattice points in thinning regions, solutions of Diophantine
//! inequalities, and saddle connections on square-tiled surfaces, with the
//! experiment harness that compares counts against their `log T` asymptotics.
//!
//! The common currency is a [`ThinningRegion`]
//! `{ |x|^m |y|^n <= b, y_lo <= |y| < y_hi }` in `R^m x R^n` and a
//! [`Lattice`] (possibly translated) given by a unimodular basis.

#![allow(clippy::needless_range_loop)]

pub mod count;
pub mod diophantine;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod lattice;
pub mod origami;
pub mod region;
pub mod sampling;
pub mod siegel;
pub mod stats;

pub use count::{count_points, CountRequest, Strategy};
pub use diophantine::{count_forms, count_toral, FormSystem, ToralSystem};
pub use error::{Error, Result};
pub use geometry::{
    ball_volume, decompose, shear_matrix, sphere_area, SplitVector, UnimodularBasis,
};
pub use harness::{run_scenario, ConvergenceReport, Experiment, Scenario};
pub use lattice::{AffineLattice, Lattice};
pub use origami::{estimate_sv_constant, Origami, SaddleConnectionSet};
pub use region::ThinningRegion;
pub use sampling::SeededStream;
pub use siegel::{siegel_average, zeta, SiegelVariant};
pub use stats::MCEstimate;
