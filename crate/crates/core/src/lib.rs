//! Discrete varifolds with capillary boundary.
//!
//! Measures are finite atom lists of `(point, plane, weight)`. On top of
//! them the crate evaluates first variations against test fields, builds
//! the fiber-averaged co-normals of a boundary varifold, and runs the
//! monotonicity, blow-up, compactness and curvature checks.
//!
//! Module layout:
//! - [`geometry`]: planes as projectors, containers, contact angles
//! - [`varifold`]: atoms, ball masses, first variation, test fields
//! - [`capillary`]: the capillary bundle, conormals, disintegration
//! - [`fixtures`]: constructors for the reference configurations
//! - [`analysis`]: density curves, BL distance, blow-ups, cone fits
//! - [`curvature`]: weak second fundamental forms and their identities
//! - [`io`]: plain-text atom files
//! - [`report`]: JSON check records

pub mod analysis;
pub mod capillary;
pub mod curvature;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod numeric;
pub mod report;
pub mod varifold;

pub use capillary::{BoundaryAtom, BoundaryVarifold};
pub use error::{Error, Result};
pub use geometry::{ContactAngleField, Container, Plane};
pub use varifold::{Atom, DiscreteVarifold, TestField};

/// Dense column vector used for points and directions.
pub type Vector = nalgebra::DVector<f64>;
/// Dense square matrix used for projectors and Jacobians.
pub type Matrix = nalgebra::DMatrix<f64>;
