//! Reference configurations with known co-normals and masses.
//!
//! Flat pieces are sampled exactly: a symmetric lattice with trapezoid
//! weights along the boundary line and a composite Gauss-Legendre rule in
//! the conormal direction. Curved pieces use midpoint quadrature on
//! parameter grids. Each constructor checks its analytic record before
//! returning.

mod caps;
mod flat;
pub mod sampling;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::capillary::{co_normals, disintegrate, BoundaryVarifold};
use crate::curvature::CurvatureData;
use crate::error::{Error, Result};
use crate::numeric::unit_ball_volume;
use crate::varifold::{DiscreteVarifold, VariationDecomposition};
use crate::Vector;

pub use caps::{make_cap_union, make_graded_cap, make_spherical_cap, CapGeometry};
pub use flat::{
    make_distinct_pair, make_full_plane_cone, make_half_plane_cone, make_one_sided, make_perturbed_pair,
    make_plane_pair, make_separated_pair, FlatParams,
};
pub use sampling::{
    graded_cells, grid_cells, sample_parametric, Chart, ParamCell, SampledPatch, SphereChart, WeightRule,
};

/// Default truncation radius of flat fixtures.
pub const DEFAULT_EXTENT: f64 = 4.0;
/// `|cos beta|` below this makes the antipodal constructions degenerate.
pub const ORTHOGONAL_TOL: f64 = 1e-4;

/// Analytic quantities a fixture promises.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub beta0: f64,
    pub sigma_gamma_total: f64,
    pub sigma_perp_total: f64,
    /// Relative tolerance on the two totals.
    pub mass_tol: f64,
    /// `n_V`, when it is the same at every site.
    pub n_v: Option<Vec<f64>>,
    /// `|n_W|`, when it is the same at every site.
    pub n_w_norm: Option<f64>,
    pub site_tol: f64,
    /// Density ratio of `mu_V` at the origin at radius `density_radius`.
    pub density_at_origin: Option<f64>,
    pub density_radius: f64,
    pub density_tol: f64,
    /// Construction parameters and other analytic numbers.
    pub params: BTreeMap<String, f64>,
}

/// A varifold, its boundary varifold, and the analytic data that go with
/// them.
#[derive(Clone, Debug)]
pub struct ExampleFixture {
    pub name: String,
    pub v: DiscreteVarifold,
    pub gamma: BoundaryVarifold,
    pub dec: VariationDecomposition,
    pub curvature: CurvatureData,
    pub expected: Expected,
    pub h: f64,
    /// Tolerance used to group colocated boundary atoms.
    pub grouping_tol: f64,
}

impl ExampleFixture {
    /// Compares the fixture with its analytic record.
    pub fn verify_expected(&self) -> Result<()> {
        let e = &self.expected;
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { (a - b).abs() / b.abs() };
        let sg = self.gamma.total_mass();
        if rel(sg, e.sigma_gamma_total) > e.mass_tol {
            return Err(Error::FixtureInconsistent(format!(
                "{}: sigma_Gamma total {sg} vs {}",
                self.name, e.sigma_gamma_total
            )));
        }
        let sp: f64 = self.dec.sigma_perp.iter().map(|(_, s)| s).sum();
        if rel(sp, e.sigma_perp_total) > e.mass_tol {
            return Err(Error::FixtureInconsistent(format!(
                "{}: sigma_perp total {sp} vs {}",
                self.name, e.sigma_perp_total
            )));
        }
        if e.n_v.is_some() || e.n_w_norm.is_some() {
            let d = disintegrate(&self.gamma, self.grouping_tol)?;
            for c in co_normals(&d, self.gamma.beta(), self.gamma.container())? {
                if let Some(nv) = &e.n_v {
                    let err = (c.n_v() - Vector::from_column_slice(nv)).amax();
                    if err > e.site_tol {
                        return Err(Error::FixtureInconsistent(format!("{}: n_V off by {err:e}", self.name)));
                    }
                }
                if let Some(nw) = e.n_w_norm {
                    let err = (c.n_w().norm() - nw).abs();
                    if err > e.site_tol {
                        return Err(Error::FixtureInconsistent(format!(
                            "{}: |n_W| off by {err:e}",
                            self.name
                        )));
                    }
                }
            }
        }
        if let Some(theta) = e.density_at_origin {
            let rho = e.density_radius;
            let ratio = self.v.ball_mass(&Vector::zeros(self.v.ambient()), rho)
                / (unit_ball_volume(self.v.dim()) * rho.powi(self.v.dim() as i32));
            if (ratio - theta).abs() > e.density_tol {
                return Err(Error::FixtureInconsistent(format!(
                    "{}: density {ratio} vs {theta}",
                    self.name
                )));
            }
        }
        self.dec.validate(&self.v, self.gamma.container(), 1e-8)?;
        Ok(())
    }

    pub fn expected_json(&self) -> String {
        serde_json::to_string_pretty(&self.expected).unwrap_or_default()
    }
}

pub(crate) fn check_angle(beta0: f64) -> Result<()> {
    if beta0 > 0.0 && beta0 < std::f64::consts::PI {
        Ok(())
    } else {
        Err(Error::InvalidAngle { value: beta0 })
    }
}

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")))
    }
}
