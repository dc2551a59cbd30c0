use std::f64::consts::PI;

use serde::Serialize;

use crate::analysis::bl::{bl_distance_varifold, DEFAULT_SCALES};
use crate::analysis::density::density_curve;
use crate::capillary::BoundaryVarifold;
use crate::error::{Error, Result};
use crate::geometry::{top_eigenvectors, Plane};
use crate::numeric::pairwise_sum;
use crate::varifold::{pushforward_dilation, Atom, DiscreteVarifold};
use crate::{Matrix, Vector};

/// Rescalings `(V, Gamma) -> ((x - x0) / r)` at decreasing radii.
#[derive(Clone, Debug)]
pub struct BlowUpSequence {
    pub radii: Vec<f64>,
    pub terms: Vec<(DiscreteVarifold, BoundaryVarifold)>,
    /// BL distance between consecutive varifold terms.
    pub consecutive: Vec<f64>,
    pub region_radius: f64,
}

impl BlowUpSequence {
    /// Ratios `d_k / d_(k+1)` of consecutive distances.
    pub fn contraction_factors(&self) -> Vec<f64> {
        self.consecutive.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

pub fn blow_up(
    v: &DiscreteVarifold,
    gamma: &BoundaryVarifold,
    x0: &Vector,
    radii: &[f64],
    region_radius: f64,
) -> Result<BlowUpSequence> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::RadiusOrder(
            "blow-up radii must be positive and decreasing".into(),
        ));
    }
    let terms = radii
        .iter()
        .map(|&r| pushforward_dilation(v, gamma, x0, r))
        .collect::<Result<Vec<_>>>()?;
    let consecutive = terms
        .windows(2)
        .map(|w| bl_distance_varifold(&w[0].0, &w[1].0, region_radius, DEFAULT_SCALES).map(|r| r.value))
        .collect::<Result<Vec<f64>>>()?;
    Ok(BlowUpSequence {
        radii: radii.to_vec(),
        terms,
        consecutive,
        region_radius,
    })
}

/// `max |<x, n_w>|` over boundary atoms with `|x| <= region_radius`.
pub fn boundary_orthogonality(gamma: &BoundaryVarifold, n_w: &Vector, region_radius: f64) -> f64 {
    gamma
        .atoms()
        .iter()
        .filter(|a| a.x.norm() <= region_radius)
        .map(|a| a.x.dot(n_w).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeClass {
    HalfPlane,
    MultiPlane,
    DensityOutOfWindow,
    ResidualTooLarge,
    AngleMismatch,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeFitParams {
    pub region_radius: f64,
    /// Radii at which the vertex density is sampled.
    pub rho_grid: Vec<f64>,
    /// Half-width of the density window around 1/2.
    pub density_window: f64,
    pub tol: f64,
    /// Largest mass-averaged distance of atom planes from the fitted plane.
    pub plane_tol: f64,
}

impl Default for ConeFitParams {
    fn default() -> Self {
        ConeFitParams {
            region_radius: 2.0,
            rho_grid: vec![0.25, 0.5, 1.0, 1.5],
            density_window: 0.05,
            tol: 0.05,
            plane_tol: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentConeFit {
    #[serde(skip)]
    pub plane: Plane,
    pub projector: Vec<f64>,
    pub vertex_density: f64,
    pub density_spread: f64,
    /// Angle between the fitted plane and the boundary hyperplane.
    pub alpha: f64,
    /// `min(beta(x0), pi - beta(x0))`.
    pub expected_alpha: f64,
    pub residual: f64,
    pub plane_spread: f64,
    /// Frame of the boundary `(m-1)`-plane of the half-plane.
    pub boundary_line: Vec<Vec<f64>>,
    pub class: ConeClass,
    pub pass: bool,
}

/// Fits a half-plane to a blow-up limit `c` whose boundary hyperplane has
/// inward normal `nu`.
pub fn fit_tangent_cone(
    c: &DiscreteVarifold,
    nu: &Vector,
    beta_x0: f64,
    params: &ConeFitParams,
) -> Result<TangentConeFit> {
    let m = c.dim();
    let d = c.ambient();
    let local: Vec<&Atom> = c
        .atoms()
        .iter()
        .filter(|a| a.x.norm() <= params.region_radius)
        .collect();
    if local.is_empty() {
        return Err(Error::InvalidParameter("no atoms in the fit region".into()));
    }
    let mut moment = Matrix::zeros(d, d);
    for a in &local {
        moment += &a.x * a.x.transpose() * a.w;
    }
    let plane = Plane::from_frame(d, &top_eigenvectors(&moment, m))?;
    let masses: Vec<f64> = local.iter().map(|a| a.w).collect();
    let spread: Vec<f64> = local.iter().map(|a| a.w * a.plane.distance(&plane)).collect();
    let plane_spread = pairwise_sum(&spread) / pairwise_sum(&masses);

    let curve = density_curve(c, &Vector::zeros(d), &params.rho_grid)?;
    let hi = curve.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = curve.ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if hi - lo > params.tol {
        return Err(Error::NotConical {
            spread: hi - lo,
            tol: params.tol,
        });
    }
    let vertex_density = pairwise_sum(&curve.ratios) / curve.ratios.len() as f64;

    let alpha = plane.project(nu).norm().min(1.0).asin();
    let expected_alpha = beta_x0.min(PI - beta_x0);

    let model: Vec<Atom> = local
        .iter()
        .map(|a| {
            let off = plane.project_perp(&a.x);
            let x = if off.norm() <= 1e-12 * (1.0 + a.x.norm()) {
                a.x.clone()
            } else {
                &a.x - off
            };
            let p = if a.plane.approx_eq(&plane) {
                a.plane.clone()
            } else {
                plane.clone()
            };
            Atom { x, plane: p, w: a.w }
        })
        .collect();
    let region = DiscreteVarifold::new(m, d, local.iter().map(|a| (*a).clone()).collect())?;
    let model = DiscreteVarifold::new(m, d, model)?;
    let residual = bl_distance_varifold(&region, &model, params.region_radius, DEFAULT_SCALES)?.value;

    let t = Matrix::identity(d, d) - nu * nu.transpose();
    let ptp = plane.proj() * t * plane.proj();
    let boundary_line = top_eigenvectors(&ptp, m.saturating_sub(1))
        .into_iter()
        .map(|u| u.iter().copied().collect())
        .collect();

    let class = if plane_spread > params.plane_tol {
        ConeClass::MultiPlane
    } else if (vertex_density - 0.5).abs() > params.density_window {
        ConeClass::DensityOutOfWindow
    } else if residual > params.tol {
        ConeClass::ResidualTooLarge
    } else if (alpha - expected_alpha).abs() > params.tol {
        ConeClass::AngleMismatch
    } else {
        ConeClass::HalfPlane
    };
    Ok(TangentConeFit {
        projector: plane.proj().iter().copied().collect(),
        plane,
        vertex_density,
        density_spread: hi - lo,
        alpha,
        expected_alpha,
        residual,
        plane_spread,
        boundary_line,
        class,
        pass: class == ConeClass::HalfPlane,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarrierReport {
    pub theta: f64,
    pub alpha: f64,
    pub max_height: f64,
    pub equality: bool,
    /// `max |<x, nu_H>|` when the equality branch is taken.
    pub equality_defect: Option<f64>,
    pub pass: bool,
}

/// Checks `theta >= alpha` for a cone contained in `{<x, nu_h> <= 0}`, where
/// `theta` is the angle between `nu_h` and the boundary normal `e`. When
/// `|theta - alpha| <= angle_tol` the atoms must lie on `{<x, nu_h> = 0}`.
pub fn barrier_angle_check(
    fit: &TangentConeFit,
    cone: &DiscreteVarifold,
    nu_h: &Vector,
    e: &Vector,
    angle_tol: f64,
    contain_tol: f64,
) -> Result<BarrierReport> {
    let heights: Vec<f64> = cone.atoms().iter().map(|a| a.x.dot(nu_h)).collect();
    let max_height = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_height > contain_tol {
        return Err(Error::NotContained { value: max_height });
    }
    let theta = nu_h.dot(e).clamp(-1.0, 1.0).acos();
    let mut pass = theta >= fit.alpha - angle_tol;
    let equality = (theta - fit.alpha).abs() <= angle_tol;
    let equality_defect = equality.then(|| heights.iter().map(|h| h.abs()).fold(0.0, f64::max));
    if let Some(defect) = equality_defect {
        pass &= defect <= contain_tol;
    }
    Ok(BarrierReport {
        theta,
        alpha: fit.alpha,
        max_height,
        equality,
        equality_defect,
        pass,
    })
}

/// In-plane unit vector orthogonal to the boundary line, pointing into the
/// fitted half-plane, split as `sin(alpha) nu + cos(alpha) w`; returns
/// `(n_P, w)`.
pub fn fitted_conormal(fit: &TangentConeFit, nu: &Vector) -> Result<(Vector, Vector)> {
    let pnu = fit.plane.project(nu);
    let norm = pnu.norm();
    if norm < 1e-12 {
        return Err(Error::DegenerateProjection { norm });
    }
    let n_p = pnu / norm;
    let tan = &n_p - nu * n_p.dot(nu);
    let tn = tan.norm();
    if tn < 1e-12 {
        return Err(Error::InvalidParameter(
            "fitted plane contains the boundary normal".into(),
        ));
    }
    Ok((n_p, tan / tn))
}

/// `nu_H = cos(theta) nu - sin(theta) w`, which makes angle `theta` with `nu`
/// and contains the fitted half-plane exactly when `theta >= alpha`.
pub fn barrier_normal(fit: &TangentConeFit, nu: &Vector, theta: f64) -> Result<Vector> {
    let (_, w) = fitted_conormal(fit, nu)?;
    Ok(nu * theta.cos() - w * theta.sin())
}

/// Lattice atoms of the fitted half-plane `{sum l_i u_i + t n_P : t >= 0}`
/// with spacing `h` out to `extent`.
pub fn half_plane_model(fit: &TangentConeFit, nu: &Vector, extent: f64, h: f64) -> Result<DiscreteVarifold> {
    if !(h > 0.0 && extent > 0.0) {
        return Err(Error::InvalidParameter(
            "model needs positive extent and spacing".into(),
        ));
    }
    let (n_p, _) = fitted_conormal(fit, nu)?;
    let m = fit.plane.dim();
    let d = fit.plane.ambient();
    let steps = (extent / h).round() as i64;
    let line: Vec<f64> = (-steps..=steps).map(|i| i as f64 * h).collect();
    let ray: Vec<f64> = (0..=steps).map(|i| (i as f64 + 0.5) * h).collect();
    let mut points = vec![Vector::zeros(d)];
    for u in &fit.boundary_line {
        let u = Vector::from_column_slice(u);
        points = points
            .iter()
            .flat_map(|x| line.iter().map(|l| x + &u * *l).collect::<Vec<_>>())
            .collect();
    }
    let w = h.powi(m as i32);
    let atoms = points
        .iter()
        .flat_map(|x| {
            ray.iter()
                .map(|t| Atom {
                    x: x + &n_p * *t,
                    plane: fit.plane.clone(),
                    w,
                })
                .collect::<Vec<_>>()
        })
        .collect();
    DiscreteVarifold::new(m, d, atoms)
}
