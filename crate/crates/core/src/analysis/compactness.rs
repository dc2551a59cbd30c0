use serde::Serialize;

use crate::analysis::bl::{bl_distance_varifold, DEFAULT_SCALES};
use crate::capillary::{co_normals, disintegrate, single_linkage, SiteCoNormal};
use crate::error::{Error, Result};
use crate::fixtures::ExampleFixture;
use crate::Vector;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompactnessParams {
    #[serde(skip)]
    pub x0: Vector,
    pub rho: f64,
    /// Sites closer than this belong to the same boundary component.
    pub linkage_tol: f64,
    pub grouping_tol: f64,
    /// Largest ratio of the limit integral to the first member's that counts
    /// as degenerate.
    pub degeneracy_ratio: f64,
}

impl CompactnessParams {
    pub fn new(x0: Vector, linkage_tol: f64) -> CompactnessParams {
        CompactnessParams {
            x0,
            rho: 2.0,
            linkage_tol,
            grouping_tol: 1e-6,
            degeneracy_ratio: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberReport {
    pub s: f64,
    pub bl_to_limit: f64,
    /// `sigma_Gamma(B_(rho/2)(x0))`.
    pub sigma_half_ball: f64,
    /// `int |T_x S(n_V)| d sigma_Gamma` over `B_rho(x0)`.
    pub integral: f64,
    /// Smallest one-sidedness margin `min <cos(beta) n_W, tau>` over boundary
    /// components, each tested with its own averaged direction `tau`.
    /// `None` when some component has no direction.
    pub c1_margin: Option<f64>,
    pub components: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompactnessReport {
    pub members: Vec<MemberReport>,
    pub limit: MemberReport,
    /// Distances to the limit do not increase along the grid.
    pub converges: bool,
    /// The limit keeps the smallest member lower bound on `sigma_Gamma`.
    pub lower_bound_propagates: bool,
    /// Limit integral over first member integral.
    pub integral_ratio: f64,
    pub integral_degenerates: bool,
}

fn c1_margin(sites: &[SiteCoNormal], linkage_tol: f64) -> (Option<f64>, usize) {
    let points: Vec<Vector> = sites.iter().map(|s| Vector::from_column_slice(&s.x)).collect();
    let refs: Vec<&Vector> = points.iter().collect();
    let comps = single_linkage(&refs, linkage_tol);
    let mut margin = Some(f64::INFINITY);
    for comp in &comps {
        let mut avg = Vector::zeros(points.first().map_or(0, |p| p.len()));
        for &i in comp {
            avg += sites[i].cos_beta_n_w();
        }
        let norm = avg.norm();
        if norm <= 1e-10 || comp.iter().any(|&i| sites[i].n_w_zero) {
            margin = None;
            continue;
        }
        let tau = avg / norm;
        let low = comp
            .iter()
            .map(|&i| sites[i].cos_beta_n_w().dot(&tau))
            .fold(f64::INFINITY, f64::min);
        margin = margin.map(|m| m.min(low));
    }
    (margin, comps.len())
}

fn member(f: &ExampleFixture, s: f64, limit: &ExampleFixture, p: &CompactnessParams) -> Result<MemberReport> {
    let x0 = &p.x0;
    let local = f.gamma.restricted(|a| (&a.x - x0).norm() <= p.rho);
    let (sites, masses) = if local.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let d = disintegrate(&local, p.grouping_tol)?;
        let masses: Vec<f64> = d.sites.iter().map(|s| s.mass).collect();
        (co_normals(&d, local.beta(), local.container())?, masses)
    };
    let integral = sites
        .iter()
        .zip(&masses)
        .map(|(c, m)| if c.n_w_zero { 0.0 } else { m * c.cos_beta_n_w().norm() })
        .sum();
    let (c1, components) = c1_margin(&sites, p.linkage_tol);
    Ok(MemberReport {
        s,
        bl_to_limit: bl_distance_varifold(&f.v, &limit.v, p.rho, DEFAULT_SCALES)?.value,
        sigma_half_ball: f.gamma.ball_mass(x0, p.rho / 2.0),
        integral,
        c1_margin: c1,
        components,
    })
}

/// Runs a family `s -> fixture` along a decreasing grid of positive `s` and
/// compares it with the member at `s = 0`.
pub fn compactness_experiment(
    family: &dyn Fn(f64) -> Result<ExampleFixture>,
    s_grid: &[f64],
    params: &CompactnessParams,
) -> Result<CompactnessReport> {
    if s_grid.is_empty() || s_grid.iter().any(|s| !(*s > 0.0)) || s_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("s grid must be positive and decreasing".into()));
    }
    let limit_fixture = family(0.0)?;
    let members = s_grid
        .iter()
        .map(|&s| member(&family(s)?, s, &limit_fixture, params))
        .collect::<Result<Vec<_>>>()?;
    let limit = member(&limit_fixture, 0.0, &limit_fixture, params)?;
    let converges = members.windows(2).all(|w| w[1].bl_to_limit <= w[0].bl_to_limit);
    let floor = members.iter().map(|m| m.sigma_half_ball).fold(f64::INFINITY, f64::min);
    let first = members[0].integral;
    let integral_ratio = if first > 0.0 { limit.integral / first } else { f64::NAN };
    Ok(CompactnessReport {
        lower_bound_propagates: limit.sigma_half_ball >= floor * (1.0 - 1e-12),
        integral_degenerates: integral_ratio <= params.degeneracy_ratio,
        members,
        limit,
        converges,
        integral_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{make_one_sided, make_separated_pair, FlatParams};
    use std::f64::consts::FRAC_PI_3;

    fn params() -> CompactnessParams {
        CompactnessParams::new(Vector::zeros(3), 0.2)
    }

    #[test]
    fn separated_pair_degenerates() {
        let fam = |s: f64| make_separated_pair(FlatParams::new(FRAC_PI_3, 2, 2).with_h(0.1), s);
        let r = compactness_experiment(&fam, &[1.0, 0.5, 0.25, 0.125], &params()).unwrap();
        assert!(r.converges);
        assert!(r.lower_bound_propagates);
        assert!(r.integral_degenerates, "{}", r.integral_ratio);
        assert_eq!(r.limit.integral, 0.0);
        for m in &r.members {
            assert!(m.c1_margin.unwrap() >= 0.5 - 1e-10, "{m:?}");
            assert!(m.integral > 0.0);
        }
    }

    #[test]
    fn one_sided_family_keeps_integral() {
        let fam = |s: f64| make_one_sided(FlatParams::new(FRAC_PI_3, 2, 2).with_h(0.1), s);
        let r = compactness_experiment(&fam, &[1.0, 0.5, 0.25, 0.125], &params()).unwrap();
        assert!(r.integral_ratio >= 0.9, "{}", r.integral_ratio);
        assert!(!r.integral_degenerates);
    }

    #[test]
    fn constant_family_is_at_distance_zero() {
        let fam = |_: f64| make_one_sided(FlatParams::new(FRAC_PI_3, 2, 2).with_h(0.2), 0.0);
        let r = compactness_experiment(&fam, &[1.0, 0.5], &params()).unwrap();
        assert!(r.members.iter().all(|m| m.bl_to_limit == 0.0));
        assert_eq!(r.integral_ratio, 1.0);
    }
}
