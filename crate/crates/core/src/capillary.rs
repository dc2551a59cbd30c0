//! The capillary bundle, conormals and boundary varifolds.
//!
//! A plane `P` at a boundary point `x` lies in the capillary bundle when
//! `|P(nu)| = sin beta(x)` and `P ∩ T_xS` is orthogonal to `P(nu)`. Its
//! conormal is `P(nu) / |P(nu)|`. Fiber averages of conormals over a
//! disintegrated boundary varifold give the co-normals `n_V` and `n_W`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{top_eigenvectors, ContactAngleField, Container, Plane, SURFACE_TOL};
use crate::numeric::{pairwise_sum, par_sum, unit_ball_volume};
use crate::Vector;

const DEGENERATE_NORM: f64 = 1e-10;
/// `|cos beta|` below this is treated as zero.
pub const COS_ZERO: f64 = 1e-12;
/// Tangential co-normal parts below this length are reported as zero.
pub const NW_ZERO: f64 = 1e-10;

/// `sin beta`, computed so that `beta` and `pi - beta` agree bit for bit
/// whenever the subtraction `pi - beta` is exact.
pub fn sin_angle(beta: f64) -> f64 {
    let r = if beta <= std::f64::consts::FRAC_PI_2 {
        beta
    } else {
        std::f64::consts::PI - beta
    };
    r.sin()
}

/// Defects of the two capillary bundle conditions at `x`: `||P nu| - sin(beta)|`
/// and the largest `|<u, P nu>|` over the top `m - 1` eigenvectors `u` of `P T P`.
pub fn capillary_gap(x: &Vector, p: &Plane, beta: &ContactAngleField, container: &Container) -> Result<(f64, f64)> {
    let (nu, t) = container.normal_and_tangent(x)?;
    let b = beta.beta(x)?;
    let pnu = p.project(&nu);
    let gap_i = (pnu.norm() - sin_angle(b)).abs();
    let m = p.dim();
    let gap_ii = if m <= 1 {
        0.0
    } else {
        let ptp = p.proj() * &t * p.proj();
        top_eigenvectors(&ptp, m - 1)
            .iter()
            .map(|u| u.dot(&pnu).abs())
            .fold(0.0, f64::max)
    };
    Ok((gap_i, gap_ii))
}

/// The conormal `P(nu) / |P(nu)|` at a boundary point.
pub fn conormal(x: &Vector, p: &Plane, beta: &ContactAngleField, container: &Container) -> Result<Vector> {
    let (nu, _) = container.normal_and_tangent(x)?;
    let pnu = p.project(&nu);
    let norm = pnu.norm();
    if norm < DEGENERATE_NORM {
        return Err(Error::DegenerateProjection { norm });
    }
    if norm < 0.5 * sin_angle(beta.beta(x)?) {
        return Err(Error::OffBundle { norm });
    }
    Ok(pnu / norm)
}

/// The conormal using the normal `grad sdf(x)`, without bundle checks.
pub fn conormal_unchecked(x: &Vector, p: &Plane, container: &Container) -> Result<Vector> {
    let nu = container.grad_sdf(x);
    let pnu = p.project(&nu);
    let norm = pnu.norm();
    if norm < DEGENERATE_NORM {
        return Err(Error::DegenerateProjection { norm });
    }
    Ok(pnu / norm)
}

/// One Dirac mass of a boundary varifold.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryAtom {
    pub x: Vector,
    pub plane: Plane,
    pub sigma: f64,
}

/// A finite measure on the capillary bundle over the boundary surface.
#[derive(Clone, Debug)]
pub struct BoundaryVarifold {
    dim: usize,
    ambient: usize,
    atoms: Vec<BoundaryAtom>,
    container: Container,
    beta: ContactAngleField,
    tol_bundle: f64,
}

impl BoundaryVarifold {
    /// Builds a boundary varifold, checking every atom against the bundle.
    pub fn new(
        dim: usize,
        ambient: usize,
        atoms: Vec<BoundaryAtom>,
        container: Container,
        beta: ContactAngleField,
        tol_bundle: f64,
    ) -> Result<BoundaryVarifold> {
        if dim == 0 || dim > ambient {
            return Err(Error::DimensionMismatch {
                expected: ambient,
                found: dim,
            });
        }
        let checks: Vec<Result<()>> = atoms
            .par_iter()
            .enumerate()
            .map(|(i, a)| {
                if a.x.len() != ambient || a.plane.ambient() != ambient {
                    return Err(Error::DimensionMismatch {
                        expected: ambient,
                        found: a.x.len(),
                    });
                }
                if a.plane.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: a.plane.dim(),
                    });
                }
                if !(a.sigma > 0.0) || !a.sigma.is_finite() {
                    return Err(Error::InvalidWeight {
                        index: i,
                        value: a.sigma,
                    });
                }
                let (gap_i, gap_ii) = capillary_gap(&a.x, &a.plane, &beta, &container)?;
                if gap_i > tol_bundle || gap_ii > tol_bundle {
                    return Err(Error::BundleViolation {
                        index: i,
                        gap_i,
                        gap_ii,
                    });
                }
                Ok(())
            })
            .collect();
        checks.into_iter().collect::<Result<Vec<()>>>()?;
        Ok(BoundaryVarifold {
            dim,
            ambient,
            atoms,
            container,
            beta,
            tol_bundle,
        })
    }

    /// Assembles a boundary varifold from parts already known to be valid.
    pub(crate) fn from_parts(
        dim: usize,
        ambient: usize,
        atoms: Vec<BoundaryAtom>,
        container: Container,
        beta: ContactAngleField,
        tol_bundle: f64,
    ) -> BoundaryVarifold {
        BoundaryVarifold {
            dim,
            ambient,
            atoms,
            container,
            beta,
            tol_bundle,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn atoms(&self) -> &[BoundaryAtom] {
        &self.atoms
    }

    pub fn container(&self) -> &Container {
        &self.container
    }

    pub fn beta(&self) -> &ContactAngleField {
        &self.beta
    }

    pub fn tol_bundle(&self) -> f64 {
        self.tol_bundle
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        let s: Vec<f64> = self.atoms.iter().map(|a| a.sigma).collect();
        pairwise_sum(&s)
    }

    pub fn ball_mass(&self, x0: &Vector, rho: f64) -> f64 {
        let atoms = &self.atoms;
        par_sum(atoms.len(), |i| {
            if (&atoms[i].x - x0).norm() <= rho {
                atoms[i].sigma
            } else {
                0.0
            }
        })
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<BoundaryVarifold> {
        if !(factor > 0.0) {
            return Err(Error::InvalidParameter(format!("scale factor {factor}")));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| BoundaryAtom {
                sigma: a.sigma * factor,
                ..a.clone()
            })
            .collect();
        Ok(BoundaryVarifold { atoms, ..self.clone() })
    }

    /// The atoms for which `keep` holds.
    pub fn restricted<F: Fn(&BoundaryAtom) -> bool>(&self, keep: F) -> BoundaryVarifold {
        let atoms = self.atoms.iter().filter(|a| keep(a)).cloned().collect();
        BoundaryVarifold { atoms, ..self.clone() }
    }

    /// Disjoint union with another boundary varifold on the same container.
    pub fn union(&self, other: &BoundaryVarifold) -> Result<BoundaryVarifold> {
        if self.dim != other.dim || self.ambient != other.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Ok(BoundaryVarifold { atoms, ..self.clone() })
    }
}

/// A fiber entry `probability delta_P`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fiber {
    pub plane: Plane,
    pub probability: f64,
}

/// A cluster of colocated boundary atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    /// Mass-weighted centroid of the cluster.
    pub x: Vector,
    pub mass: f64,
    pub fibers: Vec<Fiber>,
    /// Indices of the atoms grouped into this site.
    pub atoms: Vec<usize>,
}

/// `Gamma = sigma_Gamma ⊗ Gamma^x` on the atom level.
#[derive(Clone, Debug, PartialEq)]
pub struct Disintegration {
    pub sites: Vec<Site>,
    pub grouping_tol: f64,
}

impl Disintegration {
    pub fn total_mass(&self) -> f64 {
        let m: Vec<f64> = self.sites.iter().map(|s| s.mass).collect();
        pairwise_sum(&m)
    }
}

/// Single-linkage clusters of points at distance `<= tol`, ordered by their
/// smallest member index.
pub fn single_linkage(points: &[&Vector], tol: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let key = |x: &Vector| -> Vec<i64> { x.iter().map(|c| (c / tol).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, x) in points.iter().enumerate() {
        grid.entry(key(x)).or_default().push(i);
    }
    let d = points.first().map(|p| p.len()).unwrap_or(0);
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut c| {
            (0..d)
                .map(|_| {
                    let o = (c % 3) as i64 - 1;
                    c /= 3;
                    o
                })
                .collect()
        })
        .collect();
    for (i, x) in points.iter().enumerate() {
        let k = key(x);
        for off in &offsets {
            let nk: Vec<i64> = k.iter().zip(off).map(|(a, b)| a + b).collect();
            if let Some(bucket) = grid.get(&nk) {
                for &j in bucket {
                    if j > i && (*x - points[j]).norm() <= tol {
                        let ri = find(&mut parent, i);
                        let rj = find(&mut parent, j);
                        if ri != rj {
                            let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                            parent[hi] = lo;
                        }
                    }
                }
            }
        }
    }
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let slot = *index.entry(r).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[slot].push(i);
    }
    clusters
}

/// Groups atoms into sites and each site's planes into fibers.
pub fn disintegrate(gamma: &BoundaryVarifold, grouping_tol: f64) -> Result<Disintegration> {
    if !(grouping_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("grouping tolerance {grouping_tol}")));
    }
    let atoms = gamma.atoms();
    let pts: Vec<&Vector> = atoms.iter().map(|a| &a.x).collect();
    let clusters = single_linkage(&pts, grouping_tol);
    let sites = clusters
        .into_par_iter()
        .map(|members| {
            let sig: Vec<f64> = members.iter().map(|&i| atoms[i].sigma).collect();
            let mass = pairwise_sum(&sig);
            let mut x = Vector::zeros(gamma.ambient());
            for &i in &members {
                x.axpy(atoms[i].sigma / mass, &atoms[i].x, 1.0);
            }
            if members.len() == 1 {
                x = atoms[members[0]].x.clone();
            }
            let mut planes: Vec<(Plane, Vec<f64>)> = Vec::new();
            for &i in &members {
                let a = &atoms[i];
                match planes.iter_mut().find(|(p, _)| p.approx_eq(&a.plane)) {
                    Some((_, s)) => s.push(a.sigma),
                    None => planes.push((a.plane.clone(), vec![a.sigma])),
                }
            }
            let fibers = planes
                .into_iter()
                .map(|(plane, s)| Fiber {
                    plane,
                    probability: pairwise_sum(&s) / mass,
                })
                .collect();
            Site {
                x,
                mass,
                fibers,
                atoms: members,
            }
        })
        .collect();
    Ok(Disintegration { sites, grouping_tol })
}

/// Co-normals at one site.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiteCoNormal {
    pub x: Vec<f64>,
    /// Fiber average of the conormals.
    pub n_v: Vec<f64>,
    /// `cos beta n_W`, the tangential part of `n_V`.
    pub cos_beta_n_w: Vec<f64>,
    pub cos_beta: f64,
    /// Set when `n_W` vanishes, either because `cos beta = 0` or because the
    /// tangential part cancels.
    pub n_w_zero: bool,
}

impl SiteCoNormal {
    pub fn n_v(&self) -> Vector {
        Vector::from_column_slice(&self.n_v)
    }

    pub fn cos_beta_n_w(&self) -> Vector {
        Vector::from_column_slice(&self.cos_beta_n_w)
    }

    /// `n_W`, with the convention `sgn(0) = 0`.
    pub fn n_w(&self) -> Vector {
        if self.n_w_zero {
            Vector::zeros(self.n_v.len())
        } else {
            self.cos_beta_n_w() / self.cos_beta
        }
    }
}

/// Co-normals of a single site.
pub fn site_co_normal(site: &Site, beta: &ContactAngleField, container: &Container) -> Result<SiteCoNormal> {
    let (nu, t) = container.frame_at(&site.x);
    let mut n_v = Vector::zeros(site.x.len());
    for f in &site.fibers {
        let pnu = f.plane.project(&nu);
        let norm = pnu.norm();
        if norm < DEGENERATE_NORM {
            return Err(Error::DegenerateProjection { norm });
        }
        n_v.axpy(f.probability / norm, &pnu, 1.0);
    }
    let tan = &t * &n_v;
    let cos_beta = beta.beta(&site.x)?.cos();
    let n_w_zero = cos_beta.abs() < COS_ZERO || tan.norm() <= NW_ZERO;
    Ok(SiteCoNormal {
        x: site.x.iter().copied().collect(),
        n_v: n_v.iter().copied().collect(),
        cos_beta_n_w: tan.iter().copied().collect(),
        cos_beta,
        n_w_zero,
    })
}

/// `n_V` and `n_W` at every site of a disintegration.
pub fn co_normals(d: &Disintegration, beta: &ContactAngleField, container: &Container) -> Result<Vec<SiteCoNormal>> {
    d.sites.par_iter().map(|s| site_co_normal(s, beta, container)).collect()
}

/// Parameters of the capillary boundary point test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CbpParams {
    pub eps0: f64,
    pub rho0: f64,
    pub c0: f64,
    pub grouping_tol: f64,
    /// Sites farther than `rho0 - exclusion_radius` from `x0` are skipped.
    pub exclusion_radius: f64,
}

impl Default for CbpParams {
    fn default() -> Self {
        CbpParams {
            eps0: 0.0,
            rho0: 1.0,
            c0: 1.0,
            grouping_tol: 1e-6,
            exclusion_radius: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CbpReport {
    pub c1_margin: f64,
    pub c2_margin: f64,
    pub pass: bool,
    pub sites_used: usize,
}

fn local_sites(gamma: &BoundaryVarifold, x0: &Vector, params: &CbpParams) -> Result<Vec<SiteCoNormal>> {
    let reach = params.rho0 + 2.0 * params.grouping_tol;
    let local = gamma.restricted(|a| (&a.x - x0).norm() <= reach);
    let d = disintegrate(&local, params.grouping_tol)?;
    if !d.sites.iter().any(|s| (&s.x - x0).norm() <= params.grouping_tol) {
        return Err(Error::NoSiteNearPoint {
            tol: params.grouping_tol,
        });
    }
    let radius = params.rho0 - params.exclusion_radius;
    let sites: Vec<Site> = d.sites.into_iter().filter(|s| (&s.x - x0).norm() <= radius).collect();
    sites
        .par_iter()
        .map(|s| site_co_normal(s, gamma.beta(), gamma.container()))
        .collect()
}

/// One-sidedness margins `c1` and `c2` at `x0` for the direction `tau`.
pub fn cbp_check(gamma: &BoundaryVarifold, x0: &Vector, tau: &Vector, params: &CbpParams) -> Result<CbpReport> {
    let cos0 = gamma.beta().beta(x0)?.cos();
    if cos0.abs() < COS_ZERO {
        return Err(Error::AngleDegenerate);
    }
    let nu0 = gamma.container().grad_sdf(x0);
    if (tau.norm() - 1.0).abs() > 1e-8 || tau.dot(&nu0).abs() > 1e-8 {
        return Err(Error::InvalidParameter("tau must be a unit tangent vector".into()));
    }
    let sites = local_sites(gamma, x0, params)?;
    let c1 = sites
        .iter()
        .map(|s| s.cos_beta_n_w().dot(tau) - params.eps0)
        .fold(f64::INFINITY, f64::min);
    let c2 = sites
        .iter()
        .map(|s| {
            let dx = s.x.iter().zip(x0.iter()).map(|(a, b)| a - b).collect::<Vec<f64>>();
            let dx = Vector::from_vec(dx);
            dx.dot(&s.cos_beta_n_w()).abs() - params.c0 * cos0.abs() * dx.norm_squared()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CbpReport {
        c1_margin: c1,
        c2_margin: c2,
        pass: c1 >= 0.0 && c2 <= 0.0,
        sites_used: sites.len(),
    })
}

/// Result of scanning unit tangent directions for the best `c1` margin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TauScan {
    pub tau: Vec<f64>,
    pub c1_margin: f64,
    pub directions_scanned: usize,
}

/// Deterministic grid of unit vectors in a space of dimension `k`.
pub fn sphere_grid(k: usize, resolution: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    match k {
        0 => vec![],
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..resolution)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / resolution as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let nt = (resolution / 2).max(2);
            let mut out = vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]];
            for i in 1..nt {
                let t = PI * i as f64 / nt as f64;
                for j in 0..resolution {
                    let p = 2.0 * PI * j as f64 / resolution as f64;
                    out.push(vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]);
                }
            }
            out
        }
        _ => {
            let mut out = Vec::new();
            for i in 0..k {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; k];
                    v[i] = s;
                    out.push(v);
                }
            }
            let r = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..k {
                for j in (i + 1)..k {
                    for (a, b) in [(r, r), (r, -r), (-r, r), (-r, -r)] {
                        let mut v = vec![0.0; k];
                        v[i] = a;
                        v[j] = b;
                        out.push(v);
                    }
                }
            }
            out
        }
    }
}

/// Scans a grid of unit tangent directions at `x0` and returns the one
/// with the largest `c1` margin.
pub fn scan_tau(gamma: &BoundaryVarifold, x0: &Vector, params: &CbpParams, resolution: usize) -> Result<TauScan> {
    let (_, t) = gamma.container().frame_at(x0);
    let frame = top_eigenvectors(&t, gamma.ambient() - 1);
    let sites = local_sites(gamma, x0, params)?;
    let grid = sphere_grid(frame.len(), resolution);
    let mut best: Option<(Vector, f64)> = None;
    for g in &grid {
        let mut tau = Vector::zeros(gamma.ambient());
        for (c, f) in g.iter().zip(&frame) {
            tau.axpy(*c, f, 1.0);
        }
        let c1 = sites
            .iter()
            .map(|s| s.cos_beta_n_w().dot(&tau) - params.eps0)
            .fold(f64::INFINITY, f64::min);
        if best.as_ref().map_or(true, |(_, b)| c1 > *b) {
            best = Some((tau, c1));
        }
    }
    let (tau, c1) = best.ok_or_else(|| Error::InvalidParameter("empty direction grid".into()))?;
    Ok(TauScan {
        tau: tau.iter().copied().collect(),
        c1_margin: c1,
        directions_scanned: grid.len(),
    })
}

/// Lower density estimate at one site.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiteDensity {
    pub x: Vec<f64>,
    pub mass: f64,
    /// `min_rho sigma(B_rho(x)) / (omega_k rho^k)`, or infinity when the
    /// ball mass does not grow across the grid.
    pub estimate: f64,
    pub infinite: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityFilter {
    pub sites: Vec<SiteDensity>,
    /// Sites of the restricted measure, as `(point, mass)`.
    pub kept: Vec<(Vec<f64>, f64)>,
}

/// Estimates the lower k-density of `sigma_Gamma` at every site and keeps
/// the sites whose estimate exceeds `density_floor`.
pub fn lower_density_filter(
    gamma: &BoundaryVarifold,
    k: usize,
    rho_grid: &[f64],
    density_floor: f64,
    grouping_tol: f64,
) -> Result<DensityFilter> {
    if rho_grid.is_empty() || rho_grid.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::RadiusOrder("density radii must be positive".into()));
    }
    let d = disintegrate(gamma, grouping_tol)?;
    let omega = unit_ball_volume(k);
    let sites: Vec<SiteDensity> = d
        .sites
        .par_iter()
        .map(|s| {
            let masses: Vec<f64> = rho_grid.iter().map(|&r| gamma.ball_mass(&s.x, r)).collect();
            let first = masses[0];
            let flat = k > 0 && first > 0.0 && masses.iter().all(|m| *m == first);
            let estimate = if flat {
                f64::INFINITY
            } else {
                rho_grid
                    .iter()
                    .zip(&masses)
                    .map(|(r, m)| m / (omega * r.powi(k as i32)))
                    .fold(f64::INFINITY, f64::min)
            };
            SiteDensity {
                x: s.x.iter().copied().collect(),
                mass: s.mass,
                estimate,
                infinite: flat,
            }
        })
        .collect();
    let kept = sites
        .iter()
        .filter(|s| s.estimate > density_floor)
        .map(|s| (s.x.clone(), s.mass))
        .collect();
    Ok(DensityFilter { sites, kept })
}

/// Checks that an atom lies on the boundary surface.
pub fn on_surface(container: &Container, x: &Vector) -> bool {
    container.sdf(x).abs() <= SURFACE_TOL
}
