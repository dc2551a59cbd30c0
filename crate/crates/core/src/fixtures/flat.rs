use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::capillary::{BoundaryAtom, BoundaryVarifold};
use crate::curvature::CurvatureData;
use crate::error::{Error, Result};
use crate::fixtures::{check_angle, check_positive, ExampleFixture, Expected, DEFAULT_EXTENT, ORTHOGONAL_TOL};
use crate::geometry::{basis_vector, ContactAngleField, Container, Plane};
use crate::numeric::{composite_gauss, trapezoid_lattice};
use crate::varifold::{Atom, DiscreteVarifold, VariationDecomposition};
use crate::Vector;

const GL_NODES: usize = 10;

/// Shared parameters of the flat constructions in R^(n+1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatParams {
    pub beta0: f64,
    pub m: usize,
    pub n: usize,
    pub extent: f64,
    pub h: f64,
}

impl FlatParams {
    pub fn new(beta0: f64, m: usize, n: usize) -> FlatParams {
        FlatParams {
            beta0,
            m,
            n,
            extent: DEFAULT_EXTENT,
            h: 0.05,
        }
    }

    pub fn with_h(self, h: f64) -> FlatParams {
        FlatParams { h, ..self }
    }

    fn ambient(&self) -> usize {
        self.n + 1
    }

    fn validate(&self) -> Result<()> {
        check_angle(self.beta0)?;
        check_positive("extent", self.extent)?;
        check_positive("h", self.h)?;
        if self.m == 0 || self.m > self.n {
            return Err(Error::UnsupportedDimension(format!(
                "need 1 <= m <= n, got m={} n={}",
                self.m, self.n
            )));
        }
        Ok(())
    }

    fn e(&self) -> Vector {
        basis_vector(self.ambient(), self.n)
    }

    /// The frame `e_1, ..., e_(m-1)` of the common boundary `L`.
    fn l_frame(&self) -> Vec<Vector> {
        (0..self.m - 1).map(|i| basis_vector(self.ambient(), i)).collect()
    }

    /// `n_+- = sin(beta0) e_(n+1) +- cos(beta0) e_m`.
    fn conormal(&self, sign: f64) -> Vector {
        self.e() * self.beta0.sin() + basis_vector(self.ambient(), self.m - 1) * (sign * self.beta0.cos())
    }

    fn boundary_length(&self) -> f64 {
        (2.0 * self.extent).powi(self.m as i32 - 1)
    }
}

/// Lattice nodes `sum s_i l_i` on `L` with product trapezoid weights.
fn line_nodes(l: &[Vector], ambient: usize, extent: f64, h: f64) -> Vec<(Vector, f64)> {
    let lat = trapezoid_lattice(extent, h);
    let mut out = vec![(Vector::zeros(ambient), 1.0)];
    for dir in l {
        let mut next = Vec::with_capacity(out.len() * lat.len());
        for (x, w) in &out {
            for (s, ws) in &lat {
                next.push((x + dir * *s, w * ws));
            }
        }
        out = next;
    }
    out
}

/// Atoms of the half-plane `{shift + l + t n_dir : l in L, t >= 0}`.
fn half_plane_atoms(
    l: &[Vector],
    n_dir: &Vector,
    shift: &Vector,
    extent: f64,
    h: f64,
    factor: f64,
) -> Result<(Plane, Vec<Atom>)> {
    let ambient = n_dir.len();
    let mut frame: Vec<Vector> = l.to_vec();
    frame.push(n_dir.clone());
    let plane = Plane::from_frame(ambient, &frame)?;
    let panels = (extent / (5.0 * h)).ceil().max(1.0) as usize;
    let rule = composite_gauss(0.0, extent, panels, GL_NODES);
    let nodes = line_nodes(l, ambient, extent, h);
    let mut atoms = Vec::with_capacity(nodes.len() * rule.len());
    for (x, w) in &nodes {
        for (t, wt) in &rule {
            atoms.push(Atom {
                x: shift + x + n_dir * *t,
                plane: plane.clone(),
                w: factor * w * wt,
            });
        }
    }
    Ok((plane, atoms))
}

struct Piece {
    shift: Vector,
    n_dir: Vector,
    l: Vec<Vector>,
    weight: f64,
}

fn assemble(p: &FlatParams, pieces: &[Piece], name: &str, expected: Expected) -> Result<ExampleFixture> {
    let ambient = p.ambient();
    let container = Container::halfspace(ambient);
    let beta = ContactAngleField::constant(p.beta0)?;
    let mut atoms = Vec::new();
    let mut batoms = Vec::new();
    let mut perp = Vec::new();
    for piece in pieces.iter().filter(|pc| pc.weight > 0.0) {
        let (plane, a) = half_plane_atoms(&piece.l, &piece.n_dir, &piece.shift, p.extent, p.h, piece.weight)?;
        atoms.extend(a);
        for (x, w) in line_nodes(&piece.l, ambient, p.extent, p.h) {
            let x = &piece.shift + x;
            let sigma = piece.weight * w;
            perp.push((x.clone(), sigma * p.beta0.sin()));
            batoms.push(BoundaryAtom {
                x,
                plane: plane.clone(),
                sigma,
            });
        }
    }
    let v = DiscreteVarifold::new(p.m, ambient, atoms)?;
    let gamma = BoundaryVarifold::new(p.m, ambient, batoms, container, beta, 1e-8)?;
    let mut dec = VariationDecomposition::zero(v.len(), ambient);
    dec.sigma_perp = perp;
    let fixture = ExampleFixture {
        name: name.to_string(),
        curvature: CurvatureData::zeros(v.len(), ambient),
        v,
        gamma,
        dec,
        expected,
        h: p.h,
        grouping_tol: 1e-9,
    };
    fixture.verify_expected()?;
    Ok(fixture)
}

fn base_expected(p: &FlatParams, sigma_gamma: f64) -> Expected {
    let mut params = BTreeMap::new();
    params.insert("beta0".into(), p.beta0);
    params.insert("m".into(), p.m as f64);
    params.insert("n".into(), p.n as f64);
    params.insert("extent".into(), p.extent);
    params.insert("h".into(), p.h);
    Expected {
        beta0: p.beta0,
        sigma_gamma_total: sigma_gamma,
        sigma_perp_total: sigma_gamma * p.beta0.sin(),
        mass_tol: 1e-12,
        n_v: None,
        n_w_norm: None,
        site_tol: 1e-12,
        density_at_origin: None,
        density_radius: 1.0,
        density_tol: 0.0,
        params,
    }
}

fn require_oblique(beta0: f64) -> Result<()> {
    if beta0.cos().abs() < ORTHOGONAL_TOL {
        Err(Error::AngleIsOrthogonal)
    } else {
        Ok(())
    }
}

/// Two antipodal half-planes `P_+-` with common boundary `L`, weight one
/// half each.
pub fn make_plane_pair(p: FlatParams) -> Result<ExampleFixture> {
    make_separated_pair(p, 0.0)
}

/// The antipodal pair with `P_+-` and `L` pushed apart by `s nbar_+-`.
pub fn make_separated_pair(p: FlatParams, s: f64) -> Result<ExampleFixture> {
    p.validate()?;
    require_oblique(p.beta0)?;
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("separation {s}")));
    }
    let em = basis_vector(p.ambient(), p.m - 1);
    let sgn = p.beta0.cos().signum();
    let pieces = [
        Piece {
            shift: &em * (s * sgn),
            n_dir: p.conormal(1.0),
            l: p.l_frame(),
            weight: 0.5,
        },
        Piece {
            shift: &em * (-s * sgn),
            n_dir: p.conormal(-1.0),
            l: p.l_frame(),
            weight: 0.5,
        },
    ];
    let mut ex = base_expected(&p, p.boundary_length());
    ex.params.insert("s".into(), s);
    if s == 0.0 {
        ex.n_v = Some((p.e() * p.beta0.sin()).iter().copied().collect());
        ex.n_w_norm = Some(0.0);
        ex.density_at_origin = Some(0.5);
        ex.density_tol = 5.0 * p.h;
        assemble(&p, &pieces, "plane-pair", ex)
    } else {
        ex.n_w_norm = Some(1.0);
        assemble(&p, &pieces, "separated-pair", ex)
    }
}

/// Only the shifted half-plane `P_+^s`, with unit weight.
pub fn make_one_sided(p: FlatParams, s: f64) -> Result<ExampleFixture> {
    p.validate()?;
    require_oblique(p.beta0)?;
    let em = basis_vector(p.ambient(), p.m - 1);
    let sgn = p.beta0.cos().signum();
    let pieces = [Piece {
        shift: &em * (s * sgn),
        n_dir: p.conormal(1.0),
        l: p.l_frame(),
        weight: 1.0,
    }];
    let mut ex = base_expected(&p, p.boundary_length());
    ex.params.insert("s".into(), s);
    ex.n_v = Some(p.conormal(1.0).iter().copied().collect());
    ex.n_w_norm = Some(1.0);
    assemble(&p, &pieces, "one-sided", ex)
}

/// The antipodal pair with weights `(1 +- eps) / 2`.
pub fn make_perturbed_pair(p: FlatParams, eps: f64) -> Result<ExampleFixture> {
    p.validate()?;
    require_oblique(p.beta0)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("perturbation {eps} outside [0, 1]")));
    }
    let zero = Vector::zeros(p.ambient());
    let pieces = [
        Piece {
            shift: zero.clone(),
            n_dir: p.conormal(1.0),
            l: p.l_frame(),
            weight: 0.5 * (1.0 + eps),
        },
        Piece {
            shift: zero,
            n_dir: p.conormal(-1.0),
            l: p.l_frame(),
            weight: 0.5 * (1.0 - eps),
        },
    ];
    let mut ex = base_expected(&p, p.boundary_length());
    ex.params.insert("eps".into(), eps);
    let em = basis_vector(p.ambient(), p.m - 1);
    ex.n_v = Some(
        (p.e() * p.beta0.sin() + em * (eps * p.beta0.cos()))
            .iter()
            .copied()
            .collect(),
    );
    ex.n_w_norm = Some(eps);
    ex.site_tol = 1e-12;
    assemble(&p, &pieces, "perturbed-pair", ex)
}

/// Two unit-weight half-planes whose boundaries `L_1`, `L_2` cross. `P_2`
/// is `P_1` turned by a right angle in the `(e_1, e_m)` plane.
pub fn make_distinct_pair(p: FlatParams) -> Result<ExampleFixture> {
    p.validate()?;
    if p.m < 2 {
        return Err(Error::UnsupportedDimension("distinct boundaries need m >= 2".into()));
    }
    let d = p.ambient();
    let e1 = basis_vector(d, 0);
    let em = basis_vector(d, p.m - 1);
    let n1 = p.e() * p.beta0.sin() + &em * p.beta0.cos();
    let n2 = p.e() * p.beta0.sin() - &e1 * p.beta0.cos();
    let l1 = p.l_frame();
    let mut l2 = l1.clone();
    l2[0] = em;
    let zero = Vector::zeros(d);
    let pieces = [
        Piece {
            shift: zero.clone(),
            n_dir: n1,
            l: l1,
            weight: 1.0,
        },
        Piece {
            shift: zero,
            n_dir: n2,
            l: l2,
            weight: 1.0,
        },
    ];
    let ex = base_expected(&p, 2.0 * p.boundary_length());
    assemble(&p, &pieces, "distinct-pair", ex)
}

fn shell_radii(r_min: f64, levels: usize) -> Vec<f64> {
    (0..=levels).map(|k| r_min * 2f64.powi(k as i32)).collect()
}

/// Self-similar discretization of a half-plane cone with vertex at 0.
///
/// Shell `k` covers `r_(k-1) < |x| <= r_k` with `r_k = r_min 2^k` and puts
/// its exact area on `angular` atoms at radius `r_k`. The atom set is
/// invariant under dilation by 2 away from the innermost and outermost
/// shells. Supported for `m = 1, 2`.
pub fn make_half_plane_cone(
    beta0: f64,
    m: usize,
    n: usize,
    r_min: f64,
    levels: usize,
    angular: usize,
) -> Result<ExampleFixture> {
    let p = FlatParams {
        beta0,
        m,
        n,
        extent: r_min * 2f64.powi(levels as i32),
        h: r_min,
    };
    p.validate()?;
    if m > 2 {
        return Err(Error::UnsupportedDimension("self-similar cones need m <= 2".into()));
    }
    let d = p.ambient();
    let nd = p.conormal(1.0);
    let l = p.l_frame();
    let mut frame = l.clone();
    frame.push(nd.clone());
    let plane = Plane::from_frame(d, &frame)?;
    let radii = shell_radii(r_min, levels);
    let dirs = cone_directions(&l, &nd, angular, PI);
    let mut atoms = Vec::new();
    let mut batoms = Vec::new();
    for (k, r) in radii.iter().enumerate() {
        let shell = if k == 0 {
            r.powi(m as i32)
        } else {
            r.powi(m as i32) * (1.0 - 0.5f64.powi(m as i32))
        };
        let w = shell * if m == 2 { 0.5 * PI } else { 1.0 } / dirs.len() as f64;
        for u in &dirs {
            atoms.push(Atom {
                x: u * *r,
                plane: plane.clone(),
                w,
            });
        }
        if m == 2 {
            let sigma = if k == 0 { *r } else { 0.5 * r };
            for sign in [1.0, -1.0] {
                batoms.push(BoundaryAtom {
                    x: &l[0] * (sign * r),
                    plane: plane.clone(),
                    sigma,
                });
            }
        }
    }
    if m == 1 {
        batoms.push(BoundaryAtom {
            x: Vector::zeros(d),
            plane: plane.clone(),
            sigma: 1.0,
        });
    }
    let v = DiscreteVarifold::new(m, d, atoms)?;
    let sigma_total: f64 = batoms.iter().map(|a| a.sigma).sum();
    let perp = batoms.iter().map(|a| (a.x.clone(), a.sigma * beta0.sin())).collect();
    let gamma = BoundaryVarifold::new(
        m,
        d,
        batoms,
        Container::halfspace(d),
        ContactAngleField::constant(beta0)?,
        1e-8,
    )?;
    let mut ex = base_expected(&p, sigma_total);
    ex.params.insert("r_min".into(), r_min);
    ex.params.insert("levels".into(), levels as f64);
    ex.n_v = Some(nd.iter().copied().collect());
    let mut dec = VariationDecomposition::zero(v.len(), d);
    dec.sigma_perp = perp;
    let fixture = ExampleFixture {
        name: "half-plane-cone".into(),
        curvature: CurvatureData::zeros(v.len(), d),
        v,
        gamma,
        dec,
        expected: ex,
        h: r_min,
        grouping_tol: 1e-12,
    };
    fixture.verify_expected()?;
    Ok(fixture)
}

/// The full m-plane `span(e_1, ..., e_m)` with the same shell structure.
pub fn make_full_plane_cone(m: usize, n: usize, r_min: f64, levels: usize, angular: usize) -> Result<DiscreteVarifold> {
    if m == 0 || m > 2 || m > n {
        return Err(Error::UnsupportedDimension(
            "full-plane cones need 1 <= m <= 2, m <= n".into(),
        ));
    }
    let d = n + 1;
    let axes: Vec<usize> = (0..m).collect();
    let plane = Plane::coordinate(d, &axes)?;
    let l: Vec<Vector> = (0..m - 1).map(|i| basis_vector(d, i)).collect();
    let nd = basis_vector(d, m - 1);
    let dirs = if m == 1 {
        vec![nd.clone(), -nd]
    } else {
        cone_directions(&l, &nd, angular, 2.0 * PI)
    };
    let mut atoms = Vec::new();
    for (k, r) in shell_radii(r_min, levels).iter().enumerate() {
        let shell = if k == 0 {
            r.powi(m as i32)
        } else {
            r.powi(m as i32) * (1.0 - 0.5f64.powi(m as i32))
        };
        let w = if m == 2 { shell * PI / dirs.len() as f64 } else { shell };
        for u in &dirs {
            atoms.push(Atom {
                x: u * *r,
                plane: plane.clone(),
                w,
            });
        }
    }
    DiscreteVarifold::new(m, d, atoms)
}

fn cone_directions(l: &[Vector], nd: &Vector, angular: usize, span: f64) -> Vec<Vector> {
    if l.is_empty() {
        return vec![nd.clone()];
    }
    let k = angular.max(1);
    (0..k)
        .map(|j| {
            let psi = span * (j as f64 + 0.5) / k as f64;
            &l[0] * psi.cos() + nd * psi.sin()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capillary::{co_normals, disintegrate};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_3;

    fn params() -> FlatParams {
        FlatParams::new(FRAC_PI_3, 2, 2).with_h(0.1)
    }

    #[test]
    fn plane_pair_record() {
        let f = make_plane_pair(params()).unwrap();
        assert_relative_eq!(f.gamma.total_mass(), 8.0, epsilon = 1e-12);
        let d = disintegrate(&f.gamma, f.grouping_tol).unwrap();
        for s in &d.sites {
            assert_eq!(s.fibers.len(), 2);
            for fib in &s.fibers {
                assert_eq!(fib.probability, 0.5);
            }
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn orthogonal_angle_is_rejected() {
        let p = FlatParams::new(1.5708, 2, 2);
        assert_eq!(make_plane_pair(p).unwrap_err(), Error::AngleIsOrthogonal);
    }

    #[test]
    fn zero_separation_matches_pair() {
        let a = make_plane_pair(params()).unwrap();
        let b = make_separated_pair(params(), 0.0).unwrap();
        assert_eq!(a.v, b.v);
        assert_eq!(a.gamma.atoms(), b.gamma.atoms());
    }

    #[test]
    fn separated_lines_are_2s_apart() {
        let f = make_separated_pair(params(), 0.5).unwrap();
        let xs: Vec<f64> = f.gamma.atoms().iter().map(|a| a.x[1]).collect();
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(hi - lo, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn perturbed_pair_limits() {
        let z = make_perturbed_pair(params(), 0.0).unwrap();
        assert_eq!(z.v, make_plane_pair(params()).unwrap().v);
        let one = make_perturbed_pair(params(), 1.0).unwrap();
        let d = disintegrate(&one.gamma, one.grouping_tol).unwrap();
        for c in co_normals(&d, one.gamma.beta(), one.gamma.container()).unwrap() {
            assert_relative_eq!(c.n_v().norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn distinct_pair_masses_are_additive() {
        let f = make_distinct_pair(params()).unwrap();
        assert_relative_eq!(f.gamma.total_mass(), 16.0, epsilon = 1e-12);
    }

    #[test]
    fn cone_density_is_half() {
        let c = make_half_plane_cone(FRAC_PI_3, 2, 2, 1e-3, 14, 16).unwrap();
        for k in 2..12 {
            let r = 1e-3 * 2f64.powi(k) * (1.0 + 1e-9);
            let ratio = c.v.ball_mass(&Vector::zeros(3), r) / (PI * r * r);
            assert_relative_eq!(ratio, 0.5, epsilon = 1e-8);
        }
        let full = make_full_plane_cone(2, 2, 1e-3, 14, 16).unwrap();
        let r = 0.5 * (1.0 + 1e-9);
        assert!(r > 1e-3 * 2f64.powi(8));
        let ratio = full.ball_mass(&Vector::zeros(3), 1e-3 * 2f64.powi(9) * (1.0 + 1e-9))
            / (PI * (1e-3 * 2f64.powi(9)).powi(2));
        assert_relative_eq!(ratio, 1.0, epsilon = 1e-8);
    }
}
