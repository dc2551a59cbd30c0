use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::capillary::{BoundaryAtom, BoundaryVarifold};
use crate::curvature::{extend_second_fundamental_form, CurvatureData, IntrinsicForm};
use crate::error::{Error, Result};
use crate::fixtures::sampling::{
    cap_param_box, graded_cells, grid_cells, sample_parametric, sphere_point, Chart, ParamCell, SampledPatch,
    SphereChart, WeightRule,
};
use crate::fixtures::{check_angle, check_positive, ExampleFixture, Expected};
use crate::geometry::{basis_vector, ContactAngleField, Container, Plane};
use crate::numeric::{par_map, unit_ball_volume};
use crate::varifold::{DiscreteVarifold, VariationDecomposition};
use crate::Vector;

/// The `beta0`-cap of the unit sphere meeting `{x_(n+1) = 0}` along the
/// sphere of radius `sin beta0` around `o`.
#[derive(Clone, Debug, PartialEq)]
pub struct CapGeometry {
    pub beta0: f64,
    pub n: usize,
    pub o: Vector,
}

impl CapGeometry {
    pub fn new(beta0: f64, n: usize, o: Vector) -> Result<CapGeometry> {
        check_angle(beta0)?;
        if n == 0 || o.len() != n + 1 {
            return Err(Error::UnsupportedDimension(format!(
                "cap needs n >= 1 and a point in R^{}",
                n + 1
            )));
        }
        if o[n] != 0.0 {
            return Err(Error::InvalidParameter(
                "cap base point must lie on the boundary".into(),
            ));
        }
        Ok(CapGeometry { beta0, n, o })
    }

    /// Center `o - cos(beta0) e_(n+1)` of the unit sphere.
    pub fn center(&self) -> Vector {
        &self.o - basis_vector(self.n + 1, self.n) * self.beta0.cos()
    }

    pub fn chart(&self) -> SphereChart {
        SphereChart {
            center: self.center(),
            radius: 1.0,
        }
    }

    /// `(n - 1)`-measure of the boundary sphere.
    pub fn boundary_measure(&self) -> f64 {
        let n = self.n;
        n as f64 * unit_ball_volume(n) * self.beta0.sin().powi(n as i32 - 1)
    }

    /// Boundary point at the given angles of `S^(n-1)` (the sign for
    /// `n = 1`).
    pub fn boundary_point(&self, angles: &[f64]) -> Vector {
        let n = self.n;
        let mut x = self.o.clone();
        if n == 1 {
            x[0] += angles[0].signum() * self.beta0.sin();
            return x;
        }
        let (w, _) = sphere_point(angles);
        for i in 0..n {
            x[i] += self.beta0.sin() * w[i];
        }
        x
    }
}

fn uniform_cells(g: &CapGeometry, h: f64) -> Vec<ParamCell> {
    let (lo, hi) = cap_param_box(g.n, g.beta0);
    let counts: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| ((b - a) / h).ceil().max(1.0) as usize)
        .collect();
    grid_cells(&lo, &hi, &counts)
}

fn boundary_cells_uniform(n: usize, h: f64) -> Vec<ParamCell> {
    let (lo, hi) = cap_param_box(n, PI);
    let lo = lo[1..].to_vec();
    let hi = hi[1..].to_vec();
    let counts: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| ((b - a) / h).ceil().max(1.0) as usize)
        .collect();
    grid_cells(&lo, &hi, &counts)
}

/// Boundary atoms over the given cells of `S^(n-1)` angles.
fn boundary_atoms(g: &CapGeometry, cells: &[ParamCell]) -> Result<Vec<BoundaryAtom>> {
    let d = g.n + 1;
    let chart = g.chart();
    if g.n == 1 {
        return [-1.0, 1.0]
            .iter()
            .map(|s: &f64| {
                let u = [s * g.beta0];
                let plane = Plane::from_frame(d, &[chart.differential(&u).column(0).into_owned()])?;
                Ok(BoundaryAtom {
                    x: g.boundary_point(&[*s]),
                    plane,
                    sigma: 1.0,
                })
            })
            .collect();
    }
    let r = g.beta0.sin().powi(g.n as i32 - 1);
    let built: Vec<Result<BoundaryAtom>> = par_map(cells.len(), |i| {
        let a = cells[i].center();
        let (_, jw) = sphere_point(&a);
        let jac_det = (jw.transpose() * &jw).determinant().max(0.0).sqrt();
        let mut u = vec![g.beta0];
        u.extend_from_slice(&a);
        let dif = chart.differential(&u);
        let cols: Vec<Vector> = (0..g.n).map(|j| dif.column(j).into_owned()).collect();
        let plane = Plane::from_frame(d, &cols)?;
        Ok(BoundaryAtom {
            x: g.boundary_point(&a),
            plane,
            sigma: r * jac_det * cells[i].measure(),
        })
    });
    built.into_iter().collect()
}

/// Mean curvature and second fundamental form of the unit sphere at the
/// sampled atoms.
fn sphere_curvature(v: &DiscreteVarifold, center: &Vector) -> Result<(Vec<Vector>, CurvatureData)> {
    let m = v.dim() as f64;
    let atoms = v.atoms();
    let forms: Vec<Result<_>> = par_map(atoms.len(), |i| {
        let a = &atoms[i];
        let out = &a.x - center;
        let frame = a.plane.frame();
        let k = frame.len();
        let values: Vec<Vec<Vector>> = (0..k)
            .map(|al| {
                (0..k)
                    .map(|be| if al == be { -&out } else { Vector::zeros(out.len()) })
                    .collect()
            })
            .collect();
        extend_second_fundamental_form(&IntrinsicForm { frame, values }, &a.plane)
    });
    let forms = forms.into_iter().collect::<Result<Vec<_>>>()?;
    let h = atoms.iter().map(|a| (&a.x - center) * (-m)).collect();
    Ok((h, CurvatureData { forms }))
}

struct CapPieces {
    patch: SampledPatch,
    h: Vec<Vector>,
    curvature: CurvatureData,
    boundary: Vec<BoundaryAtom>,
}

fn cap_pieces(g: &CapGeometry, cells: &[ParamCell], bcells: &[ParamCell], rule: WeightRule) -> Result<CapPieces> {
    let patch = sample_parametric(&g.chart(), cells, rule)?;
    let (h, curvature) = sphere_curvature(&patch.varifold, &g.center())?;
    let boundary = boundary_atoms(g, bcells)?;
    Ok(CapPieces {
        patch,
        h,
        curvature,
        boundary,
    })
}

fn cap_expected(g: &CapGeometry, h: f64, extra_perp: f64) -> Expected {
    let mut params = BTreeMap::new();
    params.insert("beta0".into(), g.beta0);
    params.insert("n".into(), g.n as f64);
    params.insert("h".into(), h);
    params.insert("boundary_radius".into(), g.beta0.sin());
    let sg = g.boundary_measure();
    let n_w_norm = if (g.beta0 - FRAC_PI_2).abs() < 1e-12 { 0.0 } else { 1.0 };
    Expected {
        beta0: g.beta0,
        sigma_gamma_total: sg,
        sigma_perp_total: sg * g.beta0.sin() + extra_perp,
        mass_tol: (10.0 * h * h).max(1e-12),
        n_v: None,
        n_w_norm: Some(n_w_norm),
        site_tol: 1e-10,
        density_at_origin: None,
        density_radius: 1.0,
        density_tol: 0.0,
        params,
    }
}

fn finish(
    name: &str,
    g: &CapGeometry,
    pieces: CapPieces,
    perp: Vec<(Vector, f64)>,
    expected: Expected,
    h: f64,
) -> Result<ExampleFixture> {
    let d = g.n + 1;
    let gamma = BoundaryVarifold::new(
        g.n,
        d,
        pieces.boundary,
        Container::halfspace(d),
        ContactAngleField::constant(g.beta0)?,
        1e-8,
    )?;
    let dec = VariationDecomposition {
        h: pieces.h,
        h_tilde: Vec::new(),
        sigma_perp: perp,
    };
    let f = ExampleFixture {
        name: name.into(),
        v: pieces.patch.varifold,
        gamma,
        dec,
        curvature: pieces.curvature,
        expected,
        h,
        grouping_tol: 1e-9,
    };
    f.verify_expected()?;
    Ok(f)
}

/// Midpoint sampling of the `beta0`-cap of the unit sphere in R^(n+1)
/// resting on the origin, with its boundary sphere as `Gamma`.
pub fn make_spherical_cap(beta0: f64, n: usize, h: f64) -> Result<ExampleFixture> {
    check_positive("h", h)?;
    let g = CapGeometry::new(beta0, n, Vector::zeros(n + 1))?;
    let pieces = cap_pieces(
        &g,
        &uniform_cells(&g, h),
        &boundary_cells_uniform(n, h),
        WeightRule::Midpoint,
    )?;
    let perp = pieces
        .boundary
        .iter()
        .map(|a| (a.x.clone(), a.sigma * beta0.sin()))
        .collect();
    finish("spherical-cap", &g, pieces, perp, cap_expected(&g, h, 0.0), h)
}

/// The cap of [`make_spherical_cap`] for `n = 2`, sampled on cells graded
/// toward the boundary point `(sin beta0, 0, 0)`: cells at parameter
/// distance `d` have size at most `grade d`, between `min_size` and
/// `max_size`.
pub fn make_graded_cap(beta0: f64, grade: f64, min_size: f64, max_size: f64) -> Result<ExampleFixture> {
    check_positive("grade", grade)?;
    check_positive("min_size", min_size)?;
    check_positive("max_size", max_size)?;
    let g = CapGeometry::new(beta0, 2, Vector::zeros(3))?;
    let side = beta0.min(PI - 1e-9);
    let mut roots = vec![
        ParamCell {
            lo: vec![beta0 - side, -side],
            hi: vec![beta0, 0.0],
        },
        ParamCell {
            lo: vec![beta0 - side, 0.0],
            hi: vec![beta0, side],
        },
    ];
    if side < PI {
        roots.push(ParamCell {
            lo: vec![0.0, side],
            hi: vec![beta0, PI],
        });
        roots.push(ParamCell {
            lo: vec![0.0, -PI],
            hi: vec![beta0, -side],
        });
    }
    let cells = graded_cells(&roots, &[beta0, 0.0], grade, min_size, max_size);
    let mut broots = vec![
        ParamCell {
            lo: vec![-side],
            hi: vec![0.0],
        },
        ParamCell {
            lo: vec![0.0],
            hi: vec![side],
        },
    ];
    if side < PI {
        broots.push(ParamCell {
            lo: vec![side],
            hi: vec![PI],
        });
        broots.push(ParamCell {
            lo: vec![-PI],
            hi: vec![-side],
        });
    }
    let bcells = graded_cells(&broots, &[0.0], grade, min_size, max_size);
    let pieces = cap_pieces(&g, &cells, &bcells, WeightRule::Midpoint)?;
    let perp = pieces
        .boundary
        .iter()
        .map(|a| (a.x.clone(), a.sigma * beta0.sin()))
        .collect();
    finish(
        "graded-cap",
        &g,
        pieces,
        perp,
        cap_expected(&g, max_size, 0.0),
        max_size,
    )
}

/// A `beta0`-cap resting on `o1` together with a free-boundary hemisphere
/// resting on `o2`. `Gamma` covers only the boundary of the first cap.
pub fn make_cap_union(beta0: f64, o1: Vector, o2: Vector, h: f64) -> Result<ExampleFixture> {
    check_positive("h", h)?;
    let n = o1.len().saturating_sub(1);
    let g1 = CapGeometry::new(beta0, n, o1)?;
    let g2 = CapGeometry::new(FRAC_PI_2, n, o2)?;
    let p1 = cap_pieces(
        &g1,
        &uniform_cells(&g1, h),
        &boundary_cells_uniform(n, h),
        WeightRule::Midpoint,
    )?;
    let p2 = cap_pieces(
        &g2,
        &uniform_cells(&g2, h),
        &boundary_cells_uniform(n, h),
        WeightRule::Midpoint,
    )?;
    let mut perp: Vec<(Vector, f64)> = p1
        .boundary
        .iter()
        .map(|a| (a.x.clone(), a.sigma * beta0.sin()))
        .collect();
    perp.extend(p2.boundary.iter().map(|a| (a.x.clone(), a.sigma)));
    let v = p1.patch.varifold.union(&p2.patch.varifold)?;
    let mut params = p1.patch.params;
    params.extend(p2.patch.params);
    let mut h_all = p1.h;
    h_all.extend(p2.h);
    let mut forms = p1.curvature.forms;
    forms.extend(p2.curvature.forms);
    let pieces = CapPieces {
        patch: SampledPatch { varifold: v, params },
        h: h_all,
        curvature: CurvatureData { forms },
        boundary: p1.boundary,
    };
    let expected = cap_expected(&g1, h, g2.boundary_measure());
    finish("cap-union", &g1, pieces, perp, expected, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn hemisphere_boundary() {
        let f = make_spherical_cap(FRAC_PI_2, 2, 0.05).unwrap();
        assert_relative_eq!(f.gamma.total_mass(), 2.0 * PI, epsilon = 1e-10);
        for a in f.gamma.atoms() {
            assert_relative_eq!(a.x.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn cap_boundary_radius_and_mass() {
        let f = make_spherical_cap(FRAC_PI_3, 2, 0.05).unwrap();
        for a in f.gamma.atoms() {
            assert_relative_eq!(a.x.norm(), FRAC_PI_3.sin(), epsilon = 1e-14);
            assert_eq!(a.x[2], 0.0);
        }
        assert_relative_eq!(f.gamma.total_mass(), 2.0 * PI * FRAC_PI_3.sin(), epsilon = 1e-10);
        let area = 2.0 * PI * (1.0 - FRAC_PI_3.cos());
        assert_relative_eq!(f.v.total_mass(), area, epsilon = 1e-2);
    }

    #[test]
    fn cap_curvature_traces_match_mean_curvature() {
        let f = make_spherical_cap(FRAC_PI_3, 2, 0.1).unwrap();
        for (b, h) in f.curvature.forms.iter().zip(&f.dec.h) {
            assert!((b.trace() - h).amax() < 1e-10);
            assert_relative_eq!(h.norm(), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn arc_and_three_sphere_caps() {
        let arc = make_spherical_cap(FRAC_PI_3, 1, 0.01).unwrap();
        assert_eq!(arc.gamma.len(), 2);
        assert_relative_eq!(arc.v.total_mass(), 2.0 * FRAC_PI_3, epsilon = 1e-12);
        let cap3 = make_spherical_cap(FRAC_PI_3, 3, 0.1).unwrap();
        assert_relative_eq!(cap3.gamma.total_mass(), 4.0 * PI * 0.75, epsilon = 0.05);
    }

    #[test]
    fn graded_cap_has_same_area() {
        let f = make_graded_cap(FRAC_PI_3, 0.2, 1e-3, 0.1).unwrap();
        let area = 2.0 * PI * (1.0 - FRAC_PI_3.cos());
        assert_relative_eq!(f.v.total_mass(), area, epsilon = 1e-2);
    }

    #[test]
    fn cap_union_totals() {
        let o1 = Vector::from_column_slice(&[-1.5, 0., 0.]);
        let o2 = Vector::from_column_slice(&[1.5, 0., 0.]);
        let f = make_cap_union(FRAC_PI_3, o1, o2, 0.1).unwrap();
        let s3 = FRAC_PI_3.sin();
        assert_relative_eq!(f.gamma.total_mass(), 2.0 * PI * s3, epsilon = 1e-10);
        let perp: f64 = f.dec.sigma_perp.iter().map(|(_, s)| s).sum();
        assert_relative_eq!(perp, 2.0 * PI * s3 * s3 + 2.0 * PI, epsilon = 1e-10);
    }
}
