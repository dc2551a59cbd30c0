//! Discrete varifolds and their first variation.
//!
//! A [`DiscreteVarifold`] is a finite sum of weighted Dirac masses on the
//! Grassmann bundle. Its first variation against a field with Jacobian `J`
//! is `sum w trace(P J)`, which is the exact integral of `div_P phi`.

pub mod battery;
pub mod field;

use serde::Serialize;

use crate::capillary::{conormal_unchecked, BoundaryAtom, BoundaryVarifold};
use crate::error::{Error, Result};
use crate::geometry::{Container, Plane};
use crate::numeric::{pairwise_sum, par_map, par_sum};
use crate::Vector;

pub use battery::{general_battery, interior_battery, tangential_battery};
pub use field::{FieldClass, TestField, VectorField};

/// One Dirac mass `w delta_(x, P)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub x: Vector,
    pub plane: Plane,
    pub w: f64,
}

/// A finite m-varifold in R^(n+1).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteVarifold {
    dim: usize,
    ambient: usize,
    atoms: Vec<Atom>,
}

impl DiscreteVarifold {
    pub fn new(dim: usize, ambient: usize, atoms: Vec<Atom>) -> Result<DiscreteVarifold> {
        if dim > ambient {
            return Err(Error::DimensionMismatch {
                expected: ambient,
                found: dim,
            });
        }
        for (i, a) in atoms.iter().enumerate() {
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
            if !(a.w > 0.0) || !a.w.is_finite() {
                return Err(Error::InvalidWeight { index: i, value: a.w });
            }
        }
        Ok(DiscreteVarifold { dim, ambient, atoms })
    }

    pub fn empty(dim: usize, ambient: usize) -> DiscreteVarifold {
        DiscreteVarifold {
            dim,
            ambient,
            atoms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        let w: Vec<f64> = self.atoms.iter().map(|a| a.w).collect();
        pairwise_sum(&w)
    }

    /// Disjoint union of two varifolds of the same dimension.
    pub fn union(&self, other: &DiscreteVarifold) -> Result<DiscreteVarifold> {
        if self.dim != other.dim || self.ambient != other.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Ok(DiscreteVarifold {
            dim: self.dim,
            ambient: self.ambient,
            atoms,
        })
    }

    /// Multiplies every weight by `f(index, atom)`; atoms with zero factor
    /// are dropped.
    pub fn reweighted<F: Fn(usize, &Atom) -> f64>(&self, f: F) -> Result<DiscreteVarifold> {
        let atoms = self
            .atoms
            .iter()
            .enumerate()
            .filter_map(|(i, a)| {
                let w = a.w * f(i, a);
                (w != 0.0).then(|| Atom { w, ..a.clone() })
            })
            .collect();
        DiscreteVarifold::new(self.dim, self.ambient, atoms)
    }

    pub fn ball_mass(&self, x0: &Vector, rho: f64) -> f64 {
        ball_mass(self, x0, rho)
    }
}

/// `mu_V` of the closed ball `B_rho(x0)`.
pub fn ball_mass(v: &DiscreteVarifold, x0: &Vector, rho: f64) -> f64 {
    let atoms = v.atoms();
    par_sum(atoms.len(), |i| {
        let a = &atoms[i];
        if (&a.x - x0).norm() <= rho {
            a.w
        } else {
            0.0
        }
    })
}

/// `delta V(phi) = sum w trace(P J_phi(x))`.
pub fn first_variation(v: &DiscreteVarifold, phi: &TestField) -> f64 {
    let atoms = v.atoms();
    par_sum(atoms.len(), |i| {
        let a = &atoms[i];
        a.w * a.plane.div(&phi.jacobian(&a.x))
    })
}

/// Blow-up by `(x - x0) / r` with the weight laws `r^-m` and `r^(1-m)`.
pub fn pushforward_dilation(
    v: &DiscreteVarifold,
    gamma: &BoundaryVarifold,
    x0: &Vector,
    r: f64,
) -> Result<(DiscreteVarifold, BoundaryVarifold)> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("dilation scale {r}")));
    }
    let sv = r.powi(v.dim() as i32);
    let atoms = v
        .atoms()
        .iter()
        .map(|a| Atom {
            x: (&a.x - x0) / r,
            plane: a.plane.clone(),
            w: a.w / sv,
        })
        .collect();
    let vr = DiscreteVarifold::new(v.dim(), v.ambient(), atoms)?;
    let sg = r.powi(gamma.dim() as i32 - 1);
    let batoms = gamma
        .atoms()
        .iter()
        .map(|a| BoundaryAtom {
            x: (&a.x - x0) / r,
            plane: a.plane.clone(),
            sigma: a.sigma / sg,
        })
        .collect();
    let gr = BoundaryVarifold::from_parts(
        gamma.dim(),
        gamma.ambient(),
        batoms,
        gamma.container().dilated(x0, r),
        gamma.beta().dilated(x0, r),
        gamma.tol_bundle(),
    );
    Ok((vr, gr))
}

/// Residual of one field in a variational identity.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FieldResidual {
    pub name: String,
    pub absolute: f64,
    /// `sum w |J_phi|_F` over the varifold.
    pub scale: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ResidualReport {
    pub fields: Vec<FieldResidual>,
    pub max_absolute: f64,
    pub max_relative: f64,
}

impl ResidualReport {
    pub fn from_fields(fields: Vec<FieldResidual>) -> ResidualReport {
        let max_absolute = fields.iter().map(|f| f.absolute).fold(0.0, f64::max);
        let max_relative = fields.iter().map(|f| f.relative).fold(0.0, f64::max);
        ResidualReport {
            fields,
            max_absolute,
            max_relative,
        }
    }
}

/// `sum w (div_P phi + <h, phi>)` and the scale `sum w |J_phi|_F`, from one
/// Jacobian evaluation per atom.
fn interior_pass(v: &DiscreteVarifold, h: &[Vector], phi: &TestField) -> (f64, f64) {
    let atoms = v.atoms();
    let terms: Vec<(f64, f64)> = par_map(atoms.len(), |i| {
        let a = &atoms[i];
        let (val, jac) = phi.eval(&a.x);
        (a.w * (a.plane.div(&jac) + h[i].dot(&val)), a.w * jac.norm())
    });
    let (values, scales): (Vec<f64>, Vec<f64>) = terms.into_iter().unzip();
    (pairwise_sum(&values), pairwise_sum(&scales))
}

fn residual_entry(name: &str, value: f64, scale: f64) -> FieldResidual {
    let relative = if scale > 0.0 { value.abs() / scale } else { value.abs() };
    FieldResidual {
        name: name.to_string(),
        absolute: value.abs(),
        scale,
        relative,
    }
}

/// Signed residual `delta V(phi) + int <H, phi> dmu + int <n, phi> dGamma`.
pub fn capillary_defect(v: &DiscreteVarifold, gamma: &BoundaryVarifold, h: &[Vector], phi: &TestField) -> Result<f64> {
    Ok(capillary_parts(v, gamma, h, phi)?.0)
}

fn capillary_parts(
    v: &DiscreteVarifold,
    gamma: &BoundaryVarifold,
    h: &[Vector],
    phi: &TestField,
) -> Result<(f64, f64)> {
    let (interior, scale) = interior_pass(v, h, phi);
    let batoms = gamma.atoms();
    let normals: Vec<Result<f64>> = par_map(batoms.len(), |i| {
        let b = &batoms[i];
        let n = conormal_unchecked(&b.x, &b.plane, gamma.container())?;
        Ok(b.sigma * n.dot(&phi.value(&b.x)))
    });
    let terms = normals.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok((interior + pairwise_sum(&terms), scale))
}

/// Largest residual of the capillary first variation identity over a
/// battery of tangential fields.
pub fn capillary_residual(
    v: &DiscreteVarifold,
    gamma: &BoundaryVarifold,
    h: &[Vector],
    battery: &[TestField],
) -> Result<ResidualReport> {
    if h.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: h.len(),
        });
    }
    let mut out = Vec::with_capacity(battery.len());
    for phi in battery {
        if phi.class != FieldClass::Tangential {
            return Err(Error::FieldClassError {
                name: phi.name.clone(),
                expected: FieldClass::Tangential.to_string(),
                found: phi.class.to_string(),
            });
        }
        let (value, scale) = capillary_parts(v, gamma, h, phi)?;
        out.push(residual_entry(&phi.name, value, scale));
    }
    Ok(ResidualReport::from_fields(out))
}

/// The measures in the decomposition of a first variation with bounded
/// total variation.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationDecomposition {
    /// Generalized mean curvature, one vector per varifold atom.
    pub h: Vec<Vector>,
    /// Normal part on the boundary, as `(atom index, vector)`.
    pub h_tilde: Vec<(usize, Vector)>,
    /// Normal boundary measure as `(point, mass)` atoms on the surface.
    pub sigma_perp: Vec<(Vector, f64)>,
}

impl VariationDecomposition {
    pub fn zero(atoms: usize, ambient: usize) -> VariationDecomposition {
        VariationDecomposition {
            h: vec![Vector::zeros(ambient); atoms],
            h_tilde: Vec::new(),
            sigma_perp: Vec::new(),
        }
    }

    /// Checks tangency of `H` and normality of `H~` at surface atoms.
    pub fn validate(&self, v: &DiscreteVarifold, container: &Container, tol: f64) -> Result<()> {
        if self.h.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                found: self.h.len(),
            });
        }
        for (a, h) in v.atoms().iter().zip(&self.h) {
            if container.on_surface(&a.x) {
                let nu = container.grad_sdf(&a.x);
                if h.dot(&nu).abs() > tol {
                    return Err(Error::InvalidParameter("H is not tangent to the surface".into()));
                }
            }
        }
        for (i, ht) in &self.h_tilde {
            let x = &v
                .atoms()
                .get(*i)
                .ok_or_else(|| Error::InvalidParameter("H~ atom index".into()))?
                .x;
            let (nu, _) = container.normal_and_tangent(x)?;
            if (ht - &nu * nu.dot(ht)).norm() > tol {
                return Err(Error::InvalidParameter("H~ is not normal to the surface".into()));
            }
        }
        if self.sigma_perp.iter().any(|(_, s)| !(*s >= 0.0)) {
            return Err(Error::InvalidParameter("negative normal boundary mass".into()));
        }
        Ok(())
    }
}

/// Signed residual of the decomposed first variation for one field.
pub fn decomposition_defect(
    v: &DiscreteVarifold,
    dec: &VariationDecomposition,
    gamma: &BoundaryVarifold,
    phi: &TestField,
) -> Result<f64> {
    Ok(decomposition_parts(v, dec, gamma, phi)?.0)
}

fn decomposition_parts(
    v: &DiscreteVarifold,
    dec: &VariationDecomposition,
    gamma: &BoundaryVarifold,
    phi: &TestField,
) -> Result<(f64, f64)> {
    let container = gamma.container();
    let atoms = v.atoms();
    let (interior, scale) = interior_pass(v, &dec.h, phi);
    let tilde: Vec<f64> = dec
        .h_tilde
        .iter()
        .map(|(i, ht)| atoms[*i].w * ht.dot(&phi.value(&atoms[*i].x)))
        .collect();
    let perp: Vec<f64> = par_map(dec.sigma_perp.len(), |k| {
        let (x, s) = &dec.sigma_perp[k];
        s * container.grad_sdf(x).dot(&phi.value(x))
    });
    let batoms = gamma.atoms();
    let tangential: Vec<Result<f64>> = par_map(batoms.len(), |i| {
        let b = &batoms[i];
        let n = conormal_unchecked(&b.x, &b.plane, container)?;
        let nu = container.grad_sdf(&b.x);
        let tn = &n - &nu * nu.dot(&n);
        Ok(b.sigma * tn.dot(&phi.value(&b.x)))
    });
    let tangential = tangential.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok((
        interior + pairwise_sum(&tilde) + pairwise_sum(&perp) + pairwise_sum(&tangential),
        scale,
    ))
}

/// Largest residual of the decomposed first variation over a battery of
/// unconstrained fields.
pub fn decomposition_residual(
    v: &DiscreteVarifold,
    dec: &VariationDecomposition,
    gamma: &BoundaryVarifold,
    battery: &[TestField],
) -> Result<ResidualReport> {
    if dec.h.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: dec.h.len(),
        });
    }
    let mut out = Vec::with_capacity(battery.len());
    for phi in battery {
        let (value, scale) = decomposition_parts(v, dec, gamma, phi)?;
        out.push(residual_entry(&phi.name, value, scale));
    }
    Ok(ResidualReport::from_fields(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ContactAngleField;
    use crate::varifold::field::Affine;
    use crate::Matrix;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn flat() -> Plane {
        Plane::coordinate(3, &[0, 1]).unwrap()
    }

    fn sampled_disc(h: f64) -> DiscreteVarifold {
        let n = (1.0 / h).ceil() as i64;
        let mut atoms = Vec::new();
        for i in -n..n {
            for j in -n..n {
                let x = v(&[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h, 0.0]);
                if x.norm() <= 1.0 {
                    atoms.push(Atom {
                        x,
                        plane: flat(),
                        w: h * h,
                    });
                }
            }
        }
        DiscreteVarifold::new(2, 3, atoms).unwrap()
    }

    #[test]
    fn ball_mass_examples() {
        let one = DiscreteVarifold::new(
            2,
            3,
            vec![Atom {
                x: v(&[0., 0., 0.]),
                plane: flat(),
                w: 2.0,
            }],
        )
        .unwrap();
        assert_eq!(ball_mass(&one, &v(&[0., 0., 0.]), 1.0), 2.0);
        assert_eq!(ball_mass(&one, &v(&[3., 0., 0.]), 1.0), 0.0);
        let disc = sampled_disc(0.01);
        let m = ball_mass(&disc, &v(&[0., 0., 0.]), 1.0);
        assert!((m - std::f64::consts::PI).abs() < 0.05);
    }

    #[test]
    fn first_variation_examples() {
        let one = DiscreteVarifold::new(
            2,
            3,
            vec![Atom {
                x: v(&[0., 0., 0.]),
                plane: flat(),
                w: 1.0,
            }],
        )
        .unwrap();
        let id = TestField::new(
            "id",
            FieldClass::General,
            None,
            Arc::new(Affine {
                a: Matrix::identity(3, 3),
                b: Vector::zeros(3),
            }),
        );
        assert_eq!(first_variation(&one, &id), 2.0);
        let c = TestField::new(
            "c",
            FieldClass::General,
            None,
            Arc::new(Affine {
                a: Matrix::zeros(3, 3),
                b: v(&[1., 2., 3.]),
            }),
        );
        assert_eq!(first_variation(&sampled_disc(0.05), &c), 0.0);
    }

    #[test]
    fn rejects_bad_weights() {
        let e = DiscreteVarifold::new(
            2,
            3,
            vec![Atom {
                x: v(&[0., 0., 0.]),
                plane: flat(),
                w: 0.0,
            }],
        )
        .unwrap_err();
        assert!(matches!(e, Error::InvalidWeight { index: 0, .. }));
    }

    fn empty_boundary() -> BoundaryVarifold {
        BoundaryVarifold::new(
            2,
            3,
            vec![],
            Container::halfspace(3),
            ContactAngleField::Constant(1.0),
            1e-8,
        )
        .unwrap()
    }

    #[test]
    fn identity_dilation() {
        let disc = sampled_disc(0.2);
        let (d, _) = pushforward_dilation(&disc, &empty_boundary(), &v(&[0., 0., 0.]), 1.0).unwrap();
        assert_eq!(d, disc);
    }

    #[test]
    fn non_tangential_field_is_rejected() {
        let disc = sampled_disc(0.2);
        let h = vec![Vector::zeros(3); disc.len()];
        let c = TestField::new(
            "c",
            FieldClass::General,
            None,
            Arc::new(Affine {
                a: Matrix::zeros(3, 3),
                b: v(&[1., 2., 3.]),
            }),
        );
        let e = capillary_residual(&disc, &empty_boundary(), &h, &[c]).unwrap_err();
        assert!(matches!(e, Error::FieldClassError { .. }));
    }

    #[test]
    fn zero_varifold_zero_decomposition() {
        let z = DiscreteVarifold::empty(2, 3);
        let dec = VariationDecomposition::zero(0, 3);
        let bat = battery::general_battery(&Container::halfspace(3), 3, 5);
        let r = decomposition_residual(&z, &dec, &empty_boundary(), &bat).unwrap();
        assert_eq!(r.max_absolute, 0.0);
    }

    fn arb_varifold() -> impl Strategy<Value = DiscreteVarifold> {
        proptest::collection::vec(
            (
                proptest::collection::vec(-1.0f64..1.0, 3),
                proptest::collection::vec(-1.0f64..1.0, 3),
                0.1f64..2.0,
            ),
            1..20,
        )
        .prop_map(|raw| {
            let atoms = raw
                .into_iter()
                .map(|(x, d, w)| {
                    let mut d = Vector::from_vec(d);
                    if d.norm() < 0.1 {
                        d[0] += 1.0;
                    }
                    Atom {
                        x: Vector::from_vec(x),
                        plane: Plane::from_frame(3, &[d]).unwrap(),
                        w,
                    }
                })
                .collect();
            DiscreteVarifold::new(1, 3, atoms).unwrap()
        })
    }

    proptest! {
        #[test]
        fn dilations_compose(var in arb_varifold(), r in 0.1f64..3.0, s in 0.1f64..3.0) {
            let g = BoundaryVarifold::new(1, 3, vec![], Container::halfspace(3), ContactAngleField::Constant(1.0), 1e-8).unwrap();
            let x0 = v(&[0.1, -0.2, 0.0]);
            let (a, ga) = pushforward_dilation(&var, &g, &x0, r).unwrap();
            let (b, _) = pushforward_dilation(&a, &ga, &Vector::zeros(3), s).unwrap();
            let (c, _) = pushforward_dilation(&var, &g, &x0, r * s).unwrap();
            for (p, q) in b.atoms().iter().zip(c.atoms()) {
                prop_assert!((&p.x - &q.x).amax() <= 1e-12 * (1.0 + q.x.amax()));
                prop_assert!((p.w - q.w).abs() <= 1e-12 * q.w);
            }
            let rho = 0.77;
            let lhs = ball_mass(&a, &Vector::zeros(3), rho);
            let rhs = ball_mass(&var, &x0, r * rho) / r;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn first_variation_is_linear(var in arb_varifold(), t in 0.0f64..1.0) {
            let bat = battery::general_battery(&Container::halfspace(3), 3, 2);
            let f0 = first_variation(&var, &bat[0]);
            let f1 = first_variation(&var, &bat[1]);
            let mix = TestField::new("mix", FieldClass::General, None, Arc::new(Mix(bat[0].clone(), bat[1].clone(), t)));
            let fm = first_variation(&var, &mix);
            prop_assert!((fm - (t * f0 + (1.0 - t) * f1)).abs() <= 1e-12 * (1.0 + f0.abs() + f1.abs()));
            let scaled = var.reweighted(|_, _| 2.5).unwrap();
            prop_assert!((first_variation(&scaled, &bat[0]) - 2.5 * f0).abs() <= 1e-12 * (1.0 + f0.abs()));
        }
    }

    struct Mix(TestField, TestField, f64);
    impl VectorField for Mix {
        fn value(&self, x: &Vector) -> Vector {
            self.0.value(x) * self.2 + self.1.value(x) * (1.0 - self.2)
        }
        fn jacobian(&self, x: &Vector) -> Matrix {
            self.0.jacobian(x) * self.2 + self.1.jacobian(x) * (1.0 - self.2)
        }
    }

    #[test]
    fn dilation_of_line_measure() {
        let be = std::f64::consts::FRAC_PI_3;
        let n = v(&[0.0, be.cos(), be.sin()]);
        let p = Plane::from_frame(3, &[v(&[1., 0., 0.]), n]).unwrap();
        let h = 0.01;
        let atoms: Vec<BoundaryAtom> = crate::numeric::trapezoid_lattice(2.0, h)
            .into_iter()
            .map(|(s, w)| BoundaryAtom {
                x: v(&[s, 0., 0.]),
                plane: p.clone(),
                sigma: w,
            })
            .collect();
        let g = BoundaryVarifold::new(
            2,
            3,
            atoms,
            Container::halfspace(3),
            ContactAngleField::Constant(be),
            1e-8,
        )
        .unwrap();
        let (_, gr) = pushforward_dilation(&DiscreteVarifold::empty(2, 3), &g, &Vector::zeros(3), 0.5).unwrap();
        let orig = g.ball_mass(&Vector::zeros(3), 0.5);
        assert_relative_eq!(gr.ball_mass(&Vector::zeros(3), 1.0), orig / 0.5, epsilon = 1e-12);
    }
}
