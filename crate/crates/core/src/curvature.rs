//! Weak second fundamental forms.
//!
//! A form is stored per atom as the dense array `B_ijk = <B(e_i, e_j), e_k>`,
//! which is the tangential derivative of `P_jk` in the direction `e_i`. Its
//! trace is `H_l = sum_j B_jlj`.

use std::sync::Arc;

use serde::Serialize;

use crate::capillary::{conormal_unchecked, BoundaryVarifold};
use crate::error::{Error, Result};
use crate::geometry::Plane;
use crate::numeric::{pairwise_sum, par_map, par_sum};
use crate::varifold::battery::coef;
use crate::varifold::{DiscreteVarifold, FieldResidual, ResidualReport, TestField};
use crate::{Matrix, Vector};

/// Dense trilinear array of one atom.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondFundamentalForm {
    d: usize,
    data: Vec<f64>,
}

/// Largest violations of the pointwise relations of a second fundamental
/// form with its tangent plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RelationDefects {
    /// `|B_ijk - B_ikj|`
    pub symmetry: f64,
    /// `|sum_i B_vii|` over coordinate `v`
    pub trace_free: f64,
    /// `|sum_l P_il B_ljk - B_ijk|`
    pub first_slot: f64,
    /// `|sum_l (P_jl B_ilk + P_lk B_ijl) - B_ijk|`
    pub product_rule: f64,
    /// `|P H|`
    pub normal_trace: f64,
}

impl RelationDefects {
    pub fn max(&self) -> f64 {
        [
            self.symmetry,
            self.trace_free,
            self.first_slot,
            self.product_rule,
            self.normal_trace,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn merge(self, o: RelationDefects) -> RelationDefects {
        RelationDefects {
            symmetry: self.symmetry.max(o.symmetry),
            trace_free: self.trace_free.max(o.trace_free),
            first_slot: self.first_slot.max(o.first_slot),
            product_rule: self.product_rule.max(o.product_rule),
            normal_trace: self.normal_trace.max(o.normal_trace),
        }
    }
}

impl SecondFundamentalForm {
    pub fn zeros(d: usize) -> SecondFundamentalForm {
        SecondFundamentalForm {
            d,
            data: vec![0.0; d * d * d],
        }
    }

    pub fn from_data(d: usize, data: Vec<f64>) -> Result<SecondFundamentalForm> {
        if data.len() != d * d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d * d,
                found: data.len(),
            });
        }
        Ok(SecondFundamentalForm { d, data })
    }

    pub fn ambient(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.d + j) * self.d + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    /// `B(u, v)` as a vector.
    pub fn apply(&self, u: &Vector, v: &Vector) -> Vector {
        let d = self.d;
        Vector::from_fn(d, |k, _| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += u[i] * v[j] * self.get(i, j, k);
                }
            }
            s
        })
    }

    /// `H_l = sum_j B_jlj`.
    pub fn trace(&self) -> Vector {
        Vector::from_fn(self.d, |l, _| (0..self.d).map(|j| self.get(j, l, j)).sum())
    }

    /// Frobenius norm of the array.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, f: f64) -> SecondFundamentalForm {
        SecondFundamentalForm {
            d: self.d,
            data: self.data.iter().map(|x| x * f).collect(),
        }
    }

    /// `sum_ijk C_i[j, k] B_ijk` for one matrix `C_i` per output component.
    pub fn contract(&self, dp: &[Matrix]) -> f64 {
        let d = self.d;
        let mut s = 0.0;
        for (i, c) in dp.iter().enumerate() {
            for j in 0..d {
                for k in 0..d {
                    s += c[(j, k)] * self.get(i, j, k);
                }
            }
        }
        s
    }

    pub fn relation_defects(&self, plane: &Plane) -> RelationDefects {
        let d = self.d;
        let p = plane.proj();
        let mut r = RelationDefects::default();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let b = self.get(i, j, k);
                    r.symmetry = r.symmetry.max((b - self.get(i, k, j)).abs());
                    let fs: f64 = (0..d).map(|l| p[(i, l)] * self.get(l, j, k)).sum();
                    r.first_slot = r.first_slot.max((fs - b).abs());
                    let pr: f64 = (0..d)
                        .map(|l| p[(j, l)] * self.get(i, l, k) + p[(l, k)] * self.get(i, j, l))
                        .sum();
                    r.product_rule = r.product_rule.max((pr - b).abs());
                }
            }
            let tf: f64 = (0..d).map(|l| self.get(i, l, l)).sum();
            r.trace_free = r.trace_free.max(tf.abs());
        }
        r.normal_trace = (p * self.trace()).amax();
        r
    }
}

/// Second fundamental form on an orthonormal tangent frame:
/// `values[a][b] = A(tau_a, tau_b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntrinsicForm {
    pub frame: Vec<Vector>,
    pub values: Vec<Vec<Vector>>,
}

/// Extends `A` to all of R^(n+1) by
/// `B(v, w) = A(v^T, w^T) + sum_a <A(v^T, tau_a), w^perp> tau_a`.
pub fn extend_second_fundamental_form(a: &IntrinsicForm, plane: &Plane) -> Result<SecondFundamentalForm> {
    let m = plane.dim();
    let d = plane.ambient();
    if a.frame.len() != m || a.values.len() != m || a.values.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: a.frame.len(),
        });
    }
    for (al, row) in a.values.iter().enumerate() {
        for (be, v) in row.iter().enumerate() {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
            if (v - &a.values[be][al]).amax() > 1e-9 {
                return Err(Error::InvalidParameter("intrinsic form is not symmetric".into()));
            }
            if plane.project(v).amax() > 1e-9 {
                return Err(Error::InvalidParameter("intrinsic form is not normal-valued".into()));
            }
        }
    }
    for t in &a.frame {
        if plane.project_perp(t).amax() > 1e-9 {
            return Err(Error::InvalidParameter("frame is not tangent to the plane".into()));
        }
    }
    let mut b = SecondFundamentalForm::zeros(d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let mut s = 0.0;
                for be in 0..m {
                    let ti = a.frame[be][i];
                    if ti == 0.0 {
                        continue;
                    }
                    for ga in 0..m {
                        s += ti * a.frame[ga][j] * a.values[be][ga][k];
                        s += ti * a.values[be][ga][j] * a.frame[ga][k];
                    }
                }
                let idx = b.idx(i, j, k);
                b.data[idx] = s;
            }
        }
    }
    Ok(b)
}

/// One form per varifold atom.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureData {
    pub forms: Vec<SecondFundamentalForm>,
}

impl CurvatureData {
    pub fn zeros(atoms: usize, d: usize) -> CurvatureData {
        CurvatureData {
            forms: vec![SecondFundamentalForm::zeros(d); atoms],
        }
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn traces(&self) -> Vec<Vector> {
        self.forms.iter().map(|b| b.trace()).collect()
    }

    /// `||B||_(L^p(V))^p = sum w |B|^p`.
    pub fn lp_norm_pow(&self, v: &DiscreteVarifold, p: f64) -> Result<f64> {
        self.check_len(v)?;
        let atoms = v.atoms();
        Ok(par_sum(atoms.len(), |i| atoms[i].w * self.forms[i].norm().powf(p)))
    }

    /// Largest relation defects over all atoms.
    pub fn relation_defects(&self, v: &DiscreteVarifold) -> Result<RelationDefects> {
        self.check_len(v)?;
        let atoms = v.atoms();
        let per = par_map(atoms.len(), |i| self.forms[i].relation_defects(&atoms[i].plane));
        Ok(per.into_iter().fold(RelationDefects::default(), RelationDefects::merge))
    }

    fn check_len(&self, v: &DiscreteVarifold) -> Result<()> {
        if self.forms.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                found: self.forms.len(),
            });
        }
        Ok(())
    }
}

/// A test function `phi(x, P)` with its `x`-Jacobian and `P`-derivatives.
pub trait PlaneField: Send + Sync {
    fn value(&self, x: &Vector, p: &Matrix) -> Vector;
    fn jacobian_x(&self, x: &Vector, p: &Matrix) -> Matrix;
    /// `D_P phi^i` as one matrix per component `i`.
    fn dp(&self, x: &Vector, p: &Matrix) -> Vec<Matrix>;
}

#[derive(Clone)]
pub struct PlaneTestField {
    pub name: String,
    pub field: Arc<dyn PlaneField>,
}

impl std::fmt::Debug for PlaneTestField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlaneTestField").field("name", &self.name).finish()
    }
}

struct Spatial(TestField);

impl PlaneField for Spatial {
    fn value(&self, x: &Vector, _: &Matrix) -> Vector {
        self.0.value(x)
    }
    fn jacobian_x(&self, x: &Vector, _: &Matrix) -> Matrix {
        self.0.jacobian(x)
    }
    fn dp(&self, x: &Vector, _: &Matrix) -> Vec<Matrix> {
        let d = x.len();
        vec![Matrix::zeros(d, d); d]
    }
}

impl From<TestField> for PlaneTestField {
    fn from(f: TestField) -> PlaneTestField {
        PlaneTestField {
            name: f.name.clone(),
            field: Arc::new(Spatial(f)),
        }
    }
}

/// `phi^i(x, P) = g(x) ((A x + b)_i + <C_i, P>)` with a Gaussian `g`.
#[derive(Clone, Debug)]
pub struct PlaneBump {
    pub center: Vector,
    pub q: Matrix,
    pub a: Matrix,
    pub b: Vector,
    pub c: Vec<Matrix>,
}

impl PlaneBump {
    fn parts(&self, x: &Vector, p: &Matrix) -> (f64, Vector, Vector) {
        let y = x - &self.center;
        let qy = &self.q * &y;
        let g = (-y.dot(&qy)).exp();
        let lin = &self.a * x + &self.b + Vector::from_fn(x.len(), |i, _| self.c[i].dot(p));
        (g, qy * (-2.0 * g), lin)
    }
}

impl PlaneField for PlaneBump {
    fn value(&self, x: &Vector, p: &Matrix) -> Vector {
        let (g, _, lin) = self.parts(x, p);
        lin * g
    }
    fn jacobian_x(&self, x: &Vector, p: &Matrix) -> Matrix {
        let (g, dg, lin) = self.parts(x, p);
        lin * dg.transpose() + &self.a * g
    }
    fn dp(&self, x: &Vector, p: &Matrix) -> Vec<Matrix> {
        let (g, _, _) = self.parts(x, p);
        self.c.iter().map(|c| c * g).collect()
    }
}

/// The declared battery of plane-dependent fields, centred near the unit
/// ball.
pub fn plane_field_battery(ambient: usize, count: usize) -> Vec<PlaneTestField> {
    let d = ambient;
    (0..count)
        .map(|k| {
            let s = 0.3 + 0.05 * (k % 3) as f64;
            let center = Vector::from_fn(d, |i, _| 0.8 * coef(k, 500 + i));
            let q = Matrix::identity(d, d) / (s * s);
            let a = Matrix::from_fn(d, d, |i, j| coef(k, 520 + i * d + j));
            let b = Vector::from_fn(d, |i, _| coef(k, 560 + i));
            let c = (0..d)
                .map(|i| Matrix::from_fn(d, d, |j, l| coef(k, 600 + (i * d + j) * d + l)))
                .collect();
            PlaneTestField {
                name: format!("plane-bump-{k:02}"),
                field: Arc::new(PlaneBump { center, q, a, b, c }),
            }
        })
        .collect()
}

/// Signed residual of
/// `int (D_P phi . B + <tr B, phi> + <grad_x phi, P>) dV + int <n, phi> dGamma`.
pub fn curvature_identity_defect(
    v: &DiscreteVarifold,
    b: &CurvatureData,
    gamma: &BoundaryVarifold,
    phi: &PlaneTestField,
) -> Result<f64> {
    b.check_len(v)?;
    let atoms = v.atoms();
    let interior = par_sum(atoms.len(), |i| {
        let a = &atoms[i];
        let p = a.plane.proj();
        let f = &phi.field;
        let form = &b.forms[i];
        let val = f.value(&a.x, p);
        let jac = f.jacobian_x(&a.x, p);
        a.w * (form.contract(&f.dp(&a.x, p)) + form.trace().dot(&val) + a.plane.div(&jac))
    });
    let batoms = gamma.atoms();
    let terms: Vec<Result<f64>> = par_map(batoms.len(), |i| {
        let ba = &batoms[i];
        let n = conormal_unchecked(&ba.x, &ba.plane, gamma.container())?;
        Ok(ba.sigma * n.dot(&phi.field.value(&ba.x, ba.plane.proj())))
    });
    let terms = terms.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(interior + pairwise_sum(&terms))
}

/// Largest residual of the curvature identity over a battery. The relative
/// scale is `sum w (|grad_x phi|_F + |D_P phi|_F)`.
pub fn curvature_identity_residual(
    v: &DiscreteVarifold,
    b: &CurvatureData,
    gamma: &BoundaryVarifold,
    battery: &[PlaneTestField],
) -> Result<ResidualReport> {
    let atoms = v.atoms();
    let mut out = Vec::with_capacity(battery.len());
    for phi in battery {
        let value = curvature_identity_defect(v, b, gamma, phi)?;
        let scale = par_sum(atoms.len(), |i| {
            let a = &atoms[i];
            let p = a.plane.proj();
            let dp: f64 = phi.field.dp(&a.x, p).iter().map(|m| m.norm_squared()).sum();
            a.w * (phi.field.jacobian_x(&a.x, p).norm() + dp.sqrt())
        });
        let relative = if scale > 0.0 { value.abs() / scale } else { value.abs() };
        out.push(FieldResidual {
            name: phi.name.clone(),
            absolute: value.abs(),
            scale,
            relative,
        });
    }
    Ok(ResidualReport::from_fields(out))
}

/// Empirical constants of the two mass comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MassComparability {
    pub mass: f64,
    pub boundary_mass: f64,
    pub curvature_norm_pow: f64,
    pub c1: f64,
    pub c2: f64,
}

/// `c1 = mu_V / (sigma_Gamma + ||B||_p^p)`, `c2 = sigma_Gamma / (mu_V + ||B||_p^p)`.
pub fn mass_comparability(
    v: &DiscreteVarifold,
    b: &CurvatureData,
    gamma: &BoundaryVarifold,
    p: f64,
) -> Result<MassComparability> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent p = {p}")));
    }
    let mass = v.total_mass();
    let boundary_mass = gamma.total_mass();
    let bn = b.lp_norm_pow(v, p)?;
    let ratio = |num: f64, den: f64| -> Result<f64> {
        if den > 0.0 {
            Ok(num / den)
        } else if num == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::DivisionDegenerate)
        }
    };
    Ok(MassComparability {
        mass,
        boundary_mass,
        curvature_norm_pow: bn,
        c1: ratio(mass, boundary_mass + bn)?,
        c2: ratio(boundary_mass, mass + bn)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LscReport {
    pub norms: Vec<f64>,
    pub limit_norm: f64,
    pub tail_min: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Checks `||B||^p <= min over the last half of the family of ||B_k||^p + tol`.
pub fn lsc_check(
    family: &[(DiscreteVarifold, CurvatureData)],
    limit: &(DiscreteVarifold, CurvatureData),
    p: f64,
    tol: f64,
) -> Result<LscReport> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty family".into()));
    }
    let norms = family
        .iter()
        .map(|(v, b)| b.lp_norm_pow(v, p))
        .collect::<Result<Vec<f64>>>()?;
    let limit_norm = limit.1.lp_norm_pow(&limit.0, p)?;
    let tail = &norms[norms.len() / 2..];
    let tail_min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let margin = tail_min + tol - limit_norm;
    Ok(LscReport {
        norms,
        limit_norm,
        tail_min,
        margin,
        pass: margin >= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varifold::Atom;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn sphere_form_at_pole() -> (SecondFundamentalForm, Plane) {
        let plane = Plane::coordinate(3, &[0, 1]).unwrap();
        let nu = v(&[0., 0., 1.]);
        let frame = plane.frame();
        let values = (0..2)
            .map(|a| (0..2).map(|b| if a == b { -&nu } else { Vector::zeros(3) }).collect())
            .collect();
        (
            extend_second_fundamental_form(&IntrinsicForm { frame, values }, &plane).unwrap(),
            plane,
        )
    }

    #[test]
    fn flat_form_is_zero() {
        let plane = Plane::coordinate(3, &[0, 1]).unwrap();
        let values = vec![vec![Vector::zeros(3); 2]; 2];
        let b = extend_second_fundamental_form(
            &IntrinsicForm {
                frame: plane.frame(),
                values,
            },
            &plane,
        )
        .unwrap();
        assert_eq!(b.norm(), 0.0);
    }

    #[test]
    fn unit_sphere_trace() {
        let (b, plane) = sphere_form_at_pole();
        assert_relative_eq!(b.trace().norm(), 2.0, epsilon = 1e-14);
        assert!(b.relation_defects(&plane).max() < 1e-12);
        let e1 = v(&[1., 0., 0.]);
        let e3 = v(&[0., 0., 1.]);
        assert_relative_eq!(b.apply(&e1, &e1)[2], -1.0, epsilon = 1e-14);
        assert_relative_eq!(b.apply(&e1, &e3)[0], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_tangential_values() {
        let plane = Plane::coordinate(3, &[0, 1]).unwrap();
        let mut values = vec![vec![Vector::zeros(3); 2]; 2];
        values[0][0] = v(&[1., 0., 0.]);
        assert!(extend_second_fundamental_form(
            &IntrinsicForm {
                frame: plane.frame(),
                values
            },
            &plane
        )
        .is_err());
    }

    #[test]
    fn comparability_edge_cases() {
        let empty = DiscreteVarifold::empty(2, 3);
        let g = BoundaryVarifold::new(
            2,
            3,
            vec![],
            crate::Container::halfspace(3),
            crate::ContactAngleField::Constant(1.0),
            1e-8,
        )
        .unwrap();
        let r = mass_comparability(&empty, &CurvatureData::zeros(0, 3), &g, 2.0).unwrap();
        assert_eq!((r.c1, r.c2), (0.0, 0.0));
        let one = DiscreteVarifold::new(
            2,
            3,
            vec![Atom {
                x: v(&[0., 0., 1.]),
                plane: Plane::coordinate(3, &[0, 1]).unwrap(),
                w: 1.0,
            }],
        )
        .unwrap();
        assert!(matches!(
            mass_comparability(&one, &CurvatureData::zeros(1, 3), &g, 2.0),
            Err(Error::DivisionDegenerate)
        ));
    }

    #[test]
    fn lsc_constant_family_is_equality() {
        let (b, plane) = sphere_form_at_pole();
        let vf = DiscreteVarifold::new(
            2,
            3,
            vec![Atom {
                x: v(&[0., 0., 1.]),
                plane,
                w: 0.5,
            }],
        )
        .unwrap();
        let pair = (vf, CurvatureData { forms: vec![b] });
        let r = lsc_check(&[pair.clone(), pair.clone()], &pair, 2.0, 0.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn plane_bump_derivatives_match_differences() {
        let f = &plane_field_battery(3, 3)[2].field;
        let x = v(&[0.3, -0.2, 0.4]);
        let p = Plane::coordinate(3, &[0, 2]).unwrap().proj().clone();
        let jac = f.jacobian_x(&x, &p);
        let e = 1e-6;
        for j in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += e;
            xm[j] -= e;
            let fd = (f.value(&xp, &p) - f.value(&xm, &p)) / (2.0 * e);
            assert!((fd - jac.column(j)).amax() < 1e-6);
        }
        let dp = f.dp(&x, &p);
        let mut pp = p.clone();
        pp[(1, 2)] += e;
        let fd = (f.value(&x, &pp) - f.value(&x, &p)) / e;
        for i in 0..3 {
            assert!((fd[i] - dp[i][(1, 2)]).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn extension_satisfies_relations(
            angles in proptest::collection::vec(-3.0f64..3.0, 3),
            coeffs in proptest::collection::vec(-2.0f64..2.0, 9),
        ) {
            let rot = nalgebra::Rotation3::from_euler_angles(angles[0], angles[1], angles[2]);
            let r = Matrix::from_fn(3, 3, |i, j| rot[(i, j)]);
            let t1 = r.column(0).into_owned();
            let t2 = r.column(1).into_owned();
            let nu = r.column(2).into_owned();
            let plane = Plane::from_frame(3, &[t1, t2]).unwrap();
            let frame = plane.frame();
            let s = [[coeffs[0], coeffs[1]], [coeffs[1], coeffs[2]]];
            let values = (0..2).map(|a| (0..2).map(|b| &nu * s[a][b]).collect()).collect();
            let b = extend_second_fundamental_form(&IntrinsicForm { frame, values }, &plane).unwrap();
            prop_assert!(b.relation_defects(&plane).max() < 1e-9);
            prop_assert!((b.trace() - &nu * (coeffs[0] + coeffs[2])).amax() < 1e-9);
        }
    }
}
