//! Test vector fields with exact Jacobians.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::geometry::Container;
use crate::{Matrix, Vector};

/// Admissible class of a test field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldClass {
    /// Tangent to the boundary surface along it.
    Tangential,
    /// Compactly supported inside the domain.
    Interior,
    /// No constraint.
    General,
}

impl fmt::Display for FieldClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldClass::Tangential => "tangential",
            FieldClass::Interior => "interior",
            FieldClass::General => "general",
        };
        f.write_str(s)
    }
}

/// A smooth vector field on R^(n+1). `jacobian[(i, j)] = d phi^i / d x_j`.
pub trait VectorField: Send + Sync {
    fn value(&self, x: &Vector) -> Vector;
    fn jacobian(&self, x: &Vector) -> Matrix;
    fn eval(&self, x: &Vector) -> (Vector, Matrix) {
        (self.value(x), self.jacobian(x))
    }
}

/// A named vector field with its class tag.
#[derive(Clone)]
pub struct TestField {
    pub name: String,
    pub class: FieldClass,
    pub support_radius: Option<f64>,
    field: Arc<dyn VectorField>,
}

impl fmt::Debug for TestField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestField")
            .field("name", &self.name)
            .field("class", &self.class)
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl TestField {
    pub fn new(
        name: impl Into<String>,
        class: FieldClass,
        support_radius: Option<f64>,
        field: Arc<dyn VectorField>,
    ) -> TestField {
        TestField {
            name: name.into(),
            class,
            support_radius,
            field,
        }
    }

    pub fn value(&self, x: &Vector) -> Vector {
        self.field.value(x)
    }

    pub fn jacobian(&self, x: &Vector) -> Matrix {
        self.field.jacobian(x)
    }

    pub fn eval(&self, x: &Vector) -> (Vector, Matrix) {
        self.field.eval(x)
    }

    /// Largest central-difference defect of the Jacobian, measured against
    /// `1e-6 (1 + |J|)`; values at most 1 pass.
    pub fn jacobian_defect(&self, probes: &[Vector]) -> f64 {
        let eps = 1e-6;
        let mut worst: f64 = 0.0;
        for x in probes {
            let j = self.jacobian(x);
            let d = x.len();
            let mut fd = Matrix::zeros(d, d);
            for k in 0..d {
                let mut xp = x.clone();
                xp[k] += eps;
                let mut xm = x.clone();
                xm[k] -= eps;
                let col = (self.value(&xp) - self.value(&xm)) / (2.0 * eps);
                fd.set_column(k, &col);
            }
            let err = (&fd - &j).amax() / (1e-6 * (1.0 + j.amax()));
            worst = worst.max(err);
        }
        worst
    }

    /// Largest normal component `|<phi, nu>|` over the given surface points.
    pub fn normal_defect(&self, container: &Container, surface: &[Vector]) -> f64 {
        surface
            .iter()
            .map(|x| self.value(x).dot(&container.grad_sdf(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// `phi(x) = g(x) (A x + b)` with `g(x) = exp(-(x - c)^T Q (x - c))`.
#[derive(Clone, Debug)]
pub struct GaussianAffine {
    pub center: Vector,
    pub q: Matrix,
    pub a: Matrix,
    pub b: Vector,
}

impl GaussianAffine {
    fn envelope(&self, x: &Vector) -> (f64, Vector) {
        let y = x - &self.center;
        let qy = &self.q * &y;
        let g = (-y.dot(&qy)).exp();
        (g, qy * (-2.0 * g))
    }
}

impl VectorField for GaussianAffine {
    fn value(&self, x: &Vector) -> Vector {
        let (g, _) = self.envelope(x);
        (&self.a * x + &self.b) * g
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        self.eval(x).1
    }
    fn eval(&self, x: &Vector) -> (Vector, Matrix) {
        let (g, dg) = self.envelope(x);
        let mut lin = self.b.clone();
        lin.gemv(1.0, &self.a, x, 1.0);
        let mut jac = &self.a * g;
        jac.ger(1.0, &lin, &dg, 1.0);
        (lin * g, jac)
    }
}

/// Field tangent to a sphere of radius `radius` around `sphere_center`:
/// `phi(x) = g(x) (|y|^2 a - <y, a> y) / R^2` with `y = x - sphere_center`.
#[derive(Clone, Debug)]
pub struct SphereTangent {
    pub sphere_center: Vector,
    pub radius: f64,
    pub center: Vector,
    pub q: Matrix,
    pub a: Vector,
}

impl VectorField for SphereTangent {
    fn value(&self, x: &Vector) -> Vector {
        self.eval(x).0
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        self.eval(x).1
    }
    fn eval(&self, x: &Vector) -> (Vector, Matrix) {
        let z = x - &self.center;
        let qz = &self.q * &z;
        let g = (-z.dot(&qz)).exp();
        let dg = qz * (-2.0 * g);
        let y = x - &self.sphere_center;
        let r2 = self.radius * self.radius;
        let ya = y.dot(&self.a);
        let u = (&self.a * y.norm_squared() - &y * ya) / r2;
        let d = x.len();
        let du = (&self.a * (2.0 * y.transpose()) - &y * self.a.transpose() - Matrix::identity(d, d) * ya) / r2;
        let jac = &u * dg.transpose() + du * g;
        (u * g, jac)
    }
}

/// `phi(x) = (1 - |x - c|^2 / r^2)_+^3 dir`, supported in the closed ball.
#[derive(Clone, Debug)]
pub struct PolyBump {
    pub center: Vector,
    pub radius: f64,
    pub dir: Vector,
}

impl VectorField for PolyBump {
    fn value(&self, x: &Vector) -> Vector {
        let s = (x - &self.center).norm_squared() / (self.radius * self.radius);
        if s >= 1.0 {
            return Vector::zeros(x.len());
        }
        &self.dir * (1.0 - s).powi(3)
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        let y = x - &self.center;
        let r2 = self.radius * self.radius;
        let s = y.norm_squared() / r2;
        if s >= 1.0 {
            return Matrix::zeros(x.len(), x.len());
        }
        let grad = y * (-6.0 * (1.0 - s).powi(2) / r2);
        &self.dir * grad.transpose()
    }
}

/// The affine field `phi(x) = A x + b`.
#[derive(Clone, Debug)]
pub struct Affine {
    pub a: Matrix,
    pub b: Vector,
}

impl VectorField for Affine {
    fn value(&self, x: &Vector) -> Vector {
        &self.a * x + &self.b
    }
    fn jacobian(&self, _x: &Vector) -> Matrix {
        self.a.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn probes() -> Vec<Vector> {
        (0..12)
            .map(|k| {
                let t = k as f64;
                v(&[
                    0.7 * (1.3 * t).sin(),
                    0.6 * (0.7 * t + 1.0).cos(),
                    0.4 * (2.1 * t).sin(),
                ])
            })
            .collect()
    }

    #[test]
    fn gaussian_affine_jacobian() {
        let f = GaussianAffine {
            center: v(&[0.1, -0.2, 0.3]),
            q: Matrix::from_row_slice(3, 3, &[4., 1., 0., 1., 3., 0.5, 0., 0.5, 5.]),
            a: Matrix::from_row_slice(3, 3, &[0.2, -0.1, 0.4, 0.3, 0.0, 0.1, 0., 0., 0.7]),
            b: v(&[1., -0.5, 0.]),
        };
        let t = TestField::new("g", FieldClass::General, None, std::sync::Arc::new(f));
        assert!(t.jacobian_defect(&probes()) <= 1.0);
    }

    #[test]
    fn sphere_tangent_is_tangent_and_exact() {
        let f = SphereTangent {
            sphere_center: v(&[0., 0., 0.]),
            radius: 1.0,
            center: v(&[0.5, 0.2, 0.6]),
            q: Matrix::identity(3, 3) * 3.0,
            a: v(&[0.3, -1.0, 0.4]),
        };
        let t = TestField::new("s", FieldClass::Tangential, None, std::sync::Arc::new(f));
        assert!(t.jacobian_defect(&probes()) <= 1.0);
        let ball = Container::ball(v(&[0., 0., 0.]), 1.0).unwrap();
        let surf: Vec<Vector> = probes().iter().map(|p| p / p.norm()).collect();
        assert!(t.normal_defect(&ball, &surf) < 1e-12);
    }

    #[test]
    fn poly_bump_vanishes_outside() {
        let f = PolyBump {
            center: v(&[0., 0., 1.]),
            radius: 0.5,
            dir: v(&[1., 2., 3.]),
        };
        assert_eq!(f.value(&v(&[0., 0., 0.4])), v(&[0., 0., 0.]));
        assert_relative_eq!(f.value(&v(&[0., 0., 1.]))[2], 3.0);
        let t = TestField::new("p", FieldClass::Interior, Some(0.5), std::sync::Arc::new(f));
        let pr: Vec<Vector> = probes().iter().map(|p| p * 0.3 + v(&[0., 0., 1.])).collect();
        assert!(t.jacobian_defect(&pr) <= 1.0);
    }
}
