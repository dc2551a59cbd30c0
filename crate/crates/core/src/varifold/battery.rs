//! Declared test-field batteries.
//!
//! Each battery is a fixed list built from a deterministic coefficient
//! table, so residual numbers are reproducible. Envelopes are Gaussians of
//! width at most 0.4 centred within distance 1.5 of the origin, which keeps
//! them below 1e-18 outside the default truncation radius of the flat
//! fixtures.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Container;
use crate::varifold::field::{FieldClass, GaussianAffine, PolyBump, SphereTangent, TestField};
use crate::{Matrix, Vector};

/// Deterministic coefficient in [-1, 1].
pub fn coef(k: usize, i: usize) -> f64 {
    ((k as f64 + 1.0) * 12.9898 + (i as f64 + 1.0) * 78.233).sin()
}

fn rotation(d: usize, k: usize) -> Matrix {
    let m = Matrix::from_fn(d, d, |i, j| coef(k, 200 + i * d + j) + if i == j { 2.0 } else { 0.0 });
    m.qr().q()
}

fn envelope(d: usize, k: usize) -> Matrix {
    let s = 0.28 + 0.04 * (k % 4) as f64;
    if k % 4 == 0 {
        return Matrix::identity(d, d) / (s * s);
    }
    let r = rotation(d, k);
    let diag = Vector::from_fn(d, |i, _| {
        let si = s * (0.7 + 0.3 * coef(k, 100 + i).abs());
        1.0 / (si * si)
    });
    &r * Matrix::from_diagonal(&diag) * r.transpose()
}

fn support_of(q: &Matrix) -> f64 {
    let lmin = q.clone().symmetric_eigen().eigenvalues.min();
    (69.1 / lmin).sqrt()
}

/// The standard battery of fields tangent to the boundary of `container`.
///
/// Half-spaces use `g(x)(A x + b)` with the normal row of `A` and `b`
/// chosen so that the normal component vanishes on the boundary. Balls use
/// Gaussian-weighted rotation fields of the sphere.
pub fn tangential_battery(container: &Container, ambient: usize, count: usize) -> Result<Vec<TestField>> {
    match container {
        Container::Halfspace { normal, offset } => Ok((0..count)
            .map(|k| halfspace_field(normal, *offset, ambient, k, true))
            .collect()),
        Container::Ball { center, radius } => Ok((0..count)
            .map(|k| {
                let u = unit_from(ambient, k, 300);
                let gc = center + &u * (*radius * (0.9 + 0.1 * coef(k, 310).abs()));
                let q = envelope(ambient, k);
                let a = Vector::from_fn(ambient, |i, _| coef(k, 320 + i));
                let support = support_of(&q);
                let f = SphereTangent {
                    sphere_center: center.clone(),
                    radius: *radius,
                    center: gc,
                    q,
                    a,
                };
                TestField::new(
                    format!("sphere-tangent-{k:02}"),
                    FieldClass::Tangential,
                    Some(support),
                    Arc::new(f),
                )
            })
            .collect()),
        Container::Custom(_) => Err(Error::InvalidParameter(
            "no declared tangential battery for custom containers".into(),
        )),
    }
}

/// The standard battery of unconstrained fields.
pub fn general_battery(container: &Container, ambient: usize, count: usize) -> Vec<TestField> {
    let (normal, offset) = match container {
        Container::Halfspace { normal, offset } => (normal.clone(), *offset),
        _ => (crate::geometry::basis_vector(ambient, ambient - 1), 0.0),
    };
    (0..count)
        .map(|k| halfspace_field(&normal, offset, ambient, k, false))
        .collect()
}

/// Polynomial bumps supported strictly inside `container`.
pub fn interior_battery(container: &Container, ambient: usize, count: usize) -> Result<Vec<TestField>> {
    let place = |k: usize| -> Result<(Vector, f64)> {
        match container {
            Container::Halfspace { normal, offset } => {
                let c0 = Vector::from_fn(ambient, |i, _| 0.9 * coef(k, 400 + i));
                let t = &c0 - normal * normal.dot(&c0);
                Ok((t + normal * (offset + 0.6 + 0.2 * (k % 3) as f64), 0.5))
            }
            Container::Ball { center, radius } => {
                let u = unit_from(ambient, k, 400);
                Ok((center + u * (0.3 * radius), 0.4 * radius))
            }
            Container::Custom(_) => Err(Error::InvalidParameter(
                "no declared interior battery for custom containers".into(),
            )),
        }
    };
    (0..count)
        .map(|k| {
            let (c, r) = place(k)?;
            let dir = Vector::from_fn(ambient, |i, _| coef(k, 420 + i));
            let f = PolyBump {
                center: c,
                radius: r,
                dir,
            };
            Ok(TestField::new(
                format!("interior-bump-{k:02}"),
                FieldClass::Interior,
                Some(r),
                Arc::new(f),
            ))
        })
        .collect()
}

fn unit_from(ambient: usize, k: usize, salt: usize) -> Vector {
    let v = Vector::from_fn(ambient, |i, _| coef(k, salt + i) + if i == 0 { 0.05 } else { 0.0 });
    let n = v.norm();
    v / n
}

fn halfspace_field(normal: &Vector, offset: f64, d: usize, k: usize, tangential: bool) -> TestField {
    let t = Matrix::identity(d, d) - normal * normal.transpose();
    let c0 = Vector::from_fn(d, |i, _| 0.9 * coef(k, i));
    let center = &t * &c0 * 0.7 + normal * (offset + 0.25 * (k % 3) as f64);
    let q = envelope(d, k);
    let a0 = if k % 5 == 0 {
        Matrix::zeros(d, d)
    } else {
        Matrix::from_fn(d, d, |i, j| 0.5 * coef(k, 30 + i * d + j))
    };
    let b0 = Vector::from_fn(d, |i, _| coef(k, 60 + i));
    let (a, b, class) = if tangential {
        let lambda = coef(k, 90);
        let a = &t * &a0 + normal * normal.transpose() * lambda;
        let b = &t * &b0 - normal * (lambda * offset);
        (a, b, FieldClass::Tangential)
    } else {
        (a0, b0, FieldClass::General)
    };
    let support = support_of(&q) + center.norm();
    let prefix = if tangential { "tangent" } else { "general" };
    let f = GaussianAffine { center, q, a, b };
    TestField::new(format!("{prefix}-bump-{k:02}"), class, Some(support), Arc::new(f))
}
