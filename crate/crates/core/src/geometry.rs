//! Planes, containers and contact angles.
//!
//! An unoriented m-plane is stored as its orthogonal projector. Frames are
//! recovered on demand from an eigendecomposition. A container is the
//! closure of a domain described by a signed distance that is positive
//! inside, with analytic first and second derivatives.

use std::fmt;
use std::sync::Arc;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Planes closer than this in the Grassmann distance are treated as equal.
pub const PLANE_EQ_TOL: f64 = 1e-8;
/// Points with `|sdf| <= SURFACE_TOL` count as boundary points.
pub const SURFACE_TOL: f64 = 1e-8;
const GRAM_TOL: f64 = 1e-12;

/// An unoriented m-plane through the origin of R^(n+1).
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    proj: Matrix,
    dim: usize,
}

impl Plane {
    /// Projector onto the span of `vectors` in R^`ambient`.
    pub fn from_frame(ambient: usize, vectors: &[Vector]) -> Result<Plane> {
        for v in vectors {
            if v.len() != ambient {
                return Err(Error::DimensionMismatch {
                    expected: ambient,
                    found: v.len(),
                });
            }
        }
        let m = vectors.len();
        if m > ambient {
            return Err(Error::RankDeficient { gram_det: 0.0 });
        }
        if m > 0 {
            let gram = Matrix::from_fn(m, m, |i, j| vectors[i].dot(&vectors[j]));
            let det = gram.determinant();
            if !(det >= GRAM_TOL) {
                return Err(Error::RankDeficient { gram_det: det });
            }
        }
        let mut basis: Vec<Vector> = Vec::with_capacity(m);
        for v in vectors {
            let mut u = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dot(&u);
                    u.axpy(-c, b, 1.0);
                }
            }
            let norm = u.norm();
            if norm < 1e-14 {
                return Err(Error::RankDeficient { gram_det: 0.0 });
            }
            basis.push(u / norm);
        }
        let mut proj = Matrix::zeros(ambient, ambient);
        for u in &basis {
            proj += u * u.transpose();
        }
        let proj = 0.5 * (&proj + proj.transpose());
        Ok(Plane { proj, dim: m })
    }

    /// Wraps an existing projector after checking its invariants.
    pub fn from_projector(proj: Matrix, dim: usize) -> Result<Plane> {
        if !proj.is_square() {
            return Err(Error::InvalidPlane("projector is not square".into()));
        }
        let asym = (&proj - proj.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::InvalidPlane(format!("asymmetry {asym:e}")));
        }
        let idem = (&proj * &proj - &proj).amax();
        if idem > 1e-10 {
            return Err(Error::InvalidPlane(format!("idempotence defect {idem:e}")));
        }
        let tr = proj.trace();
        if (tr - dim as f64).abs() > 1e-10 {
            return Err(Error::InvalidPlane(format!("trace {tr} for dimension {dim}")));
        }
        let proj = 0.5 * (&proj + proj.transpose());
        Ok(Plane { proj, dim })
    }

    /// Coordinate plane spanned by the listed basis vectors.
    pub fn coordinate(ambient: usize, axes: &[usize]) -> Result<Plane> {
        let vs: Vec<Vector> = axes.iter().map(|&i| basis_vector(ambient, i)).collect();
        Plane::from_frame(ambient, &vs)
    }

    pub fn proj(&self) -> &Matrix {
        &self.proj
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient(&self) -> usize {
        self.proj.nrows()
    }

    pub fn project(&self, v: &Vector) -> Vector {
        &self.proj * v
    }

    pub fn project_perp(&self, v: &Vector) -> Vector {
        v - &self.proj * v
    }

    /// Operator norm of the projector difference.
    pub fn distance(&self, other: &Plane) -> f64 {
        let diff = &self.proj - &other.proj;
        let eig = SymmetricEigen::new(diff);
        eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    pub fn approx_eq(&self, other: &Plane) -> bool {
        self.dim == other.dim && self.distance(other) < PLANE_EQ_TOL
    }

    /// Orthonormal frame of the plane, sorted and sign-normalized.
    pub fn frame(&self) -> Vec<Vector> {
        top_eigenvectors(&self.proj, self.dim)
    }

    pub fn orthogonal_complement(&self) -> Plane {
        let n = self.ambient();
        let proj = Matrix::identity(n, n) - &self.proj;
        Plane {
            proj: 0.5 * (&proj + proj.transpose()),
            dim: n - self.dim,
        }
    }

    /// Divergence of a linear map restricted to the plane: `trace(P J)`.
    pub fn div(&self, jacobian: &Matrix) -> f64 {
        self.proj.component_mul(jacobian).sum()
    }
}

/// Top `k` eigenvectors of a symmetric matrix, ordered by descending
/// eigenvalue and normalized so the first non-negligible entry is positive.
pub fn top_eigenvectors(sym: &Matrix, k: usize) -> Vec<Vector> {
    let eig = SymmetricEigen::new(sym.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .take(k)
        .map(|i| {
            let mut v: Vector = eig.eigenvectors.column(i).into_owned();
            if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
                if *first < 0.0 {
                    v = -v;
                }
            }
            v
        })
        .collect()
}

pub fn basis_vector(ambient: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(ambient);
    v[i] = 1.0;
    v
}

/// A C^2 signed distance with analytic derivatives.
pub trait SignedDistance: Send + Sync {
    fn sdf(&self, x: &Vector) -> f64;
    fn grad(&self, x: &Vector) -> Vector;
    fn hess(&self, x: &Vector) -> Matrix;
    fn tubular_radius(&self) -> f64;
    fn name(&self) -> String {
        "custom".into()
    }
}

/// The closure of a domain, given by a signed distance positive inside.
#[derive(Clone)]
pub enum Container {
    /// `{ <x, normal> >= offset }` with unit `normal`.
    Halfspace {
        normal: Vector,
        offset: f64,
    },
    /// Closed ball of radius `radius` around `center`.
    Ball {
        center: Vector,
        radius: f64,
    },
    Custom(Arc<dyn SignedDistance>),
}

impl fmt::Debug for Container {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Container::Halfspace { normal, offset } => f
                .debug_struct("Halfspace")
                .field("normal", &normal.as_slice())
                .field("offset", offset)
                .finish(),
            Container::Ball { center, radius } => f
                .debug_struct("Ball")
                .field("center", &center.as_slice())
                .field("radius", radius)
                .finish(),
            Container::Custom(c) => write!(f, "Custom({})", c.name()),
        }
    }
}

impl Container {
    /// The upper half-space `{x_(n+1) >= 0}` of R^`ambient`.
    pub fn halfspace(ambient: usize) -> Container {
        Container::Halfspace {
            normal: basis_vector(ambient, ambient - 1),
            offset: 0.0,
        }
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Container> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("ball radius {radius}")));
        }
        Ok(Container::Ball { center, radius })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Container::Halfspace { .. } => "halfspace",
            Container::Ball { .. } => "ball",
            Container::Custom(_) => "custom",
        }
    }

    pub fn sdf(&self, x: &Vector) -> f64 {
        match self {
            Container::Halfspace { normal, offset } => x.dot(normal) - offset,
            Container::Ball { center, radius } => radius - (x - center).norm(),
            Container::Custom(c) => c.sdf(x),
        }
    }

    pub fn grad_sdf(&self, x: &Vector) -> Vector {
        match self {
            Container::Halfspace { normal, .. } => normal.clone(),
            Container::Ball { center, .. } => {
                let y = x - center;
                let r = y.norm();
                if r == 0.0 {
                    basis_vector(x.len(), 0)
                } else {
                    -y / r
                }
            }
            Container::Custom(c) => c.grad(x),
        }
    }

    pub fn hess_sdf(&self, x: &Vector) -> Matrix {
        match self {
            Container::Halfspace { normal, .. } => Matrix::zeros(normal.len(), normal.len()),
            Container::Ball { center, .. } => {
                let y = x - center;
                let r = y.norm();
                let n = x.len();
                if r == 0.0 {
                    return Matrix::zeros(n, n);
                }
                let u = &y / r;
                -(Matrix::identity(n, n) - &u * u.transpose()) / r
            }
            Container::Custom(c) => c.hess(x),
        }
    }

    pub fn tubular_radius(&self) -> f64 {
        match self {
            Container::Halfspace { .. } => f64::INFINITY,
            Container::Ball { radius, .. } => *radius,
            Container::Custom(c) => c.tubular_radius(),
        }
    }

    /// The blown-up container `(Omega - x0) / r`.
    pub fn dilated(&self, x0: &Vector, r: f64) -> Container {
        match self {
            Container::Halfspace { normal, offset } => Container::Halfspace {
                normal: normal.clone(),
                offset: (offset - x0.dot(normal)) / r,
            },
            Container::Ball { center, radius } => Container::Ball {
                center: (center - x0) / r,
                radius: radius / r,
            },
            Container::Custom(c) => Container::Custom(Arc::new(DilatedSdf {
                inner: c.clone(),
                x0: x0.clone(),
                r,
            })),
        }
    }

    /// Inward unit normal and tangent projector of the boundary at `x`.
    pub fn normal_and_tangent(&self, x: &Vector) -> Result<(Vector, Matrix)> {
        let d = self.sdf(x);
        if d.abs() > SURFACE_TOL {
            return Err(Error::NotOnSurface { distance: d.abs() });
        }
        Ok(self.frame_at(x))
    }

    /// Normal and tangent projector from the gradient, without the
    /// on-surface check.
    pub fn frame_at(&self, x: &Vector) -> (Vector, Matrix) {
        let nu = self.grad_sdf(x);
        let n = nu.len();
        let t = Matrix::identity(n, n) - &nu * nu.transpose();
        (nu, t)
    }

    pub fn on_surface(&self, x: &Vector) -> bool {
        self.sdf(x).abs() <= SURFACE_TOL
    }
}

pub fn normal_and_tangent(c: &Container, x: &Vector) -> Result<(Vector, Matrix)> {
    c.normal_and_tangent(x)
}

struct DilatedSdf {
    inner: Arc<dyn SignedDistance>,
    x0: Vector,
    r: f64,
}

impl DilatedSdf {
    fn back(&self, y: &Vector) -> Vector {
        &self.x0 + y * self.r
    }
}

impl SignedDistance for DilatedSdf {
    fn sdf(&self, y: &Vector) -> f64 {
        self.inner.sdf(&self.back(y)) / self.r
    }
    fn grad(&self, y: &Vector) -> Vector {
        self.inner.grad(&self.back(y))
    }
    fn hess(&self, y: &Vector) -> Matrix {
        self.inner.hess(&self.back(y)) * self.r
    }
    fn tubular_radius(&self) -> f64 {
        self.inner.tubular_radius() / self.r
    }
    fn name(&self) -> String {
        format!("dilated {}", self.inner.name())
    }
}

/// A C^1 contact angle on the boundary surface.
pub trait AngleField: Send + Sync {
    fn beta(&self, x: &Vector) -> f64;
    fn grad_beta(&self, x: &Vector) -> Vector;
}

#[derive(Clone)]
pub enum ContactAngleField {
    Constant(f64),
    Custom(Arc<dyn AngleField>),
}

impl fmt::Debug for ContactAngleField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContactAngleField::Constant(b) => write!(f, "Constant({b})"),
            ContactAngleField::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl ContactAngleField {
    pub fn constant(beta: f64) -> Result<ContactAngleField> {
        check_angle(beta)?;
        Ok(ContactAngleField::Constant(beta))
    }

    pub fn beta(&self, x: &Vector) -> Result<f64> {
        let b = match self {
            ContactAngleField::Constant(b) => *b,
            ContactAngleField::Custom(f) => f.beta(x),
        };
        check_angle(b)?;
        Ok(b)
    }

    pub fn grad_beta(&self, x: &Vector) -> Vector {
        match self {
            ContactAngleField::Constant(_) => Vector::zeros(x.len()),
            ContactAngleField::Custom(f) => f.grad_beta(x),
        }
    }

    /// The angle field seen from the blown-up container.
    pub fn dilated(&self, x0: &Vector, r: f64) -> ContactAngleField {
        match self {
            ContactAngleField::Constant(b) => ContactAngleField::Constant(*b),
            ContactAngleField::Custom(f) => ContactAngleField::Custom(Arc::new(DilatedAngle {
                inner: f.clone(),
                x0: x0.clone(),
                r,
            })),
        }
    }
}

fn check_angle(b: f64) -> Result<()> {
    if b > 0.0 && b < std::f64::consts::PI {
        Ok(())
    } else {
        Err(Error::InvalidAngle { value: b })
    }
}

struct DilatedAngle {
    inner: Arc<dyn AngleField>,
    x0: Vector,
    r: f64,
}

impl AngleField for DilatedAngle {
    fn beta(&self, y: &Vector) -> f64 {
        self.inner.beta(&(&self.x0 + y * self.r))
    }
    fn grad_beta(&self, y: &Vector) -> Vector {
        self.inner.grad_beta(&(&self.x0 + y * self.r)) * self.r
    }
}
