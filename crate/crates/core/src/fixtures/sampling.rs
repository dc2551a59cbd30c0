//! Quadrature sampling of parametrized patches.

use crate::error::{Error, Result};
use crate::geometry::Plane;
use crate::numeric::{gauss_legendre, par_map};
use crate::varifold::{Atom, DiscreteVarifold};
use crate::{Matrix, Vector};

/// A parametrization with an analytic differential.
pub trait Chart: Sync {
    fn param_dim(&self) -> usize;
    fn ambient(&self) -> usize;
    fn map(&self, u: &[f64]) -> Vector;
    /// The `ambient x param_dim` matrix of partial derivatives.
    fn differential(&self, u: &[f64]) -> Matrix;
}

/// An axis-aligned box in parameter space.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamCell {
    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn size(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    fn distance_to(&self, p: &[f64]) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(p)
            .map(|((a, b), x)| {
                let d = if x < a {
                    a - x
                } else if x > b {
                    x - b
                } else {
                    0.0
                };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    fn split(&self) -> Vec<ParamCell> {
        let d = self.lo.len();
        (0..(1usize << d))
            .map(|mask| {
                let mut lo = self.lo.clone();
                let mut hi = self.hi.clone();
                for i in 0..d {
                    let mid = 0.5 * (self.lo[i] + self.hi[i]);
                    if mask & (1 << i) == 0 {
                        hi[i] = mid;
                    } else {
                        lo[i] = mid;
                    }
                }
                ParamCell { lo, hi }
            })
            .collect()
    }
}

/// Tensor grid of `counts[i]` equal cells on `[lo[i], hi[i]]`.
pub fn grid_cells(lo: &[f64], hi: &[f64], counts: &[usize]) -> Vec<ParamCell> {
    let d = lo.len();
    let total: usize = counts.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut clo = vec![0.0; d];
            let mut chi = vec![0.0; d];
            for i in (0..d).rev() {
                let k = idx % counts[i];
                idx /= counts[i];
                let w = (hi[i] - lo[i]) / counts[i] as f64;
                clo[i] = lo[i] + w * k as f64;
                chi[i] = if k + 1 == counts[i] {
                    hi[i]
                } else {
                    lo[i] + w * (k + 1) as f64
                };
            }
            ParamCell { lo: clo, hi: chi }
        })
        .collect()
}

/// Refines `roots` toward `focus` until every cell is at most
/// `grade * dist(cell, focus)`, `max_size`, and at least `min_size`.
pub fn graded_cells(roots: &[ParamCell], focus: &[f64], grade: f64, min_size: f64, max_size: f64) -> Vec<ParamCell> {
    let mut out = Vec::new();
    let mut stack: Vec<ParamCell> = roots.iter().rev().cloned().collect();
    while let Some(c) = stack.pop() {
        let s = c.size();
        let need = s > max_size || (s > grade * c.distance_to(focus) && s > min_size);
        if need {
            let mut kids = c.split();
            kids.reverse();
            stack.extend(kids);
        } else {
            out.push(c);
        }
    }
    out
}

/// How each cell is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightRule {
    Midpoint,
    /// Tensor Gauss-Legendre rule with this many nodes per axis.
    GaussLegendre(usize),
}

/// Atoms of a sampled patch together with their parameters.
#[derive(Clone, Debug)]
pub struct SampledPatch {
    pub varifold: DiscreteVarifold,
    pub params: Vec<Vec<f64>>,
}

fn rule_nodes(cell: &ParamCell, rule: WeightRule) -> Vec<(Vec<f64>, f64)> {
    match rule {
        WeightRule::Midpoint => vec![(cell.center(), cell.measure())],
        WeightRule::GaussLegendre(q) => {
            let (xs, ws) = gauss_legendre(q);
            let d = cell.lo.len();
            let total = q.pow(d as u32);
            (0..total)
                .map(|mut idx| {
                    let mut u = vec![0.0; d];
                    let mut w = 1.0;
                    for i in 0..d {
                        let k = idx % q;
                        idx /= q;
                        let half = 0.5 * (cell.hi[i] - cell.lo[i]);
                        u[i] = cell.lo[i] + half * (xs[k] + 1.0);
                        w *= half * ws[k];
                    }
                    (u, w)
                })
                .collect()
        }
    }
}

/// Samples the image of `cells` under `chart` as a discrete varifold.
pub fn sample_parametric(chart: &dyn Chart, cells: &[ParamCell], rule: WeightRule) -> Result<SampledPatch> {
    let m = chart.param_dim();
    let d = chart.ambient();
    let nodes: Vec<(Vec<f64>, f64)> = cells.iter().flat_map(|c| rule_nodes(c, rule)).collect();
    let built: Vec<Result<(Atom, Vec<f64>)>> = par_map(nodes.len(), |i| {
        let (u, cw) = &nodes[i];
        let x = chart.map(u);
        let jac = chart.differential(u);
        let cols: Vec<Vector> = (0..m).map(|j| jac.column(j).into_owned()).collect();
        let gram = jac.transpose() * &jac;
        let det = gram.determinant();
        let plane = Plane::from_frame(d, &cols).map_err(|_| Error::DegenerateChart {
            dim: m,
            node: u.clone(),
        })?;
        Ok((
            Atom {
                x,
                plane,
                w: det.max(0.0).sqrt() * cw,
            },
            u.clone(),
        ))
    });
    let mut atoms = Vec::with_capacity(built.len());
    let mut params = Vec::with_capacity(built.len());
    for b in built {
        let (a, u) = b?;
        atoms.push(a);
        params.push(u);
    }
    Ok(SampledPatch {
        varifold: DiscreteVarifold::new(m, d, atoms)?,
        params,
    })
}

/// Point and tangent frame of the unit sphere `S^k` in hyperspherical
/// angles `(a_1, ..., a_k)`, with `a_k` the azimuth.
pub fn sphere_point(angles: &[f64]) -> (Vector, Matrix) {
    let k = angles.len();
    if k == 1 {
        let a = angles[0];
        return (
            Vector::from_column_slice(&[a.cos(), a.sin()]),
            Matrix::from_column_slice(2, 1, &[-a.sin(), a.cos()]),
        );
    }
    let (w, jw) = sphere_point(&angles[1..]);
    let (s, c) = angles[0].sin_cos();
    let mut x = Vector::zeros(k + 1);
    let mut jac = Matrix::zeros(k + 1, k);
    for i in 0..k {
        x[i] = s * w[i];
        jac[(i, 0)] = c * w[i];
        for j in 1..k {
            jac[(i, j)] = s * jw[(i, j - 1)];
        }
    }
    x[k] = c;
    jac[(k, 0)] = -s;
    (x, jac)
}

/// Unit sphere `S^n` around `center`, parametrized by the polar angle from
/// the top `e_(n+1)` followed by hyperspherical angles of `S^(n-1)`. For
/// `n = 1` the single parameter is the signed angle from the top.
#[derive(Clone, Debug)]
pub struct SphereChart {
    pub center: Vector,
    pub radius: f64,
}

impl Chart for SphereChart {
    fn param_dim(&self) -> usize {
        self.center.len() - 1
    }
    fn ambient(&self) -> usize {
        self.center.len()
    }
    fn map(&self, u: &[f64]) -> Vector {
        &self.center + unit_sphere(u).0 * self.radius
    }
    fn differential(&self, u: &[f64]) -> Matrix {
        unit_sphere(u).1 * self.radius
    }
}

fn unit_sphere(u: &[f64]) -> (Vector, Matrix) {
    let n = u.len();
    if n == 1 {
        let t = u[0];
        return (
            Vector::from_column_slice(&[t.sin(), t.cos()]),
            Matrix::from_column_slice(2, 1, &[t.cos(), -t.sin()]),
        );
    }
    let (w, jw) = sphere_point(&u[1..]);
    let (s, c) = u[0].sin_cos();
    let mut x = Vector::zeros(n + 1);
    let mut jac = Matrix::zeros(n + 1, n);
    for i in 0..n {
        x[i] = s * w[i];
        jac[(i, 0)] = c * w[i];
        for j in 1..n {
            jac[(i, j)] = s * jw[(i, j - 1)];
        }
    }
    x[n] = c;
    jac[(n, 0)] = -s;
    (x, jac)
}

/// Parameter box of the spherical cap with polar angle up to `theta_max`.
pub fn cap_param_box(n: usize, theta_max: f64) -> (Vec<f64>, Vec<f64>) {
    use std::f64::consts::PI;
    if n == 1 {
        return (vec![-theta_max], vec![theta_max]);
    }
    let mut lo = vec![0.0];
    let mut hi = vec![theta_max];
    for _ in 1..(n - 1) {
        lo.push(0.0);
        hi.push(PI);
    }
    lo.push(-PI);
    hi.push(PI);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    struct Flat;
    impl Chart for Flat {
        fn param_dim(&self) -> usize {
            2
        }
        fn ambient(&self) -> usize {
            3
        }
        fn map(&self, u: &[f64]) -> Vector {
            Vector::from_column_slice(&[u[0], u[1], 0.0])
        }
        fn differential(&self, _u: &[f64]) -> Matrix {
            Matrix::from_column_slice(3, 2, &[1., 0., 0., 0., 1., 0.])
        }
    }

    struct Pinched;
    impl Chart for Pinched {
        fn param_dim(&self) -> usize {
            2
        }
        fn ambient(&self) -> usize {
            3
        }
        fn map(&self, u: &[f64]) -> Vector {
            Vector::from_column_slice(&[u[0], 0.0, 0.0])
        }
        fn differential(&self, _u: &[f64]) -> Matrix {
            Matrix::from_column_slice(3, 2, &[1., 0., 0., 0., 0., 0.])
        }
    }

    #[test]
    fn flat_chart_gives_exact_atoms() {
        let cells = grid_cells(&[0., 0.], &[1., 1.], &[4, 4]);
        let p = sample_parametric(&Flat, &cells, WeightRule::Midpoint).unwrap();
        assert_eq!(p.varifold.len(), 16);
        assert_eq!(p.varifold.atoms()[0].x, Vector::from_column_slice(&[0.125, 0.125, 0.0]));
        assert_relative_eq!(p.varifold.total_mass(), 1.0, epsilon = 1e-15);
        let flat = Plane::coordinate(3, &[0, 1]).unwrap();
        assert!(p.varifold.atoms().iter().all(|a| a.plane.approx_eq(&flat)));
    }

    #[test]
    fn sphere_area_converges_quadratically() {
        let chart = SphereChart {
            center: Vector::zeros(3),
            radius: 1.0,
        };
        let err = |n: usize| {
            let (lo, hi) = cap_param_box(2, PI);
            let cells = grid_cells(&lo, &hi, &[n, 2 * n]);
            let p = sample_parametric(&chart, &cells, WeightRule::Midpoint).unwrap();
            (p.varifold.total_mass() - 4.0 * PI).abs()
        };
        let (e1, e2) = (err(40), err(80));
        assert!(e1 < 5e-3);
        assert!(e1 / e2 > 3.5);
    }

    #[test]
    fn rank_deficient_chart_is_rejected() {
        let cells = grid_cells(&[0., 0.], &[1., 1.], &[2, 2]);
        let e = sample_parametric(&Pinched, &cells, WeightRule::Midpoint).unwrap_err();
        assert!(matches!(e, Error::DegenerateChart { .. }));
    }

    #[test]
    fn sphere_differential_matches_finite_differences() {
        for n in 1..4 {
            let chart = SphereChart {
                center: Vector::zeros(n + 1),
                radius: 1.3,
            };
            let u: Vec<f64> = (0..n).map(|i| 0.4 + 0.3 * i as f64).collect();
            let jac = chart.differential(&u);
            for j in 0..n {
                let mut up = u.clone();
                up[j] += 1e-6;
                let mut um = u.clone();
                um[j] -= 1e-6;
                let fd = (chart.map(&up) - chart.map(&um)) / 2e-6;
                for i in 0..=n {
                    assert_relative_eq!(fd[i], jac[(i, j)], epsilon = 1e-8);
                }
            }
            assert_relative_eq!((chart.map(&u)).norm(), 1.3, epsilon = 1e-14);
        }
    }

    #[test]
    fn graded_cells_cover_the_box() {
        let roots = grid_cells(&[0., -1.], &[1., 1.], &[1, 2]);
        let cells = graded_cells(&roots, &[1.0, 0.0], 0.2, 1e-3, 0.25);
        let area: f64 = cells.iter().map(|c| c.measure()).sum();
        assert_relative_eq!(area, 2.0, epsilon = 1e-12);
        let smallest = cells.iter().map(|c| c.size()).fold(1.0, f64::min);
        assert!(smallest <= 1e-3);
    }
}
