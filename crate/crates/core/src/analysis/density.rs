use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{par_sum, unit_ball_volume};
use crate::varifold::DiscreteVarifold;
use crate::Vector;

/// Exponents `k` of the search grid `Lambda = 2^k`.
pub const LAMBDA_EXPONENTS: std::ops::RangeInclusive<i32> = -10..=10;

/// Mass ratios `mu(B_rho(x0)) / (omega_m rho^m)` on a radius grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityCurve {
    pub center: Vec<f64>,
    pub dim: usize,
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Ramp width of the smoothed indicator, zero for closed balls.
    pub cutoff_width: f64,
}

/// `n` radii in geometric progression from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let q = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo * (q * i as f64).exp() })
        .collect()
}

fn check_grid(rho_grid: &[f64]) -> Result<()> {
    if rho_grid.is_empty() || rho_grid[0] <= 0.0 || rho_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::RadiusOrder(
            "radii must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `gamma(s)`: 1 on `[0, 1 - t]`, 0 on `[1, inf)`, and the cubic
/// `1 - 3u^2 + 2u^3`, `u = (s - 1 + t) / t`, in between.
pub fn cutoff(s: f64, t: f64) -> f64 {
    if s <= 1.0 - t {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let u = (s - 1.0 + t) / t;
        1.0 - u * u * (3.0 - 2.0 * u)
    }
}

fn curve(v: &DiscreteVarifold, x0: &Vector, rho_grid: &[f64], t: f64) -> Result<DensityCurve> {
    check_grid(rho_grid)?;
    let m = v.dim();
    let omega = unit_ball_volume(m);
    let atoms = v.atoms();
    let dist: Vec<f64> = atoms.iter().map(|a| (&a.x - x0).norm()).collect();
    let masses: Vec<f64> = rho_grid
        .iter()
        .map(|&r| {
            par_sum(atoms.len(), |i| {
                if t == 0.0 {
                    if dist[i] <= r {
                        atoms[i].w
                    } else {
                        0.0
                    }
                } else {
                    atoms[i].w * cutoff(dist[i] / r, t)
                }
            })
        })
        .collect();
    let ratios = rho_grid
        .iter()
        .zip(&masses)
        .map(|(r, mass)| mass / (omega * r.powi(m as i32)))
        .collect();
    Ok(DensityCurve {
        center: x0.iter().copied().collect(),
        dim: m,
        radii: rho_grid.to_vec(),
        masses,
        ratios,
        cutoff_width: t,
    })
}

/// Closed-ball density ratios.
pub fn density_curve(v: &DiscreteVarifold, x0: &Vector, rho_grid: &[f64]) -> Result<DensityCurve> {
    curve(v, x0, rho_grid, 0.0)
}

/// Density ratios of the mass weighted by `gamma(|x - x0| / rho)`.
pub fn smoothed_density_curve(v: &DiscreteVarifold, x0: &Vector, rho_grid: &[f64], t: f64) -> Result<DensityCurve> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!("cutoff width {t}")));
    }
    curve(v, x0, rho_grid, t)
}

/// `e^(Lambda rho) [(mu(B_rho) / rho^m)^(1/p) + Lambda rho^((p - m)/p)]`.
pub fn boundary_monotone_quantity(c: &DensityCurve, p: f64, lambda: f64) -> Result<Vec<f64>> {
    let m = c.dim as f64;
    if !(p > m) {
        return Err(Error::ExponentError { p, m: c.dim });
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("Lambda {lambda}")));
    }
    Ok(c.radii
        .iter()
        .zip(&c.masses)
        .map(|(r, mass)| (lambda * r).exp() * ((mass / r.powf(m)).powf(1.0 / p) + lambda * r.powf((p - m) / p)))
        .collect())
}

/// Largest decrease between consecutive values, zero for a non-decreasing
/// sequence.
pub fn max_drop(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaCalibration {
    pub lambda: f64,
    pub exponent: i32,
    pub max_drop: f64,
    pub slack: f64,
    pub values: Vec<f64>,
}

/// The first `Lambda = 2^k`, `k = -10..10`, whose monotone quantity drops
/// by at most `slack` anywhere on the curve.
pub fn calibrate_lambda(c: &DensityCurve, p: f64, slack: f64) -> Result<LambdaCalibration> {
    for k in LAMBDA_EXPONENTS {
        let lambda = 2f64.powi(k);
        let values = boundary_monotone_quantity(c, p, lambda)?;
        let drop = max_drop(&values);
        if drop <= slack {
            return Ok(LambdaCalibration {
                lambda,
                exponent: k,
                max_drop: drop,
                slack,
                values,
            });
        }
    }
    Err(Error::NoLambdaFound)
}

/// A non-negative C^1 weight `h` with its gradient.
pub trait ScalarWeight: Sync {
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
}

/// `h = 1`.
pub struct UnitWeight;

impl ScalarWeight for UnitWeight {
    fn value(&self, _: &Vector) -> f64 {
        1.0
    }
    fn gradient(&self, x: &Vector) -> Vector {
        Vector::zeros(x.len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicitySlack {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

fn power_integral(a: f64, b: f64, m: usize) -> f64 {
    if m == 1 {
        (b / a).ln()
    } else {
        let e = 1.0 - m as f64;
        (b.powf(e) - a.powf(e)) / e
    }
}

/// Slack `RHS - LHS` of the interior monotonicity inequality
///
/// ```text
/// r1^-m int_(B_r1) h <= r2^-m int_(B_r2) h
///     + int_r1^r2 rho^-m int_(B_rho) (h |H| + |grad^V h|) d rho
///     - int_(B_r2 \ B_r1) h |(x - xi)^perp|^2 / |x - xi|^(m+2)
/// ```
///
/// with the `rho` integral evaluated exactly atom by atom.
pub fn interior_monotonicity_check(
    v: &DiscreteVarifold,
    h_curv: &[Vector],
    xi: &Vector,
    weight: &dyn ScalarWeight,
    r1: f64,
    r2: f64,
    tol: f64,
) -> Result<MonotonicitySlack> {
    if !(r1 > 0.0 && r1 < r2) {
        return Err(Error::RadiusOrder(format!("need 0 < r1 < r2, got {r1}, {r2}")));
    }
    if h_curv.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: h_curv.len(),
        });
    }
    let m = v.dim();
    let atoms = v.atoms();
    let lhs = par_sum(atoms.len(), |i| {
        let a = &atoms[i];
        if (&a.x - xi).norm() <= r1 {
            a.w * weight.value(&a.x)
        } else {
            0.0
        }
    }) / r1.powi(m as i32);
    let rhs = par_sum(atoms.len(), |i| {
        let a = &atoms[i];
        let y = &a.x - xi;
        let s = y.norm();
        if s > r2 {
            return 0.0;
        }
        let hv = weight.value(&a.x);
        let mut out = hv / r2.powi(m as i32);
        let density = hv * h_curv[i].norm() + a.plane.project(&weight.gradient(&a.x)).norm();
        out += density * power_integral(s.max(r1), r2, m);
        if s > r1 {
            out -= hv * a.plane.project_perp(&y).norm_squared() / s.powi(m as i32 + 2);
        }
        a.w * out
    });
    let slack = rhs - lhs;
    Ok(MonotonicitySlack {
        lhs,
        rhs,
        slack,
        pass: slack >= -tol,
    })
}
