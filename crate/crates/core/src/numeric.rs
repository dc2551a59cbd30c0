//! Deterministic reductions and small quadrature helpers.
//!
//! Every sum over atoms goes through [`pairwise_sum`], whose tree shape
//! depends only on the input length. Per-atom terms are produced with an
//! order-preserving parallel map, so results do not depend on the size of
//! the worker pool.

use rayon::prelude::*;

const BLOCK: usize = 32;

/// Pairwise (cascade) summation with a fixed tree shape.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Evaluates `f` on `0..n` in parallel and sums the results pairwise.
pub fn par_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let terms: Vec<f64> = (0..n).into_par_iter().map(f).collect();
    pairwise_sum(&terms)
}

/// Evaluates `f` on `0..n` in parallel, keeping the index order.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Column-wise pairwise sums of a row-major table with `width` columns.
pub fn pairwise_columns(rows: &[Vec<f64>], width: usize) -> Vec<f64> {
    (0..width)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            pairwise_sum(&col)
        })
        .collect()
}

/// Volume of the unit ball in R^k.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(k - 2) * 2.0 * std::f64::consts::PI / k as f64,
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let nf = q as f64;
    for i in 0..q.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_gauss(a: f64, b: f64, panels: usize, q: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(q);
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * q);
    for p in 0..panels {
        let lo = a + width * p as f64;
        for (x, w) in xs.iter().zip(&ws) {
            out.push((lo + 0.5 * width * (x + 1.0), 0.5 * width * w));
        }
    }
    out
}

/// Symmetric lattice `{j h : |j h| <= extent}` with trapezoid weights.
///
/// The lattice always contains 0. The end nodes get half weight when they
/// fall exactly on `±extent`.
pub fn trapezoid_lattice(extent: f64, h: f64) -> Vec<(f64, f64)> {
    let n = (extent / h + 1e-9).floor() as i64;
    let on_edge = ((n as f64) * h - extent).abs() <= 1e-9 * h.max(1.0);
    (-n..=n)
        .map(|j| {
            let w = if on_edge && j.abs() == n { 0.5 * h } else { h };
            (j as f64 * h, w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for q in 1..12 {
            let (x, w) = gauss_legendre(q);
            for deg in 0..(2 * q) {
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert_relative_eq!(num, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn composite_rule_integrates_gaussian() {
        let rule = composite_gauss(-6.0, 6.0, 12, 10);
        let s: f64 = rule.iter().map(|(x, w)| w * (-x * x).exp()).sum();
        assert_relative_eq!(s, std::f64::consts::PI.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI, epsilon = 1e-15);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * std::f64::consts::PI / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
    }

    #[test]
    fn lattice_contains_origin_and_has_exact_length() {
        let l = trapezoid_lattice(4.0, 0.1);
        assert!(l.iter().any(|(x, _)| *x == 0.0));
        let total: f64 = l.iter().map(|(_, w)| w).sum();
        assert_relative_eq!(total, 8.0, epsilon = 1e-12);
    }
}
