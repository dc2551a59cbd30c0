use serde::Serialize;

use crate::capillary::BoundaryVarifold;
use crate::error::{Error, Result};
use crate::varifold::DiscreteVarifold;
use crate::Vector;

/// Number of dictionary scales `R/2, R/4, R/8`.
pub const DEFAULT_SCALES: usize = 3;

const CHUNK: usize = 8192;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlDistanceReport {
    pub value: f64,
    pub dictionary_size: usize,
    pub region_radius: f64,
}

/// Weighted points with, for varifolds, the projector entries of each atom.
struct Marked<'a> {
    x: &'a Vector,
    w: f64,
    p: Option<&'a [f64]>,
}

pub fn varifold_points(v: &DiscreteVarifold) -> Vec<(Vector, f64)> {
    v.atoms().iter().map(|a| (a.x.clone(), a.w)).collect()
}

pub fn boundary_points(g: &BoundaryVarifold) -> Vec<(Vector, f64)> {
    g.atoms().iter().map(|a| (a.x.clone(), a.sigma)).collect()
}

struct Scale {
    ell: f64,
    nodes: usize,
    offset: usize,
}

struct Dictionary {
    d: usize,
    radius: f64,
    scales: Vec<Scale>,
    marks: usize,
    len: usize,
}

impl Dictionary {
    fn new(d: usize, radius: f64, scales: usize, marks: usize) -> Dictionary {
        let mut out = Vec::with_capacity(scales);
        let mut offset = 0;
        for s in 1..=scales {
            let ell = radius / 2f64.powi(s as i32);
            let nodes = 2usize.pow(s as u32 + 2) + 1;
            out.push(Scale { ell, nodes, offset });
            offset += nodes.pow(d as u32) * (1 + marks);
        }
        Dictionary {
            d,
            radius,
            scales: out,
            marks,
            len: offset,
        }
    }

    /// Adds `sign w f(x)` for every dictionary function `f` not vanishing at
    /// `x`.
    fn accumulate(&self, acc: &mut [f64], a: &Marked, sign: f64) {
        let d = self.d;
        for sc in &self.scales {
            let spacing = sc.ell / 2.0;
            let mut ranges = Vec::with_capacity(d);
            for i in 0..d {
                let u = (a.x[i] + self.radius) / spacing;
                let lo = (u - 2.0).ceil().max(0.0);
                let hi = (u + 2.0).floor().min((sc.nodes - 1) as f64);
                if lo > hi {
                    ranges.clear();
                    break;
                }
                ranges.push((lo as usize, hi as usize));
            }
            if ranges.len() != d {
                continue;
            }
            let amp = sc.ell / (d as f64).sqrt();
            let mut idx = vec![0usize; d];
            for i in 0..d {
                idx[i] = ranges[i].0;
            }
            'outer: loop {
                let mut f = amp;
                let mut flat = 0usize;
                for i in 0..d {
                    let c = -self.radius + idx[i] as f64 * spacing;
                    f *= (1.0 - (a.x[i] - c).abs() / sc.ell).max(0.0);
                    flat = flat * sc.nodes + idx[i];
                }
                if f != 0.0 {
                    let base = sc.offset + flat * (1 + self.marks);
                    acc[base] += sign * a.w * f;
                    if let Some(p) = a.p {
                        for (k, pk) in p.iter().enumerate() {
                            acc[base + 1 + k] += sign * a.w * 0.5 * f * pk;
                        }
                    }
                }
                let mut i = d;
                loop {
                    if i == 0 {
                        break 'outer;
                    }
                    i -= 1;
                    if idx[i] < ranges[i].1 {
                        idx[i] += 1;
                        for j in i + 1..d {
                            idx[j] = ranges[j].0;
                        }
                        continue 'outer;
                    }
                }
            }
        }
    }

    fn integrals(&self, atoms: &[Marked]) -> Vec<f64> {
        use rayon::prelude::*;
        let partial: Vec<Vec<f64>> = atoms
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![0.0; self.len];
                for a in chunk {
                    self.accumulate(&mut acc, a, 1.0);
                }
                acc
            })
            .collect();
        let mut total = vec![0.0; self.len];
        for p in &partial {
            for (t, x) in total.iter_mut().zip(p) {
                *t += x;
            }
        }
        total
    }

    fn evaluate(&self, mu: &[Marked], nu: &[Marked]) -> f64 {
        let a = self.integrals(mu);
        let b = self.integrals(nu);
        a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }
}

fn wrap_points(s: &[(Vector, f64)]) -> Vec<Marked<'_>> {
    s.iter().map(|(x, w)| Marked { x, w: *w, p: None }).collect()
}

fn wrap_varifold(v: &DiscreteVarifold) -> Vec<Marked<'_>> {
    v.atoms()
        .iter()
        .map(|at| Marked {
            x: &at.x,
            w: at.w,
            p: Some(at.plane.proj().as_slice()),
        })
        .collect()
}

fn check(region_radius: f64, scales: usize) -> Result<()> {
    if !(region_radius > 0.0) || scales == 0 {
        return Err(Error::InvalidParameter(
            "BL dictionary needs a positive radius and at least one scale".into(),
        ));
    }
    Ok(())
}

/// Lower bound on the bounded-Lipschitz distance of two weighted point sets,
/// taken over tensor hats `(l / sqrt d) prod max(0, 1 - |x_i - c_i| / l)`
/// at scales `l = R/2, R/4, ...` with centers on the lattice of spacing
/// `l / 2` in `[-R, R]^d`.
pub fn bl_distance(
    mu: &[(Vector, f64)],
    nu: &[(Vector, f64)],
    region_radius: f64,
    scales: usize,
) -> Result<BlDistanceReport> {
    check(region_radius, scales)?;
    let d = match mu.first().or(nu.first()) {
        Some((x, _)) => x.len(),
        None => {
            return Ok(BlDistanceReport {
                value: 0.0,
                dictionary_size: 0,
                region_radius,
            })
        }
    };
    if mu.iter().chain(nu).any(|(x, _)| x.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: 0 });
    }
    let dict = Dictionary::new(d, region_radius, scales, 0);
    let value = dict.evaluate(&wrap_points(mu), &wrap_points(nu));
    Ok(BlDistanceReport {
        value,
        dictionary_size: dict.len,
        region_radius,
    })
}

/// The same dictionary extended by `f(x) P_ij / 2` for every projector
/// entry, so that measures with equal weights but different planes are
/// told apart.
pub fn bl_distance_varifold(
    a: &DiscreteVarifold,
    b: &DiscreteVarifold,
    region_radius: f64,
    scales: usize,
) -> Result<BlDistanceReport> {
    check(region_radius, scales)?;
    if a.ambient() != b.ambient() {
        return Err(Error::DimensionMismatch {
            expected: a.ambient(),
            found: b.ambient(),
        });
    }
    let d = a.ambient();
    let dict = Dictionary::new(d, region_radius, scales, d * d);
    let value = dict.evaluate(&wrap_varifold(a), &wrap_varifold(b));
    Ok(BlDistanceReport {
        value,
        dictionary_size: dict.len,
        region_radius,
    })
}
