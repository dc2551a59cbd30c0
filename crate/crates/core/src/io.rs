//! Plain-text atom files.
//!
//! ```text
//! varifold m=2 n1=3 atoms=1
//! x_1 x_2 x_3 | p_11 ... p_33 | w [| B: b_111 ... b_333]
//! ```
//!
//! Boundary files start with
//! `boundary m=<m> n1=<n+1> atoms=<k> beta=<b> tol=<t> container=<c>` and
//! end each atom line with `sigma`. Floats are written with 17 significant
//! digits, which round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::capillary::{BoundaryAtom, BoundaryVarifold};
use crate::curvature::{CurvatureData, SecondFundamentalForm};
use crate::error::{Error, Result};
use crate::geometry::{ContactAngleField, Container, Plane};
use crate::varifold::{Atom, DiscreteVarifold};
use crate::{Matrix, Vector};

fn push_floats(out: &mut String, xs: &[f64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x:.16e}");
    }
}

fn proj_row_major(p: &Plane) -> Vec<f64> {
    let d = p.ambient();
    let m = p.proj();
    (0..d * d).map(|k| m[(k / d, k % d)]).collect()
}

pub fn write_varifold(v: &DiscreteVarifold, curvature: Option<&CurvatureData>) -> Result<String> {
    if let Some(b) = curvature {
        if b.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                found: b.len(),
            });
        }
    }
    let mut out = format!("varifold m={} n1={} atoms={}\n", v.dim(), v.ambient(), v.len());
    for (i, a) in v.atoms().iter().enumerate() {
        push_floats(&mut out, a.x.as_slice());
        out.push_str(" | ");
        push_floats(&mut out, &proj_row_major(&a.plane));
        out.push_str(" | ");
        push_floats(&mut out, &[a.w]);
        if let Some(b) = curvature {
            out.push_str(" | B: ");
            push_floats(&mut out, b.forms[i].data());
        }
        out.push('\n');
    }
    Ok(out)
}

fn container_tag(c: &Container) -> Result<String> {
    match c {
        Container::Halfspace { normal, offset } => {
            let mut s = String::from("halfspace:");
            let _ = write!(s, "{offset:.16e}:");
            push_csv(&mut s, normal.as_slice());
            Ok(s)
        }
        Container::Ball { center, radius } => {
            let mut s = String::from("ball:");
            let _ = write!(s, "{radius:.16e}:");
            push_csv(&mut s, center.as_slice());
            Ok(s)
        }
        Container::Custom(_) => Err(Error::InvalidParameter("custom containers cannot be written".into())),
    }
}

fn push_csv(s: &mut String, xs: &[f64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{x:.16e}");
    }
}

pub fn write_boundary(g: &BoundaryVarifold) -> Result<String> {
    let beta = match g.beta() {
        ContactAngleField::Constant(b) => *b,
        ContactAngleField::Custom(_) => {
            return Err(Error::InvalidParameter("custom angle fields cannot be written".into()))
        }
    };
    let mut out = format!(
        "boundary m={} n1={} atoms={} beta={beta:.16e} tol={:.16e} container={}\n",
        g.dim(),
        g.ambient(),
        g.len(),
        g.tol_bundle(),
        container_tag(g.container())?
    );
    for a in g.atoms() {
        push_floats(&mut out, a.x.as_slice());
        out.push_str(" | ");
        push_floats(&mut out, &proj_row_major(&a.plane));
        out.push_str(" | ");
        push_floats(&mut out, &[a.sigma]);
        out.push('\n');
    }
    Ok(out)
}

fn header_fields(line: &str, kind: &str) -> Result<Vec<(String, String)>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(kind) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected '{kind}' header"),
        });
    }
    parts
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    msg: format!("bad header field '{p}'"),
                })
        })
        .collect()
}

fn field<'a>(fields: &'a [(String, String)], key: &str) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("missing header field '{key}'"),
        })
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad number '{s}'"),
    })
}

fn parse_floats(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| parse_num(t, line)).collect()
}

struct AtomLine {
    x: Vector,
    plane: Plane,
    weight: f64,
    b: Option<Vec<f64>>,
}

fn parse_atom_line(text: &str, line: usize, m: usize, d: usize) -> Result<AtomLine> {
    let segs: Vec<&str> = text.split('|').collect();
    if segs.len() < 3 {
        return Err(Error::Parse {
            line,
            msg: "expected 'x | P | w'".into(),
        });
    }
    let x = parse_floats(segs[0], line)?;
    let p = parse_floats(segs[1], line)?;
    let w = parse_floats(segs[2], line)?;
    if x.len() != d || p.len() != d * d || w.len() != 1 {
        return Err(Error::Parse {
            line,
            msg: "wrong number of entries".into(),
        });
    }
    let b = match segs.get(3) {
        Some(s) => {
            let rest = s.trim().strip_prefix("B:").ok_or_else(|| Error::Parse {
                line,
                msg: "expected 'B:'".into(),
            })?;
            let vals = parse_floats(rest, line)?;
            if vals.len() != d * d * d {
                return Err(Error::Parse {
                    line,
                    msg: "wrong number of B entries".into(),
                });
            }
            Some(vals)
        }
        None => None,
    };
    let plane = Plane::from_projector(Matrix::from_row_slice(d, d, &p), m).map_err(|e| Error::Parse {
        line,
        msg: e.to_string(),
    })?;
    Ok(AtomLine {
        x: Vector::from_vec(x),
        plane,
        weight: w[0],
        b,
    })
}

fn dims(fields: &[(String, String)]) -> Result<(usize, usize, usize)> {
    Ok((
        parse_num(field(fields, "m")?, 1)?,
        parse_num(field(fields, "n1")?, 1)?,
        parse_num(field(fields, "atoms")?, 1)?,
    ))
}

pub fn read_varifold(text: &str) -> Result<(DiscreteVarifold, Option<CurvatureData>)> {
    let mut lines = text.lines();
    let fields = header_fields(lines.next().unwrap_or(""), "varifold")?;
    let (m, d, k) = dims(&fields)?;
    let mut atoms = Vec::with_capacity(k);
    let mut forms = Vec::new();
    let mut with_b = None;
    for (i, l) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let a = parse_atom_line(l, i + 2, m, d)?;
        if *with_b.get_or_insert(a.b.is_some()) != a.b.is_some() {
            return Err(Error::Parse {
                line: i + 2,
                msg: "B block present on some lines only".into(),
            });
        }
        if let Some(b) = a.b {
            forms.push(SecondFundamentalForm::from_data(d, b)?);
        }
        atoms.push(Atom {
            x: a.x,
            plane: a.plane,
            w: a.weight,
        });
    }
    if atoms.len() != k {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header announces {k} atoms, found {}", atoms.len()),
        });
    }
    let v = DiscreteVarifold::new(m, d, atoms)?;
    let curv = with_b.unwrap_or(false).then_some(CurvatureData { forms });
    Ok((v, curv))
}

fn parse_container(tag: &str, d: usize) -> Result<Container> {
    let bad = || Error::Parse {
        line: 1,
        msg: format!("bad container '{tag}'"),
    };
    let mut parts = tag.split(':');
    let kind = parts.next().ok_or_else(bad)?;
    let scalar: f64 = parse_num(parts.next().ok_or_else(bad)?, 1)?;
    let vec: Vec<f64> = parts
        .next()
        .ok_or_else(bad)?
        .split(',')
        .map(|t| parse_num(t, 1))
        .collect::<Result<_>>()?;
    if vec.len() != d {
        return Err(bad());
    }
    match kind {
        "halfspace" => Ok(Container::Halfspace {
            normal: Vector::from_vec(vec),
            offset: scalar,
        }),
        "ball" => Container::ball(Vector::from_vec(vec), scalar),
        _ => Err(bad()),
    }
}

pub fn read_boundary(text: &str) -> Result<BoundaryVarifold> {
    let mut lines = text.lines();
    let fields = header_fields(lines.next().unwrap_or(""), "boundary")?;
    let (m, d, k) = dims(&fields)?;
    let beta: f64 = parse_num(field(&fields, "beta")?, 1)?;
    let tol: f64 = parse_num(field(&fields, "tol")?, 1)?;
    let container = parse_container(field(&fields, "container")?, d)?;
    let mut atoms = Vec::with_capacity(k);
    for (i, l) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let a = parse_atom_line(l, i + 2, m, d)?;
        atoms.push(BoundaryAtom {
            x: a.x,
            plane: a.plane,
            sigma: a.weight,
        });
    }
    if atoms.len() != k {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header announces {k} atoms, found {}", atoms.len()),
        });
    }
    BoundaryVarifold::new(m, d, atoms, container, ContactAngleField::constant(beta)?, tol)
}

pub fn save(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{make_plane_pair, make_spherical_cap, FlatParams};

    #[test]
    fn varifold_round_trip_is_exact() {
        let f = make_spherical_cap(1.0, 2, 0.2).unwrap();
        let text = write_varifold(&f.v, Some(&f.curvature)).unwrap();
        let (v, b) = read_varifold(&text).unwrap();
        assert_eq!(v, f.v);
        assert_eq!(b.unwrap(), f.curvature);
        assert_eq!(write_varifold(&v, None).unwrap(), write_varifold(&f.v, None).unwrap());
    }

    #[test]
    fn boundary_round_trip_is_exact() {
        let f = make_plane_pair(FlatParams::new(1.0, 2, 2).with_h(0.5)).unwrap();
        let text = write_boundary(&f.gamma).unwrap();
        let g = read_boundary(&text).unwrap();
        assert_eq!(g.atoms(), f.gamma.atoms());
        assert_eq!(write_boundary(&g).unwrap(), text);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(read_varifold("nonsense"), Err(Error::Parse { .. })));
        let bad = "varifold m=1 n1=2 atoms=1\n0 0 | 1 0 0 0\n";
        assert!(matches!(read_varifold(bad), Err(Error::Parse { line: 2, .. })));
        let count = "varifold m=1 n1=2 atoms=2\n0 0 | 1 0 0 0 | 1\n";
        assert!(matches!(read_varifold(count), Err(Error::Parse { line: 1, .. })));
    }
}
