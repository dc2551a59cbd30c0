//! Fixtures by name.

use capvar::fixtures::{
    make_cap_union, make_distinct_pair, make_graded_cap, make_half_plane_cone, make_one_sided, make_perturbed_pair,
    make_plane_pair, make_separated_pair, make_spherical_cap, ExampleFixture, FlatParams,
};
use capvar::{Error, Result, Vector};

use crate::config::RunConfig;

pub const NAMES: &[&str] = &[
    "plane-pair",
    "separated-pair",
    "one-sided",
    "perturbed-pair",
    "distinct-pair",
    "half-plane-cone",
    "spherical-cap",
    "graded-cap",
    "cap-union",
];

/// Innermost shell radius and shell count of the cone fixture.
pub const CONE_R_MIN: f64 = 1.0 / 65536.0;
pub const CONE_LEVELS: usize = 18;
const CONE_ANGULAR: usize = 24;
const GRADED_MIN_SIZE: f64 = 1e-4;
const UNION_OFFSET: f64 = 1.5;

pub fn check_name(name: &str) -> std::result::Result<(), String> {
    if NAMES.contains(&name) {
        Ok(())
    } else {
        Err(format!(
            "unknown fixture '{name}'; expected one of {}",
            NAMES.join(", ")
        ))
    }
}

/// Flat fixtures and the cone are sampled exactly; the caps are not.
pub fn is_exact(name: &str) -> bool {
    !matches!(name, "spherical-cap" | "graded-cap" | "cap-union")
}

pub fn default_h(name: &str) -> f64 {
    match name {
        "spherical-cap" => 0.02,
        "cap-union" => 0.04,
        "half-plane-cone" => CONE_R_MIN,
        _ => 0.05,
    }
}

pub fn mesh(name: &str, cfg: &RunConfig) -> f64 {
    if name == "half-plane-cone" {
        CONE_R_MIN
    } else {
        cfg.h.unwrap_or_else(|| default_h(name))
    }
}

fn flat(cfg: &RunConfig, beta: f64, h: f64) -> FlatParams {
    FlatParams::new(beta, cfg.m, cfg.n).with_h(h)
}

fn axis(d: usize, i: usize, s: f64) -> Vector {
    let mut v = Vector::zeros(d);
    v[i] = s;
    v
}

fn hypersurface(cfg: &RunConfig, name: &str) -> Result<()> {
    if cfg.m != cfg.n {
        return Err(Error::UnsupportedDimension(format!("{name} needs m = n")));
    }
    Ok(())
}

/// Builds `name` at angle `beta` and mesh size `h`.
pub fn build(name: &str, cfg: &RunConfig, beta: f64, h: f64) -> Result<ExampleFixture> {
    let d = cfg.n + 1;
    match name {
        "plane-pair" => make_plane_pair(flat(cfg, beta, h)),
        "separated-pair" => make_separated_pair(flat(cfg, beta, h), cfg.s),
        "one-sided" => make_one_sided(flat(cfg, beta, h), cfg.s),
        "perturbed-pair" => make_perturbed_pair(flat(cfg, beta, h), cfg.eps),
        "distinct-pair" => make_distinct_pair(flat(cfg, beta, h)),
        "half-plane-cone" => make_half_plane_cone(beta, cfg.m, cfg.n, CONE_R_MIN, CONE_LEVELS, CONE_ANGULAR),
        "spherical-cap" => {
            hypersurface(cfg, name)?;
            make_spherical_cap(beta, cfg.n, h)
        }
        "graded-cap" => {
            if cfg.m != 2 || cfg.n != 2 {
                return Err(Error::UnsupportedDimension("graded-cap needs m = n = 2".into()));
            }
            make_graded_cap(beta, cfg.grade, GRADED_MIN_SIZE, h)
        }
        "cap-union" => {
            hypersurface(cfg, name)?;
            make_cap_union(beta, axis(d, 0, -UNION_OFFSET), axis(d, 0, UNION_OFFSET), h)
        }
        _ => Err(Error::InvalidParameter(format!("unknown fixture '{name}'"))),
    }
}

/// The boundary point the local checks are centred at.
pub fn base_point(name: &str, cfg: &RunConfig) -> Vector {
    let d = cfg.n + 1;
    let s = cfg.beta.sin();
    match name {
        "spherical-cap" | "graded-cap" => axis(d, 0, s),
        "cap-union" => axis(d, 0, s - UNION_OFFSET),
        _ => Vector::zeros(d),
    }
}
