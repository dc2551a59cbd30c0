//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::f64::consts::{FRAC_PI_3, PI};
use std::path::Path;
use std::time::Instant;

use capvar::analysis::{
    barrier_angle_check, barrier_normal, fit_tangent_cone, half_plane_model, ConeClass, ConeFitParams,
};
use capvar::capillary::{co_normals, disintegrate};
use capvar::curvature::{curvature_identity_residual, mass_comparability, plane_field_battery};
use capvar::fixtures::{
    make_distinct_pair, make_half_plane_cone, make_perturbed_pair, make_plane_pair, make_spherical_cap, ExampleFixture,
    FlatParams,
};
use capvar::varifold::{capillary_residual, tangential_battery};
use capvar::Vector;
use capvar_cli::fixtures::{build, NAMES};
use capvar_cli::RunConfig;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn flat() -> FlatParams {
    FlatParams::new(FRAC_PI_3, 2, 2)
}

/// Runs the CLI into `dir` and returns the exit code and the parsed report.
fn cli_in(dir: &Path, args: &[&str]) -> (i32, Value) {
    let mut argv = vec!["capvar".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".into());
    argv.push(dir.to_string_lossy().into_owned());
    let code = capvar_cli::run(argv);
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap_or_default();
    (code, serde_json::from_str(&text).unwrap_or(Value::Null))
}

fn cli(args: &[&str]) -> (i32, Value) {
    let dir = tempfile::tempdir().expect("tempdir");
    cli_in(dir.path(), args)
}

fn check<'a>(report: &'a Value, name: &str) -> Result<&'a Value, String> {
    report["checks"]
        .as_array()
        .and_then(|cs| cs.iter().find(|c| c["check"] == name))
        .ok_or_else(|| format!("report has no check '{name}'"))
}

fn value(report: &Value, name: &str) -> Result<f64, String> {
    check(report, name)?["value"]
        .as_f64()
        .ok_or_else(|| format!("'{name}' has no numeric value"))
}

fn passed(report: &Value, name: &str) -> Result<bool, String> {
    Ok(check(report, name)?["pass"] == true)
}

fn capillary_identity_exact() -> Outcome {
    let start = Instant::now();
    let f = make_plane_pair(flat()).map_err(|e| e.to_string())?;
    let bat = tangential_battery(f.gamma.container(), 3, 20).map_err(|e| e.to_string())?;
    let r = capillary_residual(&f.v, &f.gamma, &f.dec.h, &bat).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        bat.len() == 20 && r.max_relative <= 1e-10 && secs < 1.0,
        format!(
            "relative residual {:.2e} over {} fields in {secs:.2} s",
            r.max_relative,
            bat.len()
        ),
    )
}

fn cap_residual(h: f64) -> Result<f64, String> {
    let f = make_spherical_cap(FRAC_PI_3, 2, h).map_err(|e| e.to_string())?;
    let bat = tangential_battery(f.gamma.container(), 3, 20).map_err(|e| e.to_string())?;
    Ok(capillary_residual(&f.v, &f.gamma, &f.dec.h, &bat)
        .map_err(|e| e.to_string())?
        .max_absolute)
}

fn capillary_identity_curved() -> Outcome {
    let start = Instant::now();
    let coarse = cap_residual(0.02)?;
    let fine = cap_residual(0.01)?;
    let secs = start.elapsed().as_secs_f64();
    let ratio = coarse / fine;
    ensure(
        ratio >= 1.8 && coarse <= 0.05 && secs < 30.0,
        format!("absolute residual {coarse:.3e} at h=0.02, {fine:.3e} at h=0.01, ratio {ratio:.2}, {secs:.1} s"),
    )
}

fn site_normals(f: &ExampleFixture) -> Result<Vec<capvar::capillary::SiteCoNormal>, String> {
    let d = disintegrate(&f.gamma, f.grouping_tol).map_err(|e| e.to_string())?;
    co_normals(&d, f.gamma.beta(), f.gamma.container()).map_err(|e| e.to_string())
}

fn degenerate_capillarity() -> Outcome {
    let pair = site_normals(&make_plane_pair(flat()).map_err(|e| e.to_string())?)?;
    let worst = pair.iter().map(|s| s.cos_beta_n_w().norm()).fold(0.0, f64::max);
    let all_zero = !pair.is_empty() && pair.iter().all(|s| s.n_w_zero);
    let pert = site_normals(&make_perturbed_pair(flat(), 0.1).map_err(|e| e.to_string())?)?;
    let dev = pert.iter().map(|s| (s.n_w().norm() - 0.1).abs()).fold(0.0, f64::max);
    ensure(
        all_zero && worst <= 1e-10 && !pert.is_empty() && dev <= 1e-10,
        format!(
            "{} pair sites with n_W = 0 (max |T n_V| {worst:.1e}); perturbed |n_W| - 0.1 within {dev:.1e}",
            pair.len()
        ),
    )
}

fn disintegration_fibers() -> Outcome {
    let f = make_distinct_pair(flat()).map_err(|e| e.to_string())?;
    let d = disintegrate(&f.gamma, f.grouping_tol).map_err(|e| e.to_string())?;
    let mut crossing = 0;
    let mut bad = Vec::new();
    for s in &d.sites {
        if s.x.norm() <= 1e-12 {
            crossing += 1;
            let ok = s.fibers.len() == 2
                && s.fibers.iter().all(|fb| (fb.probability - 0.5).abs() <= 1e-12)
                && !s.fibers[0].plane.approx_eq(&s.fibers[1].plane);
            if !ok {
                bad.push("crossing site");
            }
        } else if !(s.fibers.len() == 1 && (s.fibers[0].probability - 1.0).abs() <= 1e-12) {
            bad.push("off-crossing site");
        }
    }
    ensure(
        crossing == 1 && bad.is_empty(),
        format!(
            "{} sites, {crossing} crossing site, {} malformed",
            d.sites.len(),
            bad.len()
        ),
    )
}

fn monotonicity() -> Outcome {
    let (_, cap) = cli(&["monotone", "--fixture", "spherical-cap"]);
    let drop = value(&cap, "boundary_monotone_drop")?;
    let slack = check(&cap, "boundary_monotone_drop")?["threshold"]
        .as_f64()
        .unwrap_or(f64::NAN);
    let (_, cone) = cli(&["monotone", "--fixture", "half-plane-cone"]);
    let cone_drop = value(&cone, "boundary_monotone_drop")?;
    let cone_slack = check(&cone, "boundary_monotone_drop")?["threshold"]
        .as_f64()
        .unwrap_or(f64::NAN);
    ensure(
        drop <= slack && (slack - 5.0 * 0.02).abs() <= 1e-12 && cone_drop <= 0.0 && cone_slack == 0.0,
        format!("cap drop {drop:.2e} <= {slack}; cone drop {cone_drop:.1e} with slack 0"),
    )
}

fn blowup_report() -> &'static Value {
    static REPORT: std::sync::OnceLock<Value> = std::sync::OnceLock::new();
    REPORT.get_or_init(|| cli(&["blowup", "--fixture", "graded-cap", "--levels", "6"]).1)
}

fn blowup_and_cone() -> Outcome {
    let r = blowup_report();
    let factor = value(r, "contraction_factor_min")?;
    let density = value(r, "vertex_density_offset")?;
    let alpha = value(r, "alpha_error")?;
    ensure(
        factor >= 1.7 && density <= 0.05 && alpha <= 0.05 && passed(r, "half_plane")?,
        format!("min contraction {factor:.2}, |density - 0.5| {density:.1e}, |alpha - beta| {alpha:.1e} rad"),
    )
}

fn boundary_orthogonality() -> Outcome {
    let c = value(blowup_report(), "orthogonality_constant_max")?;
    ensure(c.is_finite() && c <= 10.0, format!("max |<x, n_W>| / r = {c:.3}"))
}

fn compactness() -> Outcome {
    let (_, sep) = cli(&[
        "compactness",
        "--fixture",
        "separated-pair",
        "--s-grid",
        "1,0.5,0.25,0.125",
    ]);
    let ratio = value(&sep, "integral_ratio")?;
    let margin = value(&sep, "c1_margin_min")?;
    let (_, one) = cli(&["compactness", "--fixture", "one-sided", "--s-grid", "1,0.5,0.25,0.125"]);
    let control = value(&one, "integral_ratio")?;
    ensure(
        ratio <= 0.1 && margin >= 0.5 - 1e-10 && control >= 0.9,
        format!("limit/first {ratio:.2e}, min margin {margin:.6}, one-sided ratio {control:.3}"),
    )
}

fn cfg() -> RunConfig {
    RunConfig::default()
}

fn identity_residual(f: &ExampleFixture) -> Result<f64, String> {
    let bat = plane_field_battery(f.v.ambient(), 20);
    Ok(curvature_identity_residual(&f.v, &f.curvature, &f.gamma, &bat)
        .map_err(|e| e.to_string())?
        .max_relative)
}

fn curvature_identity() -> Outcome {
    let c = cfg();
    let mut flat_worst = 0.0f64;
    let mut relations = 0.0f64;
    for name in [
        "plane-pair",
        "separated-pair",
        "one-sided",
        "perturbed-pair",
        "distinct-pair",
    ] {
        let f = build(name, &c, c.beta, 0.05).map_err(|e| e.to_string())?;
        flat_worst = flat_worst.max(identity_residual(&f)?);
        relations = relations.max(f.curvature.relation_defects(&f.v).map_err(|e| e.to_string())?.max());
    }
    let coarse = make_spherical_cap(FRAC_PI_3, 2, 0.04).map_err(|e| e.to_string())?;
    let fine = make_spherical_cap(FRAC_PI_3, 2, 0.02).map_err(|e| e.to_string())?;
    for f in [&coarse, &fine] {
        relations = relations.max(f.curvature.relation_defects(&f.v).map_err(|e| e.to_string())?.max());
    }
    let (rc, rf) = (identity_residual(&coarse)?, identity_residual(&fine)?);
    ensure(
        flat_worst <= 1e-10 && rc / rf >= 1.8 && relations <= 1e-9,
        format!(
            "flat {flat_worst:.1e}; cap {rc:.2e} -> {rf:.2e} (ratio {:.2}); relations {relations:.1e}",
            rc / rf
        ),
    )
}

fn comparability(f: &ExampleFixture, p: f64) -> Result<(f64, f64), String> {
    let mc = mass_comparability(&f.v, &f.curvature, &f.gamma, p).map_err(|e| e.to_string())?;
    Ok((mc.c1, mc.c2))
}

fn mass_comparability_gallery() -> Outcome {
    let c = cfg();
    let rel = |a: f64, b: f64| {
        if a == 0.0 && b == 0.0 {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    };
    let mut worst = 0.0f64;
    let mut infinite = Vec::new();
    for &name in NAMES {
        let h = capvar_cli::fixtures::mesh(name, &c);
        let f = build(name, &c, c.beta, h).map_err(|e| e.to_string())?;
        let refined = if name == "half-plane-cone" {
            None
        } else {
            Some(build(name, &c, c.beta, h / 2.0).map_err(|e| e.to_string())?)
        };
        for p in [1.0, 2.0] {
            let (c1, c2) = comparability(&f, p)?;
            if !(c1.is_finite() && c2.is_finite()) {
                infinite.push(format!("{name} p={p}"));
            }
            if let Some(g) = &refined {
                let (d1, d2) = comparability(g, p)?;
                worst = worst.max(rel(c1, d1)).max(rel(c2, d2));
            }
        }
    }
    ensure(
        infinite.is_empty() && worst < 0.01,
        format!(
            "{} fixtures, largest change under refinement {:.2e}; non-finite: {infinite:?}",
            NAMES.len(),
            worst
        ),
    )
}

fn barrier_angle() -> Outcome {
    let params = ConeFitParams {
        rho_grid: vec![0.25, 0.5, 1.0],
        ..ConeFitParams::default()
    };
    let mut cases = 0;
    let mut failures = Vec::new();
    for beta in [
        PI / 6.0,
        PI / 4.0,
        FRAC_PI_3,
        5.0 * PI / 12.0,
        7.0 * PI / 12.0,
        2.0 * FRAC_PI_3,
        3.0 * PI / 4.0,
    ] {
        let cone = make_half_plane_cone(beta, 2, 2, 1.0 / 64.0, 8, 24).map_err(|e| e.to_string())?;
        let nu = cone.gamma.container().grad_sdf(&Vector::zeros(3));
        let fit = fit_tangent_cone(&cone.v, &nu, beta, &params).map_err(|e| e.to_string())?;
        if fit.class != ConeClass::HalfPlane {
            failures.push(format!("beta {beta:.3}: {:?}", fit.class));
            continue;
        }
        let model = half_plane_model(&fit, &nu, 1.0, 0.05).map_err(|e| e.to_string())?;
        for j in 0..5 {
            let theta = fit.alpha + j as f64 * (PI - fit.alpha) / 5.0;
            let nu_h = barrier_normal(&fit, &nu, theta).map_err(|e| e.to_string())?;
            let r = barrier_angle_check(&fit, &model, &nu_h, &nu, 1e-8, 1e-8).map_err(|e| e.to_string())?;
            cases += 1;
            if !r.pass || (j == 0 && !r.equality) {
                failures.push(format!("beta {beta:.3} theta {theta:.3}"));
            }
        }
    }
    ensure(
        failures.is_empty(),
        format!("{cases} contained half-planes, equality branch at theta = alpha; failures {failures:?}"),
    )
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 6] = [
        &["example"],
        &["verify"],
        &["monotone"],
        &["blowup"],
        &["compactness"],
        &["curvature"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        let mut bytes: Vec<Vec<u8>> = Vec::new();
        for threads in ["1", "2", "8"] {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let mut a = args.to_vec();
            a.extend(["--threads", threads]);
            cli_in(dir.path(), &a);
            bytes.push(std::fs::read(dir.path().join("report.json")).map_err(|e| e.to_string())?);
        }
        if bytes.iter().any(|b| b != &bytes[0]) {
            differing.push(args[0]);
        }
    }
    ensure(
        differing.is_empty(),
        format!("6 subcommands x threads 1, 2, 8; differing: {differing:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("capillary identity, exact fixture", capillary_identity_exact),
        ("capillary identity, curved fixture", capillary_identity_curved),
        ("degenerate capillary co-normals", degenerate_capillarity),
        ("disintegration fibers", disintegration_fibers),
        ("boundary monotonicity", monotonicity),
        ("blow-up and cone classification", blowup_and_cone),
        ("boundary orthogonality in the limit", boundary_orthogonality),
        ("compactness degeneracy", compactness),
        ("curvature identity", curvature_identity),
        ("mass comparability", mass_comparability_gallery),
        ("barrier angle", barrier_angle),
        ("determinism across thread counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
