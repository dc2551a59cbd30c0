//! The six subcommands.

use std::f64::consts::PI;
use std::fmt::Write as _;

use capvar::analysis::{
    barrier_angle_check, barrier_normal, blow_up, boundary_orthogonality, calibrate_lambda, compactness_experiment,
    density_curve, fit_tangent_cone, geometric_grid, half_plane_model, interior_monotonicity_check,
    smoothed_density_curve, CompactnessParams, ConeClass, ConeFitParams, DensityCurve, UnitWeight,
};
use capvar::capillary::{capillary_gap, co_normals, disintegrate};
use capvar::curvature::{curvature_identity_residual, lsc_check, mass_comparability, plane_field_battery};
use capvar::fixtures::{make_one_sided, make_separated_pair, ExampleFixture, FlatParams};
use capvar::io::{write_boundary, write_varifold};
use capvar::report::{Check, Provenance, Report};
use capvar::varifold::{capillary_residual, decomposition_residual, general_battery, tangential_battery};
use capvar::{Result, Vector};

use crate::config::RunConfig;
use crate::fixtures::{base_point, build, is_exact, mesh, CONE_LEVELS, CONE_R_MIN};

/// Radius of the region the tangent cone is fitted in.
const CONE_REGION: f64 = 2.0;
const CUTOFF_WIDTH: f64 = 0.1;
const CURVE_POINTS: usize = 30;
const BARRIER_STEPS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Example,
    Verify,
    Monotone,
    Blowup,
    Compactness,
    Curvature,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Example => "example",
            Subcommand::Verify => "verify",
            Subcommand::Monotone => "monotone",
            Subcommand::Blowup => "blowup",
            Subcommand::Compactness => "compactness",
            Subcommand::Curvature => "curvature",
        }
    }

    pub fn default_fixture(self) -> &'static str {
        match self {
            Subcommand::Example | Subcommand::Verify => "plane-pair",
            Subcommand::Monotone | Subcommand::Curvature => "spherical-cap",
            Subcommand::Blowup => "graded-cap",
            Subcommand::Compactness => "separated-pair",
        }
    }
}

/// A finished run: the report and the extra files to write next to it.
pub struct Outcome {
    pub report: Report,
    pub files: Vec<(String, String)>,
}

/// Errors that make the run meaningless rather than failed.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl From<capvar::Error> for ConfigError {
    fn from(e: capvar::Error) -> Self {
        ConfigError(e.to_string())
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    name: String,
    h: f64,
    exact: bool,
}

impl Ctx<'_> {
    fn residual_tol(&self) -> (f64, Provenance) {
        if self.exact {
            (self.cfg.tolerances.residual_exact, Provenance::Exact)
        } else {
            (
                self.cfg.tolerances.residual_curved_factor * self.h * self.h,
                Provenance::Calibrated,
            )
        }
    }

    fn build(&self, beta: f64, h: f64) -> Result<ExampleFixture> {
        build(&self.name, self.cfg, beta, h)
    }
}

/// Records a failed check and the reason when an analysis step errors.
fn attempt<T>(report: &mut Report, check: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            report.push(Check::flag(check, false, Provenance::Exact));
            report.note(format!("{check}: {e}"));
            None
        }
    }
}

pub fn execute(sub: Subcommand, cfg: &RunConfig) -> std::result::Result<Outcome, ConfigError> {
    let name = cfg.fixture.clone().unwrap_or_else(|| sub.default_fixture().to_string());
    crate::fixtures::check_name(&name).map_err(ConfigError)?;
    if name == "half-plane-cone" && matches!(sub, Subcommand::Verify | Subcommand::Curvature) {
        return Err(ConfigError(format!(
            "{} needs a fixture resolved along the rays; half-plane-cone is not",
            sub.name()
        )));
    }
    let ctx = Ctx {
        cfg,
        h: mesh(&name, cfg),
        exact: is_exact(&name),
        name,
    };
    let mut report = Report::new(sub.name(), &ctx.name);
    report.tolerances = cfg.tolerances.as_map();
    for (k, v) in [
        ("beta", cfg.beta),
        ("h", ctx.h),
        ("m", cfg.m as f64),
        ("n", cfg.n as f64),
    ] {
        report.parameters.insert(k.into(), v);
    }
    let mut files = Vec::new();
    match sub {
        Subcommand::Compactness => compactness(&ctx, &mut report, &mut files)?,
        _ => {
            let f = ctx.build(cfg.beta, ctx.h)?;
            report.parameters.insert("atoms".into(), f.v.len() as f64);
            report.parameters.insert("boundary_atoms".into(), f.gamma.len() as f64);
            for (k, v) in &f.expected.params {
                report.parameters.entry(k.clone()).or_insert(*v);
            }
            match sub {
                Subcommand::Example => example(&f, &mut report, &mut files)?,
                Subcommand::Verify => verify(&ctx, &f, &mut report),
                Subcommand::Monotone => monotone(&ctx, &f, &mut report, &mut files),
                Subcommand::Blowup => blowup(&ctx, &f, &mut report, &mut files),
                Subcommand::Curvature => curvature(&ctx, &f, &mut report),
                Subcommand::Compactness => unreachable!(),
            }
        }
    }
    Ok(Outcome { report, files })
}

fn example(
    f: &ExampleFixture,
    report: &mut Report,
    files: &mut Vec<(String, String)>,
) -> std::result::Result<(), ConfigError> {
    files.push(("varifold.txt".into(), write_varifold(&f.v, Some(&f.curvature))?));
    files.push(("boundary.txt".into(), write_boundary(&f.gamma)?));
    let mut expected = f.expected_json();
    expected.push('\n');
    files.push(("expected.json".into(), expected));
    let ok = f.verify_expected();
    if let Err(e) = &ok {
        report.note(e.to_string());
    }
    report.push(Check::flag("analytic_record", ok.is_ok(), Provenance::Analytic));
    Ok(())
}

fn verify(ctx: &Ctx, f: &ExampleFixture, report: &mut Report) {
    let d = f.v.ambient();
    let (tol, prov) = ctx.residual_tol();
    let container = f.gamma.container();
    if let Some(bat) = attempt(
        report,
        "tangential_battery",
        tangential_battery(container, d, ctx.cfg.battery),
    ) {
        if let Some(r) = attempt(
            report,
            "capillary_residual",
            capillary_residual(&f.v, &f.gamma, &f.dec.h, &bat),
        ) {
            report.push(Check::at_most("capillary_residual_relative", r.max_relative, tol, prov));
            report
                .parameters
                .insert("capillary_residual_absolute".into(), r.max_absolute);
        }
    }
    let bat = general_battery(container, d, ctx.cfg.battery);
    if let Some(r) = attempt(
        report,
        "decomposition_residual",
        decomposition_residual(&f.v, &f.dec, &f.gamma, &bat),
    ) {
        report.push(Check::at_most(
            "decomposition_residual_relative",
            r.max_relative,
            tol,
            prov,
        ));
        report
            .parameters
            .insert("decomposition_residual_absolute".into(), r.max_absolute);
    }
    let gaps: Result<Vec<(f64, f64)>> = f
        .gamma
        .atoms()
        .iter()
        .map(|a| capillary_gap(&a.x, &a.plane, f.gamma.beta(), container))
        .collect();
    if let Some(gaps) = attempt(report, "bundle_gaps", gaps) {
        let gi = gaps.iter().map(|g| g.0).fold(0.0, f64::max);
        let gii = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
        report.push(Check::at_most(
            "bundle_gap_i",
            gi,
            ctx.cfg.tolerances.bundle,
            Provenance::Exact,
        ));
        report.push(Check::at_most(
            "bundle_gap_ii",
            gii,
            ctx.cfg.tolerances.bundle,
            Provenance::Exact,
        ));
    }
}

fn curve_csv(c: &DensityCurve, transformed: &[f64]) -> String {
    let mut s = String::from("rho,mass,ratio,transformed\n");
    for i in 0..c.radii.len() {
        let _ = writeln!(s, "{},{},{},{}", c.radii[i], c.masses[i], c.ratios[i], transformed[i]);
    }
    s
}

/// The atom farthest from the boundary support among those within 1.5 of
/// `x0`, and that distance.
fn interior_point(f: &ExampleFixture, x0: &Vector) -> Option<(Vector, f64)> {
    let bpts: Vec<&Vector> = f.gamma.atoms().iter().map(|a| &a.x).collect();
    f.v.atoms()
        .iter()
        .filter(|a| (&a.x - x0).norm() <= 1.5)
        .map(|a| {
            let dist = bpts.iter().map(|b| (&a.x - *b).norm()).fold(f64::INFINITY, f64::min);
            (a.x.clone(), dist)
        })
        .fold(None, |best: Option<(Vector, f64)>, c| match best {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        })
}

fn monotone(ctx: &Ctx, f: &ExampleFixture, report: &mut Report, files: &mut Vec<(String, String)>) {
    let t = &ctx.cfg.tolerances;
    let x0 = base_point(&ctx.name, ctx.cfg);
    let slack = if ctx.exact {
        0.0
    } else {
        t.monotone_slack_factor * ctx.h
    };
    let prov = if ctx.exact {
        Provenance::Exact
    } else {
        Provenance::Calibrated
    };
    match interior_point(f, &x0) {
        _ if ctx.name == "half-plane-cone" => {
            report.note("interior_monotonicity: skipped, the cone is sampled on shells only")
        }
        Some((xi, dist)) if dist.is_finite() && dist > 0.0 => {
            let r2 = 0.9 * dist.min(1.0);
            let r1 = r2 / 10.0;
            report.parameters.insert("interior_r2".into(), r2);
            let tol = t.monotone_slack_factor * ctx.h;
            if let Some(m) = attempt(
                report,
                "interior_monotonicity",
                interior_monotonicity_check(&f.v, &f.dec.h, &xi, &UnitWeight, r1, r2, tol),
            ) {
                report.push(Check::at_least(
                    "interior_monotonicity_slack",
                    m.slack,
                    -tol,
                    Provenance::Calibrated,
                ));
            }
        }
        _ => report.note("interior_monotonicity: no interior point away from the boundary"),
    }
    let curve = if ctx.name == "half-plane-cone" {
        let radii: Vec<f64> = (0..=CONE_LEVELS)
            .map(|k| CONE_R_MIN * 2f64.powi(k as i32))
            .filter(|r| (0.05..=1.0).contains(r))
            .map(|r| r * (1.0 + 1e-9))
            .collect();
        density_curve(&f.v, &x0, &radii)
    } else {
        smoothed_density_curve(&f.v, &x0, &geometric_grid(0.05, 1.0, CURVE_POINTS), CUTOFF_WIDTH)
    };
    let Some(curve) = attempt(report, "density_curve", curve) else {
        return;
    };
    report.parameters.insert("p".into(), ctx.cfg.p);
    if let Some(cal) = attempt(report, "lambda_calibration", calibrate_lambda(&curve, ctx.cfg.p, slack)) {
        report.parameters.insert("lambda".into(), cal.lambda);
        report.push(Check::at_most("boundary_monotone_drop", cal.max_drop, slack, prov));
        files.push(("boundary_curve.csv".into(), curve_csv(&curve, &cal.values)));
    }
}

fn nearest_n_w(f: &ExampleFixture, x0: &Vector) -> Result<Vector> {
    let g = &f.gamma;
    let local = g.restricted(|a| (&a.x - x0).norm() <= 0.25);
    if local.is_empty() {
        return Ok(Vector::zeros(g.ambient()));
    }
    let sites = co_normals(&disintegrate(&local, f.grouping_tol)?, g.beta(), g.container())?;
    let best = sites
        .iter()
        .min_by(|a, b| {
            let da = (Vector::from_column_slice(&a.x) - x0).norm();
            let db = (Vector::from_column_slice(&b.x) - x0).norm();
            da.total_cmp(&db)
        })
        .expect("non-empty");
    Ok(best.n_w())
}

fn blowup(ctx: &Ctx, f: &ExampleFixture, report: &mut Report, files: &mut Vec<(String, String)>) {
    let t = &ctx.cfg.tolerances;
    let x0 = base_point(&ctx.name, ctx.cfg);
    let radii: Vec<f64> = (1..=ctx.cfg.levels).map(|k| 2f64.powi(-(k as i32))).collect();
    report.parameters.insert("bl_region".into(), ctx.cfg.bl_region);
    let Some(seq) = attempt(
        report,
        "blow_up",
        blow_up(&f.v, &f.gamma, &x0, &radii, ctx.cfg.bl_region),
    ) else {
        return;
    };
    let factors: Vec<f64> = seq
        .consecutive
        .windows(2)
        .map(|w| if w[1] <= t.bl_floor { f64::INFINITY } else { w[0] / w[1] })
        .collect();
    let min_factor = factors.iter().copied().fold(f64::INFINITY, f64::min);
    report.push(Check::at_least(
        "contraction_factor_min",
        min_factor,
        t.contraction,
        Provenance::Calibrated,
    ));
    let Some(n_w) = attempt(report, "n_w_at_base_point", nearest_n_w(f, &x0)) else {
        return;
    };
    let orth: Vec<f64> = seq
        .terms
        .iter()
        .map(|(_, g)| boundary_orthogonality(g, &n_w, CONE_REGION))
        .collect();
    let consts: Vec<f64> = orth.iter().zip(&radii).map(|(o, r)| o / r).collect();
    let cmax = consts.iter().copied().fold(0.0, f64::max);
    report.push(Check::at_most(
        "orthogonality_constant_max",
        cmax,
        t.orthogonality_constant,
        Provenance::Configured,
    ));
    let mut csv = String::from("r,bl_to_next,orthogonality,constant\n");
    for i in 0..radii.len() {
        let next = seq.consecutive.get(i).map_or(String::new(), |d| d.to_string());
        let _ = writeln!(csv, "{},{},{},{}", radii[i], next, orth[i], consts[i]);
    }
    files.push(("blowup.csv".into(), csv));

    let (limit, lg) = seq.terms.last().expect("at least two radii");
    let nu = lg.container().grad_sdf(&Vector::zeros(lg.ambient()));
    let Some(beta_x0) = attempt(report, "contact_angle", f.gamma.beta().beta(&x0)) else {
        return;
    };
    let params = ConeFitParams {
        region_radius: CONE_REGION,
        rho_grid: [0.25, 0.5, 1.0].iter().map(|r| r * (1.0 + 1e-9)).collect(),
        density_window: t.density_window,
        tol: t.cone,
        plane_tol: t.plane_agreement,
    };
    let Some(fit) = attempt(report, "cone_fit", fit_tangent_cone(limit, &nu, beta_x0, &params)) else {
        return;
    };
    report.parameters.insert("alpha".into(), fit.alpha);
    report.parameters.insert("expected_alpha".into(), fit.expected_alpha);
    report.push(Check::at_most(
        "vertex_density_offset",
        (fit.vertex_density - 0.5).abs(),
        t.density_window,
        Provenance::Analytic,
    ));
    report.push(Check::at_most(
        "alpha_error",
        (fit.alpha - fit.expected_alpha).abs(),
        t.cone,
        Provenance::Analytic,
    ));
    report.push(Check::at_most(
        "fit_residual",
        fit.residual,
        t.cone,
        Provenance::Configured,
    ));
    report.push(Check::at_most(
        "plane_spread",
        fit.plane_spread,
        t.plane_agreement,
        Provenance::Configured,
    ));
    report.push(Check::flag(
        "half_plane",
        fit.class == ConeClass::HalfPlane,
        Provenance::Analytic,
    ));
    if fit.class != ConeClass::HalfPlane {
        return;
    }
    let Some(model) = attempt(report, "cone_model", half_plane_model(&fit, &nu, 1.0, 0.05)) else {
        return;
    };
    let mut sweep = true;
    let mut equality = false;
    for j in 0..BARRIER_STEPS {
        let theta = fit.alpha + j as f64 * (PI - fit.alpha) / BARRIER_STEPS as f64;
        let r = barrier_normal(&fit, &nu, theta)
            .and_then(|nu_h| barrier_angle_check(&fit, &model, &nu_h, &nu, t.barrier_angle, t.containment));
        let Some(r) = attempt(report, "barrier", r) else { return };
        sweep &= r.pass;
        if j == 0 {
            equality = r.equality && r.pass;
        }
    }
    report.push(Check::flag("barrier_sweep", sweep, Provenance::Analytic));
    report.push(Check::flag("barrier_equality_branch", equality, Provenance::Analytic));
}

fn compactness(
    ctx: &Ctx,
    report: &mut Report,
    files: &mut Vec<(String, String)>,
) -> std::result::Result<(), ConfigError> {
    let cfg = ctx.cfg;
    let t = &cfg.tolerances;
    let p = FlatParams::new(cfg.beta, cfg.m, cfg.n).with_h(ctx.h);
    let separated = match ctx.name.as_str() {
        "separated-pair" => true,
        "one-sided" => false,
        other => {
            return Err(ConfigError(format!(
                "compactness needs separated-pair or one-sided, got '{other}'"
            )))
        }
    };
    make_separated_pair(p, 0.0)?;
    let family = move |s: f64| {
        if separated {
            make_separated_pair(p, s)
        } else {
            make_one_sided(p, s)
        }
    };
    let params = CompactnessParams::new(Vector::zeros(cfg.n + 1), 2.0 * ctx.h);
    report.parameters.insert("rho".into(), params.rho);
    report.parameters.insert("linkage_tol".into(), params.linkage_tol);
    let Some(r) = attempt(
        report,
        "compactness",
        compactness_experiment(&family, &cfg.s_grid, &params),
    ) else {
        return Ok(());
    };
    report.push(Check::flag("bl_converges", r.converges, Provenance::Analytic));
    report.push(Check::flag(
        "lower_bound_propagates",
        r.lower_bound_propagates,
        Provenance::Analytic,
    ));
    let c1 = r
        .members
        .iter()
        .map(|m| m.c1_margin.unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    report.push(Check::at_least(
        "c1_margin_min",
        c1,
        cfg.beta.cos().abs() - t.c1_margin,
        Provenance::Analytic,
    ));
    report.parameters.insert("limit_integral".into(), r.limit.integral);
    if separated {
        report.push(Check::at_most(
            "integral_ratio",
            r.integral_ratio,
            t.degeneracy_ratio,
            Provenance::Analytic,
        ));
        if r.integral_ratio <= t.degeneracy_ratio {
            report.note("boundary integral vanishes in the limit: n_V cancels across the two sheets");
        }
    } else {
        report.push(Check::at_least(
            "integral_ratio",
            r.integral_ratio,
            t.control_ratio,
            Provenance::Analytic,
        ));
    }
    let mut csv = String::from("s,bl_to_limit,sigma_half_ball,integral,c1_margin\n");
    for m in r.members.iter().chain(std::iter::once(&r.limit)) {
        let c1 = m.c1_margin.map_or(String::new(), |c| c.to_string());
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            m.s, m.bl_to_limit, m.sigma_half_ball, m.integral, c1
        );
    }
    files.push(("compactness.csv".into(), csv));
    Ok(())
}

fn curvature(ctx: &Ctx, f: &ExampleFixture, report: &mut Report) {
    let t = &ctx.cfg.tolerances;
    let (tol, prov) = ctx.residual_tol();
    let bat = plane_field_battery(f.v.ambient(), ctx.cfg.battery);
    if let Some(r) = attempt(
        report,
        "curvature_identity",
        curvature_identity_residual(&f.v, &f.curvature, &f.gamma, &bat),
    ) {
        report.push(Check::at_most("curvature_identity_relative", r.max_relative, tol, prov));
        report
            .parameters
            .insert("curvature_identity_absolute".into(), r.max_absolute);
    }
    if let Some(d) = attempt(report, "relations", f.curvature.relation_defects(&f.v)) {
        report.push(Check::at_most(
            "relation_defect_max",
            d.max(),
            t.relation,
            Provenance::Exact,
        ));
    }
    let refined = if ctx.name == "half-plane-cone" {
        None
    } else {
        attempt(report, "refined_fixture", ctx.build(ctx.cfg.beta, ctx.h / 2.0))
    };
    for p in [1.0, 2.0] {
        let Some(mc) = attempt(
            report,
            "mass_comparability",
            mass_comparability(&f.v, &f.curvature, &f.gamma, p),
        ) else {
            continue;
        };
        let finite = mc.c1.is_finite() && mc.c2.is_finite();
        report.push(Check::flag(
            format!("comparability_finite_p{p}"),
            finite,
            Provenance::Exact,
        ));
        report.parameters.insert(format!("c1_p{p}"), mc.c1);
        report.parameters.insert(format!("c2_p{p}"), mc.c2);
        if let Some(g) = &refined {
            if let Some(m2) = attempt(
                report,
                "mass_comparability_refined",
                mass_comparability(&g.v, &g.curvature, &g.gamma, p),
            ) {
                let rel = |a: f64, b: f64| {
                    if a == 0.0 && b == 0.0 {
                        0.0
                    } else {
                        (a - b).abs() / a.abs().max(b.abs())
                    }
                };
                let change = rel(mc.c1, m2.c1).max(rel(mc.c2, m2.c2));
                report.push(Check::at_most(
                    format!("comparability_mesh_change_p{p}"),
                    change,
                    t.mesh_change,
                    Provenance::Calibrated,
                ));
            }
        }
    }
    let family: Result<Vec<_>> = (1..=4)
        .map(|k| {
            ctx.build(ctx.cfg.beta + 0.2 * 0.5f64.powi(k), ctx.h)
                .map(|g| (g.v, g.curvature))
        })
        .collect();
    if let Some(family) = attempt(report, "lsc_family", family) {
        let limit = (f.v.clone(), f.curvature.clone());
        if let Some(l) = attempt(report, "lsc", lsc_check(&family, &limit, 2.0, t.lsc)) {
            report.push(Check::at_least("lsc_margin", l.margin, 0.0, Provenance::Analytic));
        }
    }
}
