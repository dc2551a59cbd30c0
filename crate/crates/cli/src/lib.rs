//! Command-line driver: builds a fixture, runs one family of checks and
//! writes `report.json` (plus CSV curves) to the output directory.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on a
//! configuration error.

pub mod commands;
pub mod config;
pub mod fixtures;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use capvar::report::Report;
use clap::{Args, Parser};

pub use commands::{execute, ConfigError, Outcome, Subcommand};
pub use config::{RunConfig, Tolerances};

#[derive(Parser, Debug)]
#[command(
    name = "capvar",
    version,
    about = "Checks for discrete varifolds with capillary boundary"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub subcommand: Subcommand,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Args, Debug, Default)]
pub struct Flags {
    /// TOML file with any of the options below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub fixture: Option<String>,
    /// Contact angle in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Mesh size.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Weight perturbation of `perturbed-pair`.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Separation of `separated-pair` and `one-sided`.
    #[arg(long)]
    pub s: Option<f64>,
    /// Comma-separated decreasing separations for `compactness`.
    #[arg(long, value_delimiter = ',')]
    pub s_grid: Option<Vec<f64>>,
    /// Exponent of the boundary monotone quantity.
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of test fields.
    #[arg(long)]
    pub battery: Option<usize>,
    /// Blow-up depth: radii 2^-1 .. 2^-levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Region radius of the blow-up distances.
    #[arg(long)]
    pub bl_region: Option<f64>,
    /// Cell grading of `graded-cap`.
    #[arg(long)]
    pub grade: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", value_parser = config::parse_tol)]
    pub tol: Vec<(String, f64)>,
}

impl Flags {
    fn overrides(&self) -> config::Overrides {
        let mut o = config::Overrides::default();
        if let Some(v) = &self.fixture {
            o.set("fixture", v.as_str());
        }
        for (k, v) in [
            ("beta", self.beta),
            ("h", self.h),
            ("eps", self.eps),
            ("s", self.s),
            ("p", self.p),
            ("bl_region", self.bl_region),
            ("grade", self.grade),
        ] {
            if let Some(v) = v {
                o.set(k, v);
            }
        }
        for (k, v) in [
            ("m", self.m),
            ("n", self.n),
            ("battery", self.battery),
            ("levels", self.levels),
            ("threads", self.threads),
        ] {
            if let Some(v) = v {
                o.set(k, v as i64);
            }
        }
        if let Some(g) = &self.s_grid {
            o.set(
                "s_grid",
                toml::Value::Array(g.iter().map(|x| toml::Value::Float(*x)).collect()),
            );
        }
        if let Some(p) = &self.out {
            o.set("out", p.to_string_lossy().as_ref());
        }
        o.tolerances = self.tol.clone();
        o
    }
}

fn write_outputs(dir: &Path, report: &Report, files: &[(String, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, text) in files {
        std::fs::write(dir.join(name), text)?;
    }
    std::fs::write(dir.join("report.json"), report.to_json())
}

/// Runs the checks of `sub` under `cfg` on a pool of `cfg.threads` workers.
pub fn run_config(sub: Subcommand, cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| ConfigError(e.to_string()))?;
    pool.install(|| execute(sub, cfg))
}

/// Parses `args` (program name first), runs, writes the outputs and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let sub = cli.subcommand;
    let overrides = cli.flags.overrides();
    let fallback_out = cli.flags.out.clone().unwrap_or_else(|| RunConfig::default().out);
    let cfg = match config::load(cli.flags.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(msg) => return config_failure(sub, &fallback_out, &msg),
    };
    match run_config(sub, &cfg) {
        Ok(outcome) => {
            if let Err(e) = write_outputs(&cfg.out, &outcome.report, &outcome.files) {
                eprintln!("capvar: cannot write to {}: {e}", cfg.out.display());
                return 2;
            }
            for c in outcome.report.checks.iter().filter(|c| !c.pass) {
                eprintln!("capvar: check {} failed: {} vs {}", c.check, c.value, c.threshold);
            }
            if outcome.report.pass {
                0
            } else {
                1
            }
        }
        Err(ConfigError(msg)) => config_failure(sub, &cfg.out, &msg),
    }
}

fn config_failure(sub: Subcommand, out: &Path, msg: &str) -> i32 {
    eprintln!("capvar: configuration error: {msg}");
    let mut report = Report::new(sub.name(), "");
    report.pass = false;
    report.note(format!("configuration error: {msg}"));
    let _ = write_outputs(out, &report, &[]);
    2
}
