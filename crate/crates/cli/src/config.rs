//! Run configuration: an optional TOML file overlaid with command-line flags.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_3;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

/// Thresholds of every check. Each has a default and can be overridden
/// from the `[tolerances]` table or with `--tol key=value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual bound for fixtures sampled exactly.
    pub residual_exact: f64,
    /// Relative residual bound for curved fixtures is this times `h^2`.
    pub residual_curved_factor: f64,
    pub bundle: f64,
    pub relation: f64,
    /// Allowed monotonicity defect is this times `h`.
    pub monotone_slack_factor: f64,
    pub contraction: f64,
    /// Consecutive blow-up distances at or below this count as converged.
    pub bl_floor: f64,
    pub orthogonality_constant: f64,
    pub density_window: f64,
    pub cone: f64,
    pub plane_agreement: f64,
    pub barrier_angle: f64,
    pub containment: f64,
    pub c1_margin: f64,
    pub degeneracy_ratio: f64,
    pub control_ratio: f64,
    pub mesh_change: f64,
    pub lsc: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual_exact: 1e-10,
            residual_curved_factor: 10.0,
            bundle: 1e-8,
            relation: 1e-9,
            monotone_slack_factor: 5.0,
            contraction: 1.7,
            bl_floor: 1e-6,
            orthogonality_constant: 10.0,
            density_window: 0.05,
            cone: 0.05,
            plane_agreement: 0.05,
            barrier_angle: 1e-8,
            containment: 1e-8,
            c1_margin: 1e-10,
            degeneracy_ratio: 0.1,
            control_ratio: 0.9,
            mesh_change: 0.01,
            lsc: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn as_map(&self) -> BTreeMap<String, f64> {
        serde_json::from_value(serde_json::to_value(self).expect("tolerances serialize")).expect("flat map")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fixture: Option<String>,
    pub beta: f64,
    /// Mesh size; each fixture has its own default.
    pub h: Option<f64>,
    pub m: usize,
    pub n: usize,
    pub eps: f64,
    pub s: f64,
    pub s_grid: Vec<f64>,
    pub p: f64,
    pub battery: usize,
    pub levels: usize,
    pub bl_region: f64,
    pub grade: f64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            fixture: None,
            beta: FRAC_PI_3,
            h: None,
            m: 2,
            n: 2,
            eps: 0.1,
            s: 0.5,
            s_grid: vec![1.0, 0.5, 0.25, 0.125],
            p: 4.0,
            battery: 20,
            levels: 6,
            bl_region: 0.25,
            grade: 0.03,
            out: PathBuf::from("capvar-out"),
            threads: None,
            tolerances: Tolerances::default(),
        }
    }
}

/// Flag values that override the file, already converted to TOML values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub values: Vec<(String, Value)>,
    pub tolerances: Vec<(String, f64)>,
}

impl Overrides {
    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.values.push((key.to_string(), value.into()));
    }
}

pub fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad tolerance value '{v}'"))?;
    Ok((k.trim().to_string(), v))
}

/// Reads the optional file, applies the overrides and validates the result.
pub fn load(file: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, String> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            text.parse::<Table>().map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => Table::new(),
    };
    for (k, v) in &overrides.values {
        table.insert(k.clone(), v.clone());
    }
    if !overrides.tolerances.is_empty() {
        let tol = table.entry("tolerances").or_insert_with(|| Value::Table(Table::new()));
        let Value::Table(tol) = tol else {
            return Err("'tolerances' must be a table".into());
        };
        for (k, v) in &overrides.tolerances {
            tol.insert(k.clone(), Value::Float(*v));
        }
    }
    let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| e.to_string())?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    fn validate(&self) -> Result<(), String> {
        if self.m == 0 || self.m > self.n {
            return Err(format!("need 1 <= m <= n, got m={} n={}", self.m, self.n));
        }
        if self.battery == 0 || self.levels < 2 {
            return Err("battery must be positive and levels at least 2".into());
        }
        if let Some(0) = self.threads {
            return Err("threads must be positive".into());
        }
        let t = &self.tolerances;
        if t.as_map().values().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err("tolerances must be finite and non-negative".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "beta = 0.5\nh = 0.1\n[tolerances]\nbundle = 1e-6").unwrap();
        let mut o = Overrides::default();
        o.set("beta", 1.0);
        o.tolerances.push(("lsc".into(), 1e-3));
        let cfg = load(Some(f.path()), &o).unwrap();
        assert_eq!(cfg.beta, 1.0);
        assert_eq!(cfg.h, Some(0.1));
        assert_eq!(cfg.tolerances.bundle, 1e-6);
        assert_eq!(cfg.tolerances.lsc, 1e-3);
        assert_eq!(cfg.tolerances.cone, 0.05);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut o = Overrides::default();
        o.set("colour", 1.0);
        assert!(load(None, &o).is_err());
        let mut o = Overrides::default();
        o.tolerances.push(("nonsense".into(), 1.0));
        assert!(load(None, &o).unwrap_err().contains("nonsense"));
    }

    #[test]
    fn tolerance_flag_syntax() {
        assert_eq!(parse_tol("cone=0.1").unwrap(), ("cone".to_string(), 0.1));
        assert!(parse_tol("cone").is_err());
        assert!(parse_tol("cone=x").is_err());
    }
}
