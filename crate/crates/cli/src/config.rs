//! Run configuration: defaults, a flat `key=value` file, then overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use quatsphere::qgroup::GeneratorAssignment;
use quatsphere::relations::PresentationParams;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

const DEFAULTS: &[(&str, &str)] = &[
    ("n", "2"),
    ("q", "0.5"),
    ("d", "16"),
    ("band", "3"),
    ("k", "top"),
    ("residual_tol", "1e-9"),
    ("ess_tol", "0.05"),
    ("rank_tol", "1e-8"),
    ("t0_samples", "8"),
    ("ess_d", "48"),
    ("ess_grid", "0,2,4,6,8,10,12,14,16,18,20"),
    ("m", "-3,-2,-1,0,1,2,3"),
    ("ell", "1,2,3"),
    ("ladder", "8,12,16,24,32,40"),
    ("assignment", "default"),
    ("rho", "calibrated"),
    ("eps", "calibrated"),
    ("sphere_ell", "auto"),
    ("reverse", "true"),
    ("output", "-"),
    ("format", "json"),
    ("timing", "false"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Tsv,
}

/// How the generator assignment is obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum AssignmentChoice {
    Default,
    Search,
    Fixed(GeneratorAssignment),
}

/// How `ρ` and `ε` are obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamsChoice {
    Calibrated,
    Search,
    Fixed(PresentationParams),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub raw: BTreeMap<String, String>,
    pub n: usize,
    pub q: f64,
    pub d: usize,
    pub band: usize,
    /// `None`: the top algebra `k = 2n`.
    pub k: Option<Vec<usize>>,
    pub residual_tol: f64,
    pub ess_tol: f64,
    pub rank_tol: f64,
    pub t0_samples: usize,
    pub ess_d: usize,
    pub ess_grid: Vec<usize>,
    pub m: Vec<i64>,
    pub ell: Vec<usize>,
    pub ladder: Vec<usize>,
    pub assignment: AssignmentChoice,
    pub params: ParamsChoice,
    pub sphere_ell: Option<usize>,
    pub reverse: bool,
    pub output: String,
    pub format: Format,
    pub timing: bool,
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| ConfigError(format!("`{key}`: cannot parse `{s}`"))))
        .collect()
}

fn one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim().parse().map_err(|_| ConfigError(format!("`{key}`: cannot parse `{v}`")))
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!("line {}: expected key=value", no + 1));
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults, then the file at `path`, then `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
        let mut raw: BTreeMap<String, String> = DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        if let Some(p) = path {
            let text =
                std::fs::read_to_string(p).map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
            raw.extend(parse_kv(&text)?);
        }
        for (k, v) in overrides {
            raw.insert(k.clone(), v.clone());
        }
        RunConfig::from_raw(raw)
    }

    pub fn from_raw(raw: BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
        if let Some(k) = raw.keys().find(|k| !DEFAULTS.iter().any(|(d, _)| d == k)) {
            return err(format!("unknown key `{k}`"));
        }
        let g = |k: &str| raw[k].as_str();
        let n: usize = one("n", g("n"))?;
        if n == 0 {
            return err("`n` must be at least 1");
        }
        let q: f64 = one("q", g("q"))?;
        if !(0.0..1.0).contains(&q) {
            return err("`q` must lie in [0, 1)");
        }
        let d: usize = one("d", g("d"))?;
        let band: usize = one("band", g("band"))?;
        if d < band + 4 {
            return err("`d` must be at least band + 4");
        }
        let k = match g("k") {
            "top" => None,
            "all" => Some((1..=2 * n).collect()),
            v => {
                let ks: Vec<usize> = list("k", v)?;
                if ks.iter().any(|&k| k == 0 || k > 2 * n) {
                    return err(format!("`k` values must lie in 1..={}", 2 * n));
                }
                Some(ks)
            }
        };
        let tol = |key: &str| -> Result<f64, ConfigError> {
            let t: f64 = one(key, g(key))?;
            if t > 0.0 && t.is_finite() {
                Ok(t)
            } else {
                err(format!("`{key}` must be positive"))
            }
        };
        let assignment = match g("assignment") {
            "default" => AssignmentChoice::Default,
            "search" => AssignmentChoice::Search,
            v => AssignmentChoice::Fixed(v.parse().map_err(|e| ConfigError(format!("`assignment`: {e}")))?),
        };
        let params = match (g("rho"), g("eps")) {
            ("calibrated", "calibrated") => ParamsChoice::Calibrated,
            ("search", "search") => ParamsChoice::Search,
            (r, e) if r != "calibrated" && r != "search" && e != "calibrated" && e != "search" => {
                let p = PresentationParams::new(n, list("rho", r)?, list("eps", e)?)
                    .map_err(|e| ConfigError(format!("rho/eps: {e}")))?;
                ParamsChoice::Fixed(p)
            }
            _ => return err("`rho` and `eps` must both be explicit lists, both `calibrated` or both `search`"),
        };
        let sphere_ell = match g("sphere_ell") {
            "auto" => None,
            v => Some(one("sphere_ell", v)?),
        };
        let ladder: Vec<usize> = list("ladder", g("ladder"))?;
        let ess_d: usize = one("ess_d", g("ess_d"))?;
        let ess_grid: Vec<usize> = list("ess_grid", g("ess_grid"))?;
        if ess_grid.iter().any(|&m| m >= ess_d) {
            return err("`ess_grid` values must be below `ess_d`");
        }
        let format = match g("format") {
            "json" => Format::Json,
            "tsv" => Format::Tsv,
            v => return err(format!("`format` must be json or tsv, got `{v}`")),
        };
        Ok(RunConfig {
            n,
            q,
            d,
            band,
            k,
            residual_tol: tol("residual_tol")?,
            ess_tol: tol("ess_tol")?,
            rank_tol: tol("rank_tol")?,
            t0_samples: one("t0_samples", g("t0_samples"))?,
            ess_d,
            ess_grid,
            m: list("m", g("m"))?,
            ell: list("ell", g("ell"))?,
            ladder,
            assignment,
            params,
            sphere_ell,
            reverse: one("reverse", g("reverse"))?,
            output: g("output").to_string(),
            format,
            timing: one("timing", g("timing"))?,
            raw,
        })
    }

    /// Requested `k` values, defaulting to `2n`.
    pub fn ks(&self) -> Vec<usize> {
        self.k.clone().unwrap_or_else(|| vec![2 * self.n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(over: &[(&str, &str)]) -> Result<RunConfig, ConfigError> {
        let o: Vec<(String, String)> = over.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        RunConfig::load(None, &o)
    }

    #[test]
    fn defaults_are_valid() {
        let c = load(&[]).unwrap();
        assert_eq!((c.n, c.d, c.band), (2, 16, 3));
        assert_eq!(c.ks(), vec![4]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(load(&[("q", "1.0")]).is_err());
        assert!(load(&[("d", "5")]).is_err());
        assert!(load(&[("residual_tol", "0")]).is_err());
        assert!(load(&[("bogus", "1")]).is_err());
        assert!(load(&[("rho", "1,2,3,4")]).is_err());
        assert!(load(&[("format", "xml")]).is_err());
    }

    #[test]
    fn kv_parsing() {
        let m = parse_kv("# c\nn = 3\n\nq=0.2\n").unwrap();
        assert_eq!(m["n"], "3");
        assert!(parse_kv("oops").is_err());
    }
}
