//! Run configuration: `key = value` text plus flag overrides.
//!
//! Lines are `key = value`; blank lines and `#` comments are ignored. Lists
//! (`ks`, `snapshots`) are comma separated. Every key can also be given as a
//! command-line flag, and flags win over the file.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::spaces::SpacePair;
use crate::stepper::{InitQ, InitU, Method, SchemeConfig};
use crate::verify::{manufactured_problem, CATALOG};

/// Environment variable consulted when `workers` is not set.
pub const WORKERS_ENV: &str = "HIDEMIX_WORKERS";

/// Every accepted key, in serialization order.
pub const KEYS: [&str; 20] = [
    "command",
    "problem",
    "method",
    "spaces",
    "cells",
    "levels",
    "k",
    "coupling",
    "ks",
    "final_time",
    "init_u",
    "init_q",
    "substeps",
    "snapshots",
    "integrand",
    "n",
    "output",
    "workers",
    "seed",
    "timing",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Convergence,
    Temporal,
    Project,
    Quadcheck,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Solve,
        Command::Convergence,
        Command::Temporal,
        Command::Project,
        Command::Quadcheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Convergence => "convergence",
            Command::Temporal => "temporal",
            Command::Project => "project",
            Command::Quadcheck => "quadcheck",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Test integrands for `quadcheck`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrand {
    /// `s²`, whose midpoint error is `−n k³ / 12`.
    Square,
    Sin,
    Exp,
}

impl Integrand {
    pub fn name(self) -> &'static str {
        match self {
            Integrand::Square => "s2",
            Integrand::Sin => "sin",
            Integrand::Exp => "exp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "s2" | "s^2" => Some(Integrand::Square),
            "sin" => Some(Integrand::Sin),
            "exp" => Some(Integrand::Exp),
            _ => None,
        }
    }

    pub fn eval(self, s: f64) -> f64 {
        match self {
            Integrand::Square => s * s,
            Integrand::Sin => s.sin(),
            Integrand::Exp => s.exp(),
        }
    }

    pub fn second_derivative(self, s: f64) -> f64 {
        match self {
            Integrand::Square => 2.0,
            Integrand::Sin => -s.sin(),
            Integrand::Exp => s.exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub problem: String,
    pub method: Method,
    pub spaces: SpacePair,
    /// Cells per side: the mesh for `solve`/`temporal`, the coarsest level
    /// for `convergence`/`project`. `None` picks the per-command default.
    pub cells: Option<usize>,
    pub levels: usize,
    /// Explicit time step; otherwise `k = coupling · h`.
    pub k: Option<f64>,
    pub coupling: f64,
    /// Time-step ladder of `temporal`.
    pub ks: Vec<f64>,
    pub final_time: f64,
    pub init_u: InitU,
    pub init_q: InitQ,
    pub substeps: usize,
    /// Snapshot times of `solve`; empty means the final time only.
    pub snapshots: Vec<f64>,
    pub integrand: Integrand,
    /// Number of midpoint panels for `quadcheck`.
    pub n: usize,
    /// Output file; standard output when absent.
    pub output: Option<PathBuf>,
    pub workers: usize,
    /// Seed for the randomized residual check of the problem.
    pub seed: u64,
    pub timing: bool,
}

impl RunConfig {
    /// Defaults for `command`.
    pub fn new(command: Command) -> Self {
        Self {
            command,
            problem: "wave_standing".into(),
            method: Method::Extended,
            spaces: SpacePair::Rt1Dg1,
            cells: None,
            levels: 4,
            k: None,
            coupling: 0.5,
            ks: vec![0.25, 0.125, 0.0625],
            final_time: 1.0,
            init_u: InitU::L2,
            init_q: InitQ::L2,
            substeps: 1,
            snapshots: Vec::new(),
            integrand: Integrand::Square,
            n: 10,
            output: None,
            workers: 1,
            seed: 0,
            timing: false,
        }
    }

    /// Reads `file` (if any), applies `overrides` on top, falls back to
    /// [`WORKERS_ENV`] for the worker count and validates.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut entries = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", p.display())))?;
                parse_entries(&text)?
            }
            None => Vec::new(),
        };
        entries.extend(overrides.iter().cloned());
        let env = std::env::var(WORKERS_ENV).ok();
        Self::from_entries(&entries, env.as_deref())
    }

    /// Builds a validated config from `(key, value)` pairs; later pairs win.
    pub fn from_entries(entries: &[(String, String)], env_workers: Option<&str>) -> Result<Self> {
        let command = entries
            .iter()
            .rev()
            .find(|(k, _)| k == "command")
            .map(|(_, v)| {
                Command::parse(v).ok_or_else(|| {
                    let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
                    Error::Config(format!("unknown command '{v}' (expected one of {})", names.join(", ")))
                })
            })
            .transpose()?
            .ok_or_else(|| Error::Config("no command given".into()))?;

        let mut cfg = Self::new(command);
        let mut workers_set = false;
        for (key, value) in entries {
            cfg.set(key, value)?;
            workers_set |= key == "workers";
        }
        if !workers_set {
            if let Some(w) = env_workers {
                cfg.workers = w
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got '{w}'")))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses text produced by [`RunConfig::to_config_string`] (or written
    /// by hand). The environment is not consulted.
    pub fn from_config_str(text: &str) -> Result<Self> {
        Self::from_entries(&parse_entries(text)?, None)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "command" => {} // resolved up front
            "problem" => self.problem = v.to_string(),
            "method" => self.method = parse_with(key, v, Method::parse, "extended, standard")?,
            "spaces" => self.spaces = parse_with(key, v, SpacePair::parse, "rt0, rt1")?,
            "cells" => self.cells = Some(parse_num(key, v)?),
            "levels" => self.levels = parse_num(key, v)?,
            "k" => self.k = Some(parse_num(key, v)?),
            "coupling" => self.coupling = parse_num(key, v)?,
            "ks" => self.ks = parse_list(key, v)?,
            "final_time" => self.final_time = parse_num(key, v)?,
            "init_u" => self.init_u = parse_with(key, v, InitU::parse, "l2, ritz")?,
            "init_q" => self.init_q = parse_with(key, v, InitQ::parse, "l2, fortin")?,
            "substeps" => self.substeps = parse_num(key, v)?,
            "snapshots" => self.snapshots = parse_list(key, v)?,
            "integrand" => self.integrand = parse_with(key, v, Integrand::parse, "s2, sin, exp")?,
            "n" => self.n = parse_num(key, v)?,
            "output" => self.output = (!v.is_empty()).then(|| PathBuf::from(v)),
            "workers" => self.workers = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "timing" => self.timing = parse_num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Cells per side actually used.
    pub fn cells(&self) -> usize {
        self.cells.unwrap_or(match self.command {
            Command::Solve => 8,
            Command::Temporal => 64,
            _ => 4,
        })
    }

    /// Time step on a mesh of width `width / cells`.
    pub fn time_step(&self, width: f64, cells: usize) -> f64 {
        self.k.unwrap_or(self.coupling * width / cells as f64)
    }

    fn scheme(&self, k: f64) -> SchemeConfig {
        let mut s = SchemeConfig::new(self.method, self.spaces, k, self.final_time);
        s.init_u = self.init_u;
        s.init_q = self.init_q;
        s.substeps = self.substeps;
        s
    }

    /// Scheme settings for a mesh with `cells` cells per side.
    pub fn scheme_config(&self, width: f64, cells: usize) -> SchemeConfig {
        let mut s = self.scheme(self.time_step(width, cells));
        s.snapshot_times = if self.snapshots.is_empty() {
            vec![self.final_time]
        } else {
            self.snapshots.clone()
        };
        s
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
        };
        let at_least = |name: &str, x: usize, min: usize| {
            if x >= min {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be at least {min}, got {x}")))
            }
        };
        if !CATALOG.contains(&self.problem.as_str()) {
            return Err(Error::Config(format!(
                "unknown problem '{}' (catalog: {})",
                self.problem,
                CATALOG.join(", ")
            )));
        }
        positive("final_time", self.final_time)?;
        positive("coupling", self.coupling)?;
        if let Some(k) = self.k {
            positive("k", k)?;
        }
        at_least("cells", self.cells(), 1)?;
        at_least("substeps", self.substeps, 1)?;
        at_least("workers", self.workers, 1)?;
        at_least("n", self.n, 1)?;
        for &t in &self.snapshots {
            if !(0.0..=self.final_time).contains(&t) {
                return Err(Error::Config(format!(
                    "snapshot time {t} outside [0, {}]",
                    self.final_time
                )));
            }
        }

        let width = manufactured_problem(&self.problem)
            .map(|p| p.rect.x1 - p.rect.x0)
            .map_err(|e| Error::Config(e.to_string()))?;
        match self.command {
            Command::Solve => {
                self.scheme(self.time_step(width, self.cells())).steps()?;
            }
            Command::Convergence | Command::Project => {
                let min = if self.command == Command::Convergence { 3 } else { 2 };
                at_least("levels", self.levels, min)?;
                if self.levels > 16 {
                    return Err(Error::Config(format!("levels must be at most 16, got {}", self.levels)));
                }
                for l in 0..self.levels {
                    self.scheme(self.time_step(width, self.cells() << l)).steps()?;
                }
            }
            Command::Temporal => {
                if self.ks.len() < 2 {
                    return Err(Error::Config(format!(
                        "ks needs at least 2 time steps, got {}",
                        self.ks.len()
                    )));
                }
                for &k in &self.ks {
                    positive("ks entry", k)?;
                    self.scheme(k).steps()?;
                }
            }
            Command::Quadcheck => {
                positive("k", self.k.unwrap_or(0.1))?;
            }
        }

        if let Some(out) = &self.output {
            let dir = match out.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            if !dir.is_dir() {
                return Err(Error::Config(format!("output directory {} does not exist", dir.display())));
            }
            if std::fs::metadata(dir).map(|m| m.permissions().readonly()).unwrap_or(true) {
                return Err(Error::Config(format!("output directory {} is not writable", dir.display())));
            }
        }
        Ok(())
    }

    /// Serializes every field; [`RunConfig::from_config_str`] inverts it.
    pub fn to_config_string(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("command", self.command.name().into());
        put("problem", self.problem.clone());
        put("method", self.method.name().into());
        put("spaces", self.spaces.name().into());
        if let Some(c) = self.cells {
            put("cells", c.to_string());
        }
        put("levels", self.levels.to_string());
        if let Some(k) = self.k {
            put("k", format!("{k:?}"));
        }
        put("coupling", format!("{:?}", self.coupling));
        put("ks", list(&self.ks));
        put("final_time", format!("{:?}", self.final_time));
        put("init_u", self.init_u.name().into());
        put("init_q", self.init_q.name().into());
        put("substeps", self.substeps.to_string());
        put("snapshots", list(&self.snapshots));
        put("integrand", self.integrand.name().into());
        put("n", self.n.to_string());
        if let Some(o) = &self.output {
            put("output", o.display().to_string());
        }
        put("workers", self.workers.to_string());
        put("seed", self.seed.to_string());
        put("timing", self.timing.to_string());
        s
    }
}

/// Splits `key = value` lines.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{line}'", i + 1)))?;
        let key = k.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("line {}: unknown key '{key}'", i + 1)));
        }
        out.push((key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_with<T>(key: &str, v: &str, f: impl Fn(&str) -> Option<T>, expected: &str) -> Result<T> {
    f(v).ok_or_else(|| Error::Config(format!("bad value '{v}' for {key} (expected one of {expected})")))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn minimal_convergence_gets_defaults() {
        let cfg = RunConfig::from_entries(
            &entries(&[("command", "convergence"), ("problem", "wave_standing"), ("levels", "4")]),
            None,
        )
        .unwrap();
        assert_eq!(cfg.spaces, SpacePair::Rt1Dg1);
        assert_eq!(cfg.final_time, 1.0);
        assert_eq!(cfg.k, None);
        assert_eq!(cfg.time_step(1.0, 8), 1.0 / 16.0);
        assert_eq!(cfg.workers, 1);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_entries("command = solve\nmethd = extended\n").unwrap_err().to_string();
        assert!(err.contains("methd"), "{err}");
        let err = RunConfig::from_entries(&entries(&[("command", "solve"), ("methd", "x")]), None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("methd"), "{err}");
    }

    #[test]
    fn k_not_dividing_t_names_both() {
        let err = RunConfig::from_entries(&entries(&[("command", "solve"), ("k", "0.3"), ("final_time", "1")]), None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("0.3") && err.contains("T = 1"), "{err}");
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::new(Command::Temporal);
        cfg.problem = "exp_memory_poly".into();
        cfg.method = Method::Standard;
        cfg.spaces = SpacePair::Rt0Dg0;
        cfg.cells = Some(16);
        cfg.k = Some(0.1);
        cfg.ks = vec![0.5, 0.25, 0.1];
        cfg.snapshots = vec![0.0, 0.3];
        cfg.output = Some(PathBuf::from("out.csv"));
        cfg.workers = 3;
        cfg.seed = 42;
        cfg.timing = true;
        cfg.init_q = InitQ::Fortin;
        let back = RunConfig::from_config_str(&cfg.to_config_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn env_workers_only_as_fallback() {
        let base = entries(&[("command", "quadcheck")]);
        assert_eq!(RunConfig::from_entries(&base, Some("3")).unwrap().workers, 3);
        let mut set = base.clone();
        set.push(("workers".into(), "2".into()));
        assert_eq!(RunConfig::from_entries(&set, Some("3")).unwrap().workers, 2);
        assert!(RunConfig::from_entries(&base, Some("lots")).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            &[("command", "solve"), ("final_time", "-1")][..],
            &[("command", "solve"), ("problem", "nope")],
            &[("command", "convergence"), ("levels", "2")],
            &[("command", "temporal"), ("ks", "0.5")],
            &[("command", "fly")],
            &[("problem", "zero")],
            &[("command", "solve"), ("output", "/no/such/dir/x.csv")],
        ] {
            assert!(RunConfig::from_entries(&entries(bad), None).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = RunConfig::from_config_str("# run\n\ncommand = quadcheck  # diag\nn = 20\n").unwrap();
        assert_eq!(cfg.n, 20);
    }
}
