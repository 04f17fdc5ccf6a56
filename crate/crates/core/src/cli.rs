//! Batch front end.
//!
//! Exit codes: 0 success, 1 numerical failure (divergence, singular
//! system), 2 configuration error, 3 inconclusive study. Artifacts are CSV,
//! written to `output` or standard output; progress goes to stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use log::{info, warn};

use crate::config::{Command, RunConfig, KEYS};
use crate::error::{Error, Result};
use crate::memory::{peano_error, quadrature_error};
use crate::mesh::Mesh;
use crate::stepper::{Solver, SNAPSHOT_HEADER};
use crate::verify::{
    convergence_study, manufactured_problem, projection_study, temporal_order_study, Problem, StudySpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

pub const QUADCHECK_HEADER: &str = "quantity,integrand,n,k,value";

#[derive(Debug, Parser)]
#[command(name = "hidemix", version, about = "Mixed FEM for wave equations with memory")]
pub struct Cli {
    /// solve | convergence | temporal | project | quadcheck
    pub command: Option<String>,
    /// `key = value` configuration file; flags override it.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    /// extended | standard
    #[arg(long)]
    pub method: Option<String>,
    /// rt0 | rt1
    #[arg(long)]
    pub spaces: Option<String>,
    /// Cells per side (coarsest level for ladders).
    #[arg(long)]
    pub cells: Option<String>,
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(short, long)]
    pub k: Option<String>,
    /// `k = coupling · h` when `k` is not given.
    #[arg(long)]
    pub coupling: Option<String>,
    /// Comma-separated time steps for `temporal`.
    #[arg(long)]
    pub ks: Option<String>,
    #[arg(short = 'T', long = "final-time")]
    pub final_time: Option<String>,
    /// l2 | ritz
    #[arg(long = "init-u")]
    pub init_u: Option<String>,
    /// l2 | fortin
    #[arg(long = "init-q")]
    pub init_q: Option<String>,
    #[arg(long)]
    pub substeps: Option<String>,
    /// Comma-separated snapshot times for `solve`.
    #[arg(long)]
    pub snapshots: Option<String>,
    /// s2 | sin | exp
    #[arg(long)]
    pub integrand: Option<String>,
    /// Midpoint panels for `quadcheck`.
    #[arg(short, long)]
    pub n: Option<String>,
    #[arg(short, long)]
    pub output: Option<String>,
    #[arg(short, long)]
    pub workers: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Record wall-clock runtimes in reports.
    #[arg(long)]
    pub timing: bool,
}

impl Cli {
    /// Flag values as config entries, in [`KEYS`] order.
    pub fn overrides(&self) -> Vec<(String, String)> {
        let vals: [Option<String>; 20] = [
            self.command.clone(),
            self.problem.clone(),
            self.method.clone(),
            self.spaces.clone(),
            self.cells.clone(),
            self.levels.clone(),
            self.k.clone(),
            self.coupling.clone(),
            self.ks.clone(),
            self.final_time.clone(),
            self.init_u.clone(),
            self.init_q.clone(),
            self.substeps.clone(),
            self.snapshots.clone(),
            self.integrand.clone(),
            self.n.clone(),
            self.output.clone(),
            self.workers.clone(),
            self.seed.clone(),
            self.timing.then(|| "true".to_string()),
        ];
        KEYS.iter()
            .zip(vals)
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect()
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Io(_) => EXIT_CONFIG,
        Error::Inconclusive(_) => EXIT_INCONCLUSIVE,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = RunConfig::load(cli.config.as_deref(), &cli.overrides()).and_then(|cfg| {
        let mut out: Box<dyn Write> = match &cfg.output {
            Some(p) => Box::new(std::fs::File::create(p)?),
            None => Box::new(std::io::stdout().lock()),
        };
        dispatch(&cfg, &mut out)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("hidemix: {e}");
            exit_code(&e)
        }
    }
}

/// Runs `cfg` on its catalog problem, writing the artifact to `out`.
pub fn dispatch(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let problem = manufactured_problem(&cfg.problem).map_err(|e| Error::Config(e.to_string()))?;
    let residual = problem.residual(64, cfg.seed);
    if residual > 1e-6 {
        return Err(Error::Config(format!(
            "problem {} fails its residual check ({residual:.3e})",
            problem.name
        )));
    }
    dispatch_problem(cfg, &problem, out)
}

/// As [`dispatch`] with an explicit problem (the `problem` key is ignored).
pub fn dispatch_problem(cfg: &RunConfig, problem: &Problem, out: &mut dyn Write) -> Result<()> {
    let width = problem.rect.x1 - problem.rect.x0;
    let spec = StudySpec {
        method: cfg.method,
        pair: cfg.spaces,
        base_cells: cfg.cells(),
        levels: cfg.levels,
        coupling: cfg.coupling,
        final_time: cfg.final_time,
        init_u: cfg.init_u,
        init_q: cfg.init_q,
        substeps: cfg.substeps,
        workers: cfg.workers,
        timing: cfg.timing,
    };
    if cfg.command != Command::Quadcheck {
        info!("{} on {} ({}, {})", cfg.command.name(), problem.name, cfg.method.name(), cfg.spaces.name());
    }
    match cfg.command {
        Command::Solve => {
            let cells = cfg.cells();
            let mesh = Arc::new(Mesh::structured(cells, cells, problem.rect)?);
            let scheme = cfg.scheme_config(width, cells);
            info!("{cells}x{cells} cells, k = {}, T = {}", scheme.k, scheme.final_time);
            let snaps = Solver::new(problem, mesh, scheme)?.run()?;
            let mut s = String::new();
            s.push_str(SNAPSHOT_HEADER);
            s.push('\n');
            for snap in &snaps {
                snap.csv_rows(&mut s);
            }
            out.write_all(s.as_bytes())?;
        }
        Command::Convergence | Command::Project => {
            let report = if cfg.command == Command::Convergence {
                convergence_study(problem, &spec)?
            } else {
                projection_study(problem, &spec)?
            };
            out.write_all(report.to_csv().as_bytes())?;
            if let Some(why) = &report.aborted {
                warn!("study aborted: {why}");
                return Err(Error::Divergence {
                    step: parse_step(why).unwrap_or(0),
                });
            }
        }
        Command::Temporal => {
            let cells = cfg.cells();
            let t = temporal_order_study(problem, &spec, cells, &cfg.ks)?;
            out.write_all(t.report.to_csv().as_bytes())?;
            if let Some(why) = &t.report.aborted {
                warn!("study aborted: {why}");
                return Err(Error::Divergence {
                    step: parse_step(why).unwrap_or(0),
                });
            }
            match t.order {
                Some(p) => info!("temporal order {p:.3} (floor {:.3e})", t.floor),
                None => {
                    return Err(Error::Inconclusive(format!(
                        "spatial error floor {:.3e} dominates; fewer than two adjacent levels above 10x floor",
                        t.floor
                    )))
                }
            }
        }
        Command::Quadcheck => {
            out.write_all(quadcheck_csv(cfg).as_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_step(msg: &str) -> Option<usize> {
    let tail = msg.split("step ").nth(1)?;
    tail.split(|c: char| !c.is_ascii_digit()).next()?.parse().ok()
}

/// Quadrature error of the composite midpoint rule on `[0, n k]`, directly
/// and through the Peano kernel; for `s²` also the closed form.
pub fn quadcheck_csv(cfg: &RunConfig) -> String {
    let g = cfg.integrand;
    let k = cfg.k.unwrap_or(0.1);
    let n = cfg.n;
    let mut s = String::new();
    s.push_str(QUADCHECK_HEADER);
    s.push('\n');
    let mut row = |q: &str, v: f64| {
        let _ = writeln!(s, "{q},{},{n},{k:?},{v:.12e}", g.name());
    };
    row("direct", quadrature_error(&|x| g.eval(x), n, k));
    row("peano", peano_error(&|x| g.second_derivative(x), n, k));
    if g == crate::config::Integrand::Square {
        row("closed_form", -(n as f64) * k.powi(3) / 12.0);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Divergence { step: 3 }), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::SingularMatrix { pivot: 0 }), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Inconclusive("x".into())), EXIT_INCONCLUSIVE);
    }

    #[test]
    fn flags_override_file_entries() {
        let cli = Cli::try_parse_from(["hidemix", "solve", "--k", "0.25", "--timing"]).unwrap();
        let o = cli.overrides();
        assert!(o.contains(&("command".into(), "solve".into())));
        assert!(o.contains(&("k".into(), "0.25".into())));
        assert!(o.contains(&("timing".into(), "true".into())));
        let mut entries = vec![("command".to_string(), "quadcheck".to_string()), ("k".into(), "0.5".into())];
        entries.extend(o);
        let cfg = RunConfig::from_entries(&entries, None).unwrap();
        assert_eq!(cfg.command, Command::Solve);
        assert_eq!(cfg.k, Some(0.25));
    }

    #[test]
    fn quadcheck_square() {
        let cfg = RunConfig::from_entries(&[("command".into(), "quadcheck".into())], None).unwrap();
        let csv = quadcheck_csv(&cfg);
        assert!(csv.starts_with(QUADCHECK_HEADER));
        assert!(csv.contains("direct,s2,10,0.1,-8.333333333333e-4"), "{csv}");
    }

    #[test]
    fn step_from_message() {
        assert_eq!(parse_step("level 2: non-finite state at step 17"), Some(17));
        assert_eq!(parse_step("whatever"), None);
    }
}
