//! Refinement ladders, error tables and observed orders.

use std::fmt::Write;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::Point;
use crate::memory::TimeLattice;
use crate::mesh::Mesh;
use crate::spaces::{l2_error_scalar, l2_error_vector, l2_project_scalar, linf_error_scalar, SpacePair};
use crate::stepper::{InitQ, InitU, Method, SchemeConfig, Solver};

use super::ritz::{ritz_volterra_project_extended, ritz_volterra_project_standard};
use super::Problem;

/// Errors at or below this are treated as exact and get no order.
pub const EXACT_THRESHOLD: f64 = 1e-11;

pub const REPORT_HEADER: &str =
    "level,h,k,dofs_W,dofs_V,err_u_LinfL2,err_q_L2,err_sigma_L2,err_u_LinfLinf,order_u,order_q,order_sigma,runtime_s";

/// Template shared by every level of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudySpec {
    pub method: Method,
    pub pair: SpacePair,
    /// Cells per side on the coarsest level.
    pub base_cells: usize,
    pub levels: usize,
    /// `k = coupling · h`
    pub coupling: f64,
    pub final_time: f64,
    pub init_u: InitU,
    pub init_q: InitQ,
    pub substeps: usize,
    pub workers: usize,
    /// Record wall-clock runtimes (makes the CSV non-reproducible).
    pub timing: bool,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            method: Method::Extended,
            pair: SpacePair::Rt1Dg1,
            base_cells: 4,
            levels: 4,
            coupling: 0.5,
            final_time: 1.0,
            init_u: InitU::L2,
            init_q: InitQ::L2,
            substeps: 1,
            workers: 1,
            timing: false,
        }
    }
}

impl StudySpec {
    fn scheme(&self, k: f64) -> SchemeConfig {
        let mut cfg = SchemeConfig::new(self.method, self.pair, k, self.final_time);
        cfg.init_u = self.init_u;
        cfg.init_q = self.init_q;
        cfg.substeps = self.substeps;
        cfg
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", self.workers)))
    }
}

/// One row of a report.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelErrors {
    pub level: usize,
    /// Cell width of the structured mesh.
    pub h: f64,
    pub k: f64,
    pub dofs_w: usize,
    pub dofs_v: usize,
    /// `max_n ‖u(t_n) − U^n‖`
    pub err_u_linf_l2: f64,
    /// `‖q − Q‖` at the last half level (extended method only).
    pub err_q_l2: Option<f64>,
    /// `‖σ − Z‖` at the last half level.
    pub err_sigma_l2: f64,
    /// `max_n max_x |u(t_n) − U^n|` on the six-point lattice.
    pub err_u_linf_linf: f64,
    pub runtime_s: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    ULinfL2,
    QL2,
    SigmaL2,
    ULinfLinf,
}

impl LevelErrors {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::ULinfL2 => Some(self.err_u_linf_l2),
            Metric::QL2 => self.err_q_l2,
            Metric::SigmaL2 => Some(self.err_sigma_l2),
            Metric::ULinfLinf => Some(self.err_u_linf_linf),
        }
    }
}

/// Per-level errors of a refinement study.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConvergenceReport {
    pub rows: Vec<LevelErrors>,
    /// Set when a level failed; `rows` then holds the levels before it.
    pub aborted: Option<String>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:.6e}"))
}

impl ConvergenceReport {
    /// Observed order between rows `i − 1` and `i`, measured against the
    /// step that was refined (`h` if it changed, otherwise `k`).
    pub fn order(&self, metric: Metric, i: usize) -> Option<f64> {
        if i == 0 || i >= self.rows.len() {
            return None;
        }
        let (a, b) = (&self.rows[i - 1], &self.rows[i]);
        let (ea, eb) = (a.get(metric)?, b.get(metric)?);
        if ea <= EXACT_THRESHOLD || eb <= EXACT_THRESHOLD {
            return None;
        }
        let ratio = if (a.h - b.h).abs() > 1e-15 { a.h / b.h } else { a.k / b.k };
        Some((ea / eb).ln() / ratio.ln())
    }

    pub fn orders(&self, metric: Metric) -> Vec<Option<f64>> {
        (0..self.rows.len()).map(|i| self.order(metric, i)).collect()
    }

    /// Order between the two finest levels.
    pub fn finest_order(&self, metric: Metric) -> Option<f64> {
        self.order(metric, self.rows.len().checked_sub(1)?)
    }

    /// Orders after dropping the coarsest one when it is pre-asymptotic
    /// (off the expected rate by more than 0.4).
    pub fn asymptotic_orders(&self, metric: Metric, expected: f64) -> Vec<f64> {
        let mut orders: Vec<f64> = self.orders(metric).into_iter().flatten().collect();
        if orders.len() > 1 && (orders[0] - expected).abs() > 0.4 {
            orders.remove(0);
        }
        orders
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(REPORT_HEADER);
        s.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{:.6e},{:.6e},{},{},{:.6e},{},{:.6e},{:.6e},{},{},{},{}",
                r.level,
                r.h,
                r.k,
                r.dofs_w,
                r.dofs_v,
                r.err_u_linf_l2,
                fmt_opt(r.err_q_l2),
                r.err_sigma_l2,
                r.err_u_linf_linf,
                fmt_opt(self.order(Metric::ULinfL2, i)),
                fmt_opt(self.order(Metric::QL2, i)),
                fmt_opt(self.order(Metric::SigmaL2, i)),
                r.runtime_s.map_or_else(|| "NA".to_string(), |t| format!("{t:.3}")),
            );
        }
        s
    }
}

/// Runs one solve and measures every error the report needs.
pub fn measure_run(problem: &Problem, mesh: Arc<Mesh>, cfg: SchemeConfig, level: usize, h: f64, timing: bool) -> Result<LevelErrors> {
    let start = Instant::now();
    let k = cfg.k;
    let mut solver = Solver::new(problem, mesh, cfg)?;
    let (w, v) = (solver.scalar_space().clone(), solver.vector_space().clone());
    let (mut e_l2, mut e_inf) = (0.0_f64, 0.0_f64);
    solver.run_with(&mut |s| {
        let t = s.time();
        let u = |x: Point| (problem.u)(x, t);
        e_l2 = e_l2.max(l2_error_scalar(&u, &s.state().u, &w));
        e_inf = e_inf.max(linf_error_scalar(&u, &s.state().u, &w));
        Ok(())
    })?;
    let st = solver.state();
    let th = solver.time() - 0.5 * k;
    let err_q_l2 = st
        .q_half
        .as_ref()
        .map(|qh| l2_error_vector(&|x| (problem.q)(x, th), qh, &v));
    let err_sigma_l2 = l2_error_vector(&|x| (problem.sigma)(x, th), st.z_half.as_ref().unwrap(), &v);
    Ok(LevelErrors {
        level,
        h,
        k,
        dofs_w: w.ndofs(),
        dofs_v: v.ndofs(),
        err_u_linf_l2: e_l2,
        err_q_l2,
        err_sigma_l2,
        err_u_linf_linf: e_inf,
        runtime_s: timing.then(|| start.elapsed().as_secs_f64()),
    })
}

fn collect(results: Vec<Result<LevelErrors>>) -> Result<ConvergenceReport> {
    let mut report = ConvergenceReport::default();
    for r in results {
        match r {
            Ok(row) => report.rows.push(row),
            Err(e @ Error::Divergence { .. }) => {
                report.aborted = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

fn structured(problem: &Problem, cells: usize) -> Result<Arc<Mesh>> {
    Ok(Arc::new(Mesh::structured(cells, cells, problem.rect)?))
}

/// Spatial ladder `h = 1/(base·2^ℓ)` with `k = c·h`; levels run in parallel.
pub fn convergence_study(problem: &Problem, spec: &StudySpec) -> Result<ConvergenceReport> {
    if spec.levels < 3 {
        return Err(Error::InvalidArgument(format!(
            "a convergence study needs at least 3 levels, got {}",
            spec.levels
        )));
    }
    if spec.base_cells == 0 {
        return Err(Error::InvalidArgument("base cell count must be positive".into()));
    }
    let width = problem.rect.x1 - problem.rect.x0;
    let results = spec.pool()?.install(|| {
        (0..spec.levels)
            .into_par_iter()
            .map(|l| {
                let cells = spec.base_cells << l;
                let h = width / cells as f64;
                let k = spec.coupling * h;
                measure_run(problem, structured(problem, cells)?, spec.scheme(k), l, h, spec.timing)
            })
            .collect::<Vec<_>>()
    });
    collect(results)
}

/// Result of a temporal study at fixed `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalReport {
    pub report: ConvergenceReport,
    /// `max_n ‖u(t_n) − P_h u(t_n)‖`: the spatial error floor.
    pub floor: f64,
    /// Rows whose error is at least ten times the floor.
    pub above_floor: Vec<bool>,
    /// Order between the two finest rows above the floor, if there are two.
    pub order: Option<f64>,
}

impl TemporalReport {
    pub fn is_conclusive(&self) -> bool {
        self.order.is_some()
    }
}

/// Time-step ladder on a fixed mesh with `cells` cells per side.
pub fn temporal_order_study(problem: &Problem, spec: &StudySpec, cells: usize, ks: &[f64]) -> Result<TemporalReport> {
    if ks.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a temporal study needs at least 2 time steps, got {}",
            ks.len()
        )));
    }
    let mesh = structured(problem, cells)?;
    let h = (problem.rect.x1 - problem.rect.x0) / cells as f64;
    let results = spec.pool()?.install(|| {
        ks.par_iter()
            .enumerate()
            .map(|(l, &k)| measure_run(problem, mesh.clone(), spec.scheme(k), l, h, spec.timing))
            .collect::<Vec<_>>()
    });
    let report = collect(results)?;

    let (_, w) = spec.pair.build(&mesh);
    let kmin = ks.iter().cloned().fold(f64::INFINITY, f64::min);
    let lattice = SchemeConfig::new(spec.method, spec.pair, kmin, spec.final_time).lattice()?;
    let mut floor = 0.0_f64;
    for n in 0..=lattice.steps {
        let t = lattice.t(n);
        let u = |x: Point| (problem.u)(x, t);
        floor = floor.max(l2_error_scalar(&u, &l2_project_scalar(&u, &w)?, &w));
    }
    let above_floor: Vec<bool> = report.rows.iter().map(|r| r.err_u_linf_l2 >= 10.0 * floor).collect();
    let usable: Vec<usize> = (0..report.rows.len()).filter(|&i| above_floor[i]).collect();
    let order = match usable.as_slice() {
        [.., a, b] if *b == a + 1 => report.order(Metric::ULinfL2, *b),
        _ => None,
    };
    Ok(TemporalReport {
        report,
        floor,
        above_floor,
        order,
    })
}

/// Ritz–Volterra projection errors on a spatial ladder: `err_u_LinfL2` is
/// `max_n ‖u − ũ_h‖`, the flux and stress columns are taken at `T`.
pub fn projection_study(problem: &Problem, spec: &StudySpec) -> Result<ConvergenceReport> {
    if spec.levels < 2 {
        return Err(Error::InvalidArgument("a projection study needs at least 2 levels".into()));
    }
    let width = problem.rect.x1 - problem.rect.x0;
    let results = spec.pool()?.install(|| {
        (0..spec.levels)
            .into_par_iter()
            .map(|l| -> Result<LevelErrors> {
                let start = Instant::now();
                let cells = spec.base_cells << l;
                let h = width / cells as f64;
                let k = spec.coupling * h;
                let mesh = structured(problem, cells)?;
                let (v, w) = spec.pair.build(&mesh);
                let lattice: TimeLattice = spec.scheme(k).lattice()?;
                let traj = match spec.method {
                    Method::Extended => ritz_volterra_project_extended(problem, &v, &w, lattice)?,
                    Method::Standard => ritz_volterra_project_standard(problem, &v, &w, lattice, spec.substeps)?,
                };
                let (mut e_l2, mut e_inf) = (0.0_f64, 0.0_f64);
                for (n, u) in traj.u.iter().enumerate() {
                    let t = lattice.t(n);
                    let ex = |x: Point| (problem.u)(x, t);
                    e_l2 = e_l2.max(l2_error_scalar(&ex, u, &w));
                    e_inf = e_inf.max(linf_error_scalar(&ex, u, &w));
                }
                let tf = lattice.final_time();
                let last = lattice.steps;
                Ok(LevelErrors {
                    level: l,
                    h,
                    k,
                    dofs_w: w.ndofs(),
                    dofs_v: v.ndofs(),
                    err_u_linf_l2: e_l2,
                    err_q_l2: traj
                        .q
                        .as_ref()
                        .map(|q| l2_error_vector(&|x| (problem.q)(x, tf), &q[last], &v)),
                    err_sigma_l2: l2_error_vector(&|x| (problem.sigma)(x, tf), &traj.sigma[last], &v),
                    err_u_linf_linf: e_inf,
                    runtime_s: spec.timing.then(|| start.elapsed().as_secs_f64()),
                })
            })
            .collect::<Vec<_>>()
    });
    collect(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::manufactured_problem;

    fn row(level: usize, h: f64, e: f64) -> LevelErrors {
        LevelErrors {
            level,
            h,
            k: h / 2.0,
            dofs_w: 1,
            dofs_v: 1,
            err_u_linf_l2: e,
            err_q_l2: None,
            err_sigma_l2: e,
            err_u_linf_linf: e,
            runtime_s: None,
        }
    }

    #[test]
    fn orders_from_halving() {
        let r = ConvergenceReport {
            rows: vec![row(0, 0.25, 1.0), row(1, 0.125, 0.25), row(2, 0.0625, 0.0625)],
            aborted: None,
        };
        assert_eq!(r.order(Metric::ULinfL2, 0), None);
        assert!((r.order(Metric::ULinfL2, 1).unwrap() - 2.0).abs() < 1e-12);
        assert!((r.finest_order(Metric::ULinfL2).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(r.order(Metric::QL2, 2), None);
        let csv = r.to_csv();
        assert!(csv.starts_with(REPORT_HEADER));
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().ends_with("NA,NA,NA,NA"));
    }

    #[test]
    fn pre_asymptotic_order_is_dropped() {
        let r = ConvergenceReport {
            rows: vec![row(0, 0.5, 1.0), row(1, 0.25, 0.5), row(2, 0.125, 0.125), row(3, 0.0625, 0.03125)],
            aborted: None,
        };
        assert_eq!(r.asymptotic_orders(Metric::ULinfL2, 2.0).len(), 2);
    }

    #[test]
    fn zero_problem_has_no_orders() {
        let p = manufactured_problem("zero").unwrap();
        let spec = StudySpec {
            pair: SpacePair::Rt0Dg0,
            levels: 3,
            base_cells: 2,
            final_time: 0.5,
            ..Default::default()
        };
        let r = convergence_study(&p, &spec).unwrap();
        assert_eq!(r.rows.len(), 3);
        for row in &r.rows {
            assert!(row.err_u_linf_l2 <= 1e-11 && row.err_sigma_l2 <= 1e-11);
        }
        assert!(r.orders(Metric::ULinfL2).iter().all(Option::is_none));
    }

    #[test]
    fn study_arguments_are_checked() {
        let p = manufactured_problem("zero").unwrap();
        let spec = StudySpec {
            levels: 2,
            ..Default::default()
        };
        assert!(convergence_study(&p, &spec).is_err());
        assert!(temporal_order_study(&p, &spec, 4, &[0.25]).is_err());
    }
}
