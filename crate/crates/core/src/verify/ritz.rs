//! Mixed Ritz–Volterra projections: the time-dependent mixed elliptic
//! projections with the memory integral replaced by the same midpoint rule
//! the schemes use.

use std::sync::Arc;

use crate::assembly::{
    assemble_div_coupling, assemble_div_load, assemble_load_v, assemble_mass_v,
};
use crate::error::{Error, Result};
use crate::fields::{Mat2, MatrixField, Point};
use crate::linsolve::{BlockBuilder, BlockLayout, BlockSystem};
use crate::memory::{DiscreteMemory, HistoryBuffer, KernelMemory, ResolventMemory, TimeLattice};
use crate::sparse::{axpy, SparseMatrix};
use crate::spaces::{rt_interpolate, DofSpace, ElementValues, RuleChoice};
use crate::stepper::Method;

use super::Problem;

/// Projected dofs at every level `t_n`, `n = 0..=steps`.
#[derive(Clone, Debug)]
pub struct ProjectionTrajectory {
    pub lattice: TimeLattice,
    pub u: Vec<Vec<f64>>,
    /// Extended method only.
    pub q: Option<Vec<Vec<f64>>>,
    pub sigma: Vec<Vec<f64>>,
}

/// `k Σ_{j<n} (K(t_n, s_j) ḡ^j, ψ_i)` with `ḡ^j` the average of an exact
/// field at `t_j` and `t_{j+1}`.
fn exact_memory_load(
    v: &DofSpace,
    mem: &dyn DiscreteMemory,
    n: usize,
    g: &dyn Fn(Point, f64) -> Point,
) -> Result<Vec<f64>> {
    let lat = mem.lattice();
    let mut out = vec![0.0; v.ndofs()];
    let mut ev = ElementValues::default();
    for t in 0..v.mesh().num_triangles() {
        v.element_values(t, RuleChoice::Assembly, &mut ev);
        let dofs = v.element_dofs(t);
        for q in 0..ev.jxw.len() {
            let x = ev.points[q];
            let mut acc = Point::default();
            for j in 0..n {
                let avg = 0.5 * (g(x, lat.t(j)) + g(x, lat.t(j + 1)));
                acc = acc + mem.kernel_at(t, q, x, n, j)?.apply(avg);
            }
            let acc = (lat.k * ev.jxw[q]) * acc;
            for (i, &d) in dofs.iter().enumerate() {
                out[d] += acc.dot(ev.vec(q, i));
            }
        }
    }
    Ok(out)
}

struct Projector<'a> {
    problem: &'a Problem,
    method: Method,
    v: &'a Arc<DofSpace>,
    w: &'a Arc<DofSpace>,
    coupling: SparseMatrix,
    coupling_t: SparseMatrix,
    mass_v: SparseMatrix,
    mass_coeff: SparseMatrix,
}

impl<'a> Projector<'a> {
    fn new(problem: &'a Problem, method: Method, v: &'a Arc<DofSpace>, w: &'a Arc<DofSpace>) -> Result<Self> {
        let coupling = assemble_div_coupling(w, v)?;
        let mass_coeff = match method {
            Method::Extended => assemble_mass_v(v, Some(&problem.kernels.a))?,
            Method::Standard => {
                let ks = problem.kernels.clone();
                let alpha = MatrixField::variable(move |x| ks.alpha(x).unwrap_or(Mat2::scalar(f64::NAN)));
                assemble_mass_v(v, Some(&alpha))?
            }
        };
        Ok(Self {
            problem,
            method,
            v,
            w,
            coupling_t: coupling.transpose(),
            coupling,
            mass_v: assemble_mass_v(v, None)?,
            mass_coeff,
        })
    }

    fn layout(&self) -> BlockLayout {
        let (nw, nv) = (self.w.ndofs(), self.v.ndofs());
        match self.method {
            Method::Extended => BlockLayout::new(&[("U", nw), ("Q", nv), ("Z", nv)]),
            Method::Standard => BlockLayout::new(&[("U", nw), ("Z", nv)]),
        }
    }

    fn system(&self, self_term: Option<&SparseMatrix>, k: f64) -> Result<BlockSystem> {
        let mut b = BlockBuilder::new(self.layout());
        b.add("U", "Z", &self.coupling, 1.0)?;
        match self.method {
            Method::Extended => {
                b.add("Q", "U", &self.coupling_t, 1.0)?;
                b.add("Q", "Q", &self.mass_v, 1.0)?;
                b.add("Z", "Q", &self.mass_coeff, -1.0)?;
                if let Some(m) = self_term {
                    b.add("Z", "Q", m, 0.5 * k)?;
                }
                b.add("Z", "Z", &self.mass_v, 1.0)?;
            }
            Method::Standard => {
                b.add("Z", "U", &self.coupling_t, 1.0)?;
                b.add("Z", "Z", &self.mass_coeff, 1.0)?;
                if let Some(m) = self_term {
                    b.add("Z", "Z", m, 0.5 * k)?;
                }
            }
        }
        b.factor(false).map_err(|e| match e {
            Error::SingularMatrix { pivot } => Error::Solver(format!("projection system singular at pivot {pivot}")),
            other => other,
        })
    }

    /// Right-hand side without the discrete-history terms.
    fn exact_rhs(&self, t: f64, mem: Option<(&dyn DiscreteMemory, usize)>) -> Result<Vec<Vec<f64>>> {
        let p = self.problem;
        let sigma = |x: Point| (p.sigma)(x, t);
        let div_rows = self.coupling.matvec(&rt_interpolate(&sigma, self.v)?);
        let u_div = assemble_div_load(&|x| (p.u)(x, t), self.v);
        Ok(match self.method {
            Method::Extended => {
                let mut q_rows = assemble_load_v(&|x| (p.q)(x, t), self.v);
                axpy(&mut q_rows, 1.0, &u_div);
                let a = &p.kernels.a;
                let mut z_rows = assemble_load_v(&|x| sigma(x) - a.eval(x).apply((p.q)(x, t)), self.v);
                if let Some((m, n)) = mem {
                    axpy(&mut z_rows, 1.0, &exact_memory_load(self.v, m, n, &|x, s| (p.q)(x, s))?);
                }
                vec![div_rows, q_rows, z_rows]
            }
            Method::Standard => {
                let ks = &p.kernels;
                let mut z_rows = assemble_load_v(
                    &|x| ks.alpha(x).map_or(Point::new(f64::NAN, f64::NAN), |al| al.apply(sigma(x))),
                    self.v,
                );
                axpy(&mut z_rows, 1.0, &u_div);
                if let Some((m, n)) = mem {
                    axpy(&mut z_rows, 1.0, &exact_memory_load(self.v, m, n, &|x, s| (p.sigma)(x, s))?);
                }
                vec![div_rows, z_rows]
            }
        })
    }

    fn solve_level(&self, sys: &BlockSystem, rhs: Vec<Vec<f64>>) -> Result<(Vec<f64>, Option<Vec<f64>>, Vec<f64>)> {
        let parts: Vec<&[f64]> = rhs.iter().map(|v| v.as_slice()).collect();
        let x = sys.solve(&sys.layout.join(&parts))?;
        let p = sys.layout.split(&x);
        Ok(match self.method {
            Method::Extended => (p[0].to_vec(), Some(p[1].to_vec()), p[2].to_vec()),
            Method::Standard => (p[0].to_vec(), None, p[1].to_vec()),
        })
    }

    fn march(&self, mem: &dyn DiscreteMemory) -> Result<ProjectionTrajectory> {
        let lat = mem.lattice();
        let k = lat.k;
        let mut traj = ProjectionTrajectory {
            lattice: lat,
            u: Vec::new(),
            q: (self.method == Method::Extended).then(Vec::new),
            sigma: Vec::new(),
        };
        let first = self.system(None, k)?;
        let (u, q, s) = self.solve_level(&first, self.exact_rhs(0.0, None)?)?;
        self.record(&mut traj, u, q, s);

        let mut hist = HistoryBuffer::new(k);
        let mut cached: Option<BlockSystem> = None;
        for n in 1..=lat.steps {
            let self_term = mem.lattice_matrix(n, n - 1)?;
            let sys = match cached.take() {
                Some(s) if mem.self_term_invariant() => s,
                _ => self.system(Some(&self_term), k)?,
            };
            let mut rhs = self.exact_rhs(lat.t(n), Some((mem, n)))?;
            let prev = self.memory_field(&traj, n - 1).to_vec();
            let last = rhs.last_mut().unwrap();
            if !mem.is_zero() {
                axpy(last, -1.0, &mem.history_vector(n, &hist)?);
                self_term.matvec_into(&prev, last, -0.5 * k);
            }
            let (u, q, s) = self.solve_level(&sys, rhs)?;
            self.record(&mut traj, u, q, s);
            let cur = self.memory_field(&traj, n);
            hist.push(prev.iter().zip(cur).map(|(a, b)| 0.5 * (a + b)).collect());
            cached = Some(sys);
        }
        Ok(traj)
    }

    fn memory_field<'t>(&self, traj: &'t ProjectionTrajectory, n: usize) -> &'t [f64] {
        match self.method {
            Method::Extended => &traj.q.as_ref().unwrap()[n],
            Method::Standard => &traj.sigma[n],
        }
    }

    fn record(&self, traj: &mut ProjectionTrajectory, u: Vec<f64>, q: Option<Vec<f64>>, s: Vec<f64>) {
        traj.u.push(u);
        if let (Some(list), Some(q)) = (traj.q.as_mut(), q) {
            list.push(q);
        }
        traj.sigma.push(s);
    }
}

/// Extended projection `(ũ_h, q̃_h, σ̃_h)` at every level of `lattice`.
pub fn ritz_volterra_project_extended(
    problem: &Problem,
    v: &Arc<DofSpace>,
    w: &Arc<DofSpace>,
    lattice: TimeLattice,
) -> Result<ProjectionTrajectory> {
    let mem = KernelMemory::new(v.clone(), problem.kernels.b.clone(), lattice)?;
    Projector::new(problem, Method::Extended, v, w)?.march(&mem)
}

/// Standard projection `(ũ_h, σ̃_h)` with the resolvent kernel.
pub fn ritz_volterra_project_standard(
    problem: &Problem,
    v: &Arc<DofSpace>,
    w: &Arc<DofSpace>,
    lattice: TimeLattice,
    substeps: usize,
) -> Result<ProjectionTrajectory> {
    let mem = ResolventMemory::new(v.clone(), &problem.kernels, lattice, substeps)?;
    Projector::new(problem, Method::Standard, v, w)?.march(&mem)
}

/// The stationary mixed projection of the data at `t = 0`.
pub fn mixed_projection_at_zero(
    problem: &Problem,
    method: Method,
    v: &Arc<DofSpace>,
    w: &Arc<DofSpace>,
) -> Result<(Vec<f64>, Option<Vec<f64>>, Vec<f64>)> {
    let proj = Projector::new(problem, method, v, w)?;
    let sys = proj.system(None, 0.0)?;
    proj.solve_level(&sys, proj.exact_rhs(0.0, None)?)
}
