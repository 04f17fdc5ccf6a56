//! Fully discrete time stepping for the extended and standard mixed methods.
//!
//! Each step solves for `U^{n+1}` together with the half-level flux
//! `Q^{n+1/2}` (extended only) and stress `Z^{n+1/2}`; level values of `Q`
//! and `Z` are recovered as `X^{n+1} = 2 X^{n+1/2} − X^n`. The newest
//! history term of the averaged memory rule is implicit.

use std::fmt;
use std::sync::Arc;

use crate::assembly::{assemble_div_coupling, assemble_load, assemble_mass_v, assemble_mass_w};
use crate::error::{Error, Result};
use crate::fields::{MatrixField, Point};
use crate::linsolve::{BlockBuilder, BlockLayout, BlockSystem, Factorization};
use crate::memory::{DiscreteMemory, HistoryBuffer, KernelMemory, ResolventMemory, TimeLattice};
use crate::mesh::Mesh;
use crate::sparse::{axpy, dot, SparseMatrix};
use crate::spaces::{l2_project_scalar, l2_project_vector, rt_interpolate, DofSpace, SpacePair};
use crate::verify::{mixed_projection_at_zero, Problem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Three fields `(u, q, σ)`.
    Extended,
    /// Two fields `(u, σ)` with the resolvent kernel.
    Standard,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Extended => "extended",
            Method::Standard => "standard",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "extended" => Some(Method::Extended),
            "standard" => Some(Method::Standard),
            _ => None,
        }
    }
}

/// Initial scalar dofs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitU {
    /// `P_h u₀`
    L2,
    /// The mixed elliptic projection of the exact data at `t = 0`.
    Ritz,
}

/// Initial flux dofs (extended method).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitQ {
    /// L² projection of `∇u₀` onto `V_h`.
    L2,
    /// `Π_h ∇u₀`
    Fortin,
}

impl InitU {
    pub fn name(self) -> &'static str {
        match self {
            InitU::L2 => "l2",
            InitU::Ritz => "ritz",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "l2" => Some(InitU::L2),
            "ritz" => Some(InitU::Ritz),
            _ => None,
        }
    }
}

impl InitQ {
    pub fn name(self) -> &'static str {
        match self {
            InitQ::L2 => "l2",
            InitQ::Fortin => "fortin",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "l2" => Some(InitQ::L2),
            "fortin" => Some(InitQ::Fortin),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub method: Method,
    pub pair: SpacePair,
    pub k: f64,
    pub final_time: f64,
    pub init_u: InitU,
    pub init_q: InitQ,
    /// Inner refinement of the resolvent march (standard method).
    pub substeps: usize,
    pub snapshot_times: Vec<f64>,
}

impl SchemeConfig {
    pub fn new(method: Method, pair: SpacePair, k: f64, final_time: f64) -> Self {
        Self {
            method,
            pair,
            k,
            final_time,
            init_u: InitU::L2,
            init_q: InitQ::L2,
            substeps: 1,
            snapshot_times: Vec::new(),
        }
    }

    /// Number of steps `N = T / k`; refuses a `k` that does not divide `T`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.k > 0.0 && self.k.is_finite()) || !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::Config(format!(
                "time step k = {} and final time T = {} must be positive",
                self.k, self.final_time
            )));
        }
        let r = self.final_time / self.k;
        let n = r.round();
        if n < 1.0 || (r - n).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::Config(format!(
                "time step k = {} does not divide final time T = {}",
                self.k, self.final_time
            )));
        }
        Ok(n as usize)
    }

    pub fn lattice(&self) -> Result<TimeLattice> {
        Ok(TimeLattice::new(self.k, self.steps()?))
    }
}

/// Time-stepper state after `n` steps.
#[derive(Clone, Debug)]
pub struct SchemeState {
    pub n: usize,
    pub u: Vec<f64>,
    pub u_prev: Vec<f64>,
    /// Level flux `Q^n` (extended method).
    pub q: Option<Vec<f64>>,
    /// Level stress `Z^n`.
    pub z: Vec<f64>,
    /// Latest half-level flux `Q^{n−1/2}` (extended method, `n ≥ 1`).
    pub q_half: Option<Vec<f64>>,
    /// Latest half-level stress `Z^{n−1/2}` (`n ≥ 1`).
    pub z_half: Option<Vec<f64>>,
    /// `Q^{j+1/2}` (extended) or `Z^{j+1/2}` (standard), `j < n`.
    pub history: HistoryBuffer,
}

impl SchemeState {
    pub fn is_finite(&self) -> bool {
        let all = |v: &[f64]| v.iter().all(|x| x.is_finite());
        all(&self.u)
            && all(&self.u_prev)
            && all(&self.z)
            && self.q.as_deref().is_none_or(all)
            && self.q_half.as_deref().is_none_or(all)
            && self.z_half.as_deref().is_none_or(all)
    }
}

/// Values captured at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub t: f64,
    pub u: Vec<f64>,
    pub q: Option<Vec<f64>>,
    pub z: Vec<f64>,
}

impl Snapshot {
    /// Rows `t,dof_kind,index,value` in `u`, `q`, `z` order.
    pub fn csv_rows(&self, out: &mut String) {
        use std::fmt::Write;
        let mut emit = |kind: &str, v: &[f64]| {
            for (i, x) in v.iter().enumerate() {
                // `+ 0.0` folds -0.0 into 0.0
                let _ = writeln!(out, "{:?},{kind},{i},{:?}", self.t, x + 0.0);
            }
        };
        emit("u", &self.u);
        if let Some(q) = &self.q {
            emit("q", q);
        }
        emit("z", &self.z);
    }
}

pub const SNAPSHOT_HEADER: &str = "t,dof_kind,index,value";

/// Assembled time-independent operators.
struct Operators {
    mass_w: SparseMatrix,
    /// `D`: identity-weighted RT mass.
    mass_v: SparseMatrix,
    /// `(A q, v)` (extended) or `(α z, v)` (standard).
    mass_coeff: SparseMatrix,
    coupling: SparseMatrix,
    coupling_t: SparseMatrix,
}

/// A configured run of one method on one mesh.
pub struct Solver {
    cfg: SchemeConfig,
    problem: Problem,
    lattice: TimeLattice,
    v: Arc<DofSpace>,
    w: Arc<DofSpace>,
    ops: Operators,
    memory: Box<dyn DiscreteMemory>,
    system: Option<BlockSystem>,
    state: SchemeState,
    /// `(f(t_m), w)` for `m = n − 1, n, n + 1`, oldest first.
    loads: Vec<(usize, Vec<f64>)>,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("cfg", &self.cfg)
            .field("problem", &self.problem.name)
            .field("n", &self.state.n)
            .finish()
    }
}

fn alpha_field(problem: &Problem) -> Result<MatrixField> {
    match &problem.kernels.a {
        MatrixField::Constant(a) => a
            .inverse()
            .map(MatrixField::Constant)
            .ok_or(Error::SingularCoefficient { x: 0.0, y: 0.0 }),
        MatrixField::Variable(_) => {
            let ks = problem.kernels.clone();
            Ok(MatrixField::variable(move |x| {
                ks.alpha(x).unwrap_or_else(|_| crate::fields::Mat2::scalar(f64::NAN))
            }))
        }
    }
}

impl Solver {
    /// Assembles operators and sets the `n = 0` state.
    pub fn new(problem: &Problem, mesh: Arc<Mesh>, cfg: SchemeConfig) -> Result<Self> {
        let lattice = cfg.lattice()?;
        if cfg.k > mesh.mesh_size() {
            log::warn!(
                "time step k = {} exceeds mesh size h = {}; the stability policy asks for k ≤ h",
                cfg.k,
                mesh.mesh_size()
            );
        }
        let (v, w) = cfg.pair.build(&mesh);
        let coupling = assemble_div_coupling(&w, &v)?;
        let mass_coeff = match cfg.method {
            Method::Extended => assemble_mass_v(&v, Some(&problem.kernels.a))?,
            Method::Standard => assemble_mass_v(&v, Some(&alpha_field(problem)?))?,
        };
        let ops = Operators {
            mass_w: assemble_mass_w(&w)?,
            mass_v: assemble_mass_v(&v, None)?,
            mass_coeff,
            coupling_t: coupling.transpose(),
            coupling,
        };
        let memory: Box<dyn DiscreteMemory> = match cfg.method {
            Method::Extended => Box::new(KernelMemory::new(v.clone(), problem.kernels.b.clone(), lattice)?),
            Method::Standard => Box::new(ResolventMemory::new(v.clone(), &problem.kernels, lattice, cfg.substeps)?),
        };
        let state = Self::initial_state(problem, &cfg, &v, &w, &ops, memory.as_ref())?;
        Ok(Self {
            cfg,
            problem: problem.clone(),
            lattice,
            v,
            w,
            ops,
            memory,
            system: None,
            state,
            loads: Vec::new(),
        })
    }

    fn initial_state(
        problem: &Problem,
        cfg: &SchemeConfig,
        v: &Arc<DofSpace>,
        w: &Arc<DofSpace>,
        ops: &Operators,
        memory: &dyn DiscreteMemory,
    ) -> Result<SchemeState> {
        let u0 = |x: Point| problem.u0(x);
        let grad0 = |x: Point| (problem.q)(x, 0.0);
        let u = match cfg.init_u {
            InitU::L2 => l2_project_scalar(&u0, w)?,
            InitU::Ritz => mixed_projection_at_zero(problem, cfg.method, v, w)?.0,
        };
        let (q, z) = match cfg.method {
            Method::Extended => {
                let q = match cfg.init_q {
                    InitQ::L2 => l2_project_vector(&grad0, v)?,
                    InitQ::Fortin => rt_interpolate(&grad0, v)?,
                };
                // (Z⁰, z) = (A Q⁰, z)
                let z = Factorization::new(&ops.mass_v)?.solve(&ops.mass_coeff.matvec(&q))?;
                (Some(q), z)
            }
            Method::Standard => {
                let a = &problem.kernels.a;
                let z = l2_project_vector(&|x| a.eval(x).apply(grad0(x)), v)?;
                (None, z)
            }
        };
        Ok(SchemeState {
            n: 0,
            u_prev: u.clone(),
            u,
            q,
            z,
            q_half: None,
            z_half: None,
            history: memory.new_history(),
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn state(&self) -> &SchemeState {
        &self.state
    }

    pub fn lattice(&self) -> TimeLattice {
        self.lattice
    }

    pub fn scalar_space(&self) -> &Arc<DofSpace> {
        &self.w
    }

    pub fn vector_space(&self) -> &Arc<DofSpace> {
        &self.v
    }

    pub fn time(&self) -> f64 {
        self.lattice.t(self.state.n)
    }

    pub fn is_done(&self) -> bool {
        self.state.n >= self.lattice.steps
    }

    fn layout(&self) -> BlockLayout {
        let (nw, nv) = (self.w.ndofs(), self.v.ndofs());
        match self.cfg.method {
            Method::Extended => BlockLayout::new(&[("U", nw), ("Q", nv), ("Z", nv)]),
            Method::Standard => BlockLayout::new(&[("U", nw), ("Z", nv)]),
        }
    }

    /// Step matrix for the step that produces level `n + 1`.
    fn build_system(&self, n: usize) -> Result<BlockSystem> {
        let k = self.cfg.k;
        let self_term = self.memory.lattice_matrix(n + 1, n)?;
        let ops = &self.ops;
        let mut b = BlockBuilder::new(self.layout());
        b.add("U", "U", &ops.mass_w, 1.0 / (k * k))?;
        b.add("U", "Z", &ops.coupling, -0.5)?;
        match self.cfg.method {
            Method::Extended => {
                b.add("Q", "U", &ops.coupling_t, 0.5)?;
                b.add("Q", "Q", &ops.mass_v, 1.0)?;
                b.add("Z", "Q", &ops.mass_coeff, -1.0)?;
                b.add("Z", "Q", &self_term, 0.5 * k)?;
                b.add("Z", "Z", &ops.mass_v, 1.0)?;
            }
            Method::Standard => {
                b.add("Z", "U", &ops.coupling_t, 0.5)?;
                b.add("Z", "Z", &ops.mass_coeff, 1.0)?;
                b.add("Z", "Z", &self_term, 0.5 * k)?;
            }
        }
        b.factor(self.memory.self_term_invariant())
    }

    fn load(&mut self, m: usize) -> Vec<f64> {
        if let Some((_, l)) = self.loads.iter().find(|(i, _)| *i == m) {
            return l.clone();
        }
        let l = if self.problem.f.is_some() {
            let t = self.lattice.t(m);
            let p = &self.problem;
            assemble_load(&|x| p.source(x, t), &self.w)
        } else {
            vec![0.0; self.w.ndofs()]
        };
        self.loads.retain(|(i, _)| *i + 1 >= m);
        self.loads.push((m, l.clone()));
        l
    }

    /// Advances one step (the startup step when `n = 0`).
    pub fn step(&mut self) -> Result<()> {
        let n = self.state.n;
        if n >= self.lattice.steps {
            return Err(Error::InvalidArgument(format!("run already reached step {n}")));
        }
        let k = self.cfg.k;
        let layout = self.layout();
        let system = match self.system.take() {
            Some(s) if s.step_invariant => s,
            _ => match self.build_system(n) {
                Ok(s) => s,
                Err(Error::SingularMatrix { pivot }) if n == 0 => {
                    return Err(Error::Config(format!("startup system is singular at pivot {pivot}")))
                }
                Err(e) => return Err(e),
            },
        };

        // U rows
        let mut rhs_u = vec![0.0; self.w.ndofs()];
        if n == 0 {
            let p = &self.problem;
            let vel = assemble_load(&|x| p.u1(x), &self.w);
            self.ops.mass_w.matvec_into(&self.state.u, &mut rhs_u, 1.0 / (k * k));
            axpy(&mut rhs_u, 1.0 / k, &vel);
            let (f0, f1) = (self.load(0), self.load(1));
            axpy(&mut rhs_u, 0.25, &f0);
            axpy(&mut rhs_u, 0.25, &f1);
        } else {
            let mut two_u = self.state.u.clone();
            for (a, b) in two_u.iter_mut().zip(&self.state.u_prev) {
                *a = 2.0 * *a - b;
            }
            self.ops.mass_w.matvec_into(&two_u, &mut rhs_u, 1.0 / (k * k));
            let zh = self.state.z_half.as_ref().expect("half-level stress after startup");
            self.ops.coupling.matvec_into(zh, &mut rhs_u, 0.5);
            let (fm, f0, fp) = (self.load(n - 1), self.load(n), self.load(n + 1));
            axpy(&mut rhs_u, 0.25, &fm);
            axpy(&mut rhs_u, 0.5, &f0);
            axpy(&mut rhs_u, 0.25, &fp);
        }

        // memory: ½(ε^{n+1} without its newest term + ε^n)
        let hist = &self.state.history;
        let mut mem = vec![0.0; self.v.ndofs()];
        if !self.memory.is_zero() && n > 0 {
            let ahead = self.memory.history_vector(n + 1, hist)?;
            let here = self.memory.history_vector(n, hist)?;
            axpy(&mut mem, -0.5, &ahead);
            axpy(&mut mem, -0.5, &here);
        }
        let mut ctu = self.ops.coupling_t.matvec(&self.state.u);
        ctu.iter_mut().for_each(|x| *x *= -0.5);

        let rhs = match self.cfg.method {
            Method::Extended => layout.join(&[&rhs_u, &ctu, &mem]),
            Method::Standard => {
                axpy(&mut mem, 1.0, &ctu);
                layout.join(&[&rhs_u, &mem])
            }
        };
        let x = system.solve(&rhs)?;
        let parts = layout.split(&x);
        let u_next = parts[0].to_vec();
        let level = |half: &[f64], prev: &[f64]| -> Vec<f64> { half.iter().zip(prev).map(|(h, p)| 2.0 * h - p).collect() };

        let st = &mut self.state;
        match self.cfg.method {
            Method::Extended => {
                let (qh, zh) = (parts[1].to_vec(), parts[2].to_vec());
                st.q = Some(level(&qh, st.q.as_ref().unwrap()));
                st.z = level(&zh, &st.z);
                st.history.push(qh.clone());
                st.q_half = Some(qh);
                st.z_half = Some(zh);
            }
            Method::Standard => {
                let zh = parts[1].to_vec();
                st.z = level(&zh, &st.z);
                st.history.push(zh.clone());
                st.z_half = Some(zh);
            }
        }
        st.u_prev = std::mem::replace(&mut st.u, u_next);
        st.n += 1;
        self.system = Some(system);
        if !self.state.is_finite() {
            return Err(Error::Divergence { step: self.state.n });
        }
        Ok(())
    }

    /// `‖(U^n − U^{n−1})/k‖² + (A Q^{n−1/2}, Q^{n−1/2})` (extended) or
    /// `+ (α Z^{n−1/2}, Z^{n−1/2})` (standard); conserved when `B = 0` and
    /// `f = 0`.
    pub fn energy(&self) -> Option<f64> {
        let st = &self.state;
        if st.n == 0 {
            return None;
        }
        let du: Vec<f64> = st.u.iter().zip(&st.u_prev).map(|(a, b)| (a - b) / self.cfg.k).collect();
        let kinetic = self.ops.mass_w.quadratic_form(&du, &du);
        let field = match self.cfg.method {
            Method::Extended => st.q_half.as_ref()?,
            Method::Standard => st.z_half.as_ref()?,
        };
        Some(kinetic + self.ops.mass_coeff.quadratic_form(field, field))
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            n: self.state.n,
            t: self.time(),
            u: self.state.u.clone(),
            q: self.state.q.clone(),
            z: self.state.z.clone(),
        }
    }

    /// Runs to the final time, calling `observe` at `n = 0` and after every
    /// step.
    pub fn run_with(&mut self, observe: &mut dyn FnMut(&Solver) -> Result<()>) -> Result<()> {
        observe(self)?;
        while !self.is_done() {
            self.step()?;
            observe(self)?;
        }
        Ok(())
    }

    /// Runs to the final time and returns snapshots at the levels nearest
    /// the requested times.
    pub fn run(&mut self) -> Result<Vec<Snapshot>> {
        let wanted: Vec<usize> = self
            .cfg
            .snapshot_times
            .iter()
            .map(|&t| ((t / self.cfg.k).round().max(0.0) as usize).min(self.lattice.steps))
            .collect();
        let mut snaps = Vec::new();
        self.run_with(&mut |s| {
            if wanted.contains(&s.state.n) {
                snaps.push(s.snapshot());
            }
            Ok(())
        })?;
        Ok(snaps)
    }
}

/// Builds a solver on a structured mesh and runs it.
pub fn run(problem: &Problem, mesh: Arc<Mesh>, cfg: SchemeConfig) -> Result<Vec<Snapshot>> {
    Solver::new(problem, mesh, cfg)?.run()
}

/// `‖x‖` in the mass inner product.
pub fn mass_norm(m: &SparseMatrix, x: &[f64]) -> f64 {
    dot(x, &m.matvec(x)).max(0.0).sqrt()
}
