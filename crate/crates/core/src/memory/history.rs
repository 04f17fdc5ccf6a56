use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::assembly::{assemble_component_masses, assemble_mass_v, assemble_mass_v_indexed};
use crate::error::{Error, Result};
use crate::fields::{Mat2, Point, TimeFn};
use crate::quadrature;
use crate::sparse::{axpy, SparseMatrix};
use crate::spaces::{DofSpace, ElementValues, RuleChoice};

use super::{resolvent_table, KernelSet, MemoryKernel, ResolventTable, TimeLattice};

/// Stored half-level snapshots `X^{j+1/2}`, `j = 0..len`, plus running
/// weighted sums `k Σ_j b_i(s_j) X^{j+1/2}` for separable kernels.
#[derive(Clone, Default)]
pub struct HistoryBuffer {
    k: f64,
    snapshots: Vec<Vec<f64>>,
    weights: Vec<TimeFn>,
    partial: Vec<Vec<f64>>,
}

impl std::fmt::Debug for HistoryBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HistoryBuffer")
            .field("k", &self.k)
            .field("len", &self.snapshots.len())
            .field("partial_sums", &self.partial.len())
            .finish()
    }
}

impl HistoryBuffer {
    pub fn new(k: f64) -> Self {
        Self {
            k,
            ..Default::default()
        }
    }

    /// A buffer that also maintains one running sum per weight function.
    pub fn with_partial_sums(k: f64, weights: Vec<TimeFn>) -> Self {
        Self {
            k,
            weights,
            ..Default::default()
        }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshot(&self, j: usize) -> &[f64] {
        &self.snapshots[j]
    }

    pub fn snapshots(&self) -> &[Vec<f64>] {
        &self.snapshots
    }

    pub fn partial_sums(&self) -> &[Vec<f64>] {
        &self.partial
    }

    pub fn push(&mut self, x: Vec<f64>) {
        let s = (self.snapshots.len() as f64 + 0.5) * self.k;
        if self.partial.is_empty() && !self.weights.is_empty() {
            self.partial = vec![vec![0.0; x.len()]; self.weights.len()];
        }
        for (w, p) in self.weights.iter().zip(&mut self.partial) {
            axpy(p, self.k * w(s), &x);
        }
        self.snapshots.push(x);
    }
}

/// A memory operator on `V_h` evaluated on the staggered lattice:
/// `(K(t_m, s_j) ·, ·)` for some matrix kernel `K`.
pub trait DiscreteMemory: Send + Sync {
    fn lattice(&self) -> TimeLattice;

    fn is_zero(&self) -> bool;

    /// `k Σ_{j<len} (K(t_m, s_j) X^{j+1/2}, ψ_i)` over every stored snapshot.
    fn history_vector(&self, m: usize, hist: &HistoryBuffer) -> Result<Vec<f64>>;

    /// The matrix `[(K(t_m, s_j) ψ_j', ψ_i)]`.
    fn lattice_matrix(&self, m: usize, j: usize) -> Result<Arc<SparseMatrix>>;

    /// Whether `lattice_matrix(n + 1, n)` is the same for every `n`.
    fn self_term_invariant(&self) -> bool;

    /// `K(t_m, s_j)` at assembly quadrature point `qp` of element `elem`
    /// (physical location `x`).
    fn kernel_at(&self, elem: usize, qp: usize, x: Point, m: usize, j: usize) -> Result<Mat2>;

    /// A history buffer suited to this operator.
    fn new_history(&self) -> HistoryBuffer {
        HistoryBuffer::new(self.lattice().k)
    }
}

/// History sum at `t_m`, optionally splitting off the implicit term.
#[derive(Clone, Debug)]
pub struct HistorySum {
    pub vector: Vec<f64>,
    /// `k/2 · [(K(t_m, s_{m−1}) ·, ·)]` when the half term is split off.
    pub self_matrix: Option<SparseMatrix>,
}

/// `ε^m`: with `include_half_term` the buffer must hold `m − 1` snapshots
/// and the missing `j = m − 1` term is returned as a coefficient matrix
/// (with the factor `k/2` of the averaged rule); otherwise it must hold `m`.
pub fn history_sum(
    mem: &dyn DiscreteMemory,
    hist: &HistoryBuffer,
    m: usize,
    include_half_term: bool,
) -> Result<HistorySum> {
    let expected = if include_half_term {
        m.checked_sub(1)
            .ok_or_else(|| Error::History("half term needs m ≥ 1".into()))?
    } else {
        m
    };
    if hist.len() != expected {
        return Err(Error::History(format!(
            "history holds {} snapshots, step {m} needs {expected}",
            hist.len()
        )));
    }
    let vector = mem.history_vector(m, hist)?;
    let self_matrix = if include_half_term {
        Some(mem.lattice_matrix(m, m - 1)?.scaled(0.5 * mem.lattice().k))
    } else {
        None
    };
    Ok(HistorySum { vector, self_matrix })
}

fn check_length(hist: &HistoryBuffer, ndofs: usize) -> Result<()> {
    if let Some(x) = hist.snapshots().iter().find(|x| x.len() != ndofs) {
        return Err(Error::DimensionMismatch {
            expected: ndofs,
            got: x.len(),
        });
    }
    Ok(())
}

/// `Σ_q Σ_j k K_q(j) X^j(x_q) · ψ_i(x_q) w_q` by a direct element loop.
fn pointwise_history(
    v: &DofSpace,
    hist: &HistoryBuffer,
    kernel: &mut dyn FnMut(usize, usize, Point, usize) -> Result<Mat2>,
) -> Result<Vec<f64>> {
    let nloc = v.nloc();
    let k = hist.k();
    let mut out = vec![0.0; v.ndofs()];
    let mut ev = ElementValues::default();
    for t in 0..v.mesh().num_triangles() {
        v.element_values(t, RuleChoice::Assembly, &mut ev);
        let dofs = v.element_dofs(t);
        for q in 0..ev.jxw.len() {
            let mut acc = Point::default();
            for (j, x) in hist.snapshots().iter().enumerate() {
                let mut xh = Point::default();
                for i in 0..nloc {
                    xh = xh + x[dofs[i]] * ev.vec(q, i);
                }
                acc = acc + kernel(t, q, ev.points[q], j)?.apply(xh);
            }
            let acc = (k * ev.jxw[q]) * acc;
            for (i, &d) in dofs.iter().enumerate() {
                out[d] += acc.dot(ev.vec(q, i));
            }
        }
    }
    Ok(out)
}

type MatrixCache = Mutex<HashMap<(usize, usize), Arc<SparseMatrix>>>;

/// The kernel memory `(B(t_m, s_j) ·, ·)` of the extended method.
pub struct KernelMemory {
    v: Arc<DofSpace>,
    kernel: MemoryKernel,
    lattice: TimeLattice,
    /// Convolution: `[𝔹₀]`; separable: one matrix per term.
    base: Vec<SparseMatrix>,
    cache: MatrixCache,
}

impl KernelMemory {
    pub fn new(v: Arc<DofSpace>, kernel: MemoryKernel, lattice: TimeLattice) -> Result<Self> {
        let base = match &kernel {
            MemoryKernel::Convolution { matrix, .. } => vec![assemble_mass_v(&v, Some(matrix))?],
            MemoryKernel::Separable(terms) => terms
                .iter()
                .map(|t| assemble_mass_v(&v, Some(&t.matrix)))
                .collect::<Result<_>>()?,
            _ => Vec::new(),
        };
        Ok(Self {
            v,
            kernel,
            lattice,
            base,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn kernel(&self) -> &MemoryKernel {
        &self.kernel
    }

    /// Sum evaluated kernel by kernel at every quadrature point, bypassing
    /// all structured shortcuts.
    pub fn direct_history_vector(&self, m: usize, hist: &HistoryBuffer) -> Result<Vec<f64>> {
        check_length(hist, self.v.ndofs())?;
        let tm = self.lattice.t(m);
        let lat = self.lattice;
        pointwise_history(&self.v, hist, &mut |_, _, x, j| Ok(self.kernel.eval(x, tm, lat.half(j))))
    }
}

impl DiscreteMemory for KernelMemory {
    fn lattice(&self) -> TimeLattice {
        self.lattice
    }

    fn is_zero(&self) -> bool {
        self.kernel.is_zero()
    }

    fn history_vector(&self, m: usize, hist: &HistoryBuffer) -> Result<Vec<f64>> {
        check_length(hist, self.v.ndofs())?;
        let n = self.v.ndofs();
        let k = self.lattice.k;
        let tm = self.lattice.t(m);
        match &self.kernel {
            MemoryKernel::Zero => Ok(vec![0.0; n]),
            MemoryKernel::Convolution { b, .. } => {
                let mut y = vec![0.0; n];
                for (j, x) in hist.snapshots().iter().enumerate() {
                    axpy(&mut y, k * b(tm - self.lattice.half(j)), x);
                }
                Ok(self.base[0].matvec(&y))
            }
            MemoryKernel::Separable(terms) => {
                if hist.partial_sums().len() != terms.len() {
                    return self.direct_history_vector(m, hist);
                }
                let mut out = vec![0.0; n];
                for ((term, mat), s) in terms.iter().zip(&self.base).zip(hist.partial_sums()) {
                    mat.matvec_into(s, &mut out, (term.a)(tm));
                }
                Ok(out)
            }
            MemoryKernel::General(_) => self.direct_history_vector(m, hist),
        }
    }

    fn lattice_matrix(&self, m: usize, j: usize) -> Result<Arc<SparseMatrix>> {
        if let Some(hit) = self.cache.lock().unwrap().get(&(m, j)) {
            return Ok(hit.clone());
        }
        let (t, s) = (self.lattice.t(m), self.lattice.half(j));
        let mat = match &self.kernel {
            MemoryKernel::Zero => SparseMatrix::zeros(self.v.ndofs(), self.v.ndofs()),
            MemoryKernel::Convolution { b, .. } => self.base[0].scaled(b(t - s)),
            MemoryKernel::Separable(terms) => {
                let coeffs: Vec<f64> = terms.iter().map(|term| (term.a)(t) * (term.b)(s)).collect();
                let combo: Vec<(f64, &SparseMatrix)> = coeffs.iter().copied().zip(&self.base).collect();
                SparseMatrix::linear_combination(&combo)?
            }
            MemoryKernel::General(f) => assemble_mass_v_indexed(&self.v, &mut |_, _, x| f(x, t, s))?,
        };
        let mat = Arc::new(mat);
        self.cache.lock().unwrap().insert((m, j), mat.clone());
        Ok(mat)
    }

    fn self_term_invariant(&self) -> bool {
        self.kernel.is_convolution()
    }

    fn kernel_at(&self, _elem: usize, _qp: usize, x: Point, m: usize, j: usize) -> Result<Mat2> {
        Ok(self.kernel.eval(x, self.lattice.t(m), self.lattice.half(j)))
    }

    fn new_history(&self) -> HistoryBuffer {
        match &self.kernel {
            MemoryKernel::Separable(terms) => {
                HistoryBuffer::with_partial_sums(self.lattice.k, terms.iter().map(|t| t.b.clone()).collect())
            }
            _ => HistoryBuffer::new(self.lattice.k),
        }
    }
}

enum ResolventMode {
    Zero,
    /// `A` and `B` independent of `x`: one table and the four component
    /// mass matrices.
    Constant {
        table: ResolventTable,
        alpha: Mat2,
        comps: Box<[SparseMatrix; 4]>,
    },
    /// One table per assembly quadrature point, indexed `t * nq + q`.
    Pointwise {
        tables: Vec<ResolventTable>,
        alphas: Vec<Mat2>,
        nq: usize,
    },
}

/// The resolvent memory `(M(t_m, s_j) ·, ·)`, `M = R A⁻¹`, of the standard
/// method.
pub struct ResolventMemory {
    v: Arc<DofSpace>,
    lattice: TimeLattice,
    convolution: bool,
    mode: ResolventMode,
}

impl ResolventMemory {
    pub fn new(v: Arc<DofSpace>, kernels: &KernelSet, lattice: TimeLattice, substeps: usize) -> Result<Self> {
        let convolution = kernels.b.is_convolution();
        let mode = if kernels.b.is_zero() {
            ResolventMode::Zero
        } else if kernels.is_spatially_constant() {
            let x = Point::default();
            ResolventMode::Constant {
                table: resolvent_table(kernels, x, lattice, substeps)?,
                alpha: kernels.alpha(x)?,
                comps: Box::new(assemble_component_masses(&v)?),
            }
        } else {
            let nq = quadrature::degree5().len();
            let mut tables = Vec::with_capacity(v.mesh().num_triangles() * nq);
            let mut alphas = Vec::with_capacity(tables.capacity());
            let mut ev = ElementValues::default();
            for t in 0..v.mesh().num_triangles() {
                v.element_values(t, RuleChoice::Assembly, &mut ev);
                for &x in &ev.points {
                    tables.push(resolvent_table(kernels, x, lattice, substeps)?);
                    alphas.push(kernels.alpha(x)?);
                }
            }
            ResolventMode::Pointwise { tables, alphas, nq }
        };
        Ok(Self {
            v,
            lattice,
            convolution,
            mode,
        })
    }
}

impl DiscreteMemory for ResolventMemory {
    fn lattice(&self) -> TimeLattice {
        self.lattice
    }

    fn is_zero(&self) -> bool {
        matches!(self.mode, ResolventMode::Zero)
    }

    fn history_vector(&self, m: usize, hist: &HistoryBuffer) -> Result<Vec<f64>> {
        check_length(hist, self.v.ndofs())?;
        let n = self.v.ndofs();
        let k = self.lattice.k;
        match &self.mode {
            ResolventMode::Zero => Ok(vec![0.0; n]),
            ResolventMode::Constant { table, alpha, comps } => {
                let mut y = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
                for (j, x) in hist.snapshots().iter().enumerate() {
                    let mk = table.get(m, j)? * *alpha;
                    for (slot, c) in y.iter_mut().zip([mk.0[0][0], mk.0[0][1], mk.0[1][0], mk.0[1][1]]) {
                        axpy(slot, k * c, x);
                    }
                }
                let mut out = vec![0.0; n];
                for (c, yy) in comps.iter().zip(&y) {
                    c.matvec_into(yy, &mut out, 1.0);
                }
                Ok(out)
            }
            ResolventMode::Pointwise { tables, alphas, nq } => {
                pointwise_history(&self.v, hist, &mut |t, q, _, j| {
                    let i = t * nq + q;
                    Ok(tables[i].get(m, j)? * alphas[i])
                })
            }
        }
    }

    fn lattice_matrix(&self, m: usize, j: usize) -> Result<Arc<SparseMatrix>> {
        let n = self.v.ndofs();
        Ok(Arc::new(match &self.mode {
            ResolventMode::Zero => SparseMatrix::zeros(n, n),
            ResolventMode::Constant { table, alpha, comps } => {
                let mk = table.get(m, j)? * *alpha;
                SparseMatrix::linear_combination(&[
                    (mk.0[0][0], &comps[0]),
                    (mk.0[0][1], &comps[1]),
                    (mk.0[1][0], &comps[2]),
                    (mk.0[1][1], &comps[3]),
                ])?
            }
            ResolventMode::Pointwise { tables, alphas, nq } => {
                let mut err = None;
                let mat = assemble_mass_v_indexed(&self.v, &mut |t, q, _| {
                    let i = t * nq + q;
                    match tables[i].get(m, j) {
                        Ok(r) => r * alphas[i],
                        Err(e) => {
                            err.get_or_insert(e);
                            Mat2::ZERO
                        }
                    }
                })?;
                if let Some(e) = err {
                    return Err(e);
                }
                mat
            }
        }))
    }

    fn self_term_invariant(&self) -> bool {
        self.convolution
    }

    fn kernel_at(&self, elem: usize, qp: usize, _x: Point, m: usize, j: usize) -> Result<Mat2> {
        match &self.mode {
            ResolventMode::Zero => Ok(Mat2::ZERO),
            ResolventMode::Constant { table, alpha, .. } => Ok(table.get(m, j)? * *alpha),
            ResolventMode::Pointwise { tables, alphas, nq } => {
                let i = elem * nq + qp;
                Ok(tables[i].get(m, j)? * alphas[i])
            }
        }
    }
}
