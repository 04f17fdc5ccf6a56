//! Volterra memory: kernels, history sums on the staggered time lattice,
//! the midpoint quadrature error, and resolvent tables.

mod history;
mod kernel;
mod quad;
mod resolvent;

pub use history::{
    history_sum, DiscreteMemory, HistoryBuffer, HistorySum, KernelMemory, ResolventMemory,
};
pub use kernel::{KernelFn, KernelSet, MemoryKernel, SeparableTerm};
pub use quad::{midpoint_sum, peano_error, peano_kernel, quadrature_error};
pub use resolvent::{m_kernel, resolvent_table, ResolventTable};

/// Uniform time levels `t_n = n k`, `n = 0..=steps`, and half levels
/// `s_j = (j + 1/2) k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeLattice {
    pub k: f64,
    pub steps: usize,
}

impl TimeLattice {
    pub fn new(k: f64, steps: usize) -> Self {
        Self { k, steps }
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.k
    }

    pub fn half(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.k
    }

    pub fn final_time(&self) -> f64 {
        self.t(self.steps)
    }

    /// Index `n` with `t_n = t`, if `t` lies on the lattice.
    pub fn level_index(&self, t: f64) -> Option<usize> {
        let r = t / self.k;
        let n = r.round();
        ((r - n).abs() <= 1e-9 && n >= 0.0 && n as usize <= self.steps).then_some(n as usize)
    }

    /// Index `j` with `s_j = s`, if `s` is a half level.
    pub fn half_index(&self, s: f64) -> Option<usize> {
        let r = s / self.k - 0.5;
        let j = r.round();
        ((r - j).abs() <= 1e-9 && j >= 0.0 && (j as usize) < self.steps).then_some(j as usize)
    }
}
