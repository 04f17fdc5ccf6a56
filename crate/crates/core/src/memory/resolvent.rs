use crate::error::{Error, Result};
use crate::fields::{Mat2, Point};

use super::{KernelSet, TimeLattice};

/// Marches `R(τ_i, s)`, `τ_i = s + iδ`, `i = 0..=imax`, for the Volterra
/// equation `R(t,s) = K(t,s) + ∫ₛᵗ K(t,τ) R(τ,s) dτ` with the composite
/// trapezoid rule. `kernel(i, l)` returns `K(τ_i, τ_l)`.
pub fn march_resolvent(
    kernel: &mut dyn FnMut(usize, usize) -> Result<Mat2>,
    delta: f64,
    imax: usize,
) -> Result<Vec<Mat2>> {
    let mut r = Vec::with_capacity(imax + 1);
    r.push(kernel(0, 0)?);
    for i in 1..=imax {
        let mut rhs = kernel(i, 0)? + (kernel(i, 0)? * r[0]).scale(0.5 * delta);
        for (l, rl) in r.iter().enumerate().skip(1) {
            rhs = rhs + (kernel(i, l)? * *rl).scale(delta);
        }
        let lhs = Mat2::IDENTITY - kernel(i, i)?.scale(0.5 * delta);
        let inv = lhs
            .inverse()
            .ok_or_else(|| Error::Solver(format!("resolvent march: singular step at index {i}")))?;
        r.push(inv * rhs);
    }
    Ok(r)
}

#[derive(Clone, Debug)]
enum Storage {
    /// `R` depends on `t − s` only; entry `d − 1` holds lag `(d − 1/2) k`.
    Lag(Vec<Mat2>),
    /// `rows[j][n − j − 1] = R(t_n, s_j)`.
    Full(Vec<Vec<Mat2>>),
}

/// `R(t_n, s_j)` for `0 ≤ j < n ≤ steps` at one spatial point.
#[derive(Clone, Debug)]
pub struct ResolventTable {
    lattice: TimeLattice,
    substeps: usize,
    storage: Storage,
}

impl ResolventTable {
    /// Tabulates from a kernel `K(t, s)`. With `convolution` set the kernel
    /// must depend on `t − s` only and a single march is done.
    pub fn from_kernel(
        kernel: &dyn Fn(f64, f64) -> Result<Mat2>,
        lattice: TimeLattice,
        substeps: usize,
        convolution: bool,
    ) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::InvalidArgument("substeps must be at least 1".into()));
        }
        let k = lattice.k;
        let n = lattice.steps;
        let delta = k / (2 * substeps) as f64;
        let lattice_index = |d: usize| (2 * d - 1) * substeps;
        let storage = if convolution {
            if n == 0 {
                Storage::Lag(Vec::new())
            } else {
                let imax = lattice_index(n);
                let kappa: Vec<Mat2> = (0..=imax).map(|d| kernel(d as f64 * delta, 0.0)).collect::<Result<_>>()?;
                let r = march_resolvent(&mut |i, l| Ok(kappa[i - l]), delta, imax)?;
                Storage::Lag((1..=n).map(|d| r[lattice_index(d)]).collect())
            }
        } else {
            let mut rows = Vec::with_capacity(n);
            for j in 0..n {
                let s = lattice.half(j);
                let imax = lattice_index(n - j);
                let r = march_resolvent(
                    &mut |i, l| kernel(s + i as f64 * delta, s + l as f64 * delta),
                    delta,
                    imax,
                )?;
                rows.push((1..=n - j).map(|d| r[lattice_index(d)]).collect());
            }
            Storage::Full(rows)
        };
        Ok(Self {
            lattice,
            substeps,
            storage,
        })
    }

    pub fn lattice(&self) -> TimeLattice {
        self.lattice
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// Whether entries depend on `n − j` only.
    pub fn is_lagged(&self) -> bool {
        matches!(self.storage, Storage::Lag(_))
    }

    /// `R(t_n, s_j)`.
    pub fn get(&self, n: usize, j: usize) -> Result<Mat2> {
        if j >= n || n > self.lattice.steps {
            return Err(Error::OffLattice {
                t: self.lattice.t(n),
                s: self.lattice.half(j),
            });
        }
        Ok(match &self.storage {
            Storage::Lag(v) => v[n - j - 1],
            Storage::Full(rows) => rows[j][n - j - 1],
        })
    }

    /// `R(t, s)` for lattice times only; anything else is refused.
    pub fn at(&self, t: f64, s: f64) -> Result<Mat2> {
        match (self.lattice.level_index(t), self.lattice.half_index(s)) {
            (Some(n), Some(j)) if j < n => self.get(n, j),
            _ => Err(Error::OffLattice { t, s }),
        }
    }
}

/// Resolvent table of `A⁻¹(x) B(x, ·, ·)` at the point `x`.
pub fn resolvent_table(
    kernels: &KernelSet,
    x: Point,
    lattice: TimeLattice,
    substeps: usize,
) -> Result<ResolventTable> {
    // fail early on a singular A even when B vanishes
    let alpha = kernels.alpha(x)?;
    let b = &kernels.b;
    ResolventTable::from_kernel(
        &|t, s| Ok(alpha * b.eval(x, t, s)),
        lattice,
        substeps,
        b.is_convolution(),
    )
}

/// `M(t, s) = R(t, s) A⁻¹(x)` on the lattice.
pub fn m_kernel(kernels: &KernelSet, table: &ResolventTable, x: Point, t: f64, s: f64) -> Result<Mat2> {
    Ok(table.at(t, s)? * kernels.alpha(x)?)
}
