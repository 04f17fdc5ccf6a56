//! Sparse direct solves for the per-step block systems.
//!
//! Factorization is a sparse LU with partial pivoting and a fill-reducing
//! column ordering, run sequentially so factors are bitwise reproducible.

use std::sync::Once;

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Par};

use crate::error::{Error, Result};
use crate::sparse::{norm_inf, SparseMatrix, TripletBuilder};

fn sequential() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// A factorized square sparse matrix.
pub struct Factorization {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    matrix: SparseMatrix,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("n", &self.matrix.nrows())
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

impl Factorization {
    pub fn new(m: &SparseMatrix) -> Result<Self> {
        sequential();
        let n = m.nrows();
        if n != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.ncols(),
            });
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..n)
            .flat_map(|i| m.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
            .collect();
        let csc = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let lu = csc.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::SingularMatrix { pivot: index },
            LuError::Generic(g) => Error::Solver(format!("{g:?}")),
        })?;
        let f = Self { lu, matrix: m.clone() };
        // a zero pivot surfaces as a non-finite solution component
        let probe = f.raw_solve(&vec![1.0; n]);
        if let Some(pivot) = probe.iter().position(|x| !x.is_finite()) {
            return Err(Error::SingularMatrix { pivot });
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu.solve_in_place_with_conj(Conj::No, rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solves `A x = b`, with up to two steps of iterative refinement when
    /// the relative residual exceeds `1e-13`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        let mut x = self.raw_solve(b);
        if b.iter().any(|v| !v.is_finite()) {
            // garbage in, garbage out: the caller decides what a NaN means
            return Ok(x);
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix { pivot: i });
        }
        let scale = norm_inf(b).max(f64::MIN_POSITIVE);
        for _ in 0..2 {
            let r = self.residual(&x, b);
            if norm_inf(&r) <= 1e-13 * scale {
                break;
            }
            let dx = self.raw_solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        Ok(x)
    }

    /// `b − A x`.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let mut r = b.to_vec();
        self.matrix.matvec_into(x, &mut r, -1.0);
        r
    }

    /// `‖b − A x‖_∞ / ‖b‖_∞` (absolute when `b = 0`).
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let r = norm_inf(&self.residual(x, b));
        let s = norm_inf(b);
        if s > 0.0 {
            r / s
        } else {
            r
        }
    }
}

/// Convenience wrapper: factor and solve once.
pub fn solve(m: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Factorization::new(m)?.solve(b)
}

/// Named block layout of a square system.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockLayout {
    names: Vec<&'static str>,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(blocks: &[(&'static str, usize)]) -> Self {
        let mut offsets = vec![0];
        for (_, n) in blocks {
            offsets.push(offsets.last().unwrap() + n);
        }
        Self {
            names: blocks.iter().map(|b| b.0).collect(),
            offsets,
        }
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn index(&self, name: &str) -> usize {
        self.names
            .iter()
            .position(|n| *n == name)
            .unwrap_or_else(|| panic!("unknown block {name}"))
    }

    pub fn range(&self, name: &str) -> std::ops::Range<usize> {
        let i = self.index(name);
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn size(&self, name: &str) -> usize {
        self.range(name).len()
    }

    /// Splits a full vector into per-block pieces.
    pub fn split<'a>(&self, x: &'a [f64]) -> Vec<&'a [f64]> {
        (0..self.names.len()).map(|i| &x[self.offsets[i]..self.offsets[i + 1]]).collect()
    }

    /// Concatenates per-block pieces.
    pub fn join(&self, parts: &[&[f64]]) -> Vec<f64> {
        debug_assert_eq!(parts.len(), self.names.len());
        parts.concat()
    }
}

/// A square system built from blocks, with its factorization.
#[derive(Debug)]
pub struct BlockSystem {
    pub layout: BlockLayout,
    pub factor: Factorization,
    pub step_invariant: bool,
}

impl BlockSystem {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.factor.solve(b)
    }
}

/// Accumulates scaled sparse blocks into one square matrix.
pub struct BlockBuilder {
    layout: BlockLayout,
    triplets: TripletBuilder,
}

impl BlockBuilder {
    pub fn new(layout: BlockLayout) -> Self {
        let n = layout.dim();
        Self {
            layout,
            triplets: TripletBuilder::new(n, n),
        }
    }

    pub fn add(&mut self, row: &str, col: &str, m: &SparseMatrix, scale: f64) -> Result<&mut Self> {
        let (r, c) = (self.layout.range(row), self.layout.range(col));
        if m.nrows() != r.len() || m.ncols() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: r.len() * c.len(),
                got: m.nrows() * m.ncols(),
            });
        }
        self.triplets.push_block(r.start, c.start, m, scale);
        Ok(self)
    }

    pub fn matrix(self) -> (BlockLayout, SparseMatrix) {
        (self.layout, self.triplets.build())
    }

    pub fn factor(self, step_invariant: bool) -> Result<BlockSystem> {
        let (layout, m) = self.matrix();
        Ok(BlockSystem {
            layout,
            factor: Factorization::new(&m)?,
            step_invariant,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_dense(rows: &[&[f64]]) -> SparseMatrix {
        let mut b = TripletBuilder::new(rows.len(), rows[0].len());
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
    }

    #[test]
    fn identity_returns_rhs() {
        let x = solve(&SparseMatrix::identity(4), &[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0, 0.5]);
    }

    #[test]
    fn permutation_needs_pivoting() {
        let m = from_dense(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let x = solve(&m, &[1.0, 2.0]).unwrap();
        assert_eq!(x, vec![2.0, 1.0]);
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let m = from_dense(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(Factorization::new(&m), Err(Error::SingularMatrix { .. })));
        let m = from_dense(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(matches!(Factorization::new(&m), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn dimension_mismatch() {
        let f = Factorization::new(&SparseMatrix::identity(3)).unwrap();
        assert!(matches!(f.solve(&[1.0]), Err(Error::DimensionMismatch { expected: 3, got: 1 })));
        assert!(Factorization::new(&SparseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn block_builder_places_blocks() {
        let layout = BlockLayout::new(&[("U", 1), ("Q", 2)]);
        let mut b = BlockBuilder::new(layout);
        b.add("U", "U", &SparseMatrix::identity(1), 2.0).unwrap();
        b.add("Q", "Q", &SparseMatrix::identity(2), 1.0).unwrap();
        b.add("Q", "U", &from_dense(&[&[1.0], &[1.0]]), 1.0).unwrap();
        assert!(b.add("U", "Q", &SparseMatrix::identity(2), 1.0).is_err());
        let sys = b.factor(true).unwrap();
        let x = sys.solve(&[2.0, 2.0, 3.0]).unwrap();
        assert_eq!(sys.layout.split(&x), vec![&[1.0][..], &[1.0, 2.0][..]]);
    }
}
