use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{Mat2, MatrixField, Point, TimeFn};

pub type KernelFn = Arc<dyn Fn(Point, f64, f64) -> Mat2 + Send + Sync>;

/// One term `a(t) b(s) B_i(x)` of a separable kernel.
#[derive(Clone)]
pub struct SeparableTerm {
    pub a: TimeFn,
    pub b: TimeFn,
    pub matrix: MatrixField,
}

/// The memory kernel `B(x, t, s)`, tagged by structure so that history sums
/// and step matrices can take the cheapest exact path.
#[derive(Clone)]
pub enum MemoryKernel {
    Zero,
    /// `b(t − s) B₀(x)`
    Convolution { b: TimeFn, matrix: MatrixField },
    /// `Σ a_i(t) b_i(s) B_i(x)`
    Separable(Vec<SeparableTerm>),
    General(KernelFn),
}

impl fmt::Debug for MemoryKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind_name())
    }
}

impl MemoryKernel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            MemoryKernel::Zero => "zero",
            MemoryKernel::Convolution { .. } => "convolution",
            MemoryKernel::Separable(_) => "separable",
            MemoryKernel::General(_) => "general",
        }
    }

    pub fn eval(&self, x: Point, t: f64, s: f64) -> Mat2 {
        match self {
            MemoryKernel::Zero => Mat2::ZERO,
            MemoryKernel::Convolution { b, matrix } => matrix.eval(x).scale(b(t - s)),
            MemoryKernel::Separable(terms) => terms
                .iter()
                .fold(Mat2::ZERO, |acc, term| acc + term.matrix.eval(x).scale((term.a)(t) * (term.b)(s))),
            MemoryKernel::General(f) => f(x, t, s),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, MemoryKernel::Zero)
    }

    /// Whether `B(t, s)` depends on `t − s` only.
    pub fn is_convolution(&self) -> bool {
        matches!(self, MemoryKernel::Zero | MemoryKernel::Convolution { .. })
    }

    /// Whether `B` is independent of `x`.
    pub fn is_spatially_constant(&self) -> bool {
        match self {
            MemoryKernel::Zero => true,
            MemoryKernel::Convolution { matrix, .. } => matrix.constant_value().is_some(),
            MemoryKernel::Separable(terms) => terms.iter().all(|t| t.matrix.constant_value().is_some()),
            MemoryKernel::General(_) => false,
        }
    }
}

/// Coefficient `A(x)` and memory kernel `B(x, t, s)`.
#[derive(Clone, Debug)]
pub struct KernelSet {
    pub a: MatrixField,
    pub b: MemoryKernel,
}

impl KernelSet {
    pub fn new(a: MatrixField, b: MemoryKernel) -> Self {
        Self { a, b }
    }

    /// `α(x) = A(x)⁻¹`.
    pub fn alpha(&self, x: Point) -> Result<Mat2> {
        self.a.eval(x).inverse().ok_or(Error::SingularCoefficient { x: x.x, y: x.y })
    }

    /// `A⁻¹(x) B(x, t, s)`, the kernel whose resolvent is tabulated.
    pub fn volterra_kernel(&self, x: Point, t: f64, s: f64) -> Result<Mat2> {
        Ok(self.alpha(x)? * self.b.eval(x, t, s))
    }

    pub fn is_spatially_constant(&self) -> bool {
        self.a.constant_value().is_some() && self.b.is_spatially_constant()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_inverts_a() {
        let ks = KernelSet::new(
            MatrixField::variable(|x| Mat2([[2.0 + x.x, 0.5], [0.5, 1.0 + x.y]])),
            MemoryKernel::Zero,
        );
        for p in [Point::new(0.1, 0.2), Point::new(0.9, 0.4)] {
            let prod = ks.alpha(p).unwrap() * ks.a.eval(p);
            assert!((prod - Mat2::IDENTITY).max_abs() < 1e-12);
        }
    }

    #[test]
    fn singular_a_is_an_error() {
        let ks = KernelSet::new(MatrixField::Constant(Mat2::ZERO), MemoryKernel::Zero);
        assert!(matches!(ks.alpha(Point::new(0.5, 0.5)), Err(Error::SingularCoefficient { .. })));
    }

    #[test]
    fn kernel_kinds_evaluate() {
        let x = Point::new(0.3, 0.3);
        let conv = MemoryKernel::Convolution {
            b: Arc::new(|d: f64| (-d).exp()),
            matrix: MatrixField::identity(),
        };
        assert!((conv.eval(x, 1.0, 0.25).0[0][0] - (-0.75f64).exp()).abs() < 1e-15);
        let sep = MemoryKernel::Separable(vec![SeparableTerm {
            a: Arc::new(|t: f64| (-t).exp()),
            b: Arc::new(|s: f64| s.exp()),
            matrix: MatrixField::identity(),
        }]);
        assert!((sep.eval(x, 1.0, 0.25).0[1][1] - (-0.75f64).exp()).abs() < 1e-15);
        assert!(conv.is_convolution() && !sep.is_convolution());
        assert!(conv.is_spatially_constant() && sep.is_spatially_constant());
        assert_eq!(MemoryKernel::Zero.eval(x, 1.0, 0.0), Mat2::ZERO);
    }
}
