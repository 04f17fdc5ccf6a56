//! Manufactured problems with closed-form solutions on the unit square.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{MatrixField, Point, ScalarFnT, VectorFnT};
use crate::memory::{KernelSet, MemoryKernel};
use crate::mesh::Rect;
use crate::quadrature::integrate_adaptive;

/// Catalog keys accepted by [`manufactured_problem`].
pub const CATALOG: [&str; 5] = ["wave_standing", "exp_memory_poly", "resolvent_expo", "rough_init", "zero"];

/// Exact data of a model problem `u_tt − div σ = f`,
/// `σ = A ∇u − ∫₀ᵗ B(t,s) ∇u(s) ds`, `u = 0` on the boundary.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub rect: Rect,
    pub final_time: f64,
    pub kernels: KernelSet,
    pub u: ScalarFnT,
    /// `∂u/∂t`, used for the initial velocity.
    pub u_t: ScalarFnT,
    /// `q = ∇u`
    pub q: VectorFnT,
    pub sigma: VectorFnT,
    /// `None` means `f ≡ 0`.
    pub f: Option<ScalarFnT>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("kernel", &self.kernels.b)
            .field("final_time", &self.final_time)
            .finish()
    }
}

impl Problem {
    pub fn u0(&self, x: Point) -> f64 {
        (self.u)(x, 0.0)
    }

    pub fn u1(&self, x: Point) -> f64 {
        (self.u_t)(x, 0.0)
    }

    pub fn source(&self, x: Point, t: f64) -> f64 {
        self.f.as_ref().map_or(0.0, |f| f(x, t))
    }

    pub fn is_zero(&self) -> bool {
        self.name == "zero"
    }

    /// Scales the solution (and hence all data) by `c`.
    pub fn scaled(&self, c: f64) -> Problem {
        let mut p = self.clone();
        let (u, ut, q, s) = (self.u.clone(), self.u_t.clone(), self.q.clone(), self.sigma.clone());
        p.u = Arc::new(move |x, t| c * u(x, t));
        p.u_t = Arc::new(move |x, t| c * ut(x, t));
        p.q = Arc::new(move |x, t| c * q(x, t));
        p.sigma = Arc::new(move |x, t| c * s(x, t));
        p.f = self.f.clone().map(|f| -> ScalarFnT { Arc::new(move |x, t| c * f(x, t)) });
        p
    }

    /// Largest PDE and constitutive residual over `samples` random
    /// space-time points, using finite differences for derivatives and
    /// adaptive quadrature for the memory integral.
    pub fn residual(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = self.rect;
        let mut worst = 0.0_f64;
        for _ in 0..samples {
            let x = Point::new(
                r.x0 + (r.x1 - r.x0) * rng.random_range(0.05..0.95),
                r.y0 + (r.y1 - r.y0) * rng.random_range(0.05..0.95),
            );
            let t = self.final_time * rng.random_range(0.05..0.95);
            worst = worst.max(self.pde_residual(x, t).abs());
            worst = worst.max(self.constitutive_residual(x, t));
        }
        worst
    }

    /// `u_tt − div σ − f` at one point.
    pub fn pde_residual(&self, x: Point, t: f64) -> f64 {
        let h = 1e-3;
        let u = |s: f64| (self.u)(x, s);
        let utt = (-u(t + 2.0 * h) + 16.0 * u(t + h) - 30.0 * u(t) + 16.0 * u(t - h) - u(t - 2.0 * h))
            / (12.0 * h * h);
        let d1 = |g: &dyn Fn(f64) -> f64| (-g(2.0 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2.0 * h)) / (12.0 * h);
        let div = d1(&|e| (self.sigma)(Point::new(x.x + e, x.y), t).x)
            + d1(&|e| (self.sigma)(Point::new(x.x, x.y + e), t).y);
        utt - div - self.source(x, t)
    }

    /// `|σ − A q + ∫ B q|` plus the mismatch of `q` with a finite-difference
    /// gradient of `u`.
    pub fn constitutive_residual(&self, x: Point, t: f64) -> f64 {
        let a = self.kernels.a.eval(x);
        let aq = a.apply((self.q)(x, t));
        let mem = |c: usize| {
            integrate_adaptive(
                &|s| {
                    let v = self.kernels.b.eval(x, t, s).apply((self.q)(x, s));
                    if c == 0 {
                        v.x
                    } else {
                        v.y
                    }
                },
                0.0,
                t,
                1e-13,
            )
        };
        let expect = Point::new(aq.x - mem(0), aq.y - mem(1));
        let s = (self.sigma)(x, t);
        let h = 1e-3;
        let d1 = |g: &dyn Fn(f64) -> f64| (-g(2.0 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2.0 * h)) / (12.0 * h);
        let grad = Point::new(
            d1(&|e| (self.u)(Point::new(x.x + e, x.y), t)),
            d1(&|e| (self.u)(Point::new(x.x, x.y + e), t)),
        );
        (s - expect).norm().max((grad - (self.q)(x, t)).norm())
    }
}

fn bump(x: Point) -> f64 {
    (PI * x.x).sin() * (PI * x.y).sin()
}

fn grad_bump(x: Point) -> Point {
    Point::new(PI * (PI * x.x).cos() * (PI * x.y).sin(), PI * (PI * x.x).sin() * (PI * x.y).cos())
}

fn identity_set(b: MemoryKernel) -> KernelSet {
    KernelSet::new(MatrixField::identity(), b)
}

/// Looks up a catalog problem on the unit square with final time 1.
pub fn manufactured_problem(name: &str) -> Result<Problem> {
    let base = |kernels, u: ScalarFnT, u_t: ScalarFnT, q: VectorFnT, sigma: VectorFnT, f: Option<ScalarFnT>| Problem {
        name: name.to_string(),
        rect: Rect::UNIT,
        final_time: 1.0,
        kernels,
        u,
        u_t,
        q,
        sigma,
        f,
    };
    Ok(match name {
        "zero" => base(
            identity_set(MemoryKernel::Zero),
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| Point::default()),
            Arc::new(|_, _| Point::default()),
            None,
        ),
        "wave_standing" => {
            let w = 2f64.sqrt() * PI;
            base(
                identity_set(MemoryKernel::Zero),
                Arc::new(move |x, t| bump(x) * (w * t).cos()),
                Arc::new(move |x, t| -w * bump(x) * (w * t).sin()),
                Arc::new(move |x, t| (w * t).cos() * grad_bump(x)),
                Arc::new(move |x, t| (w * t).cos() * grad_bump(x)),
                None,
            )
        }
        "exp_memory_poly" => {
            // ∫₀ᵗ e^{−(t−s)} (1 + s²) ds = t² − 2t + 3 − 3e^{−t}
            let g = |t: f64| 2.0 * t - 2.0 + 3.0 * (-t).exp();
            base(
                identity_set(MemoryKernel::Convolution {
                    b: Arc::new(|d: f64| (-d).exp()),
                    matrix: MatrixField::identity(),
                }),
                Arc::new(|x, t| bump(x) * (1.0 + t * t)),
                Arc::new(|x, t| 2.0 * t * bump(x)),
                Arc::new(|x, t| (1.0 + t * t) * grad_bump(x)),
                Arc::new(move |x, t| g(t) * grad_bump(x)),
                Some(Arc::new(move |x, t| bump(x) * (2.0 + 2.0 * PI * PI * g(t)))),
            )
        }
        "resolvent_expo" => {
            let c = 0.5;
            let g = move |t: f64| 1.0 + t * t - c * (t + t * t * t / 3.0);
            base(
                identity_set(MemoryKernel::Convolution {
                    b: Arc::new(move |_| c),
                    matrix: MatrixField::identity(),
                }),
                Arc::new(|x, t| bump(x) * (1.0 + t * t)),
                Arc::new(|x, t| 2.0 * t * bump(x)),
                Arc::new(|x, t| (1.0 + t * t) * grad_bump(x)),
                Arc::new(move |x, t| g(t) * grad_bump(x)),
                Some(Arc::new(move |x, t| bump(x) * (2.0 + 2.0 * PI * PI * g(t)))),
            )
        }
        "rough_init" => {
            // truncated eigenexpansion with coefficients (mn)^{-3.6}
            let modes: Arc<Vec<(f64, f64, f64, f64)>> = Arc::new(
                (1..=6)
                    .flat_map(|m| (1..=6).map(move |n| (m as f64, n as f64)))
                    .map(|(m, n)| ((m * n).powf(-3.6), m * PI, n * PI, PI * (m * m + n * n).sqrt()))
                    .collect(),
            );
            let (m1, m2, m3, m4) = (modes.clone(), modes.clone(), modes.clone(), modes);
            base(
                identity_set(MemoryKernel::Zero),
                Arc::new(move |x, t| {
                    m1.iter()
                        .map(|&(a, p, q, w)| a * (p * x.x).sin() * (q * x.y).sin() * (w * t).cos())
                        .sum()
                }),
                Arc::new(move |x, t| {
                    m2.iter()
                        .map(|&(a, p, q, w)| -a * w * (p * x.x).sin() * (q * x.y).sin() * (w * t).sin())
                        .sum()
                }),
                Arc::new(move |x, t| rough_grad(&m3, x, t)),
                Arc::new(move |x, t| rough_grad(&m4, x, t)),
                None,
            )
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown problem `{other}` (known: {})",
                CATALOG.join(", ")
            )))
        }
    })
}

fn rough_grad(modes: &[(f64, f64, f64, f64)], x: Point, t: f64) -> Point {
    modes.iter().fold(Point::default(), |acc, &(a, p, q, w)| {
        let c = a * (w * t).cos();
        acc + Point::new(
            c * p * (p * x.x).cos() * (q * x.y).sin(),
            c * q * (p * x.x).sin() * (q * x.y).cos(),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_problems_satisfy_the_equation() {
        for name in CATALOG {
            let p = manufactured_problem(name).unwrap();
            let r = p.residual(20, 7);
            assert!(r < 1e-8, "{name}: residual {r}");
        }
    }

    #[test]
    fn zero_problem_is_zero() {
        let p = manufactured_problem("zero").unwrap();
        assert_eq!(p.residual(5, 1), 0.0);
        assert!(p.is_zero());
    }

    #[test]
    fn unknown_name_is_rejected() {
        let err = manufactured_problem("nope").unwrap_err().to_string();
        assert!(err.contains("nope"));
    }

    #[test]
    fn broken_source_is_detected() {
        let mut p = manufactured_problem("exp_memory_poly").unwrap();
        p.f = None;
        assert!(p.residual(5, 3) > 1.0);
    }
}
