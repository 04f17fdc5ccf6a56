//! Quadrature rules on the reference triangle and on intervals.

use std::sync::OnceLock;

/// A rule on the reference triangle with vertices (0,0), (1,0), (0,1).
/// Weights sum to 1, so an integral over a physical triangle is
/// `area * Σ w_i f(x_i)`.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    /// Barycentric coordinates (λ0, λ1, λ2); the reference point is (λ1, λ2).
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn reference_point(&self, i: usize) -> (f64, f64) {
        (self.points[i][1], self.points[i][2])
    }
}

fn push_orbit3(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    for p in [[b, a, a], [a, b, a], [a, a, b]] {
        points.push(p);
        weights.push(w);
    }
}

fn push_orbit6(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, a: f64, b: f64, w: f64) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        points.push(p);
        weights.push(w);
    }
}

/// Symmetric 7-point rule, exact for polynomials of degree 5.
pub fn degree5() -> &'static TriangleRule {
    static RULE: OnceLock<TriangleRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let s15 = 15.0_f64.sqrt();
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![9.0 / 40.0];
        push_orbit3(&mut points, &mut weights, (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
        push_orbit3(&mut points, &mut weights, (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
        TriangleRule {
            points,
            weights,
            degree: 5,
        }
    })
}

/// Symmetric 16-point rule, exact for polynomials of degree 8.
pub fn degree8() -> &'static TriangleRule {
    static RULE: OnceLock<TriangleRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![0.144_315_607_677_787];
        push_orbit3(&mut points, &mut weights, 0.459_292_588_292_723, 0.095_091_634_267_285);
        push_orbit3(&mut points, &mut weights, 0.170_569_307_751_760, 0.103_217_370_534_718);
        push_orbit3(&mut points, &mut weights, 0.050_547_228_317_031, 0.032_458_497_623_198);
        push_orbit6(
            &mut points,
            &mut weights,
            0.008_394_777_409_958,
            0.263_112_829_634_638,
            0.027_230_314_174_435,
        );
        TriangleRule {
            points,
            weights,
            degree: 8,
        }
    })
}

/// Six-point sampling lattice per triangle (vertices and edge midpoints),
/// used for max-norm sampling.
pub fn linf_lattice() -> [[f64; 3]; 6] {
    [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
    ]
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss–Legendre rule mapped to [0, 1], cached for small orders.
pub fn gauss_legendre_unit(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        (1..=20)
            .map(|m| {
                let (x, w) = gauss_legendre(m);
                (
                    x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
                    w.iter().map(|v| 0.5 * v).collect(),
                )
            })
            .collect()
    });
    &cache[n - 1]
}

fn gl_interval(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gauss_legendre_unit(10);
    let len = b - a;
    x.iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(a + len * xi))
        .sum::<f64>()
        * len
}

/// Adaptive 10-point Gauss–Legendre integration of `f` over `[a, b]`.
pub fn integrate_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = gl_interval(f, a, m);
        let right = gl_interval(f, m, b);
        let refined = left + right;
        // roundoff floor keeps tiny tolerances from recursing forever
        let floor = 32.0 * f64::EPSILON * (left.abs() + right.abs());
        if depth == 0 || (refined - whole).abs() <= tol.max(floor) {
            return refined;
        }
        recurse(f, a, m, left, 0.5 * tol, depth - 1) + recurse(f, m, b, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(f, a, b, gl_interval(f, a, b), tol, 30)
}
