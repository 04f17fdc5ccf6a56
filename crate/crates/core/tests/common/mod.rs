//! Brute-force reference computations shared by the integration tests.
#![allow(dead_code)]

use hidemix::quadrature::degree8;
use hidemix::{DofSpace, Point};

/// Global basis function `i` of a vector space evaluated on element `t`.
fn global_vector(v: &DofSpace, i: usize, t: usize, bary: [f64; 3]) -> (Point, f64) {
    let mut e = vec![0.0; v.ndofs()];
    e[i] = 1.0;
    v.eval_vector(&e, t, bary)
}

fn global_scalar(w: &DofSpace, i: usize, t: usize, bary: [f64; 3]) -> f64 {
    let mut e = vec![0.0; w.ndofs()];
    e[i] = 1.0;
    w.eval_scalar(&e, t, bary)
}

/// `Σ_T ∫_T f(x, bary)` with the 16-point rule.
fn integrate(space: &DofSpace, f: &mut dyn FnMut(usize, [f64; 3], Point) -> f64) -> f64 {
    let mesh = space.mesh();
    let rule = degree8();
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let map = mesh.element_map(t);
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            total += w * map.area() * f(t, *b, map.to_physical(b[1], b[2]));
        }
    }
    total
}

/// `M[i][j] = (A ψ_j, ψ_i)` by looping over all pairs of global functions.
pub fn dense_mass_v(v: &DofSpace, a: &dyn Fn(Point) -> [[f64; 2]; 2]) -> Vec<Vec<f64>> {
    let n = v.ndofs();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = integrate(v, &mut |t, b, x| {
                let (pi, _) = global_vector(v, i, t, b);
                let (pj, _) = global_vector(v, j, t, b);
                let c = a(x);
                let apj = Point::new(c[0][0] * pj.x + c[0][1] * pj.y, c[1][0] * pj.x + c[1][1] * pj.y);
                apj.dot(pi)
            });
        }
    }
    m
}

pub fn dense_mass_w(w: &DofSpace) -> Vec<Vec<f64>> {
    let n = w.ndofs();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = integrate(w, &mut |t, b, _| global_scalar(w, i, t, b) * global_scalar(w, j, t, b));
        }
    }
    m
}

/// `C[i][j] = (div ψ_j, w_i)`
pub fn dense_div(w: &DofSpace, v: &DofSpace) -> Vec<Vec<f64>> {
    let (nw, nv) = (w.ndofs(), v.ndofs());
    let mut m = vec![vec![0.0; nv]; nw];
    for i in 0..nw {
        for j in 0..nv {
            m[i][j] = integrate(w, &mut |t, b, _| global_scalar(w, i, t, b) * global_vector(v, j, t, b).1);
        }
    }
    m
}

pub fn dense_load(w: &DofSpace, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
    (0..w.ndofs())
        .map(|i| integrate(w, &mut |t, b, x| f(x) * global_scalar(w, i, t, b)))
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest entrywise gap between a sparse matrix and a dense one.
pub fn sparse_vs_dense(s: &hidemix::sparse::SparseMatrix, d: &[Vec<f64>]) -> f64 {
    assert_eq!(s.nrows(), d.len());
    let mut gap = 0.0_f64;
    for (i, row) in d.iter().enumerate() {
        assert_eq!(s.ncols(), row.len());
        for (j, &x) in row.iter().enumerate() {
            gap = gap.max((s.get(i, j) - x).abs());
        }
    }
    gap
}

/// Element containing `x` and its barycentric coordinates there.
pub fn locate(mesh: &hidemix::Mesh, x: Point) -> (usize, [f64; 3]) {
    let mut best = (0, [1.0, 0.0, 0.0], f64::NEG_INFINITY);
    for t in 0..mesh.num_triangles() {
        let map = mesh.element_map(t);
        let r = map.jacobian_inv.apply(x - map.origin);
        let b = [1.0 - r.x - r.y, r.x, r.y];
        let worst = b.iter().cloned().fold(f64::INFINITY, f64::min);
        if worst > best.2 {
            best = (t, b, worst);
        }
    }
    let mut b = best.1;
    // clamp round-off so the point is a valid reference point
    for l in &mut b {
        *l = l.max(0.0);
    }
    let s: f64 = b.iter().sum();
    (best.0, b.map(|l| l / s))
}
