use std::sync::Arc;

use hidemix::memory::{
    m_kernel, peano_error, quadrature_error, resolvent_table, KernelSet, MemoryKernel, ResolventTable, TimeLattice,
};
use hidemix::{Mat2, MatrixField, Point};

fn constant_kernel(a: Mat2, b: Mat2) -> KernelSet {
    KernelSet::new(
        MatrixField::Constant(a),
        MemoryKernel::Convolution {
            b: Arc::new(|_| 1.0),
            matrix: MatrixField::Constant(b),
        },
    )
}

/// Largest `|R(t_n, s_j) − exact(t_n − s_j) I|` over the table.
fn table_error(t: &ResolventTable, exact: &dyn Fn(f64) -> f64) -> f64 {
    let lat = t.lattice();
    let mut err = 0.0_f64;
    for n in 1..=lat.steps {
        for j in 0..n {
            let r = t.get(n, j).unwrap();
            let e = exact(lat.t(n) - lat.half(j));
            err = err
                .max((r.0[0][0] - e).abs())
                .max((r.0[1][1] - e).abs())
                .max(r.0[0][1].abs())
                .max(r.0[1][0].abs());
        }
    }
    err
}

#[test]
fn midpoint_error_of_a_square_is_closed_form() {
    for (n, k) in [(10, 0.1), (7, 0.3), (64, 1.0 / 64.0)] {
        let exact = -(n as f64) * k * k * k / 12.0;
        let direct = quadrature_error(&|s| s * s, n, k);
        assert!((direct - exact).abs() <= 1e-12 * exact.abs(), "{direct} vs {exact}");
        let peano = peano_error(&|_| 2.0, n, k);
        assert!((peano - exact).abs() <= 1e-12 * exact.abs(), "{peano} vs {exact}");
    }
}

#[test]
fn midpoint_error_vanishes_on_constants_and_linears() {
    assert_eq!(quadrature_error(&|_| 1.0, 12, 0.1), 0.0);
    assert!(quadrature_error(&|s| s, 12, 0.1).abs() < 1e-14);
    assert_eq!(peano_error(&|_| 0.0, 12, 0.1), 0.0);
}

#[test]
fn peano_form_matches_direct_error_for_sin() {
    let direct = quadrature_error(&|s: f64| s.sin(), 8, 0.1);
    let peano = peano_error(&|s: f64| -s.sin(), 8, 0.1);
    assert!((direct - peano).abs() < 1e-10, "{direct} vs {peano}");
}

#[test]
fn resolvent_of_scaled_coefficient_is_exponential() {
    let ks = constant_kernel(Mat2::IDENTITY, Mat2::scalar(0.5));
    let exact = |d: f64| 0.5 * (0.5 * d).exp();
    let x = Point::new(0.3, 0.6);
    let e32 = table_error(&resolvent_table(&ks, x, TimeLattice::new(1.0 / 32.0, 32), 1).unwrap(), &exact);
    let e64 = table_error(&resolvent_table(&ks, x, TimeLattice::new(1.0 / 64.0, 64), 1).unwrap(), &exact);
    assert!(e32 <= 1e-4, "{e32}");
    let ratio = e32 / e64;
    assert!((3.6..=4.4).contains(&ratio), "{ratio}");
}

#[test]
fn unit_resolvent_is_exponential() {
    let ks = constant_kernel(Mat2::IDENTITY, Mat2::IDENTITY);
    let t = resolvent_table(&ks, Point::default(), TimeLattice::new(1.0 / 64.0, 64), 2).unwrap();
    assert!(table_error(&t, &|d: f64| d.exp()) < 1e-5);
}

#[test]
fn m_kernel_of_doubled_coefficient() {
    let two = Mat2::scalar(2.0);
    let ks = constant_kernel(two, two);
    let lat = TimeLattice::new(1.0 / 64.0, 64);
    let x = Point::new(0.5, 0.5);
    let t = resolvent_table(&ks, x, lat, 1).unwrap();
    for (n, j) in [(64, 0), (40, 3), (2, 1)] {
        let m = m_kernel(&ks, &t, x, lat.t(n), lat.half(j)).unwrap();
        let exact = 0.5 * (lat.t(n) - lat.half(j)).exp();
        assert!((m.0[0][0] - exact).abs() < 1e-4);
        assert!(m.0[0][1].abs() < 1e-15);
    }
}

#[test]
fn m_kernel_is_symmetric_for_commuting_symmetric_data() {
    let a = Mat2([[2.0, 0.5], [0.5, 1.0]]);
    // B = A² − A commutes with A
    let b = a * a - a.scale(0.3);
    let ks = constant_kernel(a, b);
    let lat = TimeLattice::new(0.05, 20);
    let x = Point::default();
    let t = resolvent_table(&ks, x, lat, 2).unwrap();
    for n in 1..=20 {
        for j in 0..n {
            let m = m_kernel(&ks, &t, x, lat.t(n), lat.half(j)).unwrap();
            assert!((m.0[0][1] - m.0[1][0]).abs() < 1e-12);
        }
    }
}

#[test]
fn general_kernel_resolvent_converges_under_refinement() {
    // no closed form: compare against a much finer inner march
    let kernel = MemoryKernel::General(Arc::new(|_, t: f64, s: f64| Mat2([[t * s, 0.2], [0.2, (t - s).cos()]])));
    let ks = KernelSet::new(MatrixField::identity(), kernel);
    let lat = TimeLattice::new(0.125, 8);
    let x = Point::default();
    let reference = resolvent_table(&ks, x, lat, 32).unwrap();
    let gap = |sub: usize| {
        let t = resolvent_table(&ks, x, lat, sub).unwrap();
        let mut g = 0.0_f64;
        for n in 1..=8 {
            for j in 0..n {
                g = g.max((t.get(n, j).unwrap() - reference.get(n, j).unwrap()).max_abs());
            }
        }
        g
    };
    let (g1, g2) = (gap(1), gap(2));
    assert!(g1 > 0.0);
    let ratio = g1 / g2;
    assert!((3.0..=5.0).contains(&ratio), "{ratio}");
}

#[test]
fn resolvent_satisfies_its_volterra_equation() {
    // R(t,s) − K − ∫ₛᵗ K R dτ with the trapezoid rule on the table itself
    let ks = constant_kernel(Mat2::IDENTITY, Mat2([[0.5, 0.1], [0.1, 0.3]]));
    let k = 1.0 / 128.0;
    let lat = TimeLattice::new(k, 128);
    let t = resolvent_table(&ks, Point::default(), lat, 1).unwrap();
    let kk = Mat2([[0.5, 0.1], [0.1, 0.3]]);
    // R(t_n, s_0) needs R(τ, s_0) at τ = t_1, …, t_n and at τ = s_0 (= K)
    let n = 128;
    let s0 = lat.half(0);
    let mut integral = (kk * kk).scale(0.5 * (lat.t(1) - s0)) + (kk * t.get(1, 0).unwrap()).scale(0.5 * (lat.t(1) - s0));
    for m in 1..n {
        integral = integral + (kk * (t.get(m, 0).unwrap() + t.get(m + 1, 0).unwrap())).scale(0.5 * k);
    }
    let residual = t.get(n, 0).unwrap() - kk - integral;
    assert!(residual.max_abs() < 1e-4, "{}", residual.max_abs());
}
