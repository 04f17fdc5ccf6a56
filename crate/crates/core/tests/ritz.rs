mod common;

use std::sync::Arc;

use hidemix::assembly::{assemble_div_coupling, assemble_div_load, assemble_load_v, assemble_mass_v};
use hidemix::linsolve::{BlockBuilder, BlockLayout};
use hidemix::memory::{KernelSet, MemoryKernel, TimeLattice};
use hidemix::spaces::rt_interpolate;
use hidemix::stepper::Method;
use hidemix::verify::{
    manufactured_problem, projection_study, ritz_volterra_project_extended, ritz_volterra_project_standard, Metric,
    Problem, StudySpec,
};
use hidemix::{MatrixField, Mesh, Point, Rect, SpacePair};

use common::{dense_load, max_abs, max_abs_diff};

/// `u = (1 + t)(x + 2y)`, `A = I`, `B = 0`: discrete in space for every pair.
fn linear_problem() -> Problem {
    Problem {
        name: "linear".into(),
        rect: Rect::UNIT,
        final_time: 1.0,
        kernels: KernelSet::new(MatrixField::identity(), MemoryKernel::Zero),
        u: Arc::new(|x: Point, t| (1.0 + t) * (x.x + 2.0 * x.y)),
        u_t: Arc::new(|x: Point, _| x.x + 2.0 * x.y),
        q: Arc::new(|_, t| Point::new(1.0 + t, 2.0 + 2.0 * t)),
        sigma: Arc::new(|_, t| Point::new(1.0 + t, 2.0 + 2.0 * t)),
        f: None,
    }
}

#[test]
fn discrete_data_is_reproduced() {
    let p = linear_problem();
    let mesh = Arc::new(Mesh::structured(3, 3, Rect::UNIT).unwrap());
    let lat = TimeLattice::new(0.25, 4);
    for pair in [SpacePair::Rt0Dg0, SpacePair::Rt1Dg1] {
        let (v, w) = pair.build(&mesh);
        let ext = ritz_volterra_project_extended(&p, &v, &w, lat).unwrap();
        let std = ritz_volterra_project_standard(&p, &v, &w, lat, 1).unwrap();
        for n in 0..=4 {
            let t = lat.t(n);
            let s = rt_interpolate(&|x| (p.sigma)(x, t), &v).unwrap();
            assert!(max_abs_diff(&ext.sigma[n], &s) < 1e-11);
            assert!(max_abs_diff(&ext.q.as_ref().unwrap()[n], &s) < 1e-11);
            assert!(max_abs_diff(&std.sigma[n], &s) < 1e-11);
            if pair == SpacePair::Rt1Dg1 {
                let u = hidemix::spaces::l2_project_scalar(&|x| (p.u)(x, t), &w).unwrap();
                assert!(max_abs_diff(&ext.u[n], &u) < 1e-11);
                assert!(max_abs_diff(&std.u[n], &u) < 1e-11);
            }
        }
    }
}

#[test]
fn stress_error_is_orthogonal_to_divergences() {
    let p = manufactured_problem("resolvent_expo").unwrap();
    let mesh = Arc::new(Mesh::structured(4, 4, Rect::UNIT).unwrap());
    let lat = TimeLattice::new(0.125, 8);
    for pair in [SpacePair::Rt0Dg0, SpacePair::Rt1Dg1] {
        let (v, w) = pair.build(&mesh);
        let c = assemble_div_coupling(&w, &v).unwrap();
        let traj = ritz_volterra_project_standard(&p, &v, &w, lat, 1).unwrap();
        for n in [0, 3, 8] {
            let t = lat.t(n);
            // σ = g(t) ∇φ with φ = sin(πx) sin(πy), so div σ = −2π² g(t) φ
            let g = 1.0 + t * t - 0.5 * (t + t * t * t / 3.0);
            let pi = std::f64::consts::PI;
            let div_sigma = |x: Point| -2.0 * pi * pi * g * (pi * x.x).sin() * (pi * x.y).sin();
            let r = max_abs_diff(&c.matvec(&traj.sigma[n]), &dense_load(&w, &div_sigma));
            assert!(r < 1e-10, "{pair:?} n={n}: {r}");
        }
    }
}

#[test]
fn zero_memory_standard_projection_is_the_mixed_elliptic_projection() {
    let p = manufactured_problem("wave_standing").unwrap();
    let mesh = Arc::new(Mesh::structured(4, 4, Rect::UNIT).unwrap());
    let (v, w) = SpacePair::Rt1Dg1.build(&mesh);
    let lat = TimeLattice::new(0.25, 4);
    let traj = ritz_volterra_project_standard(&p, &v, &w, lat, 1).unwrap();

    // (σ̃, v) + (ũ, div v) = (σ, v) + (u, div v); (div σ̃, w) = (div σ, w)
    let c = assemble_div_coupling(&w, &v).unwrap();
    let mut b = BlockBuilder::new(BlockLayout::new(&[("s", v.ndofs()), ("u", w.ndofs())]));
    b.add("s", "s", &assemble_mass_v(&v, None).unwrap(), 1.0).unwrap();
    b.add("s", "u", &c.transpose(), 1.0).unwrap();
    b.add("u", "s", &c, 1.0).unwrap();
    let sys = b.factor(true).unwrap();
    for n in 0..=4 {
        let t = lat.t(n);
        let mut top = assemble_load_v(&|x| (p.sigma)(x, t), &v);
        let du = assemble_div_load(&|x| (p.u)(x, t), &v);
        top.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
        let bottom = c.matvec(&rt_interpolate(&|x| (p.sigma)(x, t), &v).unwrap());
        let x = sys.solve(&[top, bottom].concat()).unwrap();
        let (s, u) = x.split_at(v.ndofs());
        assert!(max_abs_diff(s, &traj.sigma[n]) < 1e-10);
        assert!(max_abs_diff(u, &traj.u[n]) < 1e-10);
    }
}

#[test]
fn stress_projection_rates_match_the_element_order() {
    let p = manufactured_problem("resolvent_expo").unwrap();
    for (pair, r) in [(SpacePair::Rt0Dg0, 1.0), (SpacePair::Rt1Dg1, 2.0)] {
        let spec = StudySpec {
            method: Method::Standard,
            pair,
            levels: 3,
            ..StudySpec::default()
        };
        let report = projection_study(&p, &spec).unwrap();
        let o = report.finest_order(Metric::SigmaL2).unwrap();
        assert!((o - r).abs() <= 0.2, "{pair:?}: {o}");
    }
}

#[test]
fn zero_problem_projects_to_zero() {
    let p = manufactured_problem("zero").unwrap();
    let mesh = Arc::new(Mesh::structured(2, 2, Rect::UNIT).unwrap());
    let (v, w) = SpacePair::Rt1Dg1.build(&mesh);
    let traj = ritz_volterra_project_extended(&p, &v, &w, TimeLattice::new(0.5, 2)).unwrap();
    assert!(traj.u.iter().chain(&traj.sigma).all(|x| max_abs(x) == 0.0));
}
