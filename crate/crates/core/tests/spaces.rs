mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use hidemix::spaces::{l2_error_scalar, l2_error_vector, l2_project_scalar, l2_project_vector, rt_interpolate};
use hidemix::{Mesh, Point, Rect, SpaceKind, SpacePair};

use common::{locate, max_abs_diff};

fn pair_on(n: usize, pair: SpacePair) -> (Arc<Mesh>, Arc<hidemix::DofSpace>, Arc<hidemix::DofSpace>) {
    let mesh = Arc::new(Mesh::structured(n, n, Rect::UNIT).unwrap());
    let (v, w) = pair.build(&mesh);
    (mesh, v, w)
}

fn bump(x: Point) -> f64 {
    (PI * x.x).sin() * (PI * x.y).sin()
}

fn grad_bump(x: Point) -> Point {
    Point::new(PI * (PI * x.x).cos() * (PI * x.y).sin(), PI * (PI * x.x).sin() * (PI * x.y).cos())
}

#[test]
fn scalar_projection_error_quarters_on_dg1() {
    let err = |n| {
        let (_, _, w) = pair_on(n, SpacePair::Rt1Dg1);
        l2_error_scalar(&bump, &l2_project_scalar(&bump, &w).unwrap(), &w)
    };
    let r = err(8) / err(16);
    assert!((3.6..=4.4).contains(&r), "{r}");
}

#[test]
fn vector_projection_error_quarters_on_rt1() {
    let err = |n| {
        let (_, v, _) = pair_on(n, SpacePair::Rt1Dg1);
        l2_error_vector(&grad_bump, &l2_project_vector(&grad_bump, &v).unwrap(), &v)
    };
    let r = err(8) / err(16);
    assert!((3.6..=4.4).contains(&r), "{r}");
}

#[test]
fn constant_vectors_are_reproduced_by_rt0() {
    let (_, v, _) = pair_on(3, SpacePair::Rt0Dg0);
    let g = |_: Point| Point::new(1.0, 0.0);
    let p = l2_project_vector(&g, &v).unwrap();
    assert!(l2_error_vector(&g, &p, &v) < 1e-13);
    let pi = rt_interpolate(&g, &v).unwrap();
    assert!(l2_error_vector(&g, &pi, &v) < 1e-13);
}

#[test]
fn vector_projection_is_identity_on_rt1() {
    let (mesh, v, _) = pair_on(2, SpacePair::Rt1Dg1);
    let c: Vec<f64> = (0..v.ndofs()).map(|i| ((i * 7 + 3) % 11) as f64 / 11.0 - 0.5).collect();
    let g = |x: Point| {
        let (t, b) = locate(&mesh, x);
        v.eval_vector(&c, t, b).0
    };
    let p = l2_project_vector(&g, &v).unwrap();
    assert!(max_abs_diff(&p, &c) < 1e-12);
}

#[test]
fn dg0_basis_is_one_everywhere() {
    let (_, _, w) = pair_on(2, SpacePair::Rt0Dg0);
    assert_eq!(w.kind(), SpaceKind::Dg0);
    for t in 0..8 {
        for b in [[1.0, 0.0, 0.0], [0.2, 0.3, 0.5]] {
            assert_eq!(w.eval_basis(t, b).unwrap().scalar, vec![1.0]);
        }
    }
}
