mod common;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hidemix::assembly::{assemble_div_coupling, assemble_load, assemble_mass_v, assemble_mass_v_with, assemble_mass_w};
use hidemix::linsolve::Factorization;
use hidemix::sparse::TripletBuilder;
use hidemix::{Mat2, Mesh, Point, Rect, SpacePair};

use common::{dense_div, dense_load, dense_mass_v, dense_mass_w, gauss_solve, max_abs_diff, sparse_vs_dense};

fn small_meshes() -> Vec<Arc<Mesh>> {
    vec![
        Arc::new(Mesh::structured(1, 1, Rect::UNIT).unwrap()),
        Arc::new(Mesh::structured(2, 2, Rect::UNIT).unwrap()),
        Arc::new(Mesh::structured(1, 2, Rect::new(-1.0, 0.5, 2.0, 1.25)).unwrap()),
        Arc::new(
            Mesh::from_parts(
                vec![Point::new(0.0, 0.0), Point::new(1.0, 0.1), Point::new(0.3, 0.9), Point::new(1.2, 1.1)],
                vec![[0, 1, 2], [1, 3, 2]],
            )
            .unwrap(),
        ),
    ]
}

#[test]
fn sparse_assembly_matches_dense_brute_force() {
    // linear, so RT1 products stay within the degree-5 assembly rule
    let coeff = |x: Point| Mat2([[2.0 + x.x, 0.3 * x.y], [0.3 * x.y, 1.0 + x.x - x.y]]);
    for mesh in small_meshes() {
        assert!(mesh.num_triangles() <= 8);
        for pair in [SpacePair::Rt0Dg0, SpacePair::Rt1Dg1] {
            let (v, w) = pair.build(&mesh);
            let id = sparse_vs_dense(&assemble_mass_v(&v, None).unwrap(), &dense_mass_v(&v, &|_| [[1.0, 0.0], [0.0, 1.0]]));
            assert!(id <= 1e-13, "mass_v {id}");
            let var = sparse_vs_dense(&assemble_mass_v_with(&v, &coeff).unwrap(), &dense_mass_v(&v, &|x| coeff(x).0));
            assert!(var <= 1e-13, "weighted mass_v {var}");
            let mw = sparse_vs_dense(&assemble_mass_w(&w).unwrap(), &dense_mass_w(&w));
            assert!(mw <= 1e-13, "mass_w {mw}");
            let c = sparse_vs_dense(&assemble_div_coupling(&w, &v).unwrap(), &dense_div(&w, &v));
            assert!(c <= 1e-13, "div {c}");
            let f = |x: Point| x.x * x.x - 2.0 * x.y + 1.0;
            let l = max_abs_diff(&assemble_load(&f, &w), &dense_load(&w, &f));
            assert!(l <= 1e-13, "load {l}");
        }
    }
}

fn random_system(rng: &mut ChaCha8Rng, n: usize, spd: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let g: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let a = if spd {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| g[k][i] * g[k][j]).sum::<f64>() + if i == j { n as f64 } else { 0.0 })
                    .collect()
            })
            .collect()
    } else {
        g
    };
    let b = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (a, b)
}

#[test]
fn sparse_lu_matches_dense_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..6 {
        let (a, b) = random_system(&mut rng, 50, trial % 2 == 0);
        let mut tb = TripletBuilder::new(50, 50);
        for (i, row) in a.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                tb.push(i, j, x);
            }
        }
        let x = Factorization::new(&tb.build()).unwrap().solve(&b).unwrap();
        let oracle = gauss_solve(a, b);
        let scale = oracle.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        assert!(max_abs_diff(&x, &oracle) <= 1e-10 * scale, "trial {trial}");
    }
}
