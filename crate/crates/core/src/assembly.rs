//! Global sparse matrices and load vectors.
//!
//! Conventions: `mass_v(K)[i][j] = ∫ (K ψ_j)·ψ_i`, `C[i][j] = (w_i, div ψ_j)`
//! with rows in `W_h` and columns in `V_h`.

use crate::error::{Error, Result};
use crate::fields::{Mat2, MatrixField, Point};
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::spaces::{DofSpace, ElementValues, RuleChoice};

fn require_vector(v: &DofSpace) -> Result<()> {
    if v.kind().is_vector() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{:?} is not an RT space", v.kind())))
    }
}

fn require_scalar(w: &DofSpace) -> Result<()> {
    if w.kind().is_vector() {
        Err(Error::InvalidArgument(format!("{:?} is not a DG space", w.kind())))
    } else {
        Ok(())
    }
}

/// RT mass matrix weighted by an optional matrix coefficient (identity when
/// `None`).
pub fn assemble_mass_v(v: &DofSpace, coeff: Option<&MatrixField>) -> Result<SparseMatrix> {
    match coeff {
        None => assemble_mass_v_with(v, &|_| Mat2::IDENTITY),
        Some(MatrixField::Constant(m)) => {
            let m = *m;
            assemble_mass_v_with(v, &move |_| m)
        }
        Some(field) => assemble_mass_v_with(v, &|x| field.eval(x)),
    }
}

/// RT mass matrix with a pointwise coefficient `x ↦ K(x)`.
pub fn assemble_mass_v_with(v: &DofSpace, coeff: &dyn Fn(Point) -> Mat2) -> Result<SparseMatrix> {
    assemble_mass_v_indexed(v, &mut |_, _, x| coeff(x))
}

/// RT mass matrix with a coefficient that may also depend on the element and
/// quadrature point index (used for tabulated, per-point kernels).
pub fn assemble_mass_v_indexed(
    v: &DofSpace,
    coeff: &mut dyn FnMut(usize, usize, Point) -> Mat2,
) -> Result<SparseMatrix> {
    require_vector(v)?;
    let nloc = v.nloc();
    let nt = v.mesh().num_triangles();
    let mut b = TripletBuilder::with_capacity(v.ndofs(), v.ndofs(), nt * nloc * nloc);
    let mut ev = ElementValues::default();
    let mut local = vec![0.0; nloc * nloc];
    for t in 0..nt {
        v.element_values(t, RuleChoice::Assembly, &mut ev);
        local.iter_mut().for_each(|x| *x = 0.0);
        for q in 0..ev.jxw.len() {
            let k = coeff(t, q, ev.points[q]);
            if !k.is_finite() {
                return Err(Error::Assembly {
                    element: t,
                    reason: format!("non-finite coefficient at ({}, {})", ev.points[q].x, ev.points[q].y),
                });
            }
            for j in 0..nloc {
                let kj = k.apply(ev.vec(q, j));
                for i in 0..nloc {
                    local[i * nloc + j] += ev.jxw[q] * kj.dot(ev.vec(q, i));
                }
            }
        }
        let dofs = v.element_dofs(t);
        for i in 0..nloc {
            for j in 0..nloc {
                b.push(dofs[i], dofs[j], local[i * nloc + j]);
            }
        }
    }
    Ok(b.build())
}

/// The four component mass matrices `K_ab[i][j] = ∫ ψ_{j,b} ψ_{i,a}`, in the
/// order `(0,0), (0,1), (1,0), (1,1)`, so that
/// `mass_v(M) = Σ_ab M_ab K_ab` for a spatially constant `M`.
pub fn assemble_component_masses(v: &DofSpace) -> Result<[SparseMatrix; 4]> {
    let unit = |a: usize, b: usize| {
        let mut m = Mat2::ZERO;
        m.0[a][b] = 1.0;
        m
    };
    Ok([
        assemble_mass_v_with(v, &|_| unit(0, 0))?,
        assemble_mass_v_with(v, &|_| unit(0, 1))?,
        assemble_mass_v_with(v, &|_| unit(1, 0))?,
        assemble_mass_v_with(v, &|_| unit(1, 1))?,
    ])
}

/// Divergence coupling `C[i][j] = (w_i, div ψ_j)`.
pub fn assemble_div_coupling(w: &DofSpace, v: &DofSpace) -> Result<SparseMatrix> {
    require_scalar(w)?;
    require_vector(v)?;
    if !w.same_mesh(v) {
        return Err(Error::InvalidArgument("spaces live on different meshes".into()));
    }
    let (nw, nv) = (w.nloc(), v.nloc());
    let nt = v.mesh().num_triangles();
    let mut b = TripletBuilder::with_capacity(w.ndofs(), v.ndofs(), nt * nw * nv);
    let (mut ew, mut evv) = (ElementValues::default(), ElementValues::default());
    for t in 0..nt {
        w.element_values(t, RuleChoice::Assembly, &mut ew);
        v.element_values(t, RuleChoice::Assembly, &mut evv);
        let (wd, vd) = (w.element_dofs(t), v.element_dofs(t));
        for i in 0..nw {
            for j in 0..nv {
                let s: f64 = (0..ew.jxw.len()).map(|q| ew.jxw[q] * ew.sca(q, i) * evv.dv(q, j)).sum();
                b.push(wd[i], vd[j], s);
            }
        }
    }
    Ok(b.build())
}

/// DG mass matrix.
pub fn assemble_mass_w(w: &DofSpace) -> Result<SparseMatrix> {
    require_scalar(w)?;
    let nloc = w.nloc();
    let nt = w.mesh().num_triangles();
    let mut b = TripletBuilder::with_capacity(w.ndofs(), w.ndofs(), nt * nloc * nloc);
    let mut ev = ElementValues::default();
    for t in 0..nt {
        w.element_values(t, RuleChoice::Assembly, &mut ev);
        let dofs = w.element_dofs(t);
        for i in 0..nloc {
            for j in 0..nloc {
                let s: f64 = (0..ev.jxw.len()).map(|q| ev.jxw[q] * ev.sca(q, i) * ev.sca(q, j)).sum();
                b.push(dofs[i], dofs[j], s);
            }
        }
    }
    Ok(b.build())
}

/// Scalar load `(f, w_i)`.
pub fn assemble_load(f: &dyn Fn(Point) -> f64, w: &DofSpace) -> Vec<f64> {
    let mut out = vec![0.0; w.ndofs()];
    let mut ev = ElementValues::default();
    for t in 0..w.mesh().num_triangles() {
        w.element_values(t, RuleChoice::Assembly, &mut ev);
        let dofs = w.element_dofs(t);
        for q in 0..ev.jxw.len() {
            let fx = ev.jxw[q] * f(ev.points[q]);
            for (i, &d) in dofs.iter().enumerate() {
                out[d] += fx * ev.sca(q, i);
            }
        }
    }
    out
}

/// Vector load `(g, ψ_i)`.
pub fn assemble_load_v(g: &dyn Fn(Point) -> Point, v: &DofSpace) -> Vec<f64> {
    let mut out = vec![0.0; v.ndofs()];
    let mut ev = ElementValues::default();
    for t in 0..v.mesh().num_triangles() {
        v.element_values(t, RuleChoice::Assembly, &mut ev);
        let dofs = v.element_dofs(t);
        for q in 0..ev.jxw.len() {
            let gx = ev.jxw[q] * g(ev.points[q]);
            for (i, &d) in dofs.iter().enumerate() {
                out[d] += gx.dot(ev.vec(q, i));
            }
        }
    }
    out
}

/// Divergence load `(f, div ψ_i)`.
pub fn assemble_div_load(f: &dyn Fn(Point) -> f64, v: &DofSpace) -> Vec<f64> {
    let mut out = vec![0.0; v.ndofs()];
    let mut ev = ElementValues::default();
    for t in 0..v.mesh().num_triangles() {
        v.element_values(t, RuleChoice::Assembly, &mut ev);
        let dofs = v.element_dofs(t);
        for q in 0..ev.jxw.len() {
            let fx = ev.jxw[q] * f(ev.points[q]);
            for (i, &d) in dofs.iter().enumerate() {
                out[d] += fx * ev.dv(q, i);
            }
        }
    }
    out
}

/// Vector load `Σ_q K(x_q) g_h(x_q) · ψ_i` where `g_h` is a discrete RT
/// function and the coefficient may depend on element and point index.
pub fn assemble_weighted_load_v(
    v: &DofSpace,
    coeffs: &[f64],
    kernel: &mut dyn FnMut(usize, usize, Point) -> Mat2,
) -> Vec<f64> {
    let nloc = v.nloc();
    let mut out = vec![0.0; v.ndofs()];
    let mut ev = ElementValues::default();
    for t in 0..v.mesh().num_triangles() {
        v.element_values(t, RuleChoice::Assembly, &mut ev);
        let dofs = v.element_dofs(t);
        for q in 0..ev.jxw.len() {
            let mut gh = Point::default();
            for i in 0..nloc {
                gh = gh + coeffs[dofs[i]] * ev.vec(q, i);
            }
            let kg = ev.jxw[q] * kernel(t, q, ev.points[q]).apply(gh);
            for (i, &d) in dofs.iter().enumerate() {
                out[d] += kg.dot(ev.vec(q, i));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Mesh, Rect};
    use crate::spaces::SpaceKind;
    use std::sync::Arc;

    fn spaces(n: usize, vk: SpaceKind, wk: SpaceKind) -> (DofSpace, DofSpace) {
        let m = Arc::new(Mesh::structured(n, n, Rect::UNIT).unwrap());
        (DofSpace::new(vk, m.clone()), DofSpace::new(wk, m))
    }

    #[test]
    fn dg0_mass_is_areas() {
        let (_, w) = spaces(1, SpaceKind::Rt0, SpaceKind::Dg0);
        let m = assemble_mass_w(&w).unwrap();
        assert_eq!(m.to_dense().data, vec![0.5, 0.0, 0.0, 0.5]);
        assert_eq!(assemble_load(&|_| 1.0, &w), vec![0.5, 0.5]);
        assert_eq!(assemble_load(&|_| 0.0, &w), vec![0.0, 0.0]);
    }

    #[test]
    fn rt0_mass_on_two_triangles_is_spd() {
        let (v, _) = spaces(1, SpaceKind::Rt0, SpaceKind::Dg0);
        let m = assemble_mass_v(&v, None).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (5, 5));
        assert!(m.is_symmetric(1e-13));
        let inv = m.to_dense().inverse();
        assert!(inv.is_ok());
        let twice = assemble_mass_v(&v, Some(&MatrixField::Constant(Mat2::scalar(2.0)))).unwrap();
        for (a, b) in twice.values().iter().zip(m.values()) {
            assert!((a - 2.0 * b).abs() <= 1e-14);
        }
    }

    #[test]
    fn non_finite_coefficient_names_element() {
        let (v, _) = spaces(1, SpaceKind::Rt0, SpaceKind::Dg0);
        let err = assemble_mass_v_with(&v, &|x| {
            if x.x > 0.6 && x.y < 0.4 {
                Mat2::scalar(f64::NAN)
            } else {
                Mat2::IDENTITY
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Assembly { element: 0, .. }));
    }

    #[test]
    fn interior_edge_column_has_opposite_signs() {
        let (v, w) = spaces(1, SpaceKind::Rt0, SpaceKind::Dg0);
        let c = assemble_div_coupling(&w, &v).unwrap().to_dense();
        let mesh = v.mesh();
        for e in 0..mesh.num_edges() {
            let col: Vec<f64> = (0..2).map(|i| c[(i, e)]).filter(|x| x.abs() > 1e-14).collect();
            if mesh.is_boundary_edge(e) {
                assert_eq!(col.len(), 1);
            } else {
                assert_eq!(col.len(), 2);
                assert!((col[0] + col[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mismatched_meshes_are_rejected() {
        let (v, _) = spaces(1, SpaceKind::Rt0, SpaceKind::Dg0);
        let (_, w) = spaces(2, SpaceKind::Rt0, SpaceKind::Dg0);
        assert!(assemble_div_coupling(&w, &v).is_err());
    }

    #[test]
    fn component_masses_recombine() {
        let (v, _) = spaces(2, SpaceKind::Rt1, SpaceKind::Dg1);
        let k = assemble_component_masses(&v).unwrap();
        let m = Mat2([[1.5, -0.25], [0.5, 2.0]]);
        let direct = assemble_mass_v_with(&v, &|_| m).unwrap();
        let combo = SparseMatrix::linear_combination(&[
            (m.0[0][0], &k[0]),
            (m.0[0][1], &k[1]),
            (m.0[1][0], &k[2]),
            (m.0[1][1], &k[3]),
        ])
        .unwrap();
        let (a, b) = (direct.to_dense(), combo.to_dense());
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
