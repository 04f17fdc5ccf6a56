//! Raviart–Thomas and discontinuous Lagrange spaces on a [`Mesh`].
//!
//! RT basis functions are defined on the reference triangle through the
//! degrees of freedom
//! - edge normal moments against Legendre polynomials of degree 0 (RT0) or
//!   0 and 1 (RT1), the edge parametrized in counter-clockwise order, and
//! - for RT1, the two component means over the reference triangle,
//!
//! and mapped to physical elements with the contravariant Piola transform
//! `φ = J φ̂ / det J`. Global edge functionals use the global normal and the
//! low→high vertex parametrization; the local/global relation is a sign.

use std::sync::{Arc, OnceLock};

use crate::dense::{DenseLu, DenseMatrix};
use crate::error::{Error, Result};
use crate::fields::Point;
use crate::mesh::Mesh;
use crate::quadrature::{self, TriangleRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Rt0,
    Rt1,
    Dg0,
    Dg1,
}

impl SpaceKind {
    pub fn is_vector(self) -> bool {
        matches!(self, SpaceKind::Rt0 | SpaceKind::Rt1)
    }

    /// Local dofs per triangle.
    pub fn local_dofs(self) -> usize {
        match self {
            SpaceKind::Rt0 => 3,
            SpaceKind::Rt1 => 8,
            SpaceKind::Dg0 => 1,
            SpaceKind::Dg1 => 3,
        }
    }
}

/// The paired choices `(V_h, W_h)` with `div V_h ⊆ W_h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpacePair {
    Rt0Dg0,
    Rt1Dg1,
}

impl SpacePair {
    pub fn vector_kind(self) -> SpaceKind {
        match self {
            SpacePair::Rt0Dg0 => SpaceKind::Rt0,
            SpacePair::Rt1Dg1 => SpaceKind::Rt1,
        }
    }

    pub fn scalar_kind(self) -> SpaceKind {
        match self {
            SpacePair::Rt0Dg0 => SpaceKind::Dg0,
            SpacePair::Rt1Dg1 => SpaceKind::Dg1,
        }
    }

    /// Approximation order `r` of the pair.
    pub fn order(self) -> usize {
        match self {
            SpacePair::Rt0Dg0 => 1,
            SpacePair::Rt1Dg1 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpacePair::Rt0Dg0 => "rt0",
            SpacePair::Rt1Dg1 => "rt1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rt0" | "rt0/dg0" | "rt0dg0" => Some(SpacePair::Rt0Dg0),
            "rt1" | "rt1/dg1" | "rt1dg1" => Some(SpacePair::Rt1Dg1),
            _ => None,
        }
    }

    pub fn build(self, mesh: &Arc<Mesh>) -> (Arc<DofSpace>, Arc<DofSpace>) {
        (
            Arc::new(DofSpace::new(self.vector_kind(), mesh.clone())),
            Arc::new(DofSpace::new(self.scalar_kind(), mesh.clone())),
        )
    }
}

// Reference RT monomials: value and divergence at (x, y).
fn rt_monomials(kind: SpaceKind, x: f64, y: f64) -> Vec<(Point, f64)> {
    match kind {
        SpaceKind::Rt0 => vec![
            (Point::new(1.0, 0.0), 0.0),
            (Point::new(0.0, 1.0), 0.0),
            (Point::new(x, y), 2.0),
        ],
        SpaceKind::Rt1 => vec![
            (Point::new(1.0, 0.0), 0.0),
            (Point::new(x, 0.0), 1.0),
            (Point::new(y, 0.0), 0.0),
            (Point::new(0.0, 1.0), 0.0),
            (Point::new(0.0, x), 0.0),
            (Point::new(0.0, y), 1.0),
            (Point::new(x * x, x * y), 3.0 * x),
            (Point::new(x * y, y * y), 3.0 * y),
        ],
        _ => unreachable!("not an RT space"),
    }
}

const REF_VERTICES: [Point; 3] = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];

fn legendre_unit(m: usize, s: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0 * s - 1.0,
        _ => unreachable!(),
    }
}

/// Applies the reference dof functionals to a vector field on the reference
/// triangle.
fn reference_functionals(kind: SpaceKind, f: &dyn Fn(Point) -> Point) -> Vec<f64> {
    let moments = if kind == SpaceKind::Rt0 { 1 } else { 2 };
    let (gx, gw) = quadrature::gauss_legendre_unit(6);
    let mut out = Vec::with_capacity(kind.local_dofs());
    for i in 0..3 {
        let a = REF_VERTICES[(i + 1) % 3];
        let b = REF_VERTICES[(i + 2) % 3];
        let d = b - a;
        let len = d.norm();
        let n = Point::new(d.y / len, -d.x / len);
        for m in 0..moments {
            let v: f64 = gx
                .iter()
                .zip(gw)
                .map(|(&s, &w)| w * f(a + s * d).dot(n) * legendre_unit(m, s))
                .sum();
            out.push(v * len);
        }
    }
    if kind == SpaceKind::Rt1 {
        let rule = quadrature::degree5();
        let mut mean = Point::default();
        for q in 0..rule.len() {
            let (x, y) = rule.reference_point(q);
            mean = mean + (0.5 * rule.weights[q]) * f(Point::new(x, y));
        }
        out.push(mean.x);
        out.push(mean.y);
    }
    out
}

/// Coefficients of the reference RT basis in the monomial basis:
/// `basis_j = Σ_k c[k][j] mono_k`.
fn reference_rt_coefficients(kind: SpaceKind) -> &'static DenseMatrix {
    static RT0: OnceLock<DenseMatrix> = OnceLock::new();
    static RT1: OnceLock<DenseMatrix> = OnceLock::new();
    let cell = match kind {
        SpaceKind::Rt0 => &RT0,
        SpaceKind::Rt1 => &RT1,
        _ => unreachable!(),
    };
    cell.get_or_init(|| {
        let n = kind.local_dofs();
        let mut v = DenseMatrix::zeros(n, n);
        for k in 0..n {
            let vals = reference_functionals(kind, &|p: Point| rt_monomials(kind, p.x, p.y)[k].0);
            for (i, val) in vals.into_iter().enumerate() {
                v[(i, k)] = val;
            }
        }
        v.inverse().expect("reference RT dof matrix is unisolvent")
    })
}

/// Reference basis values `(φ̂_j, div φ̂_j)` at a reference point.
pub fn reference_basis(kind: SpaceKind, x: f64, y: f64) -> Vec<(Point, f64)> {
    match kind {
        SpaceKind::Dg0 => vec![(Point::new(1.0, 0.0), 0.0)],
        SpaceKind::Dg1 => vec![
            (Point::new(1.0 - x - y, 0.0), 0.0),
            (Point::new(x, 0.0), 0.0),
            (Point::new(y, 0.0), 0.0),
        ],
        SpaceKind::Rt0 | SpaceKind::Rt1 => {
            let c = reference_rt_coefficients(kind);
            let mono = rt_monomials(kind, x, y);
            (0..kind.local_dofs())
                .map(|j| {
                    let mut val = Point::default();
                    let mut div = 0.0;
                    for (k, (mv, md)) in mono.iter().enumerate() {
                        val = val + c[(k, j)] * *mv;
                        div += c[(k, j)] * md;
                    }
                    (val, div)
                })
                .collect()
        }
    }
}

/// Basis values at a point of one element. Scalar spaces fill `scalar`,
/// RT spaces fill `vector` and `div`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BasisValues {
    pub scalar: Vec<f64>,
    pub vector: Vec<Point>,
    pub div: Vec<f64>,
}

/// Reference values of every basis function at every point of a rule.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub nq: usize,
    pub nloc: usize,
    pub values: Vec<Point>,
    pub div: Vec<f64>,
    pub weights: Vec<f64>,
    pub points: Vec<(f64, f64)>,
}

impl Tabulation {
    fn new(kind: SpaceKind, rule: &TriangleRule) -> Self {
        let nloc = kind.local_dofs();
        let mut values = Vec::with_capacity(rule.len() * nloc);
        let mut div = Vec::with_capacity(rule.len() * nloc);
        let mut points = Vec::with_capacity(rule.len());
        for q in 0..rule.len() {
            let (x, y) = rule.reference_point(q);
            points.push((x, y));
            for (v, d) in reference_basis(kind, x, y) {
                values.push(v);
                div.push(d);
            }
        }
        Self {
            nq: rule.len(),
            nloc,
            values,
            div,
            weights: rule.weights.clone(),
            points,
        }
    }
}

/// Physical basis data on one element at the points of a tabulated rule.
#[derive(Clone, Debug, Default)]
pub struct ElementValues {
    pub element: usize,
    /// `w_q · |T|`
    pub jxw: Vec<f64>,
    pub points: Vec<Point>,
    /// `q * nloc + i`
    pub scalar: Vec<f64>,
    pub vector: Vec<Point>,
    pub div: Vec<f64>,
    pub nloc: usize,
}

impl ElementValues {
    #[inline]
    pub fn vec(&self, q: usize, i: usize) -> Point {
        self.vector[q * self.nloc + i]
    }

    #[inline]
    pub fn sca(&self, q: usize, i: usize) -> f64 {
        self.scalar[q * self.nloc + i]
    }

    #[inline]
    pub fn dv(&self, q: usize, i: usize) -> f64 {
        self.div[q * self.nloc + i]
    }
}

/// Which element rule to evaluate on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleChoice {
    /// 7-point degree-5 rule used for assembly.
    Assembly,
    /// 16-point degree-8 rule used for error norms.
    Norm,
}

/// A finite element space bound to a mesh with global dof numbering.
#[derive(Clone, Debug)]
pub struct DofSpace {
    kind: SpaceKind,
    mesh: Arc<Mesh>,
    ndofs: usize,
    nloc: usize,
    dofs: Vec<usize>,
    signs: Vec<f64>,
    tab_assembly: Tabulation,
    tab_norm: Tabulation,
}

impl DofSpace {
    pub fn new(kind: SpaceKind, mesh: Arc<Mesh>) -> Self {
        let nt = mesh.num_triangles();
        let ne = mesh.num_edges();
        let nloc = kind.local_dofs();
        let mut dofs = Vec::with_capacity(nt * nloc);
        let mut signs = Vec::with_capacity(nt * nloc);
        let ndofs = match kind {
            SpaceKind::Dg0 => nt,
            SpaceKind::Dg1 => 3 * nt,
            SpaceKind::Rt0 => ne,
            SpaceKind::Rt1 => 2 * ne + 2 * nt,
        };
        for t in 0..nt {
            match kind {
                SpaceKind::Dg0 | SpaceKind::Dg1 => {
                    for i in 0..nloc {
                        dofs.push(t * nloc + i);
                        signs.push(1.0);
                    }
                }
                SpaceKind::Rt0 => {
                    for se in mesh.triangle_edges(t) {
                        dofs.push(se.edge);
                        signs.push(f64::from(se.sign));
                    }
                }
                SpaceKind::Rt1 => {
                    for se in mesh.triangle_edges(t) {
                        dofs.push(2 * se.edge);
                        signs.push(f64::from(se.sign));
                        // first-moment functionals flip with the normal and
                        // with the parametrization, which always disagree
                        dofs.push(2 * se.edge + 1);
                        signs.push(-1.0);
                    }
                    dofs.push(2 * ne + 2 * t);
                    signs.push(1.0);
                    dofs.push(2 * ne + 2 * t + 1);
                    signs.push(1.0);
                }
            }
        }
        Self {
            kind,
            mesh,
            ndofs,
            nloc,
            dofs,
            signs,
            tab_assembly: Tabulation::new(kind, quadrature::degree5()),
            tab_norm: Tabulation::new(kind, quadrature::degree8()),
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    pub fn nloc(&self) -> usize {
        self.nloc
    }

    pub fn element_dofs(&self, t: usize) -> &[usize] {
        &self.dofs[t * self.nloc..(t + 1) * self.nloc]
    }

    pub fn element_signs(&self, t: usize) -> &[f64] {
        &self.signs[t * self.nloc..(t + 1) * self.nloc]
    }

    pub fn tabulation(&self, rule: RuleChoice) -> &Tabulation {
        match rule {
            RuleChoice::Assembly => &self.tab_assembly,
            RuleChoice::Norm => &self.tab_norm,
        }
    }

    pub fn same_mesh(&self, other: &DofSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    /// Evaluates all local basis functions of element `tri` at the
    /// barycentric point `bary`.
    pub fn eval_basis(&self, tri: usize, bary: [f64; 3]) -> Result<BasisValues> {
        if tri >= self.mesh.num_triangles() {
            return Err(Error::ElementOutOfRange {
                index: tri,
                count: self.mesh.num_triangles(),
            });
        }
        if bary.iter().any(|&l| !(-1e-12..=1.0 + 1e-12).contains(&l))
            || (bary.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(Error::InvalidArgument(format!(
                "{bary:?} is not a point of the reference triangle"
            )));
        }
        let refv = reference_basis(self.kind, bary[1], bary[2]);
        let signs = self.element_signs(tri);
        let mut out = BasisValues::default();
        if self.kind.is_vector() {
            let map = self.mesh.element_map(tri);
            for (i, (v, d)) in refv.into_iter().enumerate() {
                let s = signs[i] / map.det;
                out.vector.push(s * map.jacobian.apply(v));
                out.div.push(s * d);
            }
        } else {
            out.scalar = refv.into_iter().map(|(v, _)| v.x).collect();
        }
        Ok(out)
    }

    /// Fills `ev` with physical basis data of element `t`.
    pub fn element_values(&self, t: usize, rule: RuleChoice, ev: &mut ElementValues) {
        let tab = self.tabulation(rule);
        let map = self.mesh.element_map(t);
        let area = map.area();
        ev.element = t;
        ev.nloc = self.nloc;
        ev.jxw.clear();
        ev.points.clear();
        ev.scalar.clear();
        ev.vector.clear();
        ev.div.clear();
        let signs = self.element_signs(t);
        for q in 0..tab.nq {
            let (x, y) = tab.points[q];
            ev.jxw.push(tab.weights[q] * area);
            ev.points.push(map.to_physical(x, y));
            for i in 0..self.nloc {
                let k = q * self.nloc + i;
                if self.kind.is_vector() {
                    let s = signs[i] / map.det;
                    ev.vector.push(s * map.jacobian.apply(tab.values[k]));
                    ev.div.push(s * tab.div[k]);
                } else {
                    ev.scalar.push(tab.values[k].x);
                }
            }
        }
    }

    /// Value of a discrete scalar function on element `t` at a barycentric
    /// point.
    pub fn eval_scalar(&self, coeffs: &[f64], t: usize, bary: [f64; 3]) -> f64 {
        debug_assert!(!self.kind.is_vector());
        let dofs = self.element_dofs(t);
        match self.kind {
            SpaceKind::Dg0 => coeffs[dofs[0]],
            _ => dofs.iter().zip(bary).map(|(&d, l)| coeffs[d] * l).sum(),
        }
    }

    /// Value and divergence of a discrete vector function on element `t`.
    pub fn eval_vector(&self, coeffs: &[f64], t: usize, bary: [f64; 3]) -> (Point, f64) {
        debug_assert!(self.kind.is_vector());
        let map = self.mesh.element_map(t);
        let refv = reference_basis(self.kind, bary[1], bary[2]);
        let mut val = Point::default();
        let mut div = 0.0;
        for ((&d, &s), (v, dv)) in self.element_dofs(t).iter().zip(self.element_signs(t)).zip(refv) {
            let c = coeffs[d] * s / map.det;
            val = val + c * map.jacobian.apply(v);
            div += c * dv;
        }
        (val, div)
    }
}

/// `P_h f`: the L² projection onto a DG space, computed element by element.
pub fn l2_project_scalar(f: &dyn Fn(Point) -> f64, space: &DofSpace) -> Result<Vec<f64>> {
    if space.kind().is_vector() {
        return Err(Error::InvalidArgument("scalar projection needs a DG space".into()));
    }
    let nloc = space.nloc();
    let mut out = vec![0.0; space.ndofs()];
    let mut ev = ElementValues::default();
    for t in 0..space.mesh().num_triangles() {
        space.element_values(t, RuleChoice::Assembly, &mut ev);
        let mut mass = DenseMatrix::zeros(nloc, nloc);
        let mut load = vec![0.0; nloc];
        for q in 0..ev.jxw.len() {
            let fx = f(ev.points[q]);
            for i in 0..nloc {
                load[i] += ev.jxw[q] * fx * ev.sca(q, i);
                for j in 0..nloc {
                    mass[(i, j)] += ev.jxw[q] * ev.sca(q, i) * ev.sca(q, j);
                }
            }
        }
        let x = DenseLu::new(mass)?.solve(&load);
        for (i, &d) in space.element_dofs(t).iter().enumerate() {
            out[d] = x[i];
        }
    }
    Ok(out)
}

/// L² projection of a vector field onto an RT space (global mass solve).
pub fn l2_project_vector(g: &dyn Fn(Point) -> Point, space: &DofSpace) -> Result<Vec<f64>> {
    if !space.kind().is_vector() {
        return Err(Error::InvalidArgument("vector projection needs an RT space".into()));
    }
    let mass = crate::assembly::assemble_mass_v(space, None)?;
    let load = crate::assembly::assemble_load_v(g, space);
    crate::linsolve::Factorization::new(&mass)?.solve(&load)
}

/// `Π_h g`: the canonical RT interpolant, reproducing edge moments and (for
/// RT1) element means of `g`.
pub fn rt_interpolate(g: &dyn Fn(Point) -> Point, space: &DofSpace) -> Result<Vec<f64>> {
    let kind = space.kind();
    if !kind.is_vector() {
        return Err(Error::InvalidArgument("interpolation needs an RT space".into()));
    }
    let mesh = space.mesh();
    let moments = if kind == SpaceKind::Rt0 { 1 } else { 2 };
    let mut out = vec![0.0; space.ndofs()];
    let (gx, gw) = quadrature::gauss_legendre_unit(8);
    for (e, &[lo, hi]) in mesh.edges().iter().enumerate() {
        let a = mesh.vertices()[lo];
        let d = mesh.vertices()[hi] - a;
        let len = d.norm();
        let n = mesh.edge_normal(e);
        for m in 0..moments {
            let v: f64 = gx
                .iter()
                .zip(gw)
                .map(|(&s, &w)| w * g(a + s * d).dot(n) * legendre_unit(m, s))
                .sum();
            out[moments * e + m] = v * len;
        }
    }
    if kind == SpaceKind::Rt1 {
        let ne = mesh.num_edges();
        let rule = quadrature::degree8();
        for t in 0..mesh.num_triangles() {
            let map = mesh.element_map(t);
            let mut integral = Point::default();
            for q in 0..rule.len() {
                let (x, y) = rule.reference_point(q);
                integral = integral + (rule.weights[q] * map.area()) * g(map.to_physical(x, y));
            }
            let r = map.jacobian_inv.apply(integral);
            out[2 * ne + 2 * t] = r.x;
            out[2 * ne + 2 * t + 1] = r.y;
        }
    }
    Ok(out)
}

/// `‖f − f_h‖_{L²}` with the 16-point rule.
pub fn l2_error_scalar(f: &dyn Fn(Point) -> f64, coeffs: &[f64], space: &DofSpace) -> f64 {
    let mut ev = ElementValues::default();
    let mut sum = 0.0;
    for t in 0..space.mesh().num_triangles() {
        space.element_values(t, RuleChoice::Norm, &mut ev);
        let dofs = space.element_dofs(t);
        for q in 0..ev.jxw.len() {
            let uh: f64 = (0..ev.nloc).map(|i| coeffs[dofs[i]] * ev.sca(q, i)).sum();
            let e = f(ev.points[q]) - uh;
            sum += ev.jxw[q] * e * e;
        }
    }
    sum.sqrt()
}

/// `‖g − g_h‖_{L²}` with the 16-point rule.
pub fn l2_error_vector(g: &dyn Fn(Point) -> Point, coeffs: &[f64], space: &DofSpace) -> f64 {
    let mut ev = ElementValues::default();
    let mut sum = 0.0;
    for t in 0..space.mesh().num_triangles() {
        space.element_values(t, RuleChoice::Norm, &mut ev);
        let dofs = space.element_dofs(t);
        for q in 0..ev.jxw.len() {
            let mut gh = Point::default();
            for i in 0..ev.nloc {
                gh = gh + coeffs[dofs[i]] * ev.vec(q, i);
            }
            let e = g(ev.points[q]) - gh;
            sum += ev.jxw[q] * e.dot(e);
        }
    }
    sum.sqrt()
}

/// `max |f − f_h|` sampled on the six-point lattice of each triangle.
pub fn linf_error_scalar(f: &dyn Fn(Point) -> f64, coeffs: &[f64], space: &DofSpace) -> f64 {
    let mesh = space.mesh();
    let mut worst = 0.0_f64;
    for t in 0..mesh.num_triangles() {
        let map = mesh.element_map(t);
        for bary in quadrature::linf_lattice() {
            let x = map.to_physical(bary[1], bary[2]);
            worst = worst.max((f(x) - space.eval_scalar(coeffs, t, bary)).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::structured(n, n, Rect::UNIT).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m = mesh(3);
        let (ne, nt) = (m.num_edges(), m.num_triangles());
        assert_eq!(DofSpace::new(SpaceKind::Rt0, m.clone()).ndofs(), ne);
        assert_eq!(DofSpace::new(SpaceKind::Rt1, m.clone()).ndofs(), 2 * ne + 2 * nt);
        assert_eq!(DofSpace::new(SpaceKind::Dg0, m.clone()).ndofs(), nt);
        assert_eq!(DofSpace::new(SpaceKind::Dg1, m).ndofs(), 3 * nt);
    }

    #[test]
    fn reference_basis_is_dual_to_functionals() {
        for kind in [SpaceKind::Rt0, SpaceKind::Rt1] {
            let n = kind.local_dofs();
            for j in 0..n {
                let vals = reference_functionals(kind, &|p: Point| reference_basis(kind, p.x, p.y)[j].0);
                for (i, v) in vals.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-12, "{kind:?} ℓ_{i}(φ_{j}) = {v}");
                }
            }
        }
    }

    #[test]
    fn rt0_divergence_is_unit_flux_over_area() {
        let m = mesh(2);
        let v = DofSpace::new(SpaceKind::Rt0, m.clone());
        for t in 0..m.num_triangles() {
            let vals = v.eval_basis(t, [0.2, 0.3, 0.5]).unwrap();
            // dofs are total normal fluxes, so ∫_T div φ_i = ±1
            for (i, se) in m.triangle_edges(t).iter().enumerate() {
                let expect = f64::from(se.sign) / m.area(t);
                assert!((vals.div[i] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn global_basis_is_dual_to_global_functionals() {
        // Π_h of a single global basis function must return the unit vector.
        let m = mesh(2);
        for kind in [SpaceKind::Rt0, SpaceKind::Rt1] {
            let v = DofSpace::new(kind, m.clone());
            for j in 0..v.ndofs() {
                let mut c = vec![0.0; v.ndofs()];
                c[j] = 1.0;
                let eval = |p: Point| eval_global(&v, &c, p);
                let back = rt_interpolate(&eval, &v).unwrap();
                for (i, b) in back.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((b - expect).abs() < 1e-10, "{kind:?} dof {i} of basis {j}: {b}");
                }
            }
        }
    }

    // Evaluates a discrete field at a physical point; on shared edges the
    // normal component is single-valued, which is all the interpolant uses.
    fn eval_global(v: &DofSpace, c: &[f64], p: Point) -> Point {
        let m = v.mesh();
        for t in 0..m.num_triangles() {
            let map = m.element_map(t);
            let r = map.jacobian_inv.apply(p - map.origin);
            let bary = [1.0 - r.x - r.y, r.x, r.y];
            if bary.iter().all(|&l| l >= -1e-12) {
                let b = bary.map(|l| l.clamp(0.0, 1.0));
                let s: f64 = b.iter().sum();
                return v.eval_vector(c, t, b.map(|l| l / s)).0;
            }
        }
        panic!("point outside mesh")
    }

    #[test]
    fn eval_basis_rejects_bad_input() {
        let m = mesh(1);
        let v = DofSpace::new(SpaceKind::Dg0, m);
        assert!(matches!(
            v.eval_basis(7, [1.0, 0.0, 0.0]),
            Err(Error::ElementOutOfRange { index: 7, .. })
        ));
        assert!(v.eval_basis(0, [1.5, -0.5, 0.0]).is_err());
        assert_eq!(v.eval_basis(1, [0.2, 0.2, 0.6]).unwrap().scalar, vec![1.0]);
    }

    #[test]
    fn constants_are_projected_exactly() {
        let m = mesh(3);
        for kind in [SpaceKind::Dg0, SpaceKind::Dg1] {
            let w = DofSpace::new(kind, m.clone());
            let c = l2_project_scalar(&|_| 2.5, &w).unwrap();
            assert!(l2_error_scalar(&|_| 2.5, &c, &w) < 1e-13);
        }
        for kind in [SpaceKind::Rt0, SpaceKind::Rt1] {
            let v = DofSpace::new(kind, m.clone());
            let g = |_: Point| Point::new(1.0, 0.0);
            let c = l2_project_vector(&g, &v).unwrap();
            assert!(l2_error_vector(&g, &c, &v) < 1e-12);
        }
    }

    #[test]
    fn unit_function_has_unit_norm() {
        let m = mesh(2);
        let w = DofSpace::new(SpaceKind::Dg1, m);
        let zero = vec![0.0; w.ndofs()];
        assert!((l2_error_scalar(&|_| 1.0, &zero, &w) - 1.0).abs() < 1e-14);
        assert!((linf_error_scalar(&|_| 1.0, &zero, &w) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn interpolation_of_rotation_is_divergence_free() {
        let m = mesh(3);
        for kind in [SpaceKind::Rt0, SpaceKind::Rt1] {
            let v = DofSpace::new(kind, m.clone());
            let c = rt_interpolate(&|p: Point| Point::new(p.y, -p.x), &v).unwrap();
            for t in 0..m.num_triangles() {
                let (_, d) = v.eval_vector(&c, t, [0.3, 0.3, 0.4]);
                assert!(d.abs() < 1e-11);
            }
            let c = rt_interpolate(&|p: Point| p, &v).unwrap();
            for t in 0..m.num_triangles() {
                let (_, d) = v.eval_vector(&c, t, [0.1, 0.6, 0.3]);
                assert!((d - 2.0).abs() < 1e-11);
            }
        }
    }
}
