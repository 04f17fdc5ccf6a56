//! Structured triangulations of rectangles.
//!
//! Edges carry a global orientation: the tangent runs from the lower to the
//! higher vertex index and the global normal is that tangent rotated 90°
//! counter-clockwise. Each triangle stores, for its local edge `i` (opposite
//! local vertex `i`), the global edge index and the sign relating its outward
//! normal to the global normal.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fields::{Mat2, Point};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignedEdge {
    pub edge: usize,
    /// +1 when the local outward normal equals the global edge normal.
    pub sign: i8,
}

/// Affine map from the reference triangle: `x = p0 + J x̂`.
#[derive(Clone, Copy, Debug)]
pub struct ElementMap {
    pub origin: Point,
    pub jacobian: Mat2,
    pub jacobian_inv: Mat2,
    pub det: f64,
}

impl ElementMap {
    pub fn to_physical(&self, xi: f64, eta: f64) -> Point {
        self.origin + self.jacobian.apply(Point::new(xi, eta))
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    tri_to_edge: Vec<[SignedEdge; 3]>,
    edge_to_tri: Vec<[Option<usize>; 2]>,
    h_max: f64,
}

impl Mesh {
    /// Builds a mesh from vertices and counter-clockwise triangles.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_to_tri: Vec<[Option<usize>; 2]> = Vec::new();
        let mut tri_to_edge = Vec::with_capacity(triangles.len());
        let mut h_max = 0.0_f64;

        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let area2 = signed_area2(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area2 <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} is not positively oriented"
                )));
            }
            let mut local = [SignedEdge { edge: 0, sign: 1 }; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_to_tri.push([None, None]);
                    edges.len() - 1
                });
                let adj = &mut edge_to_tri[e];
                if adj[0].is_none() {
                    adj[0] = Some(t);
                } else if adj[1].is_none() {
                    adj[1] = Some(t);
                } else {
                    return Err(Error::InvalidArgument(format!(
                        "edge {key:?} shared by more than two triangles"
                    )));
                }
                *slot = SignedEdge {
                    edge: e,
                    sign: if a > b { 1 } else { -1 },
                };
                h_max = h_max.max((vertices[a] - vertices[b]).norm());
            }
            tri_to_edge.push(local);
        }

        Ok(Self {
            vertices,
            triangles,
            edges,
            tri_to_edge,
            edge_to_tri,
            h_max,
        })
    }

    /// Splits each of the `nx × ny` cells of `rect` along its SW–NE diagonal.
    pub fn structured(nx: usize, ny: usize, rect: Rect) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "cell counts must be positive (got nx={nx}, ny={ny})"
            )));
        }
        let (w, h) = (rect.x1 - rect.x0, rect.y1 - rect.y0);
        if !(w > 0.0 && h > 0.0) || !w.is_finite() || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("degenerate rectangle {rect:?}")));
        }
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Point::new(
                    rect.x0 + w * i as f64 / nx as f64,
                    rect.y0 + h * j as f64 / ny as f64,
                ));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (sw, se, ne, nw) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([sw, se, ne]);
                triangles.push([sw, ne, nw]);
            }
        }
        Self::from_parts(vertices, triangles)
    }

    /// Splits every triangle into four by its edge midpoints.
    pub fn refine_uniform(&self) -> Result<Self> {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(
            self.edges
                .iter()
                .map(|&[a, b]| 0.5 * (self.vertices[a] + self.vertices[b])),
        );
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let mid = |i: usize| nv + self.tri_to_edge[t][i].edge;
            let (m_bc, m_ca, m_ab) = (mid(0), mid(1), mid(2));
            triangles.push([a, m_ab, m_ca]);
            triangles.push([m_ab, b, m_bc]);
            triangles.push([m_ca, m_bc, c]);
            triangles.push([m_bc, m_ca, m_ab]);
        }
        Self::from_parts(vertices, triangles)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self, t: usize) -> &[SignedEdge; 3] {
        &self.tri_to_edge[t]
    }

    pub fn edge_triangles(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_to_tri[e]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_to_tri[e][1].is_none()
    }

    /// Maximum triangle diameter.
    pub fn mesh_size(&self) -> f64 {
        self.h_max
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * signed_area2(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn element_map(&self, t: usize) -> ElementMap {
        let [a, b, c] = self.triangles[t];
        let p0 = self.vertices[a];
        let jac = Mat2::from_columns(self.vertices[b] - p0, self.vertices[c] - p0);
        let det = jac.det();
        let inv = Mat2([
            [jac.0[1][1] / det, -jac.0[0][1] / det],
            [-jac.0[1][0] / det, jac.0[0][0] / det],
        ]);
        ElementMap {
            origin: p0,
            jacobian: jac,
            jacobian_inv: inv,
            det,
        }
    }

    /// Global unit normal of edge `e`.
    pub fn edge_normal(&self, e: usize) -> Point {
        let [lo, hi] = self.edges[e];
        let t = self.vertices[hi] - self.vertices[lo];
        let len = t.norm();
        Point::new(-t.y / len, t.x / len)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [lo, hi] = self.edges[e];
        (self.vertices[hi] - self.vertices[lo]).norm()
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for tri in &self.triangles {
            for i in 0..3 {
                let p = self.vertices[tri[i]];
                let u = self.vertices[tri[(i + 1) % 3]] - p;
                let v = self.vertices[tri[(i + 2) % 3]] - p;
                let ang = (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos();
                best = best.min(ang);
            }
        }
        best
    }

    /// Plain-text dump: `v x y`, `e lo hi`, `t a b c` lines.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.17e} {:.17e}", v.x, v.y);
        }
        for e in &self.edges {
            let _ = writeln!(out, "e {} {}", e[0], e[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
        }
        out
    }
}

fn signed_area2(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)
}
