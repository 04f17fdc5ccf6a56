//! Points, 2×2 matrices and coefficient fields.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, p: Point) -> Point {
        Point::new(self * p.x, self * p.y)
    }
}

/// Row-major 2×2 matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);

    pub fn scalar(c: f64) -> Self {
        Mat2([[c, 0.0], [0.0, c]])
    }

    pub fn from_columns(c0: Point, c1: Point) -> Self {
        Mat2([[c0.x, c1.x], [c0.y, c1.y]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        let m = &self.0;
        let scale = self.max_abs();
        if d == 0.0 || !d.is_finite() || d.abs() <= 1e-14 * scale * scale {
            return None;
        }
        Some(Mat2([
            [m[1][1] / d, -m[0][1] / d],
            [-m[1][0] / d, m[0][0] / d],
        ]))
    }

    pub fn transpose(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn apply(&self, v: Point) -> Point {
        let m = &self.0;
        Point::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn scale(&self, c: f64) -> Mat2 {
        let m = &self.0;
        Mat2([[c * m[0][0], c * m[0][1]], [c * m[1][0], c * m[1][1]]])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        let mut r = [[0.0; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(r)
    }
}

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;
pub type ScalarFnT = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type VectorFnT = Arc<dyn Fn(Point, f64) -> Point + Send + Sync>;
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A 2×2-matrix valued coefficient of space, either constant or varying.
#[derive(Clone)]
pub enum MatrixField {
    Constant(Mat2),
    Variable(Arc<dyn Fn(Point) -> Mat2 + Send + Sync>),
}

impl MatrixField {
    pub fn identity() -> Self {
        MatrixField::Constant(Mat2::IDENTITY)
    }

    pub fn variable(f: impl Fn(Point) -> Mat2 + Send + Sync + 'static) -> Self {
        MatrixField::Variable(Arc::new(f))
    }

    pub fn eval(&self, x: Point) -> Mat2 {
        match self {
            MatrixField::Constant(m) => *m,
            MatrixField::Variable(f) => f(x),
        }
    }

    pub fn constant_value(&self) -> Option<Mat2> {
        match self {
            MatrixField::Constant(m) => Some(*m),
            MatrixField::Variable(_) => None,
        }
    }
}

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixField::Constant(m) => write!(f, "Constant({:?})", m.0),
            MatrixField::Variable(_) => f.write_str("Variable(..)"),
        }
    }
}

/// Checks symmetry and the eigenvalue bounds of a coefficient sample.
/// Returns `(min, max)` eigenvalue of the symmetric part.
pub fn symmetric_eigen_bounds(m: &Mat2) -> (f64, f64) {
    let a = m.0[0][0];
    let d = m.0[1][1];
    let b = 0.5 * (m.0[0][1] + m.0[1][0]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2([[2.0, 0.5], [0.5, 1.0]]);
        let p = m * m.inverse().unwrap();
        assert!((p - Mat2::IDENTITY).max_abs() < 1e-15);
    }

    #[test]
    fn singular_has_no_inverse() {
        assert!(Mat2([[1.0, 2.0], [2.0, 4.0]]).inverse().is_none());
    }

    #[test]
    fn eigen_bounds_of_diagonal() {
        let (lo, hi) = symmetric_eigen_bounds(&Mat2([[3.0, 0.0], [0.0, 1.0]]));
        assert_eq!((lo, hi), (1.0, 3.0));
    }
}
