//! Fixed-size 3-vectors and 3x3 matrices.
//!
//! Everything in the bound engine is 3x3, so inversion goes through the
//! closed-form adjugate with an explicit condition-number guard instead of a
//! general factorization.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Largest admissible condition number before a 3x3 matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// A 3D Cartesian position or displacement in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Builds a vector, rejecting NaN and infinite components.
    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self::new(x, y, z);
        v.ensure_finite("vector")?;
        Ok(v)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub(crate) fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance_to(&self, other: &Vec3) -> f64 {
        (*self - *other).norm()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Mat3(rows)
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Mat3([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from_array(self.0[i])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Transposed cofactor matrix, so that `A * adj(A) = det(A) * I`.
    pub fn adjugate(&self) -> Mat3 {
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        Mat3([
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    /// Condition number in the Frobenius norm, `||A|| * ||A^-1||`.
    ///
    /// Returns infinity for exactly singular or non-finite input.
    pub fn condition_number(&self) -> f64 {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return f64::INFINITY;
        }
        let inv_norm = self.adjugate().frobenius_norm() / det.abs();
        let mut k = self.frobenius_norm() * inv_norm;
        // For a numerically singular matrix det and adjugate are both rounding
        // noise and their ratio can look benign; the eigenvalue spread cannot.
        if self.is_symmetric() {
            let eig = self.symmetric_eigenvalues().map(f64::abs);
            let (lo, hi) = (eig.iter().copied().fold(f64::INFINITY, f64::min), eig.iter().copied().fold(0.0, f64::max));
            k = if lo == 0.0 { f64::INFINITY } else { k.max(hi / lo) };
        }
        if k.is_finite() {
            k
        } else {
            f64::INFINITY
        }
    }

    /// Closed-form inverse. `None` when the condition number exceeds [`MAX_CONDITION`].
    pub fn try_inverse(&self) -> Option<Mat3> {
        if self.condition_number() > MAX_CONDITION {
            return None;
        }
        let det = self.determinant();
        Some(self.adjugate().scale(1.0 / det))
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|v| *v *= s);
        out
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(&v), self.row(1).dot(&v), self.row(2).dot(&v))
    }

    /// `A^T B A`, the congruence used for every Fisher and covariance propagation here.
    pub fn congruence(a: &Mat3, b: &Mat3) -> Mat3 {
        a.transpose() * (*b * *a)
    }

    /// Mirrors the upper triangle into the lower one.
    pub fn symmetrize_upper(&mut self) {
        for k in 0..3 {
            for q in (k + 1)..3 {
                self.0[q][k] = self.0[k][q];
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..3).all(|k| (0..3).all(|q| self.0[k][q] == self.0[q][k]))
    }

    /// Eigenvalues of a symmetric matrix, ascending, via the trigonometric
    /// solution of the characteristic cubic.
    pub fn symmetric_eigenvalues(&self) -> [f64; 3] {
        let m = &self.0;
        let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
        if p1 == 0.0 {
            let mut e = [m[0][0], m[1][1], m[2][2]];
            e.sort_by(f64::total_cmp);
            return e;
        }
        let q = self.trace() / 3.0;
        let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = (*self - Mat3::IDENTITY.scale(q)).scale(1.0 / p);
        let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let hi = q + 2.0 * p * phi.cos();
        let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let mid = 3.0 * q - hi - lo;
        [lo, mid, hi]
    }

    /// Positive semidefinite up to `tol * |trace|` on the smallest eigenvalue.
    pub fn is_psd(&self, tol: f64) -> bool {
        let eig = self.symmetric_eigenvalues();
        eig[0] >= -tol * self.trace().abs()
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.0[r][c]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.0[r][c]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        let mut out = self;
        for r in 0..3 {
            for c in 0..3 {
                out.0[r][c] += rhs.0[r][c];
            }
        }
        out
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, rhs: Mat3) {
        *self = *self + rhs;
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        self + rhs.scale(-1.0)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for r in 0..3 {
            for c in 0..3 {
                out.0[r][c] = (0..3).map(|k| self.0[r][k] * rhs.0[k][c]).sum();
            }
        }
        out
    }
}
