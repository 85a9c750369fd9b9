//! Complex 2x2 matrices.

use crate::{Point, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    a: [[C64; 2]; 2],
}

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

impl Mat2 {
    pub fn new(a11: C64, a12: C64, a21: C64, a22: C64) -> Self {
        Mat2 { a: [[a11, a12], [a21, a22]] }
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        Self::new(one, czero(), czero(), one)
    }

    pub fn diag(a: C64, b: C64) -> Self {
        Self::new(a, czero(), czero(), b)
    }

    /// Matrix with the given columns.
    pub fn from_columns(c1: Point, c2: Point) -> Self {
        Self::new(c1[0], c2[0], c1[1], c2[1])
    }

    pub fn entries(&self) -> [[C64; 2]; 2] {
        self.a
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.a[i][j]
    }

    pub fn column(&self, j: usize) -> Point {
        [self.a[0][j], self.a[1][j]]
    }

    #[inline]
    pub fn apply(&self, v: &Point) -> Point {
        [self.a[0][0] * v[0] + self.a[0][1] * v[1], self.a[1][0] * v[0] + self.a[1][1] * v[1]]
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.a;
        let b = &o.a;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        let a = &self.a;
        let b = &o.a;
        Mat2::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }

    pub fn det(&self) -> C64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.a[0][0] + self.a[1][1]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d.norm() == 0.0 || !d.norm().is_finite() {
            return None;
        }
        let a = &self.a;
        Some(Mat2::new(a[1][1] / d, -a[0][1] / d, -a[1][0] / d, a[0][0] / d))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat2 {
        let a = &self.a;
        Mat2::new(a[0][0].conj(), a[1][0].conj(), a[0][1].conj(), a[1][1].conj())
    }

    /// Both eigenvalues, computed without catastrophic cancellation.
    pub fn eigenvalues(&self) -> (C64, C64) {
        let t = self.trace();
        let d = self.det();
        let disc = (t * t - d * 4.0).sqrt();
        // pick the sign that avoids cancellation
        let s = if (t + disc).norm() >= (t - disc).norm() { t + disc } else { t - disc };
        let e1 = s * 0.5;
        let e2 = if e1.norm() > 0.0 { d / e1 } else { (t - s) * 0.5 };
        (e1, e2)
    }

    /// Unit eigenvector for eigenvalue `ev`, phase-normalized so that the
    /// second component is real and positive when it is not negligible and
    /// the first one otherwise.
    pub fn eigenvector(&self, ev: C64) -> Point {
        let a = &self.a;
        let v1 = [a[0][1], ev - a[0][0]];
        let v2 = [ev - a[1][1], a[1][0]];
        let n1 = crate::norm(&v1);
        let n2 = crate::norm(&v2);
        let v = if n1 >= n2 && n1 > 0.0 {
            v1
        } else if n2 > 0.0 {
            v2
        } else {
            // scalar matrix: any vector works
            [C64::new(1.0, 0.0), czero()]
        };
        normalize_phase(v)
    }

    /// Operator norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        let (hi, _) = hermitian_eigenvalues(&self.adjoint().mul(self));
        libm::sqrt(hi.max(0.0))
    }
}

/// Scales `v` to unit length with the phase convention of `Mat2::eigenvector`.
pub fn normalize_phase(v: Point) -> Point {
    let n = crate::norm(&v);
    let pivot = if v[1].norm() >= 1e-3 * n { v[1] } else { v[0] };
    let phase = pivot / pivot.norm();
    let s = C64::new(1.0 / n, 0.0) / phase;
    [v[0] * s, v[1] * s]
}

/// Eigenvalues `(largest, smallest)` of a Hermitian 2x2 matrix.
pub fn hermitian_eigenvalues(h: &Mat2) -> (f64, f64) {
    let a = h.get(0, 0).re;
    let d = h.get(1, 1).re;
    let b = h.get(0, 1).norm();
    let m = 0.5 * (a + d);
    let r = libm::hypot(0.5 * (a - d), b);
    (m + r, m - r)
}

/// Unit eigenvectors `(for largest, for smallest)` of a Hermitian 2x2 matrix.
pub fn hermitian_eigenvectors(h: &Mat2) -> (Point, Point) {
    let (hi, lo) = hermitian_eigenvalues(h);
    let v_hi = h.eigenvector(C64::new(hi, 0.0));
    let v_lo = h.eigenvector(C64::new(lo, 0.0));
    (v_hi, v_lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eigen_of_henon_differential() {
        // [[2x, b], [1, 0]] with eigenvalues lambda, mu
        let lam = c(-0.5, 0.75f64.sqrt());
        let mu = c(0.1, 0.0);
        let m = Mat2::new(lam + mu, -lam * mu, c(1.0, 0.0), c(0.0, 0.0));
        let (e1, e2) = m.eigenvalues();
        let (l, s) = if e1.norm() > e2.norm() { (e1, e2) } else { (e2, e1) };
        assert!((l - lam).norm() < 1e-14);
        assert!((s - mu).norm() < 1e-14);
        for ev in [lam, mu] {
            let v = m.eigenvector(ev);
            let r = m.apply(&v);
            assert!(crate::norm(&[r[0] - ev * v[0], r[1] - ev * v[1]]) < 1e-14);
            assert!((crate::norm(&v) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let m = Mat2::new(c(1.0, 2.0), c(0.5, -1.0), c(0.0, 1.0), c(3.0, 0.0));
        let p = m.mul(&m.inverse().unwrap());
        assert!(p.sub(&Mat2::identity()).op_norm() < 1e-14);
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let m = Mat2::diag(c(0.0, 3.0), c(-1.0, 0.0));
        assert!((m.op_norm() - 3.0).abs() < 1e-14);
    }
}
