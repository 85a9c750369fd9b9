//! Univariate and bivariate complex polynomials, truncated composition, and
//! cancellation-free differences.

use alloc::vec;
use alloc::vec::Vec;

use crate::dd::{Ring, DDC};
use crate::linalg::Mat2;
use crate::{Point, C64};

/// A univariate polynomial `sum_k coef[k] x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly1<T = C64> {
    pub coef: Vec<T>,
}

impl<T: Ring> Poly1<T> {
    pub fn zero() -> Self {
        Poly1 { coef: Vec::new() }
    }

    pub fn from_coefficients(coef: Vec<T>) -> Self {
        Poly1 { coef }
    }

    /// The identity `x`.
    pub fn identity() -> Self {
        Poly1 { coef: vec![T::zero(), T::one()] }
    }

    pub fn constant(c: T) -> Self {
        Poly1 { coef: vec![c] }
    }

    pub fn coefficient(&self, k: usize) -> T {
        self.coef.get(k).copied().unwrap_or_default()
    }

    pub fn set_coefficient(&mut self, k: usize, c: T) {
        if self.coef.len() <= k {
            self.coef.resize(k + 1, T::zero());
        }
        self.coef[k] = c;
    }

    /// Length of the coefficient vector minus one (trailing zeros count).
    pub fn degree(&self) -> usize {
        self.coef.len().saturating_sub(1)
    }

    pub fn eval(&self, x: T) -> T {
        let mut acc = T::zero();
        for &c in self.coef.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let coef = self.coef.iter().enumerate().skip(1).map(|(k, &c)| c * T::from_usize(k)).collect();
        Poly1 { coef }
    }

    pub fn truncate(mut self, n: usize) -> Self {
        self.coef.truncate(n + 1);
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coef.len().max(other.coef.len());
        let coef = (0..n).map(|k| self.coefficient(k) + other.coefficient(k)).collect();
        Poly1 { coef }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coef.len().max(other.coef.len());
        let coef = (0..n).map(|k| self.coefficient(k) - other.coefficient(k)).collect();
        Poly1 { coef }
    }

    pub fn scale(&self, s: T) -> Self {
        Poly1 { coef: self.coef.iter().map(|&c| c * s).collect() }
    }

    /// Product truncated at degree `n`.
    pub fn mul_trunc(&self, other: &Self, n: usize) -> Self {
        if self.coef.is_empty() || other.coef.is_empty() {
            return Self::zero();
        }
        let len = (self.coef.len() + other.coef.len() - 1).min(n + 1);
        let mut out = vec![T::zero(); len];
        for (i, &a) in self.coef.iter().enumerate().take(len) {
            for (j, &b) in other.coef.iter().enumerate().take(len - i) {
                out[i + j] += a * b;
            }
        }
        Poly1 { coef: out }
    }

    /// `self(inner(x))` truncated at degree `n`.
    pub fn compose_trunc(&self, inner: &Self, n: usize) -> Self {
        let mut acc = Self::zero();
        for &c in self.coef.iter().rev() {
            acc = acc.mul_trunc(inner, n).add(&Self::constant(c));
        }
        acc.truncate(n)
    }

    pub fn to_c64(&self) -> Poly1<C64> {
        Poly1 { coef: self.coef.iter().map(|c| c.to_c64()).collect() }
    }

    pub fn lift<S: Ring>(&self) -> Poly1<S> {
        Poly1 { coef: self.coef.iter().map(|c| S::from(c.to_c64())).collect() }
    }
}

/// A bivariate polynomial `sum c_ij x^i y^j` with `i + j <= degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    degree: usize,
    coef: Vec<C64>,
}

impl Poly2 {
    pub fn zero(degree: usize) -> Self {
        Poly2 { degree, coef: vec![C64::new(0.0, 0.0); (degree + 1) * (degree + 1)] }
    }

    /// Builds a polynomial from `(i, j, c)` triples; repeated monomials add.
    pub fn from_terms(terms: &[(usize, usize, C64)]) -> Self {
        let degree = terms.iter().map(|&(i, j, _)| i + j).max().unwrap_or(0);
        let mut p = Self::zero(degree);
        for &(i, j, c) in terms {
            let k = p.index(i, j);
            p.coef[k] += c;
        }
        p
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        i * (self.degree + 1) + j
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficient(&self, i: usize, j: usize) -> C64 {
        if i + j > self.degree {
            return C64::new(0.0, 0.0);
        }
        self.coef[self.index(i, j)]
    }

    pub fn set_coefficient(&mut self, i: usize, j: usize, c: C64) {
        if i + j > self.degree {
            let mut grown = Self::zero(i + j);
            for (a, b, v) in self.terms() {
                let k = grown.index(a, b);
                grown.coef[k] = v;
            }
            *self = grown;
        }
        let k = self.index(i, j);
        self.coef[k] = c;
    }

    /// Nonzero terms as `(i, j, c)`.
    pub fn terms(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::new();
        for i in 0..=self.degree {
            for j in 0..=(self.degree - i) {
                let c = self.coef[self.index(i, j)];
                if c.re != 0.0 || c.im != 0.0 {
                    out.push((i, j, c));
                }
            }
        }
        out
    }

    /// Evaluates at `(x, y)` in any coefficient ring.
    pub fn eval<S: Ring>(&self, x: S, y: S) -> S {
        let d = self.degree;
        let mut acc = S::zero();
        for i in (0..=d).rev() {
            let mut inner = S::zero();
            for j in (0..=(d - i)).rev() {
                inner = inner * y + S::from(self.coef[self.index(i, j)]);
            }
            acc = acc * x + inner;
        }
        acc
    }

    pub fn partial_x(&self) -> Self {
        let mut p = Self::zero(self.degree.saturating_sub(1));
        for (i, j, c) in self.terms() {
            if i > 0 {
                let k = p.index(i - 1, j);
                p.coef[k] += c * i as f64;
            }
        }
        p
    }

    pub fn partial_y(&self) -> Self {
        let mut p = Self::zero(self.degree.saturating_sub(1));
        for (i, j, c) in self.terms() {
            if j > 0 {
                let k = p.index(i, j - 1);
                p.coef[k] += c * j as f64;
            }
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.degree.max(other.degree));
        for (i, j, c) in self.terms().into_iter().chain(other.terms()) {
            let k = out.index(i, j);
            out.coef[k] += c;
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Poly2 { degree: self.degree, coef: self.coef.iter().map(|&c| c * s).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.degree + other.degree);
        let b = other.terms();
        for (i, j, c) in self.terms() {
            for &(k, l, e) in &b {
                let idx = out.index(i + k, j + l);
                out.coef[idx] += c * e;
            }
        }
        out
    }

    /// `self(a(x, y), b(x, y))`.
    pub fn compose(&self, a: &Poly2, b: &Poly2) -> Self {
        let d = self.degree;
        let mut out = Poly2::zero(0);
        for i in (0..=d).rev() {
            let mut inner = Poly2::zero(0);
            for j in (0..=(d - i)).rev() {
                inner = inner.mul(b).add(&Poly2::from_terms(&[(0, 0, self.coefficient(i, j))]));
            }
            out = out.mul(a).add(&inner);
        }
        out.trim()
    }

    /// Drops trailing total degrees whose coefficients all vanish.
    pub fn trim(self) -> Self {
        let top = self.terms().iter().map(|&(i, j, _)| i + j).max().unwrap_or(0);
        if top == self.degree {
            return self;
        }
        let mut out = Poly2::zero(top);
        for (i, j, c) in self.terms() {
            let k = out.index(i, j);
            out.coef[k] = c;
        }
        out
    }

    /// `self(a(t), b(t))` truncated at degree `n` in `t`.
    pub fn compose1<S: Ring>(&self, a: &Poly1<S>, b: &Poly1<S>, n: usize) -> Poly1<S> {
        let d = self.degree;
        let mut acc = Poly1::<S>::zero();
        for i in (0..=d).rev() {
            let mut inner = Poly1::<S>::zero();
            for j in (0..=(d - i)).rev() {
                inner = inner.mul_trunc(b, n).add(&Poly1::constant(S::from(self.coefficient(i, j))));
            }
            acc = acc.mul_trunc(a, n).add(&inner);
        }
        acc.truncate(n)
    }

    /// `self(x + dx, y + dy) - self(x, y)` without subtractive cancellation.
    pub fn difference<S: Ring>(&self, x: S, y: S, dx: S, dy: S) -> S {
        let d = self.degree;
        // xp[i] = x^i, ax[i] = (x+dx)^i - x^i, likewise for y.
        let mut xp = vec![S::one(); d + 1];
        let mut ax = vec![S::zero(); d + 1];
        let mut yp = vec![S::one(); d + 1];
        let mut by = vec![S::zero(); d + 1];
        for i in 1..=d {
            ax[i] = (x + dx) * ax[i - 1] + dx * xp[i - 1];
            xp[i] = xp[i - 1] * x;
            by[i] = (y + dy) * by[i - 1] + dy * yp[i - 1];
            yp[i] = yp[i - 1] * y;
        }
        let mut acc = S::zero();
        for (i, j, c) in self.terms() {
            if i == 0 && j == 0 {
                continue;
            }
            let t = xp[i] * by[j] + ax[i] * yp[j] + ax[i] * by[j];
            acc += S::from(c) * t;
        }
        acc
    }

    /// Bound on `|p|` over the polydisc `|x|, |y| <= r`.
    pub fn majorant(&self, r: f64) -> f64 {
        self.terms().iter().map(|&(i, j, c)| c.norm() * libm::pow(r, (i + j) as f64)).sum()
    }
}

/// A polynomial self-map of C^2 with cached first partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap2 {
    pub f1: Poly2,
    pub f2: Poly2,
    d: [Poly2; 4],
}

impl PolyMap2 {
    pub fn new(f1: Poly2, f2: Poly2) -> Self {
        let d = [f1.partial_x(), f1.partial_y(), f2.partial_x(), f2.partial_y()];
        PolyMap2 { f1, f2, d }
    }

    /// A map of C acting on the first coordinate; the second stays zero.
    pub fn one_dimensional(p: &Poly1) -> Self {
        let terms: Vec<_> = p.coef.iter().enumerate().map(|(k, &c)| (k, 0, c)).collect();
        Self::new(Poly2::from_terms(&terms), Poly2::zero(0))
    }

    pub fn degree(&self) -> usize {
        self.f1.degree().max(self.f2.degree())
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> Point {
        [self.f1.eval(p[0], p[1]), self.f2.eval(p[0], p[1])]
    }

    pub fn eval_dd(&self, p: &[DDC; 2]) -> [DDC; 2] {
        [self.f1.eval(p[0], p[1]), self.f2.eval(p[0], p[1])]
    }

    /// `self(p + delta) - self(p)`, free of cancellation.
    pub fn difference<S: Ring>(&self, p: &[S; 2], delta: &[S; 2]) -> [S; 2] {
        [self.f1.difference(p[0], p[1], delta[0], delta[1]), self.f2.difference(p[0], p[1], delta[0], delta[1])]
    }

    #[inline]
    pub fn jacobian(&self, p: &Point) -> Mat2 {
        Mat2::new(self.d[0].eval(p[0], p[1]), self.d[1].eval(p[0], p[1]), self.d[2].eval(p[0], p[1]), self.d[3].eval(p[0], p[1]))
    }

    pub fn jacobian_dd(&self, p: &[DDC; 2]) -> [[DDC; 2]; 2] {
        [[self.d[0].eval(p[0], p[1]), self.d[1].eval(p[0], p[1])], [self.d[2].eval(p[0], p[1]), self.d[3].eval(p[0], p[1])]]
    }

    /// `self(other(x))`.
    pub fn compose(&self, other: &PolyMap2) -> PolyMap2 {
        PolyMap2::new(self.f1.compose(&other.f1, &other.f2), self.f2.compose(&other.f1, &other.f2))
    }

    /// `(self_1(a(t), b(t)), self_2(a(t), b(t)))` truncated at degree `n`.
    pub fn compose1<S: Ring>(&self, a: &Poly1<S>, b: &Poly1<S>, n: usize) -> (Poly1<S>, Poly1<S>) {
        (self.f1.compose1(a, b, n), self.f2.compose1(a, b, n))
    }

    /// Affine map `w -> shift + m w`.
    pub fn affine(shift: Point, m: &Mat2) -> PolyMap2 {
        let a = m.entries();
        PolyMap2::new(
            Poly2::from_terms(&[(0, 0, shift[0]), (1, 0, a[0][0]), (0, 1, a[0][1])]),
            Poly2::from_terms(&[(0, 0, shift[1]), (1, 0, a[1][0]), (0, 1, a[1][1])]),
        )
    }

    /// Bound on the second derivatives: for every pair of points in the ball
    /// of radius `r`, `|Df(a) - Df(b)| <= L |a - b|` in operator norm.
    pub fn derivative_lipschitz(&self, r: f64) -> f64 {
        let mut total = 0.0;
        for d in &self.d {
            let gx = d.partial_x().majorant(r);
            let gy = d.partial_y().majorant(r);
            total += gx * gx + gy * gy;
        }
        libm::sqrt(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn truncated_composition() {
        // (x + x^2) o (x + x^2) = x + 2x^2 + 2x^3 + x^4
        let p = Poly1::from_coefficients(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let q = p.compose_trunc(&p, 3);
        let want = [0.0, 1.0, 2.0, 2.0];
        assert_eq!(q.coef.len(), 4);
        for (a, b) in q.coef.iter().zip(want) {
            assert!((a - c(b, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn bivariate_eval_and_partials() {
        let p = Poly2::from_terms(&[(2, 0, c(1.0, 0.0)), (1, 1, c(0.0, 2.0)), (0, 1, c(3.0, 0.0))]);
        let (x, y) = (c(0.5, 0.1), c(-0.2, 0.3));
        let direct = x * x + c(0.0, 2.0) * x * y + c(3.0, 0.0) * y;
        assert!((p.eval(x, y) - direct).norm() < 1e-15);
        let px = p.partial_x().eval(x, y);
        assert!((px - (x * 2.0 + c(0.0, 2.0) * y)).norm() < 1e-15);
        let py = p.partial_y().eval(x, y);
        assert!((py - (c(0.0, 2.0) * x + c(3.0, 0.0))).norm() < 1e-15);
    }

    #[test]
    fn difference_matches_direct_subtraction() {
        let p = Poly2::from_terms(&[(3, 0, c(1.0, 0.5)), (1, 2, c(-2.0, 0.0)), (0, 1, c(0.3, 0.0))]);
        let (x, y) = (c(0.4, -0.1), c(0.2, 0.2));
        let (dx, dy) = (c(1e-3, 2e-3), c(-1e-3, 5e-4));
        let direct = p.eval(x + dx, y + dy) - p.eval(x, y);
        let diff = p.difference(x, y, dx, dy);
        assert!((direct - diff).norm() < 1e-15);
    }

    #[test]
    fn composition_with_affine_maps() {
        let f = PolyMap2::new(
            Poly2::from_terms(&[(2, 0, c(1.0, 0.0)), (0, 1, c(0.5, 0.0)), (0, 0, c(0.1, 0.0))]),
            Poly2::from_terms(&[(1, 0, c(1.0, 0.0))]),
        );
        let m = Mat2::new(c(1.0, 1.0), c(0.5, 0.0), c(0.0, -1.0), c(2.0, 0.0));
        let g = f.compose(&PolyMap2::affine([c(0.1, 0.0), c(0.0, 0.2)], &m));
        let w = [c(0.3, 0.1), c(-0.2, 0.05)];
        let inner = m.apply(&w);
        let inner = [inner[0] + c(0.1, 0.0), inner[1] + c(0.0, 0.2)];
        let want = f.eval(&inner);
        let got = g.eval(&w);
        assert!((want[0] - got[0]).norm() < 1e-14 && (want[1] - got[1]).norm() < 1e-14);
    }
}
