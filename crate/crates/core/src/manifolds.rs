//! Polynomial jets of the center manifold `y = phi(x)` and of the strong
//! stable manifold `x = sigma(y)` at a semi-indifferent fixed point, strong
//! stable leaves through arbitrary points, and the shadowing check.
//!
//! Germs are assumed normalized: the neutral direction is the first axis and
//! the dissipative direction the second.

use alloc::vec;
use alloc::vec::Vec;

use crate::dd::{Ring, DD, DDC};
use crate::error::{Error, Result};
use crate::germs::{Dimension, Germ};
use crate::poly::{Poly1, PolyMap2};
use crate::{norm, Point, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Radii tried, largest first, when choosing a jet's validity radius.
pub const VALIDITY_RADII: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
/// Default bound on the sampled invariance defect.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Boundary samples used for the invariance defect.
pub const RESIDUAL_SAMPLES: usize = 256;
/// Divisors below this size abort the order-by-order solve.
pub const SMALL_DIVISOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Orientation {
    /// Graph `y = phi(x)` over the neutral axis.
    Center,
    /// Graph `x = sigma(y)` over the dissipative axis.
    Stable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JetGraph {
    pub orientation: Orientation,
    /// Coefficients of degrees `0..=degree`; those of degree 0 and 1 are zero.
    pub coefficients: Poly1,
    pub degree: usize,
    pub validity_radius: f64,
    pub residual: f64,
}

impl JetGraph {
    /// The graph function at parameter `t`.
    pub fn eval(&self, t: C64) -> C64 {
        self.coefficients.eval(t)
    }

    pub fn slope(&self, t: C64) -> C64 {
        self.coefficients.derivative().eval(t)
    }

    /// The point of C^2 on the graph with parameter `t`.
    pub fn point(&self, t: C64) -> Point {
        match self.orientation {
            Orientation::Center => [t, self.eval(t)],
            Orientation::Stable => [self.eval(t), t],
        }
    }
}

fn linear_parts(f: &PolyMap2) -> (C64, C64) {
    (f.f1.coefficient(1, 0), f.f2.coefficient(0, 1))
}

fn power<S: Ring>(x: S, k: usize) -> S {
    let mut acc = S::one();
    for _ in 0..k {
        acc = acc * x;
    }
    acc
}

/// Solves `phi(f1(x, phi(x))) = f2(x, phi(x))` order by order through degree
/// `d`.
pub fn center_jet_coefficients<S: Ring>(f: &PolyMap2, d: usize) -> Result<Poly1<S>> {
    let (lambda, mu) = linear_parts(f);
    let (lambda, mu) = (S::from(lambda), S::from(mu));
    let x = Poly1::<S>::identity();
    let mut phi = Poly1::<S>::from_coefficients(vec![S::zero(); d + 1]);
    for k in 2..=d {
        let inner = f.f1.compose1(&x, &phi, k);
        let lhs = phi.compose_trunc(&inner, k);
        let rhs = f.f2.compose1(&x, &phi, k);
        let r = lhs.coefficient(k) - rhs.coefficient(k);
        let divisor = power(lambda, k) - mu;
        if divisor.modulus() < SMALL_DIVISOR {
            return Err(Error::SmallDivisor { degree: k, divisor: divisor.modulus() });
        }
        phi.set_coefficient(k, -(r / divisor));
    }
    Ok(phi)
}

/// Solves `f1(sigma(y), y) = sigma(f2(sigma(y), y))` order by order through
/// degree `d`.
pub fn stable_jet_coefficients<S: Ring>(f: &PolyMap2, d: usize) -> Result<Poly1<S>> {
    let (lambda, mu) = linear_parts(f);
    let (lambda, mu) = (S::from(lambda), S::from(mu));
    let y = Poly1::<S>::identity();
    let mut sigma = Poly1::<S>::from_coefficients(vec![S::zero(); d + 1]);
    for k in 2..=d {
        let lhs = f.f1.compose1(&sigma, &y, k);
        let inner = f.f2.compose1(&sigma, &y, k);
        let rhs = sigma.compose_trunc(&inner, k);
        let r = lhs.coefficient(k) - rhs.coefficient(k);
        let divisor = lambda - power(mu, k);
        if divisor.modulus() < SMALL_DIVISOR {
            return Err(Error::SmallDivisor { degree: k, divisor: divisor.modulus() });
        }
        sigma.set_coefficient(k, -(r / divisor));
    }
    Ok(sigma)
}

/// Largest invariance defect of the graph over `samples` points of the
/// circle of radius `r`.
pub fn invariance_residual(f: &PolyMap2, orientation: Orientation, graph: &Poly1, r: f64, samples: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let t = C64::from_polar(r, core::f64::consts::TAU * k as f64 / samples as f64);
        let defect = match orientation {
            Orientation::Center => {
                let img = f.eval(&[t, graph.eval(t)]);
                graph.eval(img[0]) - img[1]
            }
            Orientation::Stable => {
                let img = f.eval(&[graph.eval(t), t]);
                graph.eval(img[1]) - img[0]
            }
        };
        worst = worst.max(defect.norm());
    }
    worst
}

fn require_two_dimensional(g: &Germ) -> Result<()> {
    if g.dimension() != Dimension::Two {
        return Err(Error::precondition("manifold jets need a two-dimensional germ"));
    }
    let f = g.forward();
    let (lambda, mu) = linear_parts(f);
    let off = f.f1.coefficient(0, 1).norm() + f.f2.coefficient(1, 0).norm();
    if off > 1e-9 * (1.0 + lambda.norm()) {
        return Err(Error::precondition("germ is not normalized: differential is not diagonal"));
    }
    if mu.norm() >= 1.0 {
        return Err(Error::NotSemiIndifferent { lambda_modulus: lambda.norm(), mu_modulus: mu.norm() });
    }
    Ok(())
}

fn with_radius(f: &PolyMap2, orientation: Orientation, graph: Poly1, d: usize, tol: f64, radii: &[f64]) -> Result<JetGraph> {
    let mut best = f64::INFINITY;
    for &r in radii {
        let res = invariance_residual(f, orientation, &graph, r, RESIDUAL_SAMPLES);
        if res < tol {
            return Ok(JetGraph { orientation, coefficients: graph, degree: d, validity_radius: r, residual: res });
        }
        best = best.min(res);
    }
    Err(Error::ResidualToleranceUnmet { tolerance: tol, best })
}

/// Center manifold jet of degree `d` with the default tolerance and radii.
pub fn center_manifold_jet(g: &Germ, d: usize) -> Result<JetGraph> {
    center_manifold_jet_with(g, d, RESIDUAL_TOLERANCE, &VALIDITY_RADII)
}

pub fn center_manifold_jet_with(g: &Germ, d: usize, tol: f64, radii: &[f64]) -> Result<JetGraph> {
    require_two_dimensional(g)?;
    if d < 2 {
        return Err(Error::precondition("jet degree must be >= 2"));
    }
    let phi = center_jet_coefficients::<C64>(g.forward(), d)?;
    with_radius(g.forward(), Orientation::Center, phi, d, tol, radii)
}

/// Strong stable manifold jet of degree `d` with the default tolerance and
/// radii.
pub fn strong_stable_disc(g: &Germ, d: usize) -> Result<JetGraph> {
    strong_stable_disc_with(g, d, RESIDUAL_TOLERANCE, &VALIDITY_RADII)
}

pub fn strong_stable_disc_with(g: &Germ, d: usize, tol: f64, radii: &[f64]) -> Result<JetGraph> {
    require_two_dimensional(g)?;
    if d < 2 {
        return Err(Error::precondition("jet degree must be >= 2"));
    }
    let sigma = stable_jet_coefficients::<C64>(g.forward(), d)?;
    with_radius(g.forward(), Orientation::Stable, sigma, d, tol, radii)
}

fn to_dd(p: &Point) -> [DDC; 2] {
    [DDC::from(p[0]), DDC::from(p[1])]
}

/// Orbit of `x` in double-double, `n + 1` points.
pub fn orbit_dd(f: &PolyMap2, x: &[DDC; 2], n: usize) -> Vec<[DDC; 2]> {
    let mut out = Vec::with_capacity(n + 1);
    let mut z = *x;
    out.push(z);
    for _ in 0..n {
        z = f.eval_dd(&z);
        out.push(z);
    }
    out
}

/// Differences `f^k(x + delta) - f^k(x)` for `k = 0..=n` along a precomputed
/// orbit of `x`.
pub fn propagate_difference(f: &PolyMap2, orbit: &[[DDC; 2]], delta: [DDC; 2], n: usize) -> Vec<[DDC; 2]> {
    let mut out = Vec::with_capacity(n + 1);
    let mut d = delta;
    out.push(d);
    for x in orbit.iter().take(n) {
        d = f.difference(x, &d);
        out.push(d);
    }
    out
}

fn dd_norm(p: &[DDC; 2]) -> f64 {
    libm::sqrt((p[0].norm_sqr() + p[1].norm_sqr()).to_f64())
}

/// A point of the strong stable leaf through `x`, at vertical offset `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafPoint {
    /// Horizontal offset `a` of the leaf point `x + (a, t)`.
    pub offset: C64,
    pub point: Point,
    /// `da/dt`: the leaf's tangent is `(slope, 1)`.
    pub slope: C64,
}

/// Shooting for the strong stable leaf through `x`: for each vertical offset
/// `t` finds `a` with `pi_1 f^N(x + (a, t)) = pi_1 f^N(x)`, in double-double.
pub fn strong_stable_leaf(g: &Germ, x: &Point, offsets: &[C64], horizon: usize) -> Result<Vec<LeafPoint>> {
    let f = g.forward();
    let orbit = orbit_dd(f, &to_dd(x), horizon);
    let mut out = Vec::with_capacity(offsets.len());
    for &t in offsets {
        let mut a = DDC::ZERO;
        let mut converged = false;
        let mut slope = C64::new(0.0, 0.0);
        for _ in 0..40 {
            let delta = [a, DDC::from(t)];
            let ds = propagate_difference(f, &orbit, delta, horizon);
            let resid = ds[horizon][0];
            let y = [x[0] + a.to_c64(), x[1] + t];
            let (_, m) = g.iterate_with_jacobian(&y, horizon);
            let gu = m.get(0, 0);
            let gv = m.get(0, 1);
            if gu.norm() == 0.0 || !gu.norm().is_finite() {
                return Err(Error::GraphTransformDivergence);
            }
            slope = -gv / gu;
            let step = resid / DDC::from(gu);
            a -= step;
            if step.norm() <= 1e-30 * (1.0 + a.norm()) || resid.norm() == 0.0 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::GraphTransformDivergence);
        }
        let offset = a.to_c64();
        out.push(LeafPoint { offset, point: [x[0] + offset, x[1] + t], slope });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowingReport {
    /// The partner point on the center graph.
    pub partner: Point,
    /// `dist(f^n(x), f^n(partner)) / mu_bar^n` for `n = 0..=horizon`.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `log(ratio)` against `n`.
    pub slope: f64,
    pub pass: bool,
}

/// Finds the point of the center graph on the strong stable leaf of `x` and
/// checks that the two orbits approach each other at rate `mu_bar`.
pub fn shadowing_check(g: &Germ, jet: &JetGraph, x: &Point, horizon: usize, mu_bar: f64) -> Result<ShadowingReport> {
    if jet.orientation != Orientation::Center {
        return Err(Error::precondition("shadowing needs a center jet"));
    }
    let f = g.forward();
    let bound = g.domain_radius().max(jet.validity_radius);
    let mut z = *x;
    for step in 0..=horizon {
        if norm(&z) > bound {
            return Err(Error::OrbitEscapes { step });
        }
        z = g.eval(&z);
    }
    let orbit = orbit_dd(f, &to_dd(x), horizon);
    let phi = jet.coefficients.lift::<DDC>();
    let dphi = jet.coefficients.derivative();
    let xu = DDC::from(x[0]);
    let xv = DDC::from(x[1]);
    // partner (s, phi(s)); delta = (s - x_u, phi(s) - x_v)
    let mut s = xu;
    let mut deltas = Vec::new();
    for _ in 0..40 {
        let delta = [s - xu, phi.eval(s) - xv];
        deltas = propagate_difference(f, &orbit, delta, horizon);
        let resid = deltas[horizon][0];
        let sc = s.to_c64();
        let y = [sc, jet.eval(sc)];
        let (_, m) = g.iterate_with_jacobian(&y, horizon);
        let deriv = m.get(0, 0) + m.get(0, 1) * dphi.eval(sc);
        if deriv.norm() == 0.0 || !deriv.norm().is_finite() {
            return Err(Error::GraphTransformDivergence);
        }
        let step = resid / DDC::from(deriv);
        s -= step;
        if step.norm() <= 1e-30 * (1.0 + s.norm()) || resid.norm() == 0.0 {
            let delta = [s - xu, phi.eval(s) - xv];
            deltas = propagate_difference(f, &orbit, delta, horizon);
            break;
        }
    }
    let ratios: Vec<f64> = deltas.iter().enumerate().map(|(n, d)| dd_norm(d) / libm::pow(mu_bar, n as f64)).collect();
    let slope = log_slope(&ratios);
    let sc = s.to_c64();
    Ok(ShadowingReport { partner: [sc, jet.eval(sc)], ratios, slope, pass: slope <= 1e-9 })
}

/// Least-squares slope of `log(r_n)` over the positive entries; zero when
/// fewer than two entries are positive.
pub fn log_slope(r: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        r.iter().enumerate().filter(|(_, &v)| v > 0.0 && v.is_finite()).map(|(n, &v)| (n as f64, libm::log(v))).collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let den = m * sxx - sx * sx;
    if den == 0.0 {
        0.0
    } else {
        (m * sxy - sx * sy) / den
    }
}

/// `dist(f^n(y), f^n(x))` for `n = 0..=horizon`, computed from the exact
/// difference recursion in double-double.
pub fn orbit_separation(g: &Germ, x: &Point, y: &Point, horizon: usize) -> Vec<f64> {
    let f = g.forward();
    let xd = to_dd(x);
    let orbit = orbit_dd(f, &xd, horizon);
    let delta = [DDC::from(y[0]) - xd[0], DDC::from(y[1]) - xd[1]];
    propagate_difference(f, &orbit, delta, horizon).iter().map(dd_norm).collect()
}

/// `dist(f^n(x), 0)` for `n = 0..=horizon`, in double-double.
pub fn orbit_distances(g: &Germ, x: &Point, horizon: usize) -> Vec<f64> {
    orbit_dd(g.forward(), &to_dd(x), horizon).iter().map(dd_norm).collect()
}

#[allow(dead_code)]
fn dd_zero() -> DD {
    DD::ZERO
}
