//! Grid certificates of partial hyperbolicity: invariant horizontal and
//! vertical cone fields, the center bounds `lambda_lower <= |Df v| / |v| <=
//! 1 / lambda_lower` on horizontal cones and the contraction `|Df v| <=
//! mu_bar |v|` on vertical cones.
//!
//! Cones are taken around constant distributions in the normalized chart:
//! in coordinates `w` adapted to `(E^c, E^s)` the horizontal cone is
//! `|w_2| <= t |w_1|` and the vertical one `|w_1| <= t |w_2|`, with
//! `t = tan(cone_half_angle)`. Norms are Euclidean in the chart.
//!
//! Sampling becomes a covering argument: every point of the ball lies within
//! `h` of a grid point, `|Df(a) - Df(b)| <= L |a - b|`, and each inequality
//! must hold at the grid points with slack at least the induced perturbation.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::germs::{Dimension, Germ};
use crate::linalg::Mat2;
use crate::{norm, Point, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Boundary rays per cone.
pub const BOUNDARY_RAYS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ConeFieldSpec {
    pub cone_half_angle: f64,
    /// Center direction, in chart coordinates.
    pub e_c: Point,
    /// Strong stable direction, in chart coordinates.
    pub e_s: Point,
    pub boundary_rays: usize,
}

impl ConeFieldSpec {
    /// Cones around the coordinate axes of a normalized chart.
    pub fn axes(cone_half_angle: f64) -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        ConeFieldSpec { cone_half_angle, e_c: [one, zero], e_s: [zero, one], boundary_rays: BOUNDARY_RAYS }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.cone_half_angle;
        if !(a > 0.0 && a < core::f64::consts::FRAC_PI_2) {
            return Err(Error::precondition("cone half-angle must lie in (0, pi/2)"));
        }
        let (nc, ns) = (norm(&self.e_c), norm(&self.e_s));
        if nc == 0.0 || ns == 0.0 {
            return Err(Error::precondition("distributions must be nonzero"));
        }
        let inner = self.e_c[0].conj() * self.e_s[0] + self.e_c[1].conj() * self.e_s[1];
        let cos = (inner.norm() / (nc * ns)).min(1.0);
        // the splitting must be transverse by a clear multiple of the opening
        if libm::acos(cos) <= 10.0 * 1e-6 {
            return Err(Error::precondition("E^s and E^c are not transverse"));
        }
        if self.boundary_rays < 4 {
            return Err(Error::precondition("at least 4 boundary rays are needed"));
        }
        Ok(())
    }

    fn slope_bound(&self) -> f64 {
        libm::tan(self.cone_half_angle)
    }

    fn basis(&self) -> Mat2 {
        Mat2::from_columns(self.e_c, self.e_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Condition {
    /// `Df_x` maps the horizontal cone into the interior of the horizontal cone.
    HorizontalInvariance,
    /// `Df_x^{-1}` maps the vertical cone into the interior of the vertical cone.
    VerticalInvariance,
    /// `|Df v| >= lambda_lower |v|` on the horizontal cone.
    HorizontalLower,
    /// `|Df v| <= |v| / lambda_lower` on the horizontal cone.
    HorizontalUpper,
    /// `|Df v| <= mu_bar |v|` on the vertical cone.
    VerticalContraction,
}

/// Worst values at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointBounds {
    /// Largest `|w_2 / w_1|` over `Df(C^h)`, relative to `t`.
    pub horizontal_slope: f64,
    /// Largest `|w_2 / w_1|` over `Df` of the closed complement of the
    /// vertical cone, relative to `1 / t`.
    pub vertical_slope: f64,
    pub horizontal_min: f64,
    pub horizontal_max: f64,
    pub vertical_max: f64,
}

/// A failing point and vector, re-checkable with [`recheck_witness`].
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub index: usize,
    pub point: Point,
    /// Tangent vector (chart coordinates) realizing the violation.
    pub vector: Point,
    pub condition: Condition,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub point: Point,
    pub bounds: PointBounds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialHyperbolicityCertificate {
    pub mu_bar: f64,
    pub lambda_lower: f64,
    pub ball_radius: f64,
    pub cone_half_angle: f64,
    /// Spacing of the grid along each real axis.
    pub spacing: f64,
    /// Every point of the ball is within this distance of a grid point.
    pub covering_radius: f64,
    /// Lipschitz constant of `Df` used for the margins.
    pub lipschitz: f64,
    pub grid: Vec<GridPoint>,
    /// Smallest slack over all grid points and conditions.
    pub worst_slack: f64,
    /// Slack required by the covering argument at that condition.
    pub required_slack: f64,
    pub pass: bool,
    pub witness: Option<Witness>,
}

/// A vector inside one of the cones together with its Rayleigh quotient.
#[derive(Debug, Clone, Copy)]
struct Extremum {
    value: f64,
    w: Point,
}

fn quad(h: &Mat2, w: &Point) -> f64 {
    let hw = h.apply(w);
    (w[0].conj() * hw[0] + w[1].conj() * hw[1]).re
}

/// Ray of the cone boundary (or interior when `s < t`) at angle `theta`.
fn ray(vertical: bool, s: f64, theta: f64) -> Point {
    let z = C64::from_polar(s, theta);
    if vertical {
        [z, C64::new(1.0, 0.0)]
    } else {
        [C64::new(1.0, 0.0), z]
    }
}

/// Extremes of `w* H w / w* G w` over the cone, in adapted coordinates.
fn cone_extremes(h: &Mat2, g: &Mat2, t: f64, vertical: bool, rays: usize) -> (Extremum, Extremum) {
    let ratio = |theta: f64| {
        let w = ray(vertical, t, theta);
        quad(h, &w) / quad(g, &w)
    };
    let step = core::f64::consts::TAU / rays as f64;
    let mut lo = (0usize, f64::INFINITY);
    let mut hi = (0usize, f64::NEG_INFINITY);
    for k in 0..rays {
        let v = ratio(step * k as f64);
        if v < lo.1 {
            lo = (k, v);
        }
        if v > hi.1 {
            hi = (k, v);
        }
    }
    let refine = |k: usize, sign: f64| {
        // golden-section search of sign * ratio on the bracketing arc
        let (mut a, mut b) = (step * (k as f64 - 1.0), step * (k as f64 + 1.0));
        let gr = 0.618_033_988_749_894_9;
        let mut c = b - gr * (b - a);
        let mut d = a + gr * (b - a);
        for _ in 0..40 {
            if sign * ratio(c) > sign * ratio(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - gr * (b - a);
            d = a + gr * (b - a);
        }
        let th = 0.5 * (a + b);
        (th, ratio(th))
    };
    let mut min = Extremum { value: lo.1, w: ray(vertical, t, step * lo.0 as f64) };
    let mut max = Extremum { value: hi.1, w: ray(vertical, t, step * hi.0 as f64) };
    let (th, v) = refine(lo.0, -1.0);
    if v < min.value {
        min = Extremum { value: v, w: ray(vertical, t, th) };
    }
    let (th, v) = refine(hi.0, 1.0);
    if v > max.value {
        max = Extremum { value: v, w: ray(vertical, t, th) };
    }
    // interior critical points are generalized eigenvectors of (H, G)
    if let Some(gi) = g.inverse() {
        let m = gi.mul(h);
        let (e1, e2) = m.eigenvalues();
        for e in [e1, e2] {
            let w = m.eigenvector(e);
            let inside = if vertical { w[0].norm() <= t * w[1].norm() } else { w[1].norm() <= t * w[0].norm() };
            if !inside || crate::norm(&w) == 0.0 {
                continue;
            }
            let v = quad(h, &w) / quad(g, &w);
            if v < min.value {
                min = Extremum { value: v, w };
            }
            if v > max.value {
                max = Extremum { value: v, w };
            }
        }
    }
    (min, max)
}

/// Image disc of `|z| <= t` under `z -> (c + d z) / (a + b z)`: returns the
/// largest modulus over the disc, or infinity when the pole is inside.
pub fn mobius_max_modulus(a: C64, b: C64, c: C64, d: C64, t: f64) -> f64 {
    let k = a.norm_sqr() - t * t * b.norm_sqr();
    if k <= 0.0 {
        return f64::INFINITY;
    }
    let m = a * c.conj() - b * d.conj() * (t * t);
    let w0 = m.conj() / k;
    let rho2 = w0.norm_sqr() - (c.norm_sqr() - t * t * d.norm_sqr()) / k;
    w0.norm() + libm::sqrt(rho2.max(0.0))
}

/// The boundary ray where the Möbius image reaches its largest modulus.
fn mobius_argmax(a: C64, b: C64, c: C64, d: C64, t: f64, rays: usize) -> C64 {
    let mut best = (C64::new(t, 0.0), f64::NEG_INFINITY);
    for k in 0..rays {
        let z = C64::from_polar(t, core::f64::consts::TAU * k as f64 / rays as f64);
        let v = ((c + d * z) / (a + b * z)).norm();
        if v > best.1 {
            best = (z, v);
        }
    }
    best.0
}

/// Slack a slope bound needs so that it survives a perturbation of the
/// matrix by `delta` in operator norm, over `|z| <= t`.
fn slope_requirement(a: C64, b: C64, smax: f64, t: f64, delta: f64) -> f64 {
    let e = delta * libm::sqrt(1.0 + t * t);
    let den = a.norm() - t * b.norm();
    if den > e {
        e * (1.0 + smax) / (den - e)
    } else {
        f64::INFINITY
    }
}

struct Local {
    bounds: PointBounds,
    /// Per condition: (value, bound, vector, slack, required slack).
    checks: [(Condition, f64, f64, Point, f64, f64); 5],
}

fn evaluate(a: &Mat2, spec: &ConeFieldSpec, p: &Mat2, pinv: &Mat2, mu_bar: f64, lambda_lower: f64, delta: f64) -> Result<Local> {
    let t = spec.slope_bound();
    let wide = 1.0 / t;
    let rays = spec.boundary_rays;
    // adapted coordinates
    let ad = pinv.mul(&a.mul(p));
    if ad.inverse().is_none() {
        return Err(Error::InverseUnavailable);
    }
    let [[a11, a12], [a21, a22]] = ad.entries();
    let delta_ad = delta * p.op_norm() * pinv.op_norm();
    let h_slope = mobius_max_modulus(a11, a12, a21, a22, t);
    let h_req = slope_requirement(a11, a12, h_slope, t, delta_ad);
    // Df^{-1}(C^v) inside Int C^v is equivalent to Df mapping the closed
    // cone |w_2| <= |w_1| / t into its own interior.
    let v_slope = mobius_max_modulus(a11, a12, a21, a22, wide);
    let v_req = slope_requirement(a11, a12, v_slope, wide, delta_ad);
    let g = p.adjoint().mul(p);
    let h = p.adjoint().mul(&a.adjoint().mul(&a.mul(p)));
    let (hmin, hmax) = cone_extremes(&h, &g, t, false, rays);
    let (_, vmax) = cone_extremes(&h, &g, t, true, rays);
    let hmin_v = libm::sqrt(hmin.value.max(0.0));
    let hmax_v = libm::sqrt(hmax.value.max(0.0));
    let vmax_v = libm::sqrt(vmax.value.max(0.0));
    let one = C64::new(1.0, 0.0);
    let zh = mobius_argmax(a11, a12, a21, a22, t, rays);
    let zv = mobius_argmax(a11, a12, a21, a22, wide, rays);
    let to_chart = |w: Point| p.apply(&w);
    let checks = [
        (Condition::HorizontalInvariance, h_slope, t, to_chart([one, zh]), t - h_slope, h_req),
        // the vector lives at f(x): the image of the worst wide-cone ray
        (Condition::VerticalInvariance, v_slope, wide, to_chart(ad.apply(&[one, zv])), wide - v_slope, v_req),
        (Condition::HorizontalLower, hmin_v, lambda_lower, to_chart(hmin.w), hmin_v - lambda_lower, delta),
        (Condition::HorizontalUpper, hmax_v, 1.0 / lambda_lower, to_chart(hmax.w), 1.0 / lambda_lower - hmax_v, delta),
        (Condition::VerticalContraction, vmax_v, mu_bar, to_chart(vmax.w), mu_bar - vmax_v, delta),
    ];
    let bounds = PointBounds {
        horizontal_slope: h_slope / t,
        vertical_slope: v_slope / wide,
        horizontal_min: hmin_v,
        horizontal_max: hmax_v,
        vertical_max: vmax_v,
    };
    Ok(Local { bounds, checks })
}

/// Grid points: centers of the cubes of side `2 R / n` tiling `[-R, R]^4`
/// whose distance to the ball of radius `R` is at most the covering radius.
pub fn ball_grid(radius: f64, density: usize) -> (Vec<Point>, f64, f64) {
    let n = density.max(1);
    let s = 2.0 * radius / n as f64;
    // half-diagonal of a 4-cube of side s
    let h = s;
    let coord = |i: usize| -radius + s * (i as f64 + 0.5);
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let p = [C64::new(coord(i), coord(j)), C64::new(coord(k), coord(l))];
                    if norm(&p) <= radius + h {
                        pts.push(p);
                    }
                }
            }
        }
    }
    (pts, s, h)
}

pub fn certify(
    g: &Germ,
    spec: &ConeFieldSpec,
    ball_radius: f64,
    grid_density: usize,
    mu_bar: f64,
    lambda_lower: f64,
) -> Result<PartialHyperbolicityCertificate> {
    if g.dimension() != Dimension::Two {
        return Err(Error::precondition("cone fields need a two-dimensional germ"));
    }
    if !(0.0 < mu_bar && mu_bar < lambda_lower && lambda_lower < 1.0) {
        return Err(Error::precondition("need 0 < mu_bar < lambda_lower < 1"));
    }
    if !(ball_radius > 0.0) || grid_density == 0 {
        return Err(Error::precondition("ball radius and grid density must be positive"));
    }
    spec.validate()?;
    if g.inverse().is_none() {
        return Err(Error::InverseUnavailable);
    }
    let p = spec.basis();
    let pinv = p.inverse().ok_or_else(|| Error::precondition("distributions are degenerate"))?;
    let (pts, spacing, h) = ball_grid(ball_radius, grid_density);
    let lipschitz = g.forward().derivative_lipschitz(ball_radius + 2.0 * h);
    let delta = lipschitz * h;
    let locals = crate::par::map_slice(&pts, |x| evaluate(&g.jacobian(x), spec, &p, &pinv, mu_bar, lambda_lower, delta));
    let mut grid = Vec::with_capacity(pts.len());
    let mut witness: Option<Witness> = None;
    let mut worst = (f64::INFINITY, 0.0);
    let mut short = false;
    for (i, (x, local)) in pts.iter().zip(locals).enumerate() {
        let local = local?;
        for &(condition, value, bound, vector, slack, required) in &local.checks {
            if witness.is_none() && !(slack > 0.0) {
                witness = Some(Witness { index: i, point: *x, vector, condition, value, bound });
            }
            if slack - required < worst.0 - worst.1 {
                worst = (slack, required);
            }
            if !(slack >= required) {
                short = true;
            }
        }
        grid.push(GridPoint { point: *x, bounds: local.bounds });
    }
    let pass = witness.is_none();
    if pass && short {
        return Err(Error::GridTooCoarse { slack: worst.0, required: worst.1 });
    }
    Ok(PartialHyperbolicityCertificate {
        mu_bar,
        lambda_lower,
        ball_radius,
        cone_half_angle: spec.cone_half_angle,
        spacing,
        covering_radius: h,
        lipschitz,
        grid,
        worst_slack: worst.0,
        required_slack: worst.1,
        pass,
        witness,
    })
}

/// Re-evaluates a witness from scratch: true when the recorded inequality
/// is indeed violated at the recorded point and vector.
pub fn recheck_witness(g: &Germ, spec: &ConeFieldSpec, w: &Witness, mu_bar: f64, lambda_lower: f64) -> bool {
    let t = spec.slope_bound();
    let p = spec.basis();
    let Some(pinv) = p.inverse() else { return false };
    let a = g.jacobian(&w.point);
    let ratio = |v: &Point| norm(&a.apply(v)) / norm(v);
    let adapted = |v: &Point| pinv.apply(v);
    match w.condition {
        Condition::HorizontalInvariance => {
            let wv = adapted(&w.vector);
            let in_cone = wv[1].norm() <= t * wv[0].norm() * (1.0 + 1e-12);
            let img = adapted(&a.apply(&w.vector));
            in_cone && img[1].norm() >= t * img[0].norm() * (1.0 - 1e-12)
        }
        Condition::VerticalInvariance => {
            let Some(ai) = a.inverse() else { return false };
            let wv = adapted(&w.vector);
            let in_cone = wv[0].norm() <= t * wv[1].norm() * (1.0 + 1e-12);
            let img = adapted(&ai.apply(&w.vector));
            in_cone && img[0].norm() >= t * img[1].norm() * (1.0 - 1e-12)
        }
        Condition::HorizontalLower => ratio(&w.vector) <= lambda_lower,
        Condition::HorizontalUpper => ratio(&w.vector) >= 1.0 / lambda_lower,
        Condition::VerticalContraction => ratio(&w.vector) >= mu_bar,
    }
}

/// Closed-form extreme of `|A v| / |v|` over `v = (e^{i theta} s, 1)`,
/// `|s| = t`, for a diagonal `A = diag(a, b)`: `sqrt((|a|^2 t^2 + |b|^2) /
/// (1 + t^2))`.
pub fn diagonal_vertical_ratio(a: f64, b: f64, t: f64) -> f64 {
    libm::sqrt((a * a * t * t + b * b) / (1.0 + t * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::root_of_unity;
    use crate::germs::normalize_fixed_point;
    use crate::poly::{Poly2, PolyMap2};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn linear(lam: C64, mu: f64) -> Germ {
        let f = PolyMap2::new(Poly2::from_terms(&[(1, 0, lam)]), Poly2::from_terms(&[(0, 1, c(mu, 0.0))]));
        let inv = PolyMap2::new(Poly2::from_terms(&[(1, 0, 1.0 / lam)]), Poly2::from_terms(&[(0, 1, c(1.0 / mu, 0.0))]));
        Germ::two_dimensional(f, Some(inv), 0.2)
    }

    #[test]
    fn mobius_disc_matches_sampling() {
        let (a, b, cc, d) = (c(1.0, 0.2), c(0.1, -0.3), c(0.05, 0.02), c(0.2, 0.1));
        let t = 0.4;
        let exact = mobius_max_modulus(a, b, cc, d, t);
        let mut sampled: f64 = 0.0;
        for k in 0..4096 {
            let z = C64::from_polar(t, core::f64::consts::TAU * k as f64 / 4096.0);
            sampled = sampled.max(((cc + d * z) / (a + b * z)).norm());
        }
        assert!(exact >= sampled - 1e-12);
        assert!(exact - sampled < 1e-5);
    }

    #[test]
    fn linear_map_at_45_degrees_fails() {
        let g = linear(root_of_unity(1, 3), 0.1);
        let spec = ConeFieldSpec::axes(core::f64::consts::FRAC_PI_4);
        let cert = certify(&g, &spec, 0.2, 4, 0.3, 0.8).unwrap();
        assert!(!cert.pass);
        let want = diagonal_vertical_ratio(1.0, 0.1, 1.0);
        let got = cert.grid[0].bounds.vertical_max;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        // the same closed form bounds the horizontal ratio from below
        assert!((cert.grid[0].bounds.horizontal_min - want).abs() < 1e-12);
        let w = cert.witness.unwrap();
        assert_eq!(w.condition, Condition::HorizontalLower);
        assert!(recheck_witness(&g, &spec, &w, 0.3, 0.8));
    }

    #[test]
    fn linear_map_with_narrow_cones_passes() {
        let g = linear(root_of_unity(1, 3), 0.1);
        let spec = ConeFieldSpec::axes(10f64.to_radians());
        let cert = certify(&g, &spec, 0.2, 4, 0.3, 0.8).unwrap();
        assert!(cert.pass);
        let want = diagonal_vertical_ratio(1.0, 0.1, 10f64.to_radians().tan());
        assert!((cert.grid[0].bounds.vertical_max - want).abs() < 1e-12);
        let cert = certify(&g, &spec, 0.2, 4, 0.05, 0.8).unwrap();
        assert!(!cert.pass);
        let w = cert.witness.unwrap();
        assert_eq!(w.condition, Condition::VerticalContraction);
        assert!(w.value > 0.05);
        assert!(recheck_witness(&g, &spec, &w, 0.05, 0.8));
    }

    #[test]
    fn extremes_are_not_beaten_by_interior_samples() {
        let (raw, xf) = Germ::henon(root_of_unity(1, 3), c(0.1, 0.0), 0.2);
        let (g, _) = normalize_fixed_point(&raw, xf).unwrap();
        let t = 0.3;
        for x in [[c(0.05, 0.01), c(-0.02, 0.03)], [c(-0.1, 0.0), c(0.0, 0.05)]] {
            let a = g.jacobian(&x);
            let h = a.adjoint().mul(&a);
            let id = Mat2::identity();
            for vertical in [false, true] {
                let (lo, hi) = cone_extremes(&h, &id, t, vertical, 64);
                for i in 0..40 {
                    for k in 0..40 {
                        let w = ray(vertical, t * i as f64 / 40.0, k as f64 * 0.157);
                        let v = quad(&h, &w) / quad(&id, &w);
                        assert!(v >= lo.value - 1e-12 && v <= hi.value + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_constants() {
        let g = linear(c(1.0, 0.0), 0.1);
        let spec = ConeFieldSpec::axes(0.2);
        assert!(certify(&g, &spec, 0.2, 4, 0.9, 0.8).is_err());
        assert!(certify(&g, &ConeFieldSpec::axes(2.0), 0.2, 4, 0.3, 0.8).is_err());
    }
}
