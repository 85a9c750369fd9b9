//! Semi-parabolic petals: the regions `Delta_r^{+/-}`, local attracting and
//! repelling petals, the asymptotic curve, maximal invariant petals relative
//! to a ball, boundary contact and the induced cyclic permutation.
//!
//! Two-dimensional sets live in the center chart: a chart point `u` stands
//! for `(u, phi(u))` on the center manifold jet. One-dimensional germs use the
//! plane directly.
//!
//! Near 0 the dynamics of `f^q` is read through `Xi = q c x^q`, in which it
//! is close to `Xi -> Xi + Xi^2`. For large `q` the powers under- or overflow,
//! so `Xi` is handled through its logarithm.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::dd::DDC;
use crate::error::{Error, Result};
use crate::geometry::{CompactSetApprox, Connectivity};
use crate::germs::{Dimension, Germ, NormalFormData};
use crate::manifolds::JetGraph;
use crate::poly::Poly1;
use crate::{norm, Point, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Default orbit budget, forward and backward.
pub const DEFAULT_ORBIT_CAP: usize = 100_000;
/// `Delta_r^{+/-}` lies inside the disc `|Xi| < 2 sqrt(2) r`.
pub const DELTA_CIRCUMRADIUS: f64 = 2.83;
/// Largest `|d / c| rho`: the relative size of the next jet term on a petal.
pub const NEXT_TERM_FRACTION: f64 = 0.1;
/// Shortest Fatou jump worth attempting, in iterates of `f^q`.
pub const MIN_JUMP: i64 = 16;
/// Largest relative displacement a Fatou jump may accumulate.
pub const JUMP_TOLERANCE: f64 = 1e-6;
/// Plain steps taken after a rejected jump before trying again.
const JUMP_COOLDOWN: usize = 16;
/// Default half-width of the tube around the center graph.
pub const DEFAULT_TUBE: f64 = 1e-8;
/// Trapping samples closer to 0 than `rho / TRAP_EXCLUSION` are skipped.
pub const TRAP_EXCLUSION: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sign {
    Plus,
    Minus,
}

/// `(Re x + r)^2 + (|Im x| - r)^2 < 2 r^2` for `Plus`, mirrored for `Minus`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeltaRegion {
    pub r: f64,
    pub sign: Sign,
}

impl DeltaRegion {
    pub fn new(r: f64, sign: Sign) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::precondition("Delta region needs r > 0"));
        }
        Ok(DeltaRegion { r, sign })
    }
}

pub fn delta_contains(region: &DeltaRegion, x: C64) -> bool {
    let r = region.r;
    let a = match region.sign {
        Sign::Plus => x.re + r,
        Sign::Minus => x.re - r,
    };
    let b = x.im.abs() - r;
    a * a + b * b < 2.0 * r * r
}

/// Membership in the union of the two open discs of radius `sqrt(2) r`
/// centered at `-r + i r` and `-r - i r` (mirrored for `Minus`).
pub fn two_disc_contains(region: &DeltaRegion, x: C64) -> bool {
    let r = region.r;
    let cx = match region.sign {
        Sign::Plus => -r,
        Sign::Minus => r,
    };
    [r, -r].iter().any(|&cy| {
        let (a, b) = (x.re - cx, x.im - cy);
        a * a + b * b < 2.0 * r * r
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PetalKind {
    Attracting,
    Repelling,
    InvariantLocal,
    Maximal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PetalFamily {
    pub kind: PetalKind,
    pub p: u64,
    pub q: u64,
    /// Components in the chart, ordered by the argument of their centroids.
    pub components: Vec<CompactSetApprox>,
    pub ball_radius: f64,
    /// Center jet lifting chart points to C^2 (two-dimensional germs).
    pub center_jet: Option<Poly1>,
    /// Radius of the disc containing the local petals.
    pub rho: f64,
    pub r: f64,
}

impl PetalFamily {
    pub fn lift(&self, u: C64) -> Point {
        lift_with(self.center_jet.as_ref(), u)
    }

    /// Union of the components.
    pub fn union(&self) -> Option<CompactSetApprox> {
        let mut it = self.components.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, c| acc.union(c).unwrap_or(acc)))
    }
}

fn rem_euclid(a: f64, m: f64) -> f64 {
    let r = libm::fmod(a, m);
    if r < 0.0 {
        r + m
    } else {
        r
    }
}

fn lift_with(phi: Option<&Poly1>, u: C64) -> Point {
    match phi {
        Some(p) => [u, p.eval(u)],
        None => [u, C64::new(0.0, 0.0)],
    }
}

/// The dynamics of a germ restricted to a chart `u -> (u, phi(u))` of its
/// center manifold; the identity chart in dimension one.
#[derive(Debug, Clone)]
pub struct CenterChart {
    germ: Germ,
    phi: Option<Poly1>,
    dphi: Option<Poly1>,
}

impl CenterChart {
    pub fn new(g: &Germ, phi: Option<&Poly1>) -> Self {
        let phi = match g.dimension() {
            Dimension::One => None,
            Dimension::Two => phi.cloned(),
        };
        CenterChart { germ: g.clone(), dphi: phi.as_ref().map(|p| p.derivative()), phi }
    }

    pub fn germ(&self) -> &Germ {
        &self.germ
    }

    pub fn center_jet(&self) -> Option<&Poly1> {
        self.phi.as_ref()
    }

    pub fn lift(&self, u: C64) -> Point {
        lift_with(self.phi.as_ref(), u)
    }

    pub fn chart_norm(&self, u: C64) -> f64 {
        norm(&self.lift(u))
    }

    /// `pi_1 f(u, phi(u))`.
    pub fn restricted(&self, u: C64) -> C64 {
        self.germ.eval(&self.lift(u))[0]
    }

    pub fn restricted_derivative(&self, u: C64) -> C64 {
        let j = self.germ.jacobian(&self.lift(u));
        match &self.dphi {
            Some(d) => j.get(0, 0) + j.get(0, 1) * d.eval(u),
            None => j.get(0, 0),
        }
    }

    /// The preimage of `w` under the restricted map near `seed`.
    pub fn preimage(&self, w: C64, seed: C64) -> Option<C64> {
        let mut z = seed;
        for _ in 0..60 {
            let r = self.restricted(z) - w;
            let d = self.restricted_derivative(z);
            if d.norm() == 0.0 {
                return None;
            }
            let step = r / d;
            z -= step;
            if !z.norm().is_finite() {
                return None;
            }
            if step.norm() <= 1e-15 * (1.0 + z.norm()) {
                return Some(z);
            }
        }
        ((self.restricted(z) - w).norm() < 1e-13).then_some(z)
    }

    /// Preimage on the branch close to `w / lambda`.
    pub fn backward(&self, w: C64) -> Option<C64> {
        let lambda = self.restricted_derivative(C64::new(0.0, 0.0));
        self.preimage(w, w / lambda)
    }
}

/// The local picture at a semi-parabolic point with `nu = 1`.
#[derive(Debug, Clone)]
pub struct PetalChart {
    map: CenterChart,
    pub p: u64,
    pub q: u64,
    /// Leading coefficient `c` of `f^q(x) = x + c x^(q+1) + ...`.
    pub c: C64,
    pub rho: f64,
    /// `ln r` of the Delta regions in the `Xi` plane.
    pub ln_r: f64,
    pub tube: f64,
    pub ball_radius: f64,
    fatou: Option<FatouCoordinate>,
    phi_dd: Option<Poly1<DDC>>,
    multiplier_excess: DDC,
}

/// Largest local petal radius allowed by the next jet term and `limit`.
pub fn petal_radius(nf: &NormalFormData, limit: f64) -> f64 {
    let mut rho = limit;
    if let Some(d) = nf.next_coefficient {
        if d.norm() > 0.0 {
            rho = rho.min(NEXT_TERM_FRACTION * nf.leading_coefficient.norm() / d.norm());
        }
    }
    rho
}

/// `ln r` for which `Delta_r` fills the disc `|x| < rho` in the `Xi` chart.
pub fn delta_ln_r(q: u64, c: C64, rho: f64) -> f64 {
    libm::log(q as f64) + libm::log(c.norm()) + q as f64 * libm::log(rho) - libm::log(DELTA_CIRCUMRADIUS)
}

impl PetalChart {
    /// Builds the chart. `center` is required for two-dimensional germs;
    /// `rho` is the radius of the disc holding the local petals.
    pub fn new(g: &Germ, nf: &NormalFormData, center: Option<&JetGraph>, rho: f64, tube: f64, ball_radius: f64) -> Result<Self> {
        if nf.nu != 1 {
            return Err(Error::MultiplicityUnsupported { nu: nf.nu });
        }
        if nf.leading_coefficient.norm() == 0.0 {
            return Err(Error::precondition("vanishing leading coefficient"));
        }
        if !(rho > 0.0) {
            return Err(Error::precondition("petal radius must be positive"));
        }
        if g.dimension() == Dimension::Two && center.is_none() {
            return Err(Error::precondition("two-dimensional petals need a center jet"));
        }
        Ok(PetalChart {
            map: CenterChart::new(g, center.map(|j| &j.coefficients)),
            p: nf.p,
            q: nf.q,
            c: nf.leading_coefficient,
            rho,
            ln_r: delta_ln_r(nf.q, nf.leading_coefficient, rho),
            tube,
            ball_radius,
            fatou: FatouCoordinate::from_jet(&nf.jet, nf.q),
            phi_dd: center.map(|j| j.coefficients.lift::<DDC>()),
            multiplier_excess: {
                let lambda = DDC::from(g.forward().f1.coefficient(1, 0));
                (0..nf.q).fold(DDC::from(1.0), |acc, _| acc * lambda) - DDC::from(1.0)
            },
        })
    }

    pub fn germ(&self) -> &Germ {
        &self.map.germ
    }

    pub fn center_jet(&self) -> Option<&Poly1> {
        self.map.phi.as_ref()
    }

    pub fn fatou(&self) -> Option<&FatouCoordinate> {
        self.fatou.as_ref()
    }

    /// `f^q(u) - u` in the chart, evaluated in double-double so that the
    /// tiny displacement near 0 keeps its relative accuracy.
    pub fn displacement(&self, u: C64) -> C64 {
        let start = DDC::from(u);
        let mut x = start;
        for _ in 0..self.q {
            let y = match &self.phi_dd {
                Some(p) => p.eval(x),
                None => DDC::from(0.0),
            };
            x = self.map.germ.forward().eval_dd(&[x, y])[0];
        }
        // the multiplier of f^q is 1 only up to rounding; drop the excess
        (x - start - self.multiplier_excess * start).to_c64()
    }

    /// `f^q` in the chart.
    pub fn restricted_iterate(&self, u: C64) -> C64 {
        (0..self.q).fold(u, |x, _| self.restricted(x))
    }

    /// Moves `u` by `n` iterates of `f^q` (backward for negative `n`) along
    /// the Fatou coordinate. Returns `None` when the coordinate is not
    /// accurate enough at either end or the path could leave the ball.
    pub fn jump(&self, u: C64, n: i64) -> Option<C64> {
        self.jump_checked(u, n, false)
    }

    fn jump_checked(&self, u: C64, n: i64, start_checked: bool) -> Option<C64> {
        let phi = self.fatou.as_ref()?;
        let w = phi.leading(u).norm();
        let step = n.unsigned_abs() as f64;
        // the path in the Fatou plane keeps |w| >= |w(u)| - |n|
        if step >= w || self.chart_norm(u) * libm::pow(w / (w - step), 1.0 / self.q as f64) * 1.01 >= self.ball_radius {
            return None;
        }
        if !start_checked && !self.fatou_accurate(u, step) {
            return None;
        }
        let y = phi.advance(u, n as f64)?;
        self.fatou_accurate(y, step).then_some(y)
    }

    /// The Fatou coordinate at `x` drifts by less than `JUMP_TOLERANCE`
    /// relative displacement over `steps` iterates of `f^q`.
    fn fatou_accurate(&self, x: C64, steps: f64) -> bool {
        let Some(phi) = &self.fatou else { return false };
        let r = phi.step_residual(x, self.displacement(x));
        r.norm() * steps <= JUMP_TOLERANCE * (x * phi.derivative(x)).norm()
    }

    /// Largest jump length allowed at `u`, by the size of the Fatou
    /// coordinate there.
    fn jump_length(&self, u: C64) -> i64 {
        let Some(f) = &self.fatou else { return 0 };
        let w = f.leading(u).norm();
        // stay inside the ball along the whole path
        let room = 1.0 - libm::pow(self.chart_norm(u) * 1.02 / self.ball_radius, self.q as f64);
        (w * (0.5f64).min(room)).clamp(0.0, 1e15) as i64
    }

    /// The same chart with `r` replaced by `r * 2^-k`.
    pub fn shrunk(&self, k: u32) -> Self {
        let mut s = self.clone();
        s.ln_r -= k as f64 * core::f64::consts::LN_2;
        s.rho *= libm::pow(2.0, -(k as f64) / self.q as f64);
        s
    }

    pub fn r(&self) -> f64 {
        libm::exp(self.ln_r)
    }

    /// `W = -2 r / Xi` with saturation for huge moduli.
    fn w_of(&self, x: C64) -> Option<C64> {
        if x.norm() == 0.0 {
            return None;
        }
        let q = self.q as f64;
        let ln_xi = libm::log(q) + libm::log(self.c.norm()) + q * libm::log(x.norm());
        let arg_xi = self.c.arg() + q * x.arg();
        let ln_w = core::f64::consts::LN_2 + self.ln_r - ln_xi;
        let arg_w = PI - arg_xi;
        Some(C64::from_polar(libm::exp(ln_w.min(700.0)), arg_w))
    }

    pub fn in_attracting_chart(&self, x: C64) -> bool {
        x.norm() < self.rho && self.w_of(x).is_some_and(|w| w.re + w.im.abs() > 1.0)
    }

    pub fn in_repelling_chart(&self, x: C64) -> bool {
        x.norm() < self.rho && self.w_of(x).is_some_and(|w| -w.re + w.im.abs() > 1.0)
    }

    pub fn center_chart(&self) -> &CenterChart {
        &self.map
    }

    pub fn lift(&self, u: C64) -> Point {
        self.map.lift(u)
    }

    pub fn chart_norm(&self, u: C64) -> f64 {
        self.map.chart_norm(u)
    }

    /// A point of C^2 lies in the attracting petal: its first coordinate is
    /// in the chart petal and it is within the tube around the center graph.
    pub fn in_attracting(&self, z: &Point) -> bool {
        if let Some(phi) = &self.map.phi {
            if (z[1] - phi.eval(z[0])).norm() >= self.tube {
                return false;
            }
        }
        self.in_attracting_chart(z[0])
    }

    /// `pi_1 f(u, phi(u))`.
    pub fn restricted(&self, u: C64) -> C64 {
        self.map.restricted(u)
    }

    pub fn preimage(&self, w: C64, seed: C64) -> Option<C64> {
        self.map.preimage(w, seed)
    }

    pub fn backward(&self, w: C64) -> Option<C64> {
        self.map.backward(w)
    }

    /// Axis direction (argument) of attracting sector `j`.
    pub fn attracting_axis(&self, j: u64) -> f64 {
        // Xi on the negative real axis
        (PI - self.c.arg() + TAU * j as f64) / self.q as f64
    }

    /// Axis direction of repelling sector `j`.
    pub fn repelling_axis(&self, j: u64) -> f64 {
        (-self.c.arg() + TAU * j as f64) / self.q as f64
    }

    fn sector_of(&self, x: C64, attracting: bool) -> usize {
        let q = self.q as f64;
        let base = if attracting { self.attracting_axis(0) } else { self.repelling_axis(0) };
        let t = (x.arg() - base) * q / TAU;
        rem_euclid(libm::round(t), q) as usize
    }
}

/// Truncated Fatou coordinate of `F(x) = x + c x^(q+1) + ...`:
/// `Phi(x) = sum_j b_j x^-j + beta log x + sum_i e_i x^i` with
/// `Phi(F(x)) = Phi(x) + 1` to the order the jet of `F` allows.
#[derive(Debug, Clone, PartialEq)]
pub struct FatouCoordinate {
    /// `b_1 .. b_q`.
    pub negative: Vec<C64>,
    pub log_coefficient: C64,
    /// `e_1 .. e_k`.
    pub positive: Vec<C64>,
}

fn log1p(t: C64) -> C64 {
    if t.norm() > 1e-3 {
        return (t + 1.0).ln();
    }
    let mut acc = C64::new(0.0, 0.0);
    let mut p = t;
    for k in 1..=8 {
        let term = p / k as f64;
        acc += if k % 2 == 1 { term } else { -term };
        p *= t;
    }
    acc
}

fn expm1(t: C64) -> C64 {
    if t.norm() > 1e-3 {
        return t.exp() - 1.0;
    }
    let mut acc = C64::new(0.0, 0.0);
    let mut term = C64::new(1.0, 0.0);
    for k in 1..=8 {
        term = term * t / k as f64;
        acc += term;
    }
    acc
}

fn series_mul(a: &[C64], b: &[C64], m: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); m + 1];
    for (i, &x) in a.iter().enumerate().take(m + 1) {
        for (j, &y) in b.iter().enumerate().take(m + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Inverse of a series with constant term 1.
fn series_inv(a: &[C64], m: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); m + 1];
    out[0] = C64::new(1.0, 0.0);
    for k in 1..=m {
        let mut acc = C64::new(0.0, 0.0);
        for j in 1..=k.min(a.len() - 1) {
            acc += a[j] * out[k - j];
        }
        out[k] = -acc;
    }
    out
}

/// `log a` for a series with constant term 1.
fn series_log(a: &[C64], m: usize) -> Vec<C64> {
    let inv = series_inv(a, m);
    let da: Vec<C64> = (1..a.len()).map(|k| a[k] * k as f64).collect();
    let q = series_mul(&da, &inv, m);
    let mut out = vec![C64::new(0.0, 0.0); m + 1];
    for k in 1..=m {
        out[k] = q[k - 1] / k as f64;
    }
    out
}

impl FatouCoordinate {
    /// Solves for the coefficients order by order. Needs the jet of `F` to
    /// reach degree `2q + 1`.
    pub fn from_jet(jet: &Poly1, q: u64) -> Option<Self> {
        let q = q as usize;
        let d = jet.degree();
        if q == 0 || d < 2 * q + 1 {
            return None;
        }
        let c = jet.coefficient(q + 1);
        if c.norm() == 0.0 {
            return None;
        }
        // G = F / x
        let m = d - 1;
        let g: Vec<C64> = (0..=m).map(|k| jet.coefficient(k + 1)).collect();
        let ginv = series_inv(&g, m);
        let mut neg_pow = vec![vec![C64::new(1.0, 0.0)]; q + 1];
        for j in 1..=q {
            neg_pow[j] = series_mul(&neg_pow[j - 1], &ginv, m);
        }
        let log_g = series_log(&g, m);
        let kmax = d - 1 - q;
        let npos = kmax - q;
        let mut pos_pow = vec![vec![C64::new(1.0, 0.0)]; npos + 1];
        for i in 1..=npos {
            pos_pow[i] = series_mul(&pos_pow[i - 1], &g, m);
        }
        let mut b = vec![C64::new(0.0, 0.0); q + 1];
        let mut beta = C64::new(0.0, 0.0);
        let mut e = vec![C64::new(0.0, 0.0); npos + 1];
        let at = |v: &Vec<C64>, k: usize| if k >= 1 && k < v.len() { v[k] } else { C64::new(0.0, 0.0) };
        for k in 0..=kmax {
            let mut acc = C64::new(0.0, 0.0);
            for j in 1..=q {
                acc += b[j] * at(&neg_pow[j], k + j);
            }
            acc += beta * at(&log_g, k);
            for i in 1..=npos {
                if k > i {
                    acc += e[i] * at(&pos_pow[i], k - i);
                }
            }
            let rhs = if k == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) } - acc;
            if k < q {
                let j = q - k;
                b[j] = rhs / at(&neg_pow[j], q);
            } else if k == q {
                beta = rhs / at(&log_g, q);
            } else {
                let i = k - q;
                e[i] = rhs / at(&pos_pow[i], q);
            }
        }
        Some(FatouCoordinate { negative: b[1..].to_vec(), log_coefficient: beta, positive: e[1..].to_vec() })
    }

    /// The dominant term `b_q x^-q`.
    pub fn leading(&self, x: C64) -> C64 {
        let q = self.negative.len();
        self.negative[q - 1] / x.powi(q as i32)
    }

    /// `Phi(x + delta) - Phi(x) - 1`, free of cancellation for small `delta`.
    pub fn step_residual(&self, x: C64, delta: C64) -> C64 {
        let l = log1p(delta / x);
        let mut acc = self.log_coefficient * l - 1.0;
        let ix = C64::new(1.0, 0.0) / x;
        let mut p = ix;
        for (j, &b) in self.negative.iter().enumerate() {
            acc += b * p * expm1(l * -((j + 1) as f64));
            p *= ix;
        }
        let mut p = x;
        for (i, &e) in self.positive.iter().enumerate() {
            acc += e * p * expm1(l * (i + 1) as f64);
            p *= x;
        }
        acc
    }

    /// `Phi(y) - Phi(x)` with the logarithm taken along the short path.
    pub fn difference(&self, x: C64, y: C64) -> C64 {
        let (ix, iy) = (C64::new(1.0, 0.0) / x, C64::new(1.0, 0.0) / y);
        let mut acc = C64::new(0.0, 0.0);
        let (mut px, mut py) = (ix, iy);
        for &b in &self.negative {
            acc += b * (py - px);
            px *= ix;
            py *= iy;
        }
        acc += self.log_coefficient * (y / x).ln();
        let (mut px, mut py) = (x, y);
        for &e in &self.positive {
            acc += e * (py - px);
            px *= x;
            py *= y;
        }
        acc
    }

    pub fn derivative(&self, y: C64) -> C64 {
        let iy = C64::new(1.0, 0.0) / y;
        let mut acc = self.log_coefficient * iy;
        let mut p = iy * iy;
        for (j, &b) in self.negative.iter().enumerate() {
            acc -= b * p * (j + 1) as f64;
            p *= iy;
        }
        let mut p = C64::new(1.0, 0.0);
        for (i, &e) in self.positive.iter().enumerate() {
            acc += e * p * (i + 1) as f64;
            p *= y;
        }
        acc
    }

    /// The point `y` near the orbit of `x` with `Phi(y) = Phi(x) + t`.
    pub fn advance(&self, x: C64, t: f64) -> Option<C64> {
        let q = self.negative.len() as f64;
        let w = self.leading(x);
        let ratio = w / (w + t);
        let mut y = x * ratio.powf(1.0 / q);
        for _ in 0..30 {
            let r = self.difference(x, y) - t;
            let d = self.derivative(y);
            if d.norm() == 0.0 {
                return None;
            }
            let step = r / d;
            y -= step;
            if !y.norm().is_finite() {
                return None;
            }
            if step.norm() <= 1e-14 * y.norm() {
                return Some(y);
            }
        }
        None
    }
}

/// Polar samples of the disc of radius `rho` kept by `keep`.
fn petal_samples(rho: f64, rings: usize, spokes: usize, keep: impl Fn(C64) -> bool) -> Vec<C64> {
    let mut out = Vec::new();
    for i in 0..rings {
        // geometric spacing toward the excluded core
        let s = libm::pow(1.0 / TRAP_EXCLUSION, (i as f64 + 0.5) / rings as f64);
        for k in 0..spokes {
            let x = C64::from_polar(rho * s, TAU * (k as f64 + 0.5) / spokes as f64);
            if keep(x) {
                out.push(x);
            }
        }
    }
    out
}

fn rasterize_sectors(chart: &PetalChart, attracting: Option<bool>, resolution: usize, chart_name: &str) -> Vec<CompactSetApprox> {
    let q = chart.q as usize;
    let mut comps: Vec<CompactSetApprox> = (0..q).map(|_| CompactSetApprox::empty(chart_name, chart.rho, resolution)).collect();
    let proto = &comps[0];
    let mut cells = Vec::new();
    for j in 0..resolution {
        for i in 0..resolution {
            let c = proto.cell_center(i, j);
            cells.push(C64::new(c[0], c[1]));
        }
    }
    for (idx, x) in cells.into_iter().enumerate() {
        let (i, j) = (idx % resolution, idx / resolution);
        let k = match attracting {
            Some(true) if chart.in_attracting_chart(x) => chart.sector_of(x, true),
            Some(false) if chart.in_repelling_chart(x) => chart.sector_of(x, false),
            None if chart.in_attracting_chart(x) && chart.in_repelling_chart(x) => {
                // 2q lobes: the attracting sector and the side of its axis
                let s = chart.sector_of(x, true);
                let side = libm::sin(x.arg() - chart.attracting_axis(s as u64) * 1.0) > 0.0;
                2 * s + side as usize
            }
            _ => continue,
        };
        if k < comps.len() {
            comps[k].insert(i, j);
        } else {
            while comps.len() <= k {
                comps.push(CompactSetApprox::empty(chart_name, chart.rho, resolution));
            }
            comps[k].insert(i, j);
        }
    }
    sort_by_argument(comps)
}

fn sort_by_argument(mut comps: Vec<CompactSetApprox>) -> Vec<CompactSetApprox> {
    comps.retain(|c| !c.is_empty());
    let key = |c: &CompactSetApprox| {
        let m = c.centroid().unwrap_or([0.0, 0.0]);
        rem_euclid(libm::atan2(m[1], m[0]), TAU)
    };
    comps.sort_by(|a, b| key(a).total_cmp(&key(b)));
    comps
}

/// Outcome of a trapping check.
#[derive(Debug, Clone, PartialEq)]
pub struct Trapping {
    pub halvings: u32,
    pub samples: usize,
}

fn check_forward_trapping(chart: &PetalChart) -> core::result::Result<usize, f64> {
    let samples = petal_samples(chart.rho, 48, 256, |x| chart.in_attracting_chart(x));
    let q = chart.q as usize;
    let tube = chart.tube;
    let offsets: Vec<C64> = match chart.map.phi {
        Some(_) => vec![C64::new(0.0, 0.0), C64::new(0.5 * tube, 0.0), C64::new(0.0, -0.5 * tube)],
        None => vec![C64::new(0.0, 0.0)],
    };
    let bad = crate::par::map_slice(&samples, |&x| {
        let mut worst: Option<f64> = None;
        for o in &offsets {
            let mut z = chart.lift(x);
            z[1] += *o;
            let img = chart.map.germ.iterate(&z, q);
            if !chart.in_attracting(&img) {
                worst = Some(x.norm());
            }
        }
        worst
    });
    match bad.into_iter().flatten().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))) {
        Some(w) => Err(w),
        None => Ok(samples.len()),
    }
}

fn check_backward_trapping(chart: &PetalChart) -> core::result::Result<usize, f64> {
    let samples = petal_samples(chart.rho, 48, 256, |x| chart.in_repelling_chart(x));
    let q = chart.q as usize;
    let bad = crate::par::map_slice(&samples, |&x| {
        let mut z = x;
        for _ in 0..q {
            z = chart.backward(z)?;
        }
        if chart.in_repelling_chart(z) {
            None
        } else {
            Some(x.norm())
        }
    });
    match bad.into_iter().flatten().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))) {
        Some(w) => Err(w),
        None => Ok(samples.len()),
    }
}

/// Shrinks the chart until `check` passes, at most four halvings of `r`.
fn verify_with_halvings(
    chart: &PetalChart,
    check: impl Fn(&PetalChart) -> core::result::Result<usize, f64>,
) -> Result<(PetalChart, Trapping)> {
    let mut worst = 0.0;
    for k in 0..=4 {
        let c = chart.shrunk(k);
        match check(&c) {
            Ok(samples) => return Ok((c, Trapping { halvings: k, samples })),
            Err(w) => worst = w,
        }
    }
    Err(Error::TrappingUnverifiable { worst_modulus: worst })
}

fn require_semiparabolic(nf: &NormalFormData) -> Result<()> {
    if nf.q == 0 {
        return Err(Error::precondition("petals need a semi-parabolic germ"));
    }
    if nf.nu != 1 {
        return Err(Error::MultiplicityUnsupported { nu: nf.nu });
    }
    Ok(())
}

/// Local attracting petals: preimages under `x -> x^q` of `Delta_r^+`, `r`
/// halved until `f^q` maps samples of the family back into it.
pub fn local_attracting_petals(chart: &PetalChart, resolution: usize) -> Result<(PetalFamily, PetalChart, Trapping)> {
    let (c, t) = verify_with_halvings(chart, check_forward_trapping)?;
    let comps = rasterize_sectors(&c, Some(true), resolution, "center");
    Ok((family(&c, PetalKind::Attracting, comps), c, t))
}

/// Local repelling petals: `Delta_r^-` sectors, backward trapping verified
/// along the chart dynamics.
pub fn local_repelling_petals(chart: &PetalChart, resolution: usize) -> Result<(PetalFamily, PetalChart, Trapping)> {
    let (c, t) = verify_with_halvings(chart, check_backward_trapping)?;
    let comps = rasterize_sectors(&c, Some(false), resolution, "center");
    Ok((family(&c, PetalKind::Repelling, comps), c, t))
}

/// The `2q` lobes of the intersection of the local attracting and repelling
/// petals.
pub fn local_invariant_petals(chart: &PetalChart, resolution: usize) -> PetalFamily {
    let comps = rasterize_sectors(chart, None, resolution, "center");
    family(chart, PetalKind::InvariantLocal, comps)
}

fn family(chart: &PetalChart, kind: PetalKind, components: Vec<CompactSetApprox>) -> PetalFamily {
    PetalFamily {
        kind,
        p: chart.p,
        q: chart.q,
        components,
        ball_radius: chart.ball_radius,
        center_jet: chart.map.phi.clone(),
        rho: chart.rho,
        r: chart.r(),
    }
}

/// Builds a chart sized from the normal form: `rho` below the next-term
/// bound and `limit`.
pub fn chart_for(g: &Germ, nf: &NormalFormData, center: Option<&JetGraph>, limit: f64, ball_radius: f64) -> Result<PetalChart> {
    require_semiparabolic(nf)?;
    let rho = petal_radius(nf, limit);
    PetalChart::new(g, nf, center, rho, DEFAULT_TUBE, ball_radius)
}

/// The repelling graph `y = psi(x)` at chart points `xs` by forward graph
/// transform of the zero graph, computed by shooting: `psi_N(x) = pi_2
/// f^N(xi, 0)` where `pi_1 f^N(xi, 0) = x`. Depth grows until successive
/// graphs agree to `tol` in sup norm.
pub fn repelling_graph(chart: &PetalChart, xs: &[C64], tol: f64, max_depth: usize) -> Result<RepellingGraph> {
    if chart.map.phi.is_none() {
        return Ok(RepellingGraph { points: xs.iter().map(|&x| (x, C64::new(0.0, 0.0))).collect(), depth: 0, residual: 0.0 });
    }
    let mut prev: Option<Vec<C64>> = None;
    let mut last_gap = f64::INFINITY;
    let mut growth = 0;
    for depth in 1..=max_depth {
        let vals: Vec<Option<C64>> = crate::par::map_slice(xs, |&x| shoot(chart, x, depth));
        let vals: Vec<C64> = vals.into_iter().collect::<Option<Vec<_>>>().ok_or(Error::GraphTransformDivergence)?;
        if let Some(p) = &prev {
            let gap = p.iter().zip(&vals).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if gap < tol {
                return Ok(RepellingGraph { points: xs.iter().copied().zip(vals).collect(), depth, residual: gap });
            }
            if gap > last_gap {
                growth += 1;
                if growth >= 5 {
                    return Err(Error::GraphTransformDivergence);
                }
            } else {
                growth = 0;
            }
            last_gap = gap;
        }
        prev = Some(vals);
    }
    Err(Error::GraphTransformDivergence)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepellingGraph {
    /// `(x, psi(x))`.
    pub points: Vec<(C64, C64)>,
    pub depth: usize,
    /// Sup distance between the last two graphs.
    pub residual: f64,
}

fn shoot(chart: &PetalChart, x: C64, depth: usize) -> Option<C64> {
    let mut xi = x;
    for _ in 0..depth {
        xi = chart.backward(xi)?;
    }
    let g = &chart.map.germ;
    for _ in 0..50 {
        let (img, m) = g.iterate_with_jacobian(&[xi, C64::new(0.0, 0.0)], depth);
        let r = img[0] - x;
        let d = m.get(0, 0);
        if d.norm() == 0.0 {
            return None;
        }
        let step = r / d;
        xi -= step;
        if step.norm() <= 1e-16 * (1.0 + xi.norm()) || r.norm() == 0.0 {
            let img = g.iterate(&[xi, C64::new(0.0, 0.0)], depth);
            return Some(img[1]);
        }
    }
    None
}

/// Points of the asymptotic curve: forward orbits of seeds in the repelling
/// petals, kept while they stay in the ball. An orbit ends when it leaves the
/// ball or settles in the attracting half of a petal, where it is trapped.
/// Tangents are pushed forward by `Df`; `horizontal` records membership in
/// the cone `|v_2| <= slope |v_1|`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticSample {
    pub points: Vec<Point>,
    pub tangents: Vec<Point>,
    pub horizontal: Vec<bool>,
    /// Seeds whose orbit hit the cap before leaving the ball.
    pub capped: usize,
}

pub fn asymptotic_curve_sample(chart: &PetalChart, ball_radius: f64, density: usize, cap: usize, cone_slope: f64) -> AsymptoticSample {
    let q = chart.q;
    let gr = [0.618_033_988_749_894_9, 0.754_877_666_246_692_7];
    let mut seeds = Vec::new();
    for k in 0..density {
        let j = k as u64 % q;
        let s = (k as u64 / q) as f64;
        let radius = chart.rho * (0.02 + 0.9 * (s * gr[0]).fract());
        let spread = if k < q as usize { 0.0 } else { (2.0 * (s * gr[1]).fract() - 1.0) * 0.8 * PI / (2.0 * q as f64) };
        let x = C64::from_polar(radius, chart.repelling_axis(j) + spread);
        if chart.in_repelling_chart(x) {
            seeds.push(x);
        }
    }
    let orbits = crate::par::map_slice(&seeds, |&x| {
        let mut z = chart.lift(x);
        let mut v = match &chart.map.dphi {
            Some(d) => [C64::new(1.0, 0.0), d.eval(x)],
            None => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        };
        // long orbits are thinned to one point per `spacing` of travel; a
        // tangent outside the cone is always kept
        let spacing = ball_radius / 512.0;
        let horizontal = |v: &Point| v[1].norm() <= cone_slope * v[0].norm();
        let mut pts: Vec<(Point, Point)> = Vec::new();
        let mut capped = true;
        for _ in 0..cap {
            if norm(&z) >= ball_radius {
                capped = false;
                break;
            }
            let settled = chart.in_attracting(&z) && chart.w_of(z[0]).is_some_and(|w| w.re > 0.0);
            let far = pts.last().is_none_or(|(p, _)| norm(&[z[0] - p[0], z[1] - p[1]]) >= spacing);
            if far || settled || !horizontal(&v) {
                pts.push((z, v));
            }
            if settled {
                capped = false;
                break;
            }
            let j = chart.map.germ.jacobian(&z);
            v = j.apply(&v);
            let n = norm(&v);
            v = [v[0] / n, v[1] / n];
            z = chart.map.germ.eval(&z);
        }
        (pts, capped)
    });
    let mut out = AsymptoticSample { points: Vec::new(), tangents: Vec::new(), horizontal: Vec::new(), capped: 0 };
    for (pts, capped) in orbits {
        if capped {
            out.capped += 1;
            continue;
        }
        for (z, v) in pts {
            out.points.push(z);
            out.tangents.push(v);
            out.horizontal.push(v[1].norm() <= cone_slope * v[0].norm());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximalPetalConfig {
    pub ball_radius: f64,
    /// Grid cells per axis over `[-B, B]^2`.
    pub resolution: usize,
    pub forward_cap: usize,
    pub backward_cap: usize,
}

impl MaximalPetalConfig {
    pub fn new(ball_radius: f64, resolution: usize) -> Self {
        MaximalPetalConfig { ball_radius, resolution, forward_cap: DEFAULT_ORBIT_CAP, backward_cap: DEFAULT_ORBIT_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum CellState {
    Outside,
    Petal,
    Excluded,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalPetals {
    pub family: PetalFamily,
    /// Cells whose orbits hit a cap.
    pub unclassified: usize,
    /// Cells classified as petal points before component extraction.
    pub retained: usize,
    /// Components not touching the cut disc (dropped).
    pub islands: usize,
    /// Radius, in cells, of the disc cut out around 0.
    pub cut_radius: usize,
    /// Per component: largest distance (in cells) from the image of a cell
    /// under `f^q` to the component.
    pub invariance_offsets: Vec<f64>,
    /// Per component: it contains a lobe of the local invariant petals.
    pub seeded: Vec<bool>,
    pub attracting: PetalFamily,
    pub repelling: PetalFamily,
}

/// Classifies one chart point. Caps count map evaluations and Fatou jumps.
pub fn classify_point(chart: &PetalChart, u: C64, forward_cap: usize, backward_cap: usize) -> CellState {
    let b = chart.ball_radius;
    if u.norm() == 0.0 || chart.chart_norm(u) >= b {
        return CellState::Outside;
    }
    let both = chart.in_attracting_chart(u) && chart.in_repelling_chart(u);
    if both {
        return CellState::Petal;
    }
    // forward in the ambient space
    let mut z = chart.lift(u);
    let mut forward = None;
    let mut cooldown = 0usize;
    // the current point is a verified jump landing
    let mut landed = false;
    for _ in 0..forward_cap {
        if chart.in_attracting(&z) {
            forward = Some(true);
            break;
        }
        let n = chart.jump_length(z[0]);
        let jumped = if cooldown == 0 && n >= MIN_JUMP { chart.jump_checked(z[0], n, landed) } else { None };
        landed = jumped.is_some();
        match jumped {
            Some(y) => z = chart.lift(y),
            None => {
                if n >= MIN_JUMP && cooldown == 0 {
                    cooldown = JUMP_COOLDOWN;
                }
                cooldown = cooldown.saturating_sub(1);
                z = chart.map.germ.eval(&z);
            }
        }
        if norm(&z) >= b {
            forward = Some(false);
            break;
        }
    }
    match forward {
        Some(false) => return CellState::Excluded,
        None => return CellState::Unclassified,
        Some(true) => {}
    }
    let mut x = u;
    let mut cooldown = 0usize;
    let mut landed = false;
    for _ in 0..backward_cap {
        if chart.in_repelling_chart(x) {
            return CellState::Petal;
        }
        let n = chart.jump_length(x);
        let jumped = if cooldown == 0 && n >= MIN_JUMP { chart.jump_checked(x, -n, landed) } else { None };
        landed = jumped.is_some();
        x = match jumped {
            Some(y) => y,
            None => {
                if n >= MIN_JUMP && cooldown == 0 {
                    cooldown = JUMP_COOLDOWN;
                }
                cooldown = cooldown.saturating_sub(1);
                match chart.backward(x) {
                    Some(y) => y,
                    None => return CellState::Excluded,
                }
            }
        };
        if chart.chart_norm(x) >= b {
            return CellState::Excluded;
        }
    }
    CellState::Unclassified
}

/// Maximal invariant petals relative to the ball of radius `B`: chart cells
/// whose forward orbit enters the attracting petal and whose backward orbit
/// enters the repelling petal without leaving the ball.
pub fn maximal_petals(chart: &PetalChart, cfg: &MaximalPetalConfig) -> Result<MaximalPetals> {
    let b = cfg.ball_radius;
    if (b - chart.ball_radius).abs() > 0.0 {
        return Err(Error::precondition("chart and configuration disagree on the ball radius"));
    }
    if cfg.resolution < 8 {
        return Err(Error::precondition("resolution too small"));
    }
    if chart.map.germ.dimension() == Dimension::One {
        // the backward branch must be single-valued on the ball
        let f = chart.map.germ.one_dimensional_polynomial();
        let df = f.derivative();
        let crit = critical_points_in(&df, b);
        if crit > 0 {
            return Err(Error::precondition(format!("{crit} critical point(s) of f inside the ball")));
        }
    }
    // without Fatou jumps, drift through the ball takes about 1 / (q |c| B^q)
    // iterates of f^q
    let q = chart.q as f64;
    let needed = libm::exp(-(libm::log(q) + libm::log(chart.c.norm()) + q * libm::log(b)));
    if chart.fatou.is_none() && needed > cfg.forward_cap.min(cfg.backward_cap) as f64 {
        return Err(Error::OrbitCapInsufficient { needed, cap: cfg.forward_cap.min(cfg.backward_cap) });
    }
    let (att, att_chart, _) = local_attracting_petals(chart, 256)?;
    let (rep, rep_chart, _) = local_repelling_petals(chart, 256)?;
    // classify with the verified (possibly shrunk) local petals
    let work = PetalChart { ln_r: att_chart.ln_r.min(rep_chart.ln_r), rho: att_chart.rho.min(rep_chart.rho), ..chart.clone() };
    let n = cfg.resolution;
    let grid = CompactSetApprox::empty("center", b, n);
    let states: Vec<CellState> = crate::par::map_indexed(n * n, |idx| {
        let c = grid.cell_center(idx % n, idx / n);
        classify_point(&work, C64::new(c[0], c[1]), cfg.forward_cap, cfg.backward_cap)
    });
    let mut petal = grid.clone();
    let mut unclassified = 0;
    for (idx, s) in states.iter().enumerate() {
        match s {
            CellState::Petal => petal.insert(idx % n, idx / n),
            CellState::Unclassified => unclassified += 1,
            _ => {}
        }
    }
    let retained = petal.count();
    let expected = 2 * chart.q as usize;
    let (comps, islands, cut) = extract_components(&petal, expected)?;
    let comps = sort_by_argument(comps);
    let q = chart.q as usize;
    let offsets: Vec<f64> = comps
        .iter()
        .map(|c| {
            let pts = c.points();
            let cells = c.dilate(0);
            crate::par::map_slice(&pts, |p| {
                let z = chart.map.germ.iterate(&work.lift(C64::new(p[0], p[1])), q);
                cells.cell_offset(&[z[0].re, z[0].im])
            })
            .into_iter()
            .fold(0.0, f64::max)
        })
        .collect();
    let seeded = comps
        .iter()
        .map(|c| {
            c.points().iter().any(|p| {
                let u = C64::new(p[0], p[1]);
                work.in_attracting_chart(u) && work.in_repelling_chart(u)
            })
        })
        .collect();
    let family = PetalFamily {
        kind: PetalKind::Maximal,
        p: chart.p,
        q: chart.q,
        components: comps,
        ball_radius: b,
        center_jet: chart.map.phi.clone(),
        rho: work.rho,
        r: work.r(),
    };
    Ok(MaximalPetals {
        family,
        unclassified,
        retained,
        islands,
        cut_radius: cut,
        invariance_offsets: offsets,
        seeded,
        attracting: att,
        repelling: rep,
    })
}

/// Chebyshev distance, in cells, from `p` to the nearest filled cell; zero
/// inside. Infinite outside the box.
fn critical_points_in(df: &Poly1, r: f64) -> usize {
    // roots of f' by Durand-Kerner; degree is small
    let d = df.degree();
    if d == 0 {
        return 0;
    }
    let lead = df.coefficient(d);
    if lead.norm() == 0.0 {
        return 0;
    }
    let mut roots: Vec<C64> = (0..d).map(|k| C64::from_polar(1.0 + 0.3 * k as f64, 0.4 + TAU * k as f64 / d as f64)).collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for k in 0..d {
            let z = roots[k];
            let mut den = lead;
            for (m, w) in roots.iter().enumerate() {
                if m != k {
                    den *= z - w;
                }
            }
            if den.norm() == 0.0 {
                continue;
            }
            let step = df.eval(z) / den;
            roots[k] = z - step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    roots.iter().filter(|z| z.norm() < r).count()
}

/// Removes discs of growing radius around 0 until exactly `expected`
/// components touch the disc, then hands the disc cells to the component
/// whose angular position is closest.
fn extract_components(petal: &CompactSetApprox, expected: usize) -> Result<(Vec<CompactSetApprox>, usize, usize)> {
    let n = petal.size();
    let h = petal.resolution();
    let mut k = 2usize;
    let mut last = 0usize;
    while k <= n / 4 {
        let radius = k as f64 * h;
        let mut cut = petal.clone();
        let mut disc = Vec::new();
        for (i, j) in petal.cells() {
            let c = petal.cell_center(i, j);
            if libm::hypot(c[0], c[1]) < radius {
                cut.remove(i, j);
                disc.push((i, j, c));
            }
        }
        let comps = cut.components(Connectivity::Eight);
        let touch = |c: &CompactSetApprox| c.points().iter().any(|p| libm::hypot(p[0], p[1]) < radius + 1.5 * h);
        let (mut touching, others): (Vec<_>, Vec<_>) = comps.into_iter().partition(|c| touch(c));
        last = touching.len();
        if touching.len() == expected {
            // angular positions from the ring just outside the disc
            let angles: Vec<f64> = touching
                .iter()
                .map(|c| {
                    let (mut sx, mut sy) = (0.0, 0.0);
                    for p in c.points() {
                        let rr = libm::hypot(p[0], p[1]);
                        if rr < 2.0 * radius + 1.5 * h {
                            sx += p[0] / rr;
                            sy += p[1] / rr;
                        }
                    }
                    libm::atan2(sy, sx)
                })
                .collect();
            for (i, j, c) in disc {
                let a = libm::atan2(c[1], c[0]);
                let best = angles.iter().enumerate().map(|(m, &b)| (m, angle_gap(a, b))).fold((0, f64::INFINITY), |acc, v| {
                    if v.1 < acc.1 {
                        v
                    } else {
                        acc
                    }
                });
                touching[best.0].insert(i, j);
            }
            return Ok((touching, others.len(), k));
        }
        k *= 2;
    }
    Err(Error::ComponentCountMismatch { found: last, expected })
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = rem_euclid(a - b, TAU);
    d.min(TAU - d)
}

/// Per component: some cell lies within `tol` of the sphere of radius `B`.
pub fn petal_touches_boundary(family: &PetalFamily, ball_radius: f64, tol: f64) -> Vec<bool> {
    family
        .components
        .iter()
        .map(|c| {
            c.points().iter().any(|p| {
                let z = family.lift(C64::new(p[0], p[1]));
                (norm(&z) - ball_radius).abs() <= tol
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PetalCycle {
    /// `permutation[j]` is the component containing the image of component `j`.
    pub permutation: Vec<usize>,
    /// Rotation number `(p, q)` in lowest terms.
    pub rotation: (u64, u64),
}

/// The permutation induced by `f` on the components and its rotation number.
pub fn petal_cycle(g: &Germ, family: &PetalFamily) -> Result<PetalCycle> {
    let m = family.components.len();
    if m == 0 {
        return Err(Error::precondition("empty petal family"));
    }
    let widened: Vec<CompactSetApprox> = family.components.iter().map(|c| c.dilate(1)).collect();
    let mut perm = Vec::with_capacity(m);
    for (j, comp) in family.components.iter().enumerate() {
        let Some(ctr) = comp.centroid() else { return Err(Error::AmbiguousTracking { component: j }) };
        // the component cell closest to the centroid
        let rep = comp
            .points()
            .into_iter()
            .min_by(|a, b| {
                let da = libm::hypot(a[0] - ctr[0], a[1] - ctr[1]);
                let db = libm::hypot(b[0] - ctr[0], b[1] - ctr[1]);
                da.total_cmp(&db)
            })
            .ok_or(Error::AmbiguousTracking { component: j })?;
        let img = g.eval(&family.lift(C64::new(rep[0], rep[1])));
        let p = [img[0].re, img[0].im];
        let hits: Vec<usize> = (0..m).filter(|&k| widened[k].contains_point(&p)).collect();
        if hits.len() != 1 {
            return Err(Error::AmbiguousTracking { component: j });
        }
        perm.push(hits[0]);
    }
    let shift = perm[0] % m;
    if (0..m).any(|j| perm[j] != (j + shift) % m) {
        return Err(Error::AmbiguousTracking { component: 0 });
    }
    let g_ = gcd(shift as u64, m as u64);
    let rotation = if shift == 0 { (0, 1) } else { (shift as u64 / g_, m as u64 / g_) };
    Ok(PetalCycle { permutation: perm, rotation })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germs::{normalize_fixed_point, semiparabolic_multiplicity};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn delta_examples() {
        let plus = DeltaRegion::new(0.1, Sign::Plus).unwrap();
        let minus = DeltaRegion::new(0.1, Sign::Minus).unwrap();
        assert!(delta_contains(&plus, c(-0.1, 0.0)));
        assert!(!delta_contains(&plus, c(0.0, 0.0)));
        assert!(delta_contains(&minus, c(0.1, 0.0)));
        assert!(DeltaRegion::new(0.0, Sign::Plus).is_err());
    }

    #[test]
    fn xi_chart_matches_delta_for_the_quadratic() {
        let g = Germ::polynomial(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 0.5);
        let (n, fp) = normalize_fixed_point(&g, [c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let nf = semiparabolic_multiplicity(&n, &fp, 3).unwrap();
        let chart = PetalChart::new(&n, &nf, None, 0.3, DEFAULT_TUBE, 0.4).unwrap();
        let region = DeltaRegion::new(chart.r(), Sign::Plus).unwrap();
        for k in 0..2000 {
            let x = C64::from_polar(0.25 * ((k as f64 * 0.618).fract()), k as f64 * 0.37);
            if x.norm() < chart.rho && x.norm() > 1e-3 {
                assert_eq!(chart.in_attracting_chart(x), delta_contains(&region, x), "{x}");
            }
        }
    }

    #[test]
    fn quadratic_attracting_petal_traps() {
        let g = Germ::polynomial(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 0.5);
        let (n, fp) = normalize_fixed_point(&g, [c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let nf = semiparabolic_multiplicity(&n, &fp, 3).unwrap();
        let rho = DELTA_CIRCUMRADIUS * 0.05;
        let chart = PetalChart::new(&n, &nf, None, rho, DEFAULT_TUBE, 0.4).unwrap();
        let (fam, _, t) = local_attracting_petals(&chart, 128).unwrap();
        assert_eq!(t.halvings, 0);
        assert_eq!(fam.components.len(), 1);
        assert!(petal_touches_boundary(&fam, 0.4, 2.0 * 0.4 / 1024.0).iter().all(|&b| !b));
        let cyc = petal_cycle(&n, &fam).unwrap();
        assert_eq!(cyc.rotation, (0, 1));
        assert_eq!(cyc.permutation, vec![0]);
    }

    #[test]
    fn critical_points_are_counted() {
        let f = Poly1::from_coefficients(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(critical_points_in(&f.derivative(), 0.4), 0);
        assert_eq!(critical_points_in(&f.derivative(), 0.6), 1);
    }
}
