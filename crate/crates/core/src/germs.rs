//! Polynomial germs of (C, 0) and (C^2, 0): fixed-point normalization,
//! arithmetic classification, semi-parabolic normal-form data, the
//! approximating sequence along convergents, and periodic-point scans.

use alloc::format;
use alloc::vec::Vec;

use crate::arithmetic::{
    brjuno_sum, continued_fraction_expand, root_of_unity, BrjunoReport, BrjunoVerdict, ContinuedFractionExpansion, DeclaredForm,
    Provenance, RotationAngle,
};
use crate::dd::{Ring, DDC};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::manifolds::center_jet_coefficients;
use crate::poly::{Poly1, Poly2, PolyMap2};
use crate::{norm, Point, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Tolerance on `| |lambda| - 1 |` for a neutral eigenvalue.
pub const UNIT_CIRCLE_TOLERANCE: f64 = 1e-9;
/// Newton step budget when locating a fixed point.
pub const NEWTON_STEPS: usize = 200;
/// Largest jet degree the multiplicity computation accepts.
pub const MAX_JET_DEGREE: usize = 600;

fn cz() -> C64 {
    C64::new(0.0, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Dimension {
    One,
    Two,
}

/// How a two-dimensional germ is inverted.
#[derive(Debug, Clone, PartialEq)]
pub enum InverseMap {
    /// An exact polynomial inverse.
    Exact(PolyMap2),
    /// A polynomial close to the inverse, polished by Newton's method.
    Refined(PolyMap2),
}

impl InverseMap {
    pub fn inverse_poly(&self) -> &PolyMap2 {
        match self {
            InverseMap::Exact(p) | InverseMap::Refined(p) => p,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, InverseMap::Exact(_))
    }
}

/// A polynomial germ. One-dimensional germs act on the first coordinate of
/// C^2 and keep the second at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Germ {
    dimension: Dimension,
    forward: PolyMap2,
    inverse: Option<InverseMap>,
    domain_radius: f64,
}

impl Germ {
    pub fn one_dimensional(p: &Poly1, domain_radius: f64) -> Self {
        Germ { dimension: Dimension::One, forward: PolyMap2::one_dimensional(p), inverse: None, domain_radius }
    }

    pub fn two_dimensional(forward: PolyMap2, inverse: Option<PolyMap2>, domain_radius: f64) -> Self {
        Germ { dimension: Dimension::Two, forward, inverse: inverse.map(InverseMap::Exact), domain_radius }
    }

    /// The Hénon map `(x, y) -> (x^2 + c + b y, x)` whose fixed point
    /// `x_f = (lambda + mu) / 2` has eigenvalues `lambda` and `mu`. Returns the
    /// raw germ and its fixed point.
    pub fn henon(lambda: C64, mu: C64, domain_radius: f64) -> (Germ, Point) {
        let b = -lambda * mu;
        let xf = (lambda + mu) * 0.5;
        let c = xf - xf * xf - b * xf;
        let one = C64::new(1.0, 0.0);
        let forward = PolyMap2::new(Poly2::from_terms(&[(2, 0, one), (0, 0, c), (0, 1, b)]), Poly2::from_terms(&[(1, 0, one)]));
        // (X, Y) -> (Y, (X - Y^2 - c) / b)
        let inverse =
            PolyMap2::new(Poly2::from_terms(&[(0, 1, one)]), Poly2::from_terms(&[(1, 0, one / b), (0, 2, -one / b), (0, 0, -c / b)]));
        (Germ::two_dimensional(forward, Some(inverse), domain_radius), [xf, xf])
    }

    /// `lambda z + z^2` style germs: `sum_k coef[k] z^k`.
    pub fn polynomial(coef: &[C64], domain_radius: f64) -> Self {
        Self::one_dimensional(&Poly1::from_coefficients(coef.to_vec()), domain_radius)
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn forward(&self) -> &PolyMap2 {
        &self.forward
    }

    pub fn inverse(&self) -> Option<&InverseMap> {
        self.inverse.as_ref()
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn with_domain_radius(mut self, r: f64) -> Self {
        self.domain_radius = r;
        self
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> Point {
        self.forward.eval(p)
    }

    pub fn eval_inverse(&self, p: &Point) -> Option<Point> {
        match self.inverse.as_ref()? {
            InverseMap::Exact(g) => Some(g.eval(p)),
            InverseMap::Refined(g) => {
                let mut w = g.eval(p);
                for _ in 0..8 {
                    let r = self.eval(&w);
                    let r = [r[0] - p[0], r[1] - p[1]];
                    let step = self.jacobian(&w).inverse()?.apply(&r);
                    w = [w[0] - step[0], w[1] - step[1]];
                    if norm(&step) <= 1e-16 * (1.0 + norm(&w)) {
                        break;
                    }
                }
                Some(w)
            }
        }
    }

    #[inline]
    pub fn jacobian(&self, p: &Point) -> Mat2 {
        self.forward.jacobian(p)
    }

    /// The first coordinate map as a univariate polynomial (1-D germs).
    pub fn one_dimensional_polynomial(&self) -> Poly1 {
        let f = &self.forward.f1;
        let coef = (0..=f.degree()).map(|k| f.coefficient(k, 0)).collect();
        Poly1::from_coefficients(coef)
    }

    /// Iterates `n` times.
    pub fn iterate(&self, p: &Point, n: usize) -> Point {
        let mut z = *p;
        for _ in 0..n {
            z = self.eval(&z);
        }
        z
    }

    /// `f^n(p)` together with `Df^n(p)`.
    pub fn iterate_with_jacobian(&self, p: &Point, n: usize) -> (Point, Mat2) {
        let mut z = *p;
        let mut m = Mat2::identity();
        for _ in 0..n {
            m = self.jacobian(&z).mul(&m);
            z = self.eval(&z);
        }
        (z, m)
    }

    /// A preimage of `w` under a 1-D germ near `seed`, by Newton's method.
    pub fn preimage_1d(&self, w: C64, seed: C64) -> Option<C64> {
        let f = &self.forward.f1;
        let df = &self.forward;
        let mut z = seed;
        for _ in 0..60 {
            let r = f.eval(z, cz()) - w;
            let d = df.jacobian(&[z, cz()]).get(0, 0);
            if d.norm() == 0.0 {
                return None;
            }
            let step = r / d;
            z -= step;
            if step.norm() <= 1e-15 * (1.0 + z.norm()) {
                return Some(z);
            }
        }
        let r = (f.eval(z, cz()) - w).norm();
        if r < 1e-13 {
            Some(z)
        } else {
            None
        }
    }

    /// Largest `|f^{-1}(f(p)) - p|` over `count` deterministic sample points
    /// of the ball of radius `domain_radius`.
    pub fn inverse_defect(&self, count: usize) -> Option<f64> {
        self.inverse.as_ref()?;
        let mut worst: f64 = 0.0;
        for k in 0..count {
            let p = sample_ball_point(k, count, self.domain_radius);
            let back = self.eval_inverse(&self.eval(&p))?;
            worst = worst.max(norm(&[back[0] - p[0], back[1] - p[1]]));
        }
        Some(worst)
    }
}

/// Deterministic quasi-random point of the ball of radius `r` in C^2.
pub fn sample_ball_point(k: usize, count: usize, r: f64) -> Point {
    // golden-ratio sequences for four real coordinates, then radial scaling
    let g = [0.618_033_988_749_894_9, 0.754_877_666_246_692_7, 0.569_840_290_998_053_3, 0.682_327_803_828_019_3];
    let t = (k as f64 + 0.5) / count.max(1) as f64;
    let mut v = [0.0; 4];
    for (i, gi) in g.iter().enumerate() {
        let u = ((k as f64 + 1.0) * gi).fract();
        v[i] = libm::sin(core::f64::consts::TAU * u + i as f64);
    }
    let n = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>()).max(1e-12);
    let s = r * libm::pow(t, 0.25) / n;
    [C64::new(v[0] * s, v[1] * s), C64::new(v[2] * s, v[3] * s)]
}

/// Arithmetic type of the neutral eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Classification {
    SemiParabolic { p: u64, q: u64 },
    SemiSiegelCandidate,
    SemiCremerCandidate,
    Undecided,
    NotSemiIndifferent,
}

impl Classification {
    pub fn is_rational(&self) -> bool {
        matches!(self, Classification::SemiParabolic { .. })
    }

    /// Irrational or not yet decided, but on the unit circle.
    pub fn is_irrational_candidate(&self) -> bool {
        matches!(self, Classification::SemiSiegelCandidate | Classification::SemiCremerCandidate | Classification::Undecided)
    }
}

impl core::fmt::Display for Classification {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Classification::SemiParabolic { p, q } => write!(f, "semi-parabolic({p},{q})"),
            Classification::SemiSiegelCandidate => write!(f, "semi-siegel-candidate"),
            Classification::SemiCremerCandidate => write!(f, "semi-cremer-candidate"),
            Classification::Undecided => write!(f, "undecided"),
            Classification::NotSemiIndifferent => write!(f, "not-semi-indifferent"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointData {
    /// Location of the fixed point in the original coordinates.
    pub fixed_point: Point,
    pub lambda: C64,
    pub mu: Option<C64>,
    pub angle: RotationAngle,
    pub classification: Classification,
    /// Unit eigenvectors in the original coordinates (2-D only).
    pub e_c: Option<Point>,
    pub e_s: Option<Point>,
}

/// Number of Brjuno terms used when classifying at normalization time.
pub const CLASSIFY_BRJUNO_TERMS: usize = 60;
/// Divergence bound used when classifying at normalization time.
pub const CLASSIFY_DIVERGENCE_BOUND: f64 = 1e3;

/// The Brjuno report for `angle`, shrinking the term count to what the
/// stored precision supports.
pub fn brjuno_report_for(angle: &RotationAngle, terms: usize, bound: f64) -> Result<BrjunoReport> {
    let mut n = terms;
    loop {
        match brjuno_sum(angle, n, bound) {
            Err(Error::PrecisionExhausted { terms: got }) if got >= 3 && got - 1 < n => n = got - 1,
            // a measured angle too coarse for two terms cannot be decided
            Err(Error::PrecisionExhausted { .. }) if angle.provenance() == Provenance::Measured => {
                return Ok(BrjunoReport { partial_sums: Vec::new(), verdict: BrjunoVerdict::Undecided, divergence_bound_hit: None });
            }
            other => return other,
        }
    }
}

fn check_semi_indifferent(lambda: C64, mu: Option<C64>) -> Result<()> {
    let lm = lambda.norm();
    let mm = mu.map(|m| m.norm()).unwrap_or(0.0);
    if (lm - 1.0).abs() > UNIT_CIRCLE_TOLERANCE || mm >= 1.0 {
        return Err(Error::NotSemiIndifferent { lambda_modulus: lm, mu_modulus: mm });
    }
    Ok(())
}

/// Classifies the fixed point from the arithmetic of its angle.
pub fn classify(fp: &FixedPointData, report: &BrjunoReport) -> Result<Classification> {
    check_semi_indifferent(fp.lambda, fp.mu)?;
    Ok(match report.verdict {
        BrjunoVerdict::Rational => {
            let (p, q) = rational_angle(&fp.angle)?;
            Classification::SemiParabolic { p, q }
        }
        BrjunoVerdict::BrjunoLikely => Classification::SemiSiegelCandidate,
        BrjunoVerdict::NonBrjunoLikely => Classification::SemiCremerCandidate,
        BrjunoVerdict::Undecided => Classification::Undecided,
    })
}

/// `(p, q)` of a rational angle.
pub fn rational_angle(angle: &RotationAngle) -> Result<(u64, u64)> {
    if let Some(DeclaredForm::Rational { p, q }) = angle.declared_form() {
        return Ok((*p, *q));
    }
    let cfe = continued_fraction_expand(angle, 64)?;
    if !cfe.terminated {
        return Err(Error::precondition("angle is not rational"));
    }
    if cfe.is_empty() {
        return Ok((0, 1));
    }
    cfe.convergent(cfe.len())
}

fn classify_angle(lambda: C64, mu: Option<C64>, angle: &RotationAngle) -> Result<Classification> {
    if check_semi_indifferent(lambda, mu).is_err() {
        return Ok(Classification::NotSemiIndifferent);
    }
    let report = brjuno_report_for(angle, CLASSIFY_BRJUNO_TERMS, CLASSIFY_DIVERGENCE_BOUND)?;
    let fp = FixedPointData {
        fixed_point: [cz(), cz()],
        lambda,
        mu,
        angle: angle.clone(),
        classification: Classification::Undecided,
        e_c: None,
        e_s: None,
    };
    classify(&fp, &report)
}

fn angle_of(lambda: C64) -> f64 {
    let a = lambda.arg() / core::f64::consts::TAU;
    if a < 0.0 {
        a + 1.0
    } else {
        a
    }
}

fn newton_fixed_point(g: &Germ, guess: Point) -> Result<Point> {
    let mut p = guess;
    if g.dimension == Dimension::One {
        p[1] = cz();
    }
    // near-double fixed points stall Newton at roundoff; keep the best iterate
    let mut best = (f64::INFINITY, p);
    for _ in 0..NEWTON_STEPS {
        let fp = g.eval(&p);
        let r = [fp[0] - p[0], fp[1] - p[1]];
        if norm(&r) == 0.0 {
            return Ok(p);
        }
        if norm(&r) < best.0 {
            best = (norm(&r), p);
        }
        let step = match g.dimension {
            Dimension::One => {
                let d = g.jacobian(&p).get(0, 0) - C64::new(1.0, 0.0);
                if d.norm() == 0.0 {
                    return Err(Error::NoFixedPointFound { steps: NEWTON_STEPS });
                }
                [r[0] / d, cz()]
            }
            Dimension::Two => {
                let j = g.jacobian(&p).sub(&Mat2::identity());
                let inv = j.inverse().ok_or(Error::NoFixedPointFound { steps: NEWTON_STEPS })?;
                inv.apply(&r)
            }
        };
        p = [p[0] - step[0], p[1] - step[1]];
        if !(p[0].norm().is_finite() && p[1].norm().is_finite()) {
            break;
        }
        if norm(&step) <= 1e-15 * (1.0 + norm(&p)) {
            return Ok(p);
        }
    }
    if best.0 <= 1e-14 * (1.0 + norm(&best.1)) {
        return Ok(best.1);
    }
    Err(Error::NoFixedPointFound { steps: NEWTON_STEPS })
}

/// Locates the fixed point near `guess`, moves it to the origin and (in
/// dimension two) rotates coordinates so that the neutral and dissipative
/// eigendirections become the axes. The angle is measured from the neutral
/// eigenvalue.
pub fn normalize_fixed_point(raw: &Germ, guess: Point) -> Result<(Germ, FixedPointData)> {
    normalize_fixed_point_with_angle(raw, guess, None)
}

/// As `normalize_fixed_point`, adopting `declared` as the exact angle when the
/// neutral eigenvalue matches it within tolerance.
pub fn normalize_fixed_point_with_angle(raw: &Germ, guess: Point, declared: Option<&RotationAngle>) -> Result<(Germ, FixedPointData)> {
    let p = newton_fixed_point(raw, guess)?;
    let a = raw.jacobian(&p);
    let (germ, lambda, mu, e_c, e_s) = match raw.dimension {
        Dimension::One => {
            let shift = PolyMap2::affine([p[0], cz()], &Mat2::diag(C64::new(1.0, 0.0), cz()));
            let back = PolyMap2::affine([-p[0], cz()], &Mat2::diag(C64::new(1.0, 0.0), cz()));
            let mut f = back.compose(&raw.forward.compose(&shift));
            let mut f1 = f.f1.clone();
            f1.set_coefficient(0, 0, cz());
            f = PolyMap2::new(f1, Poly2::zero(0));
            let g = Germ { dimension: Dimension::One, forward: f, inverse: None, domain_radius: raw.domain_radius };
            (g, a.get(0, 0), None, None, None)
        }
        Dimension::Two => {
            let (e1, e2) = a.eigenvalues();
            let gap = (e1 - e2).norm();
            if gap < 1e-10 {
                return Err(Error::DegenerateDifferential { gap });
            }
            let d1 = (e1.norm() - 1.0).abs();
            let d2 = (e2.norm() - 1.0).abs();
            let (lambda, mu) = if d1 <= d2 { (e1, e2) } else { (e2, e1) };
            let ec = a.eigenvector(lambda);
            let es = a.eigenvector(mu);
            let pm = Mat2::from_columns(ec, es);
            let pinv = pm.inverse().ok_or(Error::DegenerateDifferential { gap })?;
            let to_raw = PolyMap2::affine(p, &pm);
            let neg = pinv.apply(&p);
            let from_raw = PolyMap2::affine([-neg[0], -neg[1]], &pinv);
            let mut f = from_raw.compose(&raw.forward.compose(&to_raw));
            let mut f1 = f.f1.clone();
            let mut f2 = f.f2.clone();
            f1.set_coefficient(0, 0, cz());
            f2.set_coefficient(0, 0, cz());
            f = PolyMap2::new(f1, f2);
            let inverse = raw.inverse.as_ref().map(|inv| {
                let g = from_raw.compose(&inv.inverse_poly().compose(&to_raw));
                let mut g1 = g.f1.clone();
                let mut g2 = g.f2.clone();
                g1.set_coefficient(0, 0, cz());
                g2.set_coefficient(0, 0, cz());
                let g = PolyMap2::new(g1, g2);
                if inv.is_exact() {
                    InverseMap::Exact(g)
                } else {
                    InverseMap::Refined(g)
                }
            });
            let g = Germ { dimension: Dimension::Two, forward: f, inverse, domain_radius: raw.domain_radius };
            (g, lambda, Some(mu), Some(ec), Some(es))
        }
    };
    let angle = match declared {
        Some(d) => {
            let want = d.multiplier();
            if (want - lambda).norm() > 1e-8 {
                return Err(Error::precondition(format!("declared angle {d} does not match the neutral eigenvalue {lambda}")));
            }
            d.clone()
        }
        None => RotationAngle::measured(angle_of(lambda), UNIT_CIRCLE_TOLERANCE)?,
    };
    let classification = classify_angle(lambda, mu, &angle)?;
    let fp = FixedPointData { fixed_point: p, lambda, mu, angle, classification, e_c, e_s };
    Ok((germ, fp))
}

/// Invariants of the center-restricted jet of `f^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormData {
    pub p: u64,
    pub q: u64,
    /// Semi-parabolic multiplicity.
    pub nu: usize,
    /// Coefficient `c` of the first nonlinear term `c x^(nu q + 1)`.
    pub leading_coefficient: C64,
    /// Coefficient of `x^(nu q + 2)`, when the jet reaches it.
    pub next_coefficient: Option<C64>,
    /// Formal invariant of the normal form, when the jet reaches `2q + 1`.
    pub c_constant: Option<C64>,
    /// The center-restricted jet of `f^q`.
    pub jet: Poly1,
    /// The center manifold jet used for the restriction (2-D only).
    pub center_jet: Option<Poly1>,
}

fn restricted_iterate_jet<S: Ring>(g: &Germ, q: u64, d: usize) -> Result<(Poly1<S>, Option<Poly1<S>>)> {
    let x = Poly1::<S>::identity();
    let (step, center) = match g.dimension {
        Dimension::One => (g.forward.f1.compose1(&x, &Poly1::<S>::zero(), d), None),
        Dimension::Two => {
            let phi = center_jet_coefficients::<S>(&g.forward, d)?;
            (g.forward.f1.compose1(&x, &phi, d), Some(phi))
        }
    };
    let mut acc = x;
    for _ in 0..q {
        acc = step.compose_trunc(&acc, d);
    }
    Ok((acc, center))
}

/// Reads the semi-parabolic multiplicity off the jet of `f^q` restricted to
/// the center manifold. The jet is computed in double and in double-double
/// precision; disagreement beyond tolerance is reported as precision loss.
pub fn semiparabolic_multiplicity(g: &Germ, fp: &FixedPointData, jet_degree: usize) -> Result<NormalFormData> {
    let (p, q) = match fp.classification {
        Classification::SemiParabolic { p, q } => (p, q),
        _ => return Err(Error::precondition("multiplicity needs a semi-parabolic fixed point")),
    };
    if (jet_degree as u64) < q + 2 {
        return Err(Error::precondition(format!("jet degree {jet_degree} below q + 2 = {}", q + 2)));
    }
    if jet_degree > MAX_JET_DEGREE {
        return Err(Error::precondition(format!("jet degree {jet_degree} exceeds the supported maximum {MAX_JET_DEGREE}")));
    }
    let d = jet_degree;
    let (fast, _) = restricted_iterate_jet::<C64>(g, q, d)?;
    let (slow, center) = restricted_iterate_jet::<DDC>(g, q, d)?;
    let jet = slow.to_c64();
    for k in 0..=d {
        let a = fast.coefficient(k);
        let b = jet.coefficient(k);
        let gap = (a - b).norm();
        if gap > 1e-10 * (1.0 + b.norm()) {
            return Err(Error::JetPrecisionLoss { degree: k, discrepancy: gap });
        }
    }
    let m = (2..=d).find(|&k| jet.coefficient(k).norm() > 1e-10).ok_or(Error::JetDegreeInsufficient { degree: d })?;
    if !(m as u64 - 1).is_multiple_of(q) {
        return Err(Error::ResonanceViolation { order: m, q });
    }
    let nu = ((m as u64 - 1) / q) as usize;
    let c = jet.coefficient(m);
    let next = if m < d { Some(jet.coefficient(m + 1)) } else { None };
    let c_constant = if nu == 1 && d as u64 > 2 * q {
        // residue of dx / (x - f^q(x)) at 0
        let qq = q as usize;
        let s: Vec<C64> = (0..=qq).map(|k| jet.coefficient(qq + 1 + k)).collect();
        let mut t = Vec::with_capacity(qq + 1);
        t.push(C64::new(1.0, 0.0) / s[0]);
        for k in 1..=qq {
            let mut acc = cz();
            for j in 1..=k {
                acc += s[j] * t[k - j];
            }
            t.push(-acc / s[0]);
        }
        let iota = -t[qq];
        let qf = q as f64;
        Some(iota * qf - C64::new((qf * qf - 1.0) / 2.0, 0.0))
    } else {
        None
    };
    Ok(NormalFormData { p, q, nu, leading_coefficient: c, next_coefficient: next, c_constant, jet, center_jet: center.map(|c| c.to_c64()) })
}

/// The germ `f_n`: `g` with its neutral eigenvalue replaced by
/// `exp(2 pi i p_n / q_n)`. Only the linear coefficient of the first
/// coordinate changes, so `sup_{|x| <= r} |f_n - f| = |lambda_n - lambda| r`.
pub fn approximating_sequence(g: &Germ, fp: &FixedPointData, cfe: &ContinuedFractionExpansion, n: usize) -> Result<(Germ, FixedPointData)> {
    if !fp.classification.is_irrational_candidate() {
        return Err(Error::precondition("approximating sequence needs an irrational angle"));
    }
    let (p, q) = cfe.convergent(n)?;
    let lambda_n = root_of_unity(p, q);
    let mut f1 = g.forward.f1.clone();
    f1.set_coefficient(1, 0, lambda_n);
    let forward = PolyMap2::new(f1, g.forward.f2.clone());
    // The substitution destroys the constant Jacobian determinant, so the
    // old polynomial inverse becomes a seed for Newton's method.
    let inverse = g.inverse.as_ref().map(|inv| InverseMap::Refined(inv.inverse_poly().clone()));
    let germ = Germ { dimension: g.dimension, forward, inverse, domain_radius: g.domain_radius };
    let angle = RotationAngle::rational(p, q)?;
    let classification = Classification::SemiParabolic { p: p % q, q };
    let fp_n = FixedPointData { fixed_point: fp.fixed_point, lambda: lambda_n, mu: fp.mu, angle, classification, e_c: fp.e_c, e_s: fp.e_s };
    Ok((germ, fp_n))
}

/// Type of a periodic orbit, from the moduli of its multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CycleKind {
    SemiNeutral,
    Attracting,
    Repelling,
    Hyperbolic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPoint {
    pub period: usize,
    pub point: Point,
    pub multipliers: (C64, Option<C64>),
    pub kind: CycleKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicScan {
    pub points: Vec<PeriodicPoint>,
    /// Largest period actually scanned.
    pub max_period: usize,
    /// Period the caller asked for.
    pub requested_period: usize,
    /// True when the period cap cut the scan short.
    pub truncated: bool,
    pub seeds: usize,
}

impl PeriodicScan {
    /// No other semi-neutral cycles were found.
    pub fn is_clean(&self) -> bool {
        self.points.iter().all(|p| p.kind != CycleKind::SemiNeutral)
    }
}

/// Tolerance on multiplier moduli when classifying cycles.
pub const CYCLE_TOLERANCE: f64 = 1e-6;

fn cycle_kind(g: &Germ, m: &Mat2) -> (CycleKind, (C64, Option<C64>)) {
    let near = |x: f64| (x - 1.0).abs() < CYCLE_TOLERANCE;
    match g.dimension {
        Dimension::One => {
            let e = m.get(0, 0);
            let r = e.norm();
            let kind = if near(r) {
                CycleKind::SemiNeutral
            } else if r < 1.0 {
                CycleKind::Attracting
            } else {
                CycleKind::Repelling
            };
            (kind, (e, None))
        }
        Dimension::Two => {
            let (e1, e2) = m.eigenvalues();
            let (r1, r2) = (e1.norm(), e2.norm());
            let kind = if near(r1) || near(r2) {
                CycleKind::SemiNeutral
            } else if r1 < 1.0 && r2 < 1.0 {
                CycleKind::Attracting
            } else if r1 > 1.0 && r2 > 1.0 {
                CycleKind::Repelling
            } else {
                CycleKind::Hyperbolic
            };
            (kind, (e1, Some(e2)))
        }
    }
}

/// Newton's method on `f^k - id` from a grid of seeds in the disc of radius
/// `radius` of the chart (lifted through `chart` in dimension two). Periods
/// run up to `min(max_period, period_cap)`. The origin is excluded.
pub fn periodic_point_scan(
    g: &Germ,
    chart: Option<&Poly1>,
    radius: f64,
    max_period: usize,
    period_cap: usize,
    seeds_per_axis: usize,
) -> PeriodicScan {
    let top = max_period.min(period_cap);
    let n = seeds_per_axis.max(2);
    let mut seeds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = -radius + 2.0 * radius * (i as f64 + 0.5) / n as f64;
            let y = -radius + 2.0 * radius * (j as f64 + 0.5) / n as f64;
            if libm::hypot(x, y) <= radius {
                let u = C64::new(x, y);
                let v = match (g.dimension, chart) {
                    (Dimension::Two, Some(phi)) => phi.eval(u),
                    _ => cz(),
                };
                seeds.push([u, v]);
            }
        }
    }
    let mut found: Vec<PeriodicPoint> = Vec::new();
    for k in 1..=top {
        let results = crate::par::map_slice(&seeds, |s| newton_cycle(g, *s, k));
        for p in results.into_iter().flatten() {
            if norm(&p) > radius || norm(&p) < 1e-8 {
                continue;
            }
            // minimal period
            if (1..k).any(|j| k % j == 0 && close(&g.iterate(&p, j), &p, 1e-9)) {
                continue;
            }
            let dup = found.iter().any(|c| {
                c.period == k && {
                    let mut z = c.point;
                    (0..k).any(|_| {
                        let hit = close(&z, &p, 1e-8);
                        z = g.eval(&z);
                        hit
                    })
                }
            });
            if dup {
                continue;
            }
            let (_, m) = g.iterate_with_jacobian(&p, k);
            let (kind, multipliers) = cycle_kind(g, &m);
            found.push(PeriodicPoint { period: k, point: p, multipliers, kind });
        }
    }
    PeriodicScan { points: found, max_period: top, requested_period: max_period, truncated: top < max_period, seeds: seeds.len() }
}

fn close(a: &Point, b: &Point, tol: f64) -> bool {
    norm(&[a[0] - b[0], a[1] - b[1]]) <= tol
}

fn newton_cycle(g: &Germ, seed: Point, k: usize) -> Option<Point> {
    let mut p = seed;
    for _ in 0..50 {
        let (fk, m) = g.iterate_with_jacobian(&p, k);
        if !(fk[0].norm().is_finite() && fk[1].norm().is_finite()) || norm(&fk) > 1e3 {
            return None;
        }
        let r = [fk[0] - p[0], fk[1] - p[1]];
        let step = match g.dimension {
            Dimension::One => {
                let d = m.get(0, 0) - C64::new(1.0, 0.0);
                if d.norm() < 1e-300 {
                    return None;
                }
                [r[0] / d, cz()]
            }
            Dimension::Two => m.sub(&Mat2::identity()).inverse()?.apply(&r),
        };
        p = [p[0] - step[0], p[1] - step[1]];
        if norm(&step) <= 1e-13 * (1.0 + norm(&p)) {
            let fk = g.iterate(&p, k);
            return if close(&fk, &p, 1e-10) { Some(p) } else { None };
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn third() -> C64 {
        root_of_unity(1, 3)
    }

    #[test]
    fn linear_diagonal_map_is_unchanged() {
        let lam = third();
        let mu = c(0.1, 0.0);
        let f = PolyMap2::new(Poly2::from_terms(&[(1, 0, lam)]), Poly2::from_terms(&[(0, 1, mu)]));
        let g = Germ::two_dimensional(f.clone(), None, 0.2);
        let (n, fp) = normalize_fixed_point(&g, [cz(), cz()]).unwrap();
        assert!((fp.lambda - lam).norm() < 1e-15);
        assert!((fp.mu.unwrap() - mu).norm() < 1e-15);
        assert!((n.forward().f1.coefficient(1, 0) - lam).norm() < 1e-15);
        assert!((n.forward().f2.coefficient(0, 1) - mu).norm() < 1e-15);
        assert_eq!(fp.classification, Classification::SemiParabolic { p: 1, q: 3 });
    }

    #[test]
    fn parabolic_quadratic() {
        let g = Germ::polynomial(&[cz(), c(1.0, 0.0), c(1.0, 0.0)], 0.5);
        let (n, fp) = normalize_fixed_point(&g, [c(0.01, 0.0), cz()]).unwrap();
        assert!(norm(&fp.fixed_point) < 1e-12);
        assert!((fp.lambda - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(fp.classification, Classification::SemiParabolic { p: 0, q: 1 });
        let nf = semiparabolic_multiplicity(&n, &fp, 8).unwrap();
        assert_eq!(nf.nu, 1);
        assert!((nf.leading_coefficient - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn cubic_has_multiplicity_two() {
        let g = Germ::polynomial(&[cz(), c(1.0, 0.0), cz(), c(1.0, 0.0)], 0.5);
        let (n, fp) = normalize_fixed_point(&g, [cz(), cz()]).unwrap();
        let nf = semiparabolic_multiplicity(&n, &fp, 8).unwrap();
        assert_eq!(nf.nu, 2);
    }

    #[test]
    fn henon_eigenvalues_and_multiplicity() {
        let lam = third();
        let mu = c(0.1, 0.0);
        let (raw, xf) = Germ::henon(lam, mu, 0.2);
        let (g, fp) = normalize_fixed_point(&raw, [xf[0] + 1e-3, xf[1] - 1e-3]).unwrap();
        assert!((fp.lambda - lam).norm() < 1e-12);
        assert!((fp.mu.unwrap() - mu).norm() < 1e-12);
        assert_eq!(fp.classification, Classification::SemiParabolic { p: 1, q: 3 });
        // eigenvectors of the raw differential
        let a = raw.jacobian(&fp.fixed_point);
        for (ev, v) in [(lam, fp.e_c.unwrap()), (mu, fp.e_s.unwrap())] {
            let r = a.apply(&v);
            assert!(norm(&[r[0] - ev * v[0], r[1] - ev * v[1]]) < 1e-12);
        }
        assert!(g.inverse_defect(100).unwrap() < 1e-12);
        let nf = semiparabolic_multiplicity(&g, &fp, 8).unwrap();
        assert_eq!(nf.nu, 1);
        assert!(nf.leading_coefficient.norm() > 1e-10);
    }

    #[test]
    fn normalization_is_idempotent() {
        let (raw, xf) = Germ::henon(third(), c(0.1, 0.0), 0.2);
        let (g1, _) = normalize_fixed_point(&raw, xf).unwrap();
        let (g2, _) = normalize_fixed_point(&g1, [cz(), cz()]).unwrap();
        for (a, b) in [(&g1.forward().f1, &g2.forward().f1), (&g1.forward().f2, &g2.forward().f2)] {
            for i in 0..=2 {
                for j in 0..=(2 - i) {
                    assert!((a.coefficient(i, j) - b.coefficient(i, j)).norm() < 1e-12, "{i}{j}");
                }
            }
        }
    }

    #[test]
    fn not_semi_indifferent() {
        let g = Germ::polynomial(&[cz(), c(0.9, 0.0), c(1.0, 0.0)], 0.5);
        let (_, fp) = normalize_fixed_point(&g, [cz(), cz()]).unwrap();
        assert_eq!(fp.classification, Classification::NotSemiIndifferent);
        let report = brjuno_report_for(&fp.angle, 10, 1e3).unwrap();
        assert!(matches!(classify(&fp, &report), Err(Error::NotSemiIndifferent { .. })));
    }

    #[test]
    fn golden_classifies_as_siegel_candidate() {
        let alpha = RotationAngle::golden(200);
        let lam = alpha.multiplier();
        let g = Germ::polynomial(&[cz(), lam, c(1.0, 0.0)], 0.5);
        let (_, fp) = normalize_fixed_point_with_angle(&g, [cz(), cz()], Some(&alpha)).unwrap();
        assert_eq!(fp.classification, Classification::SemiSiegelCandidate);
    }

    #[test]
    fn approximating_sequence_substitutes_the_eigenvalue() {
        let alpha = RotationAngle::golden(200);
        let lam = alpha.multiplier();
        let (raw, xf) = Germ::henon(lam, c(0.1, 0.0), 0.05);
        let (g, fp) = normalize_fixed_point_with_angle(&raw, xf, Some(&alpha)).unwrap();
        let cfe = continued_fraction_expand(&alpha, 12).unwrap();
        let (gn, fpn) = approximating_sequence(&g, &fp, &cfe, 4).unwrap();
        assert!((fpn.lambda - root_of_unity(3, 5)).norm() < 1e-15);
        assert_eq!(fpn.classification, Classification::SemiParabolic { p: 3, q: 5 });
        assert!(gn.inverse_defect(100).unwrap() < 1e-12);
        assert!(matches!(approximating_sequence(&g, &fp, &cfe, 40), Err(Error::IndexOutOfRange { .. })));
    }
}
