//! Continued fractions, convergents and truncated Brjuno sums of rotation
//! angles.
//!
//! Angles are stored as closed intervals `[lower, upper]` of non-negative
//! rationals. Exact angles have `lower == upper`. The expansion runs Euclid's
//! algorithm on both endpoints in lockstep and refuses to emit a partial
//! quotient the two endpoints disagree on.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact description of how an angle was specified.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DeclaredForm {
    /// `p/q` in lowest terms.
    Rational { p: u64, q: u64 },
    /// The golden mean conjugate `(sqrt(5) - 1) / 2`.
    GoldenMean,
    /// The digit series `sum_{k=1..} 10^(-k!)`, truncated at `depth` terms.
    DigitSeries { depth: u32 },
    /// A finite decimal, held exactly.
    Decimal(String),
}

/// Where the interval of an angle came from. Measured angles (read off a
/// numerically computed eigenvalue) treat an ambiguous partial quotient as
/// a rational within precision; declared irrationals report exhaustion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Provenance {
    Exact,
    DeclaredIrrational,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Ratio {
    num: BigUint,
    den: BigUint,
}

impl Ratio {
    fn new(num: BigUint, den: BigUint) -> Self {
        let g = num.gcd(&den);
        if g.is_zero() || g.is_one() {
            Ratio { num, den }
        } else {
            Ratio { num: num / &g, den: den / &g }
        }
    }

    fn to_f64(&self) -> f64 {
        big_ratio_to_f64(&self.num, &self.den)
    }
}

fn big_ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    let ns = (nb - 60).max(0);
    let ds = (db - 60).max(0);
    let n = (num >> ns as usize).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> ds as usize).to_f64().unwrap_or(f64::INFINITY);
    n / d * libm::exp2((ns - ds) as f64)
}

/// Natural logarithm of a big unsigned integer (must be nonzero).
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        libm::log(x.to_f64().unwrap_or(f64::INFINITY))
    } else {
        let shift = bits - 64;
        libm::log((x >> shift as usize).to_f64().unwrap()) + shift as f64 * core::f64::consts::LN_2
    }
}

fn pow10(n: u64) -> BigUint {
    BigUint::from(10u32).pow(n as u32)
}

fn factorial(n: u32) -> u64 {
    (1..=n as u64).product()
}

/// A rotation angle `alpha` in `[0, 1)`, with `lambda = exp(2 pi i alpha)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationAngle {
    lower: Ratio,
    upper: Ratio,
    declared: Option<DeclaredForm>,
    provenance: Provenance,
}

impl RotationAngle {
    /// The exact rational `p/q`, reduced and taken modulo 1.
    pub fn rational(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidAngle("zero denominator".into()));
        }
        let g = p.gcd(&q);
        let (p, q) = ((p / g) % (q / g), q / g);
        let r = Ratio::new(BigUint::from(p), BigUint::from(q));
        Ok(RotationAngle { lower: r.clone(), upper: r, declared: Some(DeclaredForm::Rational { p, q }), provenance: Provenance::Exact })
    }

    /// `(sqrt(5) - 1) / 2`, bracketed to `digits` decimal digits.
    pub fn golden(digits: u32) -> Self {
        let scale = pow10(digits as u64);
        let s = (BigUint::from(5u32) * &scale * &scale).sqrt();
        let den = &scale * 2u32;
        let lower = Ratio::new(&s - &scale, den.clone());
        let upper = Ratio::new(&s + 1u32 - &scale, den);
        RotationAngle { lower, upper, declared: Some(DeclaredForm::GoldenMean), provenance: Provenance::DeclaredIrrational }
    }

    /// The digit series `sum_{k=1..depth} 10^(-k!)`, standing for the full
    /// infinite series: the interval covers the omitted tail, which is below
    /// `2 * 10^(-(depth+1)!)`.
    pub fn liouville(depth: u32) -> Result<Self> {
        if depth < 2 {
            return Err(Error::precondition("liouville depth must be >= 2"));
        }
        if depth > 8 {
            return Err(Error::precondition("liouville depth above 8 needs more than 9! digits"));
        }
        let den = pow10(factorial(depth));
        let mut num = BigUint::zero();
        for k in 1..=depth {
            num += pow10(factorial(depth) - factorial(k));
        }
        let tail_den = pow10(factorial(depth + 1));
        let lower = Ratio::new(num.clone(), den.clone());
        // lower + 2 * 10^-(depth+1)!
        let upper_num = num * &tail_den + &den * 2u32;
        let upper = Ratio::new(upper_num, den * tail_den);
        Ok(RotationAngle { lower, upper, declared: Some(DeclaredForm::DigitSeries { depth }), provenance: Provenance::DeclaredIrrational })
    }

    /// A finite decimal such as `"0.375"`, held exactly.
    pub fn decimal(text: &str) -> Result<Self> {
        let t = text.trim();
        let (int_part, frac_part) = t.split_once('.').unwrap_or((t, ""));
        if int_part.chars().any(|c| !c.is_ascii_digit())
            || frac_part.chars().any(|c| !c.is_ascii_digit())
            || (int_part.is_empty() && frac_part.is_empty())
        {
            return Err(Error::InvalidAngle(t.to_string()));
        }
        let digits: String = alloc::format!("{}{}", int_part, frac_part);
        let num = BigUint::parse_bytes(digits.as_bytes(), 10).ok_or_else(|| Error::InvalidAngle(t.to_string()))?;
        let den = pow10(frac_part.len() as u64);
        let num = num % &den;
        let r = Ratio::new(num, den);
        Ok(RotationAngle {
            lower: r.clone(),
            upper: r,
            declared: Some(DeclaredForm::Decimal(t.to_string())),
            provenance: Provenance::Exact,
        })
    }

    /// An angle read off a numerically computed value, known to within
    /// `tolerance`. Values within `tolerance` of an integer are taken as 0.
    pub fn measured(alpha: f64, tolerance: f64) -> Result<Self> {
        if !alpha.is_finite() || !(tolerance > 0.0) {
            return Err(Error::InvalidAngle(alloc::format!("{alpha} +- {tolerance}")));
        }
        let a = alpha - libm::floor(alpha);
        if a <= tolerance || 1.0 - a <= tolerance {
            let mut zero = Self::rational(0, 1)?;
            zero.declared = None;
            zero.provenance = Provenance::Measured;
            return Ok(zero);
        }
        Ok(RotationAngle { lower: dyadic(a - tolerance), upper: dyadic(a + tolerance), declared: None, provenance: Provenance::Measured })
    }

    /// Parses the textual forms `"p/q"`, `"golden"`, `"liouville:<depth>"`
    /// and decimals. `digits` sets the precision of surd forms.
    pub fn parse(text: &str, digits: u32) -> Result<Self> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("golden") {
            return Ok(Self::golden(digits));
        }
        if let Some(depth) = t.strip_prefix("liouville:") {
            let depth: u32 = depth.trim().parse().map_err(|_| Error::InvalidAngle(t.to_string()))?;
            return Self::liouville(depth);
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: u64 = p.trim().parse().map_err(|_| Error::InvalidAngle(t.to_string()))?;
            let q: u64 = q.trim().parse().map_err(|_| Error::InvalidAngle(t.to_string()))?;
            return Self::rational(p, q);
        }
        Self::decimal(t)
    }

    pub fn declared_form(&self) -> Option<&DeclaredForm> {
        self.declared.as_ref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    /// Midpoint of the bracketing interval as a double.
    pub fn value(&self) -> f64 {
        0.5 * (self.lower.to_f64() + self.upper.to_f64())
    }

    /// Width of the bracketing interval.
    pub fn uncertainty(&self) -> f64 {
        let num = &self.upper.num * &self.lower.den - &self.lower.num * &self.upper.den;
        big_ratio_to_f64(&num, &(&self.upper.den * &self.lower.den))
    }

    /// Decimal expansion of the lower endpoint, truncated to `n` digits.
    pub fn decimal_digits(&self, n: usize) -> String {
        let scaled = &self.lower.num * pow10(n as u64) / &self.lower.den;
        let s = scaled.to_str_radix(10);
        let mut out = String::from("0.");
        for _ in s.len()..n {
            out.push('0');
        }
        if n > 0 {
            out.push_str(&s);
        }
        out
    }

    /// The multiplier `exp(2 pi i alpha)` at double precision.
    pub fn multiplier(&self) -> crate::C64 {
        if let Some(DeclaredForm::Rational { p, q }) = self.declared {
            return root_of_unity(p, q);
        }
        let t = core::f64::consts::TAU * self.value();
        crate::C64::new(libm::cos(t), libm::sin(t))
    }
}

/// `exp(2 pi i p / q)` with the argument reduced exactly before rounding.
pub fn root_of_unity(p: u64, q: u64) -> crate::C64 {
    let p = p % q;
    let t = core::f64::consts::TAU * (p as f64) / (q as f64);
    crate::C64::new(libm::cos(t), libm::sin(t))
}

fn dyadic(x: f64) -> Ratio {
    // x in (0, 1) is m * 2^e exactly.
    let x = x.clamp(0.0, 1.0);
    if x == 0.0 {
        return Ratio::new(BigUint::zero(), BigUint::one());
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = if exp == 0 { (bits & ((1 << 52) - 1)) << 1 } else { (bits & ((1 << 52) - 1)) | (1 << 52) };
    let e = exp - 1075;
    // x = mant * 2^e with e < 0 for x < 1
    let den = BigUint::one() << ((-e) as usize);
    Ratio::new(BigUint::from(mant), den)
}

impl fmt::Display for RotationAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.declared {
            Some(DeclaredForm::Rational { p, q }) => write!(f, "{p}/{q}"),
            Some(DeclaredForm::GoldenMean) => write!(f, "golden"),
            Some(DeclaredForm::DigitSeries { depth }) => write!(f, "liouville:{depth}"),
            Some(DeclaredForm::Decimal(s)) => write!(f, "{s}"),
            None => write!(f, "{:.17}", self.value()),
        }
    }
}

/// Partial quotients `a_1..a_N` and convergents `(p_k, q_k)`, `k = 1..N`.
/// The leading `a_0 = 0` is implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuedFractionExpansion {
    pub partial_quotients: Vec<BigUint>,
    pub convergents: Vec<(BigUint, BigUint)>,
    /// True iff the angle was detected rational.
    pub terminated: bool,
}

impl ContinuedFractionExpansion {
    fn push(&mut self, a: BigUint) {
        let n = self.convergents.len();
        let (p1, q1) = if n >= 1 { self.convergents[n - 1].clone() } else { (BigUint::zero(), BigUint::one()) };
        let (p2, q2) = if n >= 2 {
            self.convergents[n - 2].clone()
        } else if n == 1 {
            (BigUint::zero(), BigUint::one())
        } else {
            (BigUint::one(), BigUint::zero())
        };
        let p = &a * &p1 + p2;
        let q = &a * &q1 + q2;
        self.partial_quotients.push(a);
        self.convergents.push((p, q));
    }

    pub fn len(&self) -> usize {
        self.convergents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.convergents.is_empty()
    }

    /// Convergent `p_n / q_n` for `n >= 1`, as machine integers when they fit.
    pub fn convergent(&self, n: usize) -> Result<(u64, u64)> {
        if n == 0 || n > self.convergents.len() {
            return Err(Error::IndexOutOfRange { index: n, available: self.convergents.len() });
        }
        let (p, q) = &self.convergents[n - 1];
        match (p.to_u64(), q.to_u64()) {
            (Some(p), Some(q)) => Ok((p, q)),
            _ => Err(Error::precondition("convergent does not fit in 64 bits")),
        }
    }

    /// Denominators `q_0 = 1, q_1, ..., q_N`.
    pub fn denominators(&self) -> Vec<BigUint> {
        let mut out = Vec::with_capacity(self.convergents.len() + 1);
        out.push(BigUint::one());
        out.extend(self.convergents.iter().map(|(_, q)| q.clone()));
        out
    }

    /// Evaluates the finite continued fraction `[0; a_1, ..., a_N]` as `(p, q)`.
    pub fn reconstruct(&self) -> (BigUint, BigUint) {
        self.convergents.last().cloned().unwrap_or((BigUint::zero(), BigUint::one()))
    }
}

/// Expands `alpha` into at most `terms` partial quotients.
pub fn continued_fraction_expand(alpha: &RotationAngle, terms: usize) -> Result<ContinuedFractionExpansion> {
    if terms == 0 {
        return Err(Error::precondition("term count must be >= 1"));
    }
    let mut cfe = ContinuedFractionExpansion { partial_quotients: Vec::new(), convergents: Vec::new(), terminated: false };
    // remainder interval [a/b, c/d]
    let (mut a, mut b) = (alpha.lower.num.clone(), alpha.lower.den.clone());
    let (mut c, mut d) = (alpha.upper.num.clone(), alpha.upper.den.clone());
    if a.is_zero() && c.is_zero() {
        // alpha = 0 = 0/1: an empty expansion of a rational.
        cfe.terminated = true;
        return Ok(cfe);
    }
    while cfe.len() < terms {
        if a.is_zero() {
            if c.is_zero() || alpha.provenance == Provenance::Measured {
                cfe.terminated = true;
                return Ok(cfe);
            }
            return Err(Error::PrecisionExhausted { terms: cfe.len() });
        }
        // reciprocal interval [d/c, b/a]
        let (k_lo, r_lo) = d.div_rem(&c);
        let (k_hi, r_hi) = b.div_rem(&a);
        if k_lo == k_hi {
            let k = k_lo;
            // new lower endpoint comes from the old upper one
            let (na, nb) = (r_lo, c);
            let (nc, nd) = (r_hi, a);
            a = na;
            b = nb;
            c = nc;
            d = nd;
            cfe.push(k);
            continue;
        }
        if alpha.provenance == Provenance::Measured && &k_lo + 1u32 == k_hi {
            // The bracket contains the rational with last quotient k_hi.
            cfe.push(k_hi);
            cfe.terminated = true;
            return Ok(cfe);
        }
        return Err(Error::PrecisionExhausted { terms: cfe.len() });
    }
    if a.is_zero() && c.is_zero() {
        cfe.terminated = true;
    }
    Ok(cfe)
}

/// Verdict of the truncated Brjuno test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BrjunoVerdict {
    Rational,
    BrjunoLikely,
    NonBrjunoLikely,
    Undecided,
}

/// Number of trailing increments that must be small for `BrjunoLikely`.
pub const BRJUNO_TAIL_COUNT: usize = 10;
/// Size below which a trailing increment counts as small.
pub const BRJUNO_TAIL_INCREMENT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BrjunoReport {
    /// `B_k = sum_{n=0..k} log(q_{n+1}) / q_n`.
    pub partial_sums: Vec<f64>,
    pub verdict: BrjunoVerdict,
    pub divergence_bound_hit: Option<usize>,
}

/// `log(q_{n+1}) / q_n` without overflowing for huge denominators.
fn brjuno_term(q_n: &BigUint, q_next: &BigUint) -> f64 {
    let ln_next = ln_big(q_next);
    let ln_n = ln_big(q_n);
    if ln_n < 700.0 {
        ln_next / libm::exp(ln_n)
    } else {
        libm::exp(libm::log(ln_next) - ln_n)
    }
}

/// Partial sums `B_0..B_N` of the Brjuno series and the truncation verdict.
pub fn brjuno_sum(alpha: &RotationAngle, terms: usize, divergence_bound: f64) -> Result<BrjunoReport> {
    if terms < 2 {
        return Err(Error::precondition("brjuno_sum needs N >= 2"));
    }
    let cfe = continued_fraction_expand(alpha, terms + 1)?;
    if cfe.terminated {
        return Ok(BrjunoReport { partial_sums: Vec::new(), verdict: BrjunoVerdict::Rational, divergence_bound_hit: None });
    }
    let qs = cfe.denominators();
    let mut sums = Vec::with_capacity(terms + 1);
    let mut total = 0.0;
    let mut hit = None;
    let mut increments = Vec::with_capacity(terms + 1);
    for n in 0..=terms {
        let inc = brjuno_term(&qs[n], &qs[n + 1]);
        total += inc;
        increments.push(inc);
        sums.push(total);
        if hit.is_none() && total > divergence_bound {
            hit = Some(n);
        }
    }
    let verdict = if hit.is_some() {
        BrjunoVerdict::NonBrjunoLikely
    } else if increments.len() >= BRJUNO_TAIL_COUNT
        && increments[increments.len() - BRJUNO_TAIL_COUNT..].iter().all(|&x| x < BRJUNO_TAIL_INCREMENT)
    {
        BrjunoVerdict::BrjunoLikely
    } else {
        BrjunoVerdict::Undecided
    };
    Ok(BrjunoReport { partial_sums: sums, verdict, divergence_bound_hit: hit })
}

/// Test-fixture generator: `sum_{k=1..depth} 10^(-k!)`.
pub fn liouville_angle(depth: u32) -> Result<RotationAngle> {
    RotationAngle::liouville(depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn one_third_terminates() {
        let a = RotationAngle::rational(1, 3).unwrap();
        let cfe = continued_fraction_expand(&a, 5).unwrap();
        assert_eq!(cfe.partial_quotients, [big(3)]);
        assert_eq!(cfe.convergents, [(big(1), big(3))]);
        assert!(cfe.terminated);
    }

    #[test]
    fn one_half_terminates() {
        let a = RotationAngle::parse("1/2", 50).unwrap();
        let cfe = continued_fraction_expand(&a, 5).unwrap();
        assert_eq!(cfe.partial_quotients, [big(2)]);
        assert_eq!(cfe.convergents, [(big(1), big(2))]);
        assert!(cfe.terminated);
    }

    #[test]
    fn golden_convergents_are_fibonacci() {
        let a = RotationAngle::golden(100);
        let cfe = continued_fraction_expand(&a, 5).unwrap();
        assert!(cfe.partial_quotients.iter().all(|q| q == &big(1)));
        let expect = [(1, 1), (1, 2), (2, 3), (3, 5), (5, 8)];
        for (c, e) in cfe.convergents.iter().zip(expect) {
            assert_eq!(c, &(big(e.0), big(e.1)));
        }
        assert!(!cfe.terminated);
    }

    #[test]
    fn precision_exhaustion_is_reported() {
        let a = RotationAngle::golden(10);
        let err = continued_fraction_expand(&a, 200).unwrap_err();
        assert!(matches!(err, Error::PrecisionExhausted { .. }));
    }

    #[test]
    fn measured_angles_detect_rationals() {
        let a = RotationAngle::measured(1.0 / 3.0, 1e-9).unwrap();
        let cfe = continued_fraction_expand(&a, 10).unwrap();
        assert!(cfe.terminated);
        assert_eq!(cfe.convergent(cfe.len()).unwrap(), (1, 3));

        let a = RotationAngle::measured(2.0 / 5.0 + 1e-13, 1e-9).unwrap();
        let cfe = continued_fraction_expand(&a, 10).unwrap();
        assert!(cfe.terminated);
        assert_eq!(cfe.convergent(cfe.len()).unwrap(), (2, 5));

        let a = RotationAngle::measured(0.999_999_999_999, 1e-9).unwrap();
        assert!(continued_fraction_expand(&a, 3).unwrap().terminated);
    }

    #[test]
    fn liouville_values() {
        assert_eq!(liouville_angle(2).unwrap().decimal_digits(2), "0.11");
        assert_eq!(liouville_angle(3).unwrap().decimal_digits(6), "0.110001");
        let d4 = liouville_angle(4).unwrap();
        let d5 = liouville_angle(5).unwrap();
        assert_eq!(d4.decimal_digits(24), d5.decimal_digits(24));
        assert_eq!(d4.decimal_digits(24), "0.110001000000000000000001");
        assert!(d5.uncertainty() < 1e-300);
        assert!(liouville_angle(1).is_err());
    }

    #[test]
    fn brjuno_of_rational_is_empty() {
        let r = brjuno_sum(&RotationAngle::rational(1, 3).unwrap(), 10, 1e3).unwrap();
        assert_eq!(r.verdict, BrjunoVerdict::Rational);
        assert!(r.partial_sums.is_empty());
    }

    #[test]
    fn decimal_parsing() {
        let a = RotationAngle::parse("0.375", 10).unwrap();
        let cfe = continued_fraction_expand(&a, 10).unwrap();
        assert!(cfe.terminated);
        assert_eq!(cfe.convergent(cfe.len()).unwrap(), (3, 8));
        assert!(RotationAngle::parse("0.3x", 10).is_err());
        assert!(RotationAngle::parse("1/0", 10).is_err());
    }

    #[test]
    fn zero_angle() {
        let a = RotationAngle::rational(0, 1).unwrap();
        let cfe = continued_fraction_expand(&a, 4).unwrap();
        assert!(cfe.terminated && cfe.is_empty());
    }
}
