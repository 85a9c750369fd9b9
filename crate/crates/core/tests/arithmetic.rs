use hedgehog_core::arithmetic::*;
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

fn quotients(cfe: &ContinuedFractionExpansion) -> Vec<u64> {
    cfe.partial_quotients.iter().map(|a| a.to_u64().unwrap()).collect()
}

#[test]
fn rationals_terminate() {
    let third = continued_fraction_expand(&RotationAngle::rational(1, 3).unwrap(), 5).unwrap();
    assert_eq!(quotients(&third), vec![3]);
    assert_eq!(third.convergent(1).unwrap(), (1, 3));
    assert!(third.terminated);

    let half = continued_fraction_expand(&RotationAngle::parse("1/2", 50).unwrap(), 5).unwrap();
    assert_eq!(quotients(&half), vec![2]);
    assert_eq!(half.convergent(1).unwrap(), (1, 2));
    assert!(half.terminated);
}

#[test]
fn golden_mean_has_fibonacci_convergents() {
    let cfe = continued_fraction_expand(&RotationAngle::golden(100), 5).unwrap();
    assert_eq!(quotients(&cfe), vec![1; 5]);
    let conv: Vec<_> = (1..=5).map(|k| cfe.convergent(k).unwrap()).collect();
    assert_eq!(conv, vec![(1, 1), (1, 2), (2, 3), (3, 5), (5, 8)]);
    assert!(!cfe.terminated);
}

#[test]
fn golden_partial_sums_match_fibonacci_oracle() {
    let report = brjuno_sum(&RotationAngle::golden(200), 40, 1e3).unwrap();
    // q_0 = 1, q_1 = 1, q_2 = 2, ...
    let mut q = vec![1.0f64, 1.0];
    while q.len() < 45 {
        let n = q.len();
        q.push(q[n - 1] + q[n - 2]);
    }
    let mut acc = 0.0;
    for (k, s) in report.partial_sums.iter().enumerate() {
        acc += q[k + 1].ln() / q[k];
        assert!((s - acc).abs() < 1e-12, "B_{k}: {s} vs {acc}");
    }
    assert!(report.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(report.divergence_bound_hit, None);
}

#[test]
fn rational_brjuno_report_is_empty() {
    let r = brjuno_sum(&RotationAngle::rational(1, 3).unwrap(), 10, 1e3).unwrap();
    assert_eq!(r.verdict, BrjunoVerdict::Rational);
    assert!(r.partial_sums.is_empty());
}

#[test]
fn liouville_series_values() {
    assert_eq!(liouville_angle(2).unwrap().decimal_digits(2), "0.11");
    assert_eq!(liouville_angle(3).unwrap().decimal_digits(6), "0.110001");
    let d4 = liouville_angle(4).unwrap().decimal_digits(30);
    let d5 = liouville_angle(5).unwrap().decimal_digits(30);
    assert_eq!(d4[..26], d5[..26]);
    assert!(liouville_angle(1).is_err());
}

#[test]
fn liouville_partial_sums_match_decimal_oracle() {
    // The convergents of sum 10^-k! up to the second series term are those
    // of the exact decimal 0.110001000...1 (depth 4), checked against the
    // expansion of that finite decimal.
    let alpha = liouville_angle(5).unwrap();
    let r = brjuno_sum(&alpha, 8, 1e3).unwrap();
    let exact = RotationAngle::decimal(&liouville_angle(4).unwrap().decimal_digits(24)).unwrap();
    let cfe = continued_fraction_expand(&exact, 40).unwrap();
    let qs = cfe.denominators();
    let mut acc = 0.0;
    for k in 0..4 {
        let (a, b) = (qs[k + 1].to_f64().unwrap(), qs[k].to_f64().unwrap());
        acc += a.ln() / b;
        assert!((r.partial_sums[k] - acc).abs() < 1e-9 * acc.max(1.0), "B_{k}");
    }
    assert!(r.partial_sums.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn decimal_angles_are_exact() {
    let a = RotationAngle::parse("0.375", 50).unwrap();
    assert!(a.is_exact());
    let cfe = continued_fraction_expand(&a, 10).unwrap();
    assert!(cfe.terminated);
    assert_eq!(cfe.reconstruct(), (BigUint::from(3u32), BigUint::from(8u32)));
}

#[test]
fn bad_inputs() {
    assert!(RotationAngle::parse("1/0", 10).is_err());
    assert!(RotationAngle::parse("abc", 10).is_err());
    assert!(brjuno_sum(&RotationAngle::golden(50), 1, 1e3).is_err());
}

fn check_expansion(cfe: &ContinuedFractionExpansion, num: &BigUint, den: &BigUint) {
    let qs = cfe.denominators();
    for w in qs.windows(2).skip(1) {
        assert!(w[1] > w[0], "q_k strictly increasing");
    }
    let mut prev: (BigUint, BigUint) = (BigUint::zero(), BigUint::from(1u32));
    let mut prev2: (BigUint, BigUint) = (BigUint::from(1u32), BigUint::zero());
    // |alpha q - p| as the exact numerator |num q - p den| over den
    let err = |p: &BigUint, q: &BigUint| {
        let a = num * q;
        let b = p * den;
        if a > b {
            a - b
        } else {
            b - a
        }
    };
    let mut last_err = err(&prev.0, &prev.1);
    for (k, ((p, q), a)) in cfe.convergents.iter().zip(&cfe.partial_quotients).enumerate() {
        assert_eq!(*p, a * &prev.0 + &prev2.0);
        assert_eq!(*q, a * &prev.1 + &prev2.1);
        assert!(p.gcd(q) == BigUint::from(1u32));
        let e = err(p, q);
        if k > 0 {
            assert!(e < last_err, "best approximation at k = {k}");
        }
        last_err = e;
        prev2 = prev;
        prev = (p.clone(), q.clone());
    }
}

proptest! {
    #[test]
    fn rational_expansions_reconstruct(p in 0u64..5000, q in 1u64..5000) {
        let alpha = RotationAngle::rational(p, q).unwrap();
        let cfe = continued_fraction_expand(&alpha, 64).unwrap();
        prop_assert!(cfe.terminated);
        let g = p.gcd(&q);
        let (pr, qr) = ((p / g) % (q / g), q / g);
        if pr == 0 {
            prop_assert!(cfe.is_empty());
        } else {
            prop_assert_eq!(cfe.reconstruct(), (BigUint::from(pr), BigUint::from(qr)));
            check_expansion(&cfe, &BigUint::from(pr), &BigUint::from(qr));
        }
    }

    #[test]
    fn decimal_expansions_satisfy_invariants(digits in "[0-9]{6,30}") {
        let text = format!("0.{digits}");
        let alpha = RotationAngle::decimal(&text).unwrap();
        let cfe = continued_fraction_expand(&alpha, 80).unwrap();
        let num = BigUint::parse_bytes(digits.as_bytes(), 10).unwrap();
        let den = BigUint::from(10u32).pow(digits.len() as u32);
        if !num.is_zero() {
            check_expansion(&cfe, &num, &den);
            let (p, q) = cfe.reconstruct();
            prop_assert_eq!(p * &den, num * q);
        }
    }

    #[test]
    fn surd_prefixes_are_close(terms in 2usize..30) {
        let alpha = RotationAngle::golden(120);
        let cfe = continued_fraction_expand(&alpha, terms).unwrap();
        let (p, q) = cfe.reconstruct();
        let v = p.to_f64().unwrap() / q.to_f64().unwrap();
        let qf = q.to_f64().unwrap();
        prop_assert!((v - alpha.value()).abs() <= 1.0 / (qf * qf));
    }

    #[test]
    fn brjuno_sums_are_nondecreasing(digits in "[1-9][0-9]{10,40}") {
        let alpha = RotationAngle::decimal(&format!("0.{digits}")).unwrap();
        let r = brjuno_sum(&alpha, 12, 1e3).unwrap();
        prop_assert!(r.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    }
}
