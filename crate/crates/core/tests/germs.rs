use hedgehog_core::arithmetic::*;
use hedgehog_core::germs::*;
use hedgehog_core::poly::{Poly2, PolyMap2};
use hedgehog_core::{norm, Point, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const O: Point = [C64 { re: 0.0, im: 0.0 }, C64 { re: 0.0, im: 0.0 }];

fn henon_desk() -> (Germ, FixedPointData) {
    let (raw, xf) = Germ::henon(root_of_unity(1, 3), c(0.1, 0.0), 0.2);
    normalize_fixed_point(&raw, xf).unwrap()
}

#[test]
fn diagonal_linear_map_is_read_off() {
    let lam = root_of_unity(1, 5);
    let f = PolyMap2::new(Poly2::from_terms(&[(1, 0, lam)]), Poly2::from_terms(&[(0, 1, c(0.2, 0.0))]));
    let inv = PolyMap2::new(Poly2::from_terms(&[(1, 0, lam.inv())]), Poly2::from_terms(&[(0, 1, c(5.0, 0.0))]));
    let raw = Germ::two_dimensional(f, Some(inv), 0.2);
    let (g, fp) = normalize_fixed_point(&raw, O).unwrap();
    assert!((fp.lambda - lam).norm() < 1e-14);
    assert!((fp.mu.unwrap() - c(0.2, 0.0)).norm() < 1e-14);
    assert_eq!(fp.classification, Classification::SemiParabolic { p: 1, q: 5 });
    let p = [c(0.03, -0.01), c(0.02, 0.05)];
    let (a, b) = (g.eval(&p), raw.eval(&p));
    assert!(norm(&[a[0] - b[0], a[1] - b[1]]) < 1e-15);
}

#[test]
fn parabolic_quadratic_is_zero_over_one() {
    let raw = Germ::polynomial(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 0.5);
    let (g, fp) = normalize_fixed_point(&raw, [c(0.01, 0.0), c(0.0, 0.0)]).unwrap();
    assert!(fp.fixed_point[0].norm() < 1e-12);
    assert_eq!(fp.classification, Classification::SemiParabolic { p: 0, q: 1 });
    let nf = semiparabolic_multiplicity(&g, &fp, 8).unwrap();
    assert_eq!(nf.nu, 1);
    assert!((nf.leading_coefficient - c(1.0, 0.0)).norm() < 1e-14);

    let cubic = Germ::polynomial(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 0.5);
    let (g, fp) = normalize_fixed_point(&cubic, O).unwrap();
    assert_eq!(semiparabolic_multiplicity(&g, &fp, 8).unwrap().nu, 2);
}

#[test]
fn henon_fixed_point_matches_trace_determinant_solve() {
    let lam = root_of_unity(1, 3);
    let mu = c(0.1, 0.0);
    let (raw, xf) = Germ::henon(lam, mu, 0.2);
    // differential [[2 x_f, b], [1, 0]]: trace lam + mu, determinant -b
    let a = raw.jacobian(&xf);
    assert!((a.get(0, 0) - (lam + mu)).norm() < 1e-14);
    assert!((-a.get(0, 1) - lam * mu).norm() < 1e-14);
    let f = raw.eval(&xf);
    assert!(norm(&[f[0] - xf[0], f[1] - xf[1]]) < 1e-14);

    let (g, fp) = normalize_fixed_point(&raw, [xf[0] + 0.01, xf[1] - 0.01]).unwrap();
    assert!((fp.lambda - lam).norm() < 1e-12);
    assert!((fp.mu.unwrap() - mu).norm() < 1e-12);
    assert_eq!(fp.classification, Classification::SemiParabolic { p: 1, q: 3 });
    for (e, ev) in [(fp.e_c.unwrap(), fp.lambda), (fp.e_s.unwrap(), fp.mu.unwrap())] {
        let r = a.apply(&e);
        assert!(norm(&[r[0] - ev * e[0], r[1] - ev * e[1]]) < 1e-12);
    }
    let j = g.jacobian(&O);
    assert!((j.get(0, 0) - lam).norm() < 1e-12 && (j.get(1, 1) - mu).norm() < 1e-12);
    assert!(j.get(0, 1).norm() < 1e-12 && j.get(1, 0).norm() < 1e-12);
    assert!(norm(&g.eval(&O)) < 1e-15);
    assert!(g.inverse_defect(100).unwrap() < 1e-12);
}

#[test]
fn henon_desk_multiplicity_is_one() {
    let (g, fp) = henon_desk();
    let nf = semiparabolic_multiplicity(&g, &fp, 8).unwrap();
    assert_eq!((nf.q, nf.nu), (3, 1));
    assert!(nf.leading_coefficient.norm() > 1e-10);
    // the jet of f^3 on the center manifold is x + c x^4 + ...
    assert!((nf.jet.coefficient(1) - c(1.0, 0.0)).norm() < 1e-12);
    for k in 2..4 {
        assert!(nf.jet.coefficient(k).norm() < 1e-12);
    }
}

#[test]
fn normalization_is_idempotent() {
    let (g, _) = henon_desk();
    let (g2, fp2) = normalize_fixed_point(&g, O).unwrap();
    assert!(norm(&fp2.fixed_point) < 1e-14);
    for (i, j, a) in g.forward().f1.terms() {
        assert!((g2.forward().f1.coefficient(i, j) - a).norm() < 1e-12);
    }
    for (i, j, a) in g.forward().f2.terms() {
        assert!((g2.forward().f2.coefficient(i, j) - a).norm() < 1e-12);
    }
}

#[test]
fn classification_from_reports() {
    let (_, fp) = henon_desk();
    let r = brjuno_report_for(&fp.angle, 10, 1e3).unwrap();
    assert_eq!(classify(&fp, &r).unwrap(), Classification::SemiParabolic { p: 1, q: 3 });

    let golden = RotationAngle::golden(200);
    let g = Germ::polynomial(&[c(0.0, 0.0), golden.multiplier(), c(1.0, 0.0)], 0.5);
    let (_, fp) = normalize_fixed_point_with_angle(&g, O, Some(&golden)).unwrap();
    let likely = BrjunoReport { partial_sums: vec![1.0], verdict: BrjunoVerdict::BrjunoLikely, divergence_bound_hit: None };
    assert_eq!(classify(&fp, &likely).unwrap(), Classification::SemiSiegelCandidate);
    let wild = BrjunoReport { partial_sums: vec![1e4], verdict: BrjunoVerdict::NonBrjunoLikely, divergence_bound_hit: Some(0) };
    assert_eq!(classify(&fp, &wild).unwrap(), Classification::SemiCremerCandidate);

    let g = Germ::polynomial(&[c(0.0, 0.0), c(0.9, 0.0), c(1.0, 0.0)], 0.5);
    let (_, fp) = normalize_fixed_point(&g, O).unwrap();
    assert_eq!(fp.classification, Classification::NotSemiIndifferent);
    assert!(classify(&fp, &likely).is_err());
}

#[test]
fn newton_failure_is_reported() {
    // z -> z + 1 has no fixed point
    let g = Germ::polynomial(&[c(1.0, 0.0), c(1.0, 0.0)], 0.5);
    assert!(matches!(normalize_fixed_point(&g, O), Err(hedgehog_core::Error::NoFixedPointFound { .. })));
}

fn golden_henon() -> (Germ, FixedPointData, ContinuedFractionExpansion) {
    let alpha = RotationAngle::golden(200);
    let (raw, xf) = Germ::henon(alpha.multiplier(), c(0.1, 0.0), 0.05);
    let (g, fp) = normalize_fixed_point_with_angle(&raw, xf, Some(&alpha)).unwrap();
    let cfe = continued_fraction_expand(&alpha, 16).unwrap();
    (g, fp, cfe)
}

#[test]
fn approximating_sequence_eigenvalues() {
    let (g, fp, cfe) = golden_henon();
    let (_, f2) = approximating_sequence(&g, &fp, &cfe, 2).unwrap();
    assert!((f2.lambda - c(-1.0, 0.0)).norm() < 1e-15);
    let (g4, f4) = approximating_sequence(&g, &fp, &cfe, 4).unwrap();
    assert_eq!(f4.classification, Classification::SemiParabolic { p: 3, q: 5 });
    assert!((f4.lambda - root_of_unity(3, 5)).norm() < 1e-15);
    let j = g4.jacobian(&O);
    assert!((j.get(0, 0) - f4.lambda).norm() < 1e-15);
    assert!((j.get(1, 1) - fp.mu.unwrap()).norm() < 1e-12);
    assert!(matches!(approximating_sequence(&g, &fp, &cfe, 99), Err(hedgehog_core::Error::IndexOutOfRange { .. })));
}

#[test]
fn approximating_sequence_sup_distance() {
    let (g, fp, cfe) = golden_henon();
    let r = g.domain_radius();
    let mut last = f64::INFINITY;
    for n in 1..=12 {
        let (gn, fpn) = approximating_sequence(&g, &fp, &cfe, n).unwrap();
        let predicted = (fpn.lambda - fp.lambda).norm() * r;
        // sampled sup over the sphere of radius r; the maximum sits on y = 0
        let mut sup: f64 = 0.0;
        for i in 0..100 {
            for k in 0..100 {
                let s = core::f64::consts::FRAC_PI_2 * i as f64 / 99.0;
                let t = core::f64::consts::TAU * k as f64 / 100.0;
                let p = [C64::from_polar(r * s.cos(), t), C64::from_polar(r * s.sin(), 2.0 * t)];
                let (a, b) = (gn.eval(&p), g.eval(&p));
                sup = sup.max(norm(&[a[0] - b[0], a[1] - b[1]]));
            }
        }
        assert!((sup - predicted).abs() < 1e-12, "n = {n}: {sup} vs {predicted}");
        assert!(predicted <= last * (1.0 + 1e-12), "n = {n}");
        last = predicted;
    }
}

#[test]
fn approximating_multiplicity_is_one() {
    let (g, fp, cfe) = golden_henon();
    for n in 3..=6 {
        let (gn, fpn) = approximating_sequence(&g, &fp, &cfe, n).unwrap();
        let q = cfe.convergent(n).unwrap().1 as usize;
        let nf = semiparabolic_multiplicity(&gn, &fpn, 2 * q + 2).unwrap();
        assert_eq!(nf.nu, 1, "n = {n}");
    }
}

#[test]
fn periodic_scan_of_the_desk_example() {
    let (g, fp) = henon_desk();
    let nf = semiparabolic_multiplicity(&g, &fp, 16).unwrap();
    let scan = periodic_point_scan(&g, nf.center_jet.as_ref(), 0.04, 3, 64, 12);
    assert_eq!(scan.max_period, 3);
    assert!(!scan.truncated);
    assert!(scan.is_clean());
    let capped = periodic_point_scan(&g, nf.center_jet.as_ref(), 0.04, 10, 4, 4);
    assert!(capped.truncated && capped.max_period == 4);
}

proptest! {
    #[test]
    fn henon_inverse_round_trips(t in 0.0f64..1.0, m in 0.01f64..0.5, k in 0usize..1000) {
        let lam = C64::from_polar(1.0, core::f64::consts::TAU * t);
        let (raw, xf) = Germ::henon(lam, c(m, 0.0), 0.1);
        let (g, _) = normalize_fixed_point(&raw, xf).unwrap();
        let p = sample_ball_point(k, 1000, 0.1);
        let back = g.eval_inverse(&g.eval(&p)).unwrap();
        prop_assert!(norm(&[back[0] - p[0], back[1] - p[1]]) < 1e-11);
    }

    #[test]
    fn rational_multipliers_classify(p in 1u64..12, q in 2u64..13) {
        prop_assume!(num_integer::Integer::gcd(&p, &q) == 1 && p < q);
        let raw = Germ::polynomial(&[c(0.0, 0.0), root_of_unity(p, q), c(1.0, 0.0)], 0.5);
        let (_, fp) = normalize_fixed_point(&raw, O).unwrap();
        prop_assert_eq!(fp.classification, Classification::SemiParabolic { p, q });
    }
}
