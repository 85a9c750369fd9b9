use hedgehog_core::arithmetic::*;
use hedgehog_core::geometry::CompactSetApprox;
use hedgehog_core::germs::*;
use hedgehog_core::hedgehog::*;
use hedgehog_core::manifolds::strong_stable_disc;
use hedgehog_core::petals::CenterChart;
use hedgehog_core::{Error, ErrorFamily, Point, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const O: Point = [C64 { re: 0.0, im: 0.0 }, C64 { re: 0.0, im: 0.0 }];

fn circle(n: usize, r: f64) -> CompactSetApprox {
    let mut s = CompactSetApprox::empty(CHART, 1.0, n);
    for k in 0..4 * n {
        let a = core::f64::consts::TAU * k as f64 / (4 * n) as f64;
        s.insert_point(&[r * a.cos(), r * a.sin()]);
    }
    s
}

#[test]
fn rotation_invariant_circle() {
    let g = Germ::polynomial(&[c(0.0, 0.0), root_of_unity(2, 9)], 1.0);
    let map = CenterChart::new(&g, None);
    let h = circle(256, 0.6);
    let check = check_complete_invariance(&map, &h, 1.0);
    assert!(check.pass, "{check:?}");
    assert_eq!(check.missing_preimages, 0);
    assert!(!check_complete_invariance(&map, &h.shifted(10, 0), 1.0).pass);
}

#[test]
fn parabolic_quadratic_single_stage() {
    let raw = Germ::polynomial(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 0.5);
    let (g, fp) = normalize_fixed_point(&raw, O).unwrap();
    let run = hedgehog_approximate(&g, &fp, None, &[], &HedgehogConfig::new(0.2, 256)).unwrap();
    assert_eq!(run.stages.len(), 1);
    let st = &run.stages[0];
    assert_eq!((st.p, st.q, st.components), (0, 1, 2));
    assert!(st.passes(), "{st:?}");
    assert!(st.scan_clean);
    assert!(run.hausdorff_gaps.is_empty());
    let r = &run.report;
    assert!(r.contains_zero && r.connected && r.full && r.boundary_contact && r.completely_invariant, "{r:?}");
    assert!(r.gaps_inconclusive);
}

#[test]
fn golden_quadratic_stages() {
    let alpha = RotationAngle::golden(100);
    let raw = Germ::polynomial(&[c(0.0, 0.0), alpha.multiplier(), c(1.0, 0.0)], 0.5);
    let (g, fp) = normalize_fixed_point_with_angle(&raw, O, Some(&alpha)).unwrap();
    let cfe = continued_fraction_expand(&alpha, 8).unwrap();
    let run = hedgehog_approximate(&g, &fp, Some(&cfe), &[3, 2, 3], &HedgehogConfig::new(0.2, 256)).unwrap();
    assert_eq!(run.convergent_indices, vec![2, 3]);
    let rot: Vec<(u64, u64)> = run.stages.iter().map(|s| (s.p, s.q)).collect();
    assert_eq!(rot, vec![(1, 2), (2, 3)]);
    for st in &run.stages {
        assert_eq!(st.components as u64, 2 * st.q);
        let cyc = st.cycle.as_ref().unwrap();
        assert_eq!(cyc.rotation, (st.p, st.q));
        assert!(st.contains_zero && st.connected && st.boundary_contact);
    }
    assert_eq!(run.hausdorff_gaps.len(), 1);
    assert!(run.report.gaps_inconclusive);
    assert!(run.hausdorff_gaps.iter().all(|d| d.is_finite() && *d > 0.0));
}

#[test]
fn pipeline_preconditions() {
    let raw = Germ::polynomial(&[c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)], 0.5);
    let (g, fp) = normalize_fixed_point(&raw, O).unwrap();
    let e = hedgehog_approximate(&g, &fp, None, &[], &HedgehogConfig::new(0.2, 128)).unwrap_err();
    assert_eq!(e.family(), ErrorFamily::Precondition);

    let alpha = RotationAngle::golden(100);
    let raw = Germ::polynomial(&[c(0.0, 0.0), alpha.multiplier(), c(1.0, 0.0)], 0.5);
    let (g, fp) = normalize_fixed_point_with_angle(&raw, O, Some(&alpha)).unwrap();
    assert!(hedgehog_approximate(&g, &fp, None, &[2], &HedgehogConfig::new(0.2, 128)).is_err());
    let cfe = continued_fraction_expand(&alpha, 4).unwrap();
    let e = hedgehog_approximate(&g, &fp, Some(&cfe), &[2, 40], &HedgehogConfig::new(0.2, 128)).unwrap_err();
    assert!(matches!(e, Error::Stage { stage: 40, .. }), "{e}");
    assert!(hedgehog_approximate(&g, &fp, Some(&cfe), &[2], &HedgehogConfig::new(0.2, 100)).is_err());
}

#[test]
fn limit_candidate_keeps_the_last_set() {
    let a = circle(64, 0.5);
    let b = circle(64, 0.4);
    let l = limit_candidate(&[a.clone(), b.clone()]).unwrap();
    assert!(b.cells().iter().all(|&(i, j)| l.contains(i, j)));
    assert_eq!(limit_candidate(std::slice::from_ref(&a)).unwrap(), a);
    assert!(limit_candidate(&[]).is_none());
}

#[test]
fn henon_lamination_and_origin_leaf() {
    let (raw, xf) = Germ::henon(root_of_unity(1, 3), c(0.1, 0.0), 0.2);
    let (g, fp) = normalize_fixed_point(&raw, xf).unwrap();
    let run = hedgehog_approximate(&g, &fp, None, &[], &HedgehogConfig::new(0.04, 256)).unwrap();
    let st = &run.stages[0];
    assert_eq!(st.components, 6);
    assert!(st.passes(), "{st:?}");
    let phi = run.families[0].center_jet.clone();
    let cfg = LaminationConfig::new(20, 0.3, 10f64.to_radians().tan());
    let discs = strong_stable_lamination_sample(&g, phi.as_ref(), &run.limit_candidate, &cfg).unwrap();
    assert_eq!(discs.len(), 20);
    for d in &discs {
        assert!(d.passes(), "slope {} ratios {:?}", d.max_slope, d.ratios);
    }
    let sigma = strong_stable_disc(&g, 16).unwrap();
    let ts: Vec<C64> = (0..8).map(|k| C64::from_polar(0.01, k as f64 * 0.785)).collect();
    assert!(origin_leaf_gap(&g, &sigma, &ts, 40).unwrap() < 1e-8);

    let one_d = Germ::polynomial(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 0.5);
    assert!(strong_stable_lamination_sample(&one_d, None, &run.limit_candidate, &cfg).is_err());
}
