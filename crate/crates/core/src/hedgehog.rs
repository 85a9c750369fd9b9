//! Hedgehog approximation: maximal petals of the semi-parabolic germs `f_n`
//! along the convergents of the rotation angle, their Hausdorff gaps, a limit
//! candidate, and re-checkable verifications of the limit's properties
//! (contains 0, connected, full, completely invariant, meets the ball
//! boundary) together with a sampled strong stable lamination.

use alloc::vec::Vec;

use crate::arithmetic::ContinuedFractionExpansion;
use crate::dd::DDC;
use crate::error::{Error, Result};
use crate::geometry::{hausdorff_distance, CompactSetApprox, P2};
use crate::germs::{
    approximating_sequence, periodic_point_scan, semiparabolic_multiplicity, Classification, Dimension, FixedPointData, Germ,
    NormalFormData,
};
use crate::manifolds::{center_manifold_jet, orbit_dd, propagate_difference, strong_stable_leaf, JetGraph};
use crate::petals::{chart_for, maximal_petals, petal_cycle, CenterChart, MaximalPetalConfig, PetalCycle, PetalFamily, DEFAULT_ORBIT_CAP};
use crate::{Point, C64};

/// Chart label of hedgehog grids.
pub const CHART: &str = "center";

#[derive(Debug, Clone, PartialEq)]
pub struct HedgehogConfig {
    pub ball_radius: f64,
    /// Grid cells per axis over `[-B, B]^2`.
    pub resolution: usize,
    pub forward_cap: usize,
    pub backward_cap: usize,
    /// Minimum degree of the restricted jet of `f^q`; raised to `4q + 4`.
    pub jet_degree: usize,
    /// Degree of the center manifold jet (two-dimensional germs).
    pub center_degree: usize,
    pub scan_seeds: usize,
    pub period_cap: usize,
    /// Complete invariance tolerance, in cells.
    pub invariance_tol: f64,
    /// Boundary contact tolerance, in cells.
    pub boundary_tol: f64,
}

impl HedgehogConfig {
    pub fn new(ball_radius: f64, resolution: usize) -> Self {
        HedgehogConfig {
            ball_radius,
            resolution,
            forward_cap: DEFAULT_ORBIT_CAP,
            backward_cap: DEFAULT_ORBIT_CAP,
            jet_degree: 24,
            center_degree: 8,
            scan_seeds: 16,
            period_cap: 64,
            invariance_tol: 1.0,
            boundary_tol: 2.0,
        }
    }

    fn cell(&self) -> f64 {
        2.0 * self.ball_radius / self.resolution as f64
    }
}

/// Outcome of [`check_complete_invariance`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvarianceCheck {
    pub pass: bool,
    /// Largest offset, in cells, of an image or preimage from the set.
    pub worst_offset: f64,
    pub forward_worst: f64,
    pub backward_worst: f64,
    /// Boundary points whose preimage was not found.
    pub missing_preimages: usize,
}

/// Maps the boundary points of `h` by the chart map and its local inverse
/// and measures how far (in cells) the images land from `h`.
pub fn check_complete_invariance(chart: &CenterChart, h: &CompactSetApprox, tol: f64) -> InvarianceCheck {
    let pts = h.boundary_points();
    let offsets: Vec<(f64, Option<f64>)> = crate::par::map_slice(&pts, |p| {
        let u = C64::new(p[0], p[1]);
        let fwd = chart.restricted(u);
        let f_off = h.cell_offset(&[fwd.re, fwd.im]);
        let b_off = chart.backward(u).map(|v| h.cell_offset(&[v.re, v.im]));
        (f_off, b_off)
    });
    let forward_worst = offsets.iter().map(|o| o.0).fold(0.0, f64::max);
    let backward_worst = offsets.iter().filter_map(|o| o.1).fold(0.0, f64::max);
    let missing = offsets.iter().filter(|o| o.1.is_none()).count();
    let worst = if missing > 0 { f64::INFINITY } else { forward_worst.max(backward_worst) };
    InvarianceCheck { pass: worst <= tol, worst_offset: worst, forward_worst, backward_worst, missing_preimages: missing }
}

/// Some cell center of `h`, lifted by `chart`, lies within `tol` of the
/// sphere of radius `ball_radius`.
pub fn meets_boundary(chart: &CenterChart, h: &CompactSetApprox, ball_radius: f64, tol: f64) -> bool {
    h.points().iter().any(|p| (chart.chart_norm(C64::new(p[0], p[1])) - ball_radius).abs() <= tol)
}

/// Per-stage verification record.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageReport {
    /// Convergent index `n` (0 for a rational input).
    pub index: usize,
    pub p: u64,
    pub q: u64,
    pub components: usize,
    pub cycle: Option<PetalCycle>,
    pub contains_zero: bool,
    pub connected: bool,
    /// Components touching the ball boundary.
    pub touching: Vec<bool>,
    pub boundary_contact: bool,
    pub invariance: InvarianceCheck,
    /// Invariance of the filled closure, at one extra cell of tolerance.
    pub filled_invariance: InvarianceCheck,
    pub fill_idempotent: bool,
    pub hole_count: usize,
    /// Largest `f^q` invariance offset over the components, in cells.
    pub petal_invariance_offset: f64,
    pub scan_clean: bool,
    pub scan_truncated: bool,
    pub scan_max_period: usize,
    pub unclassified: usize,
}

impl StageReport {
    /// Every stage-wise conclusion holds.
    pub fn passes(&self) -> bool {
        self.contains_zero
            && self.connected
            && self.boundary_contact
            && self.invariance.pass
            && self.filled_invariance.pass
            && self.fill_idempotent
    }
}

/// Flags for the limit candidate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HedgehogReport {
    pub contains_zero: bool,
    pub connected: bool,
    pub full: bool,
    pub completely_invariant: bool,
    pub invariance: InvarianceCheck,
    pub boundary_contact: bool,
    /// The gaps do not decrease, or there are too few to judge.
    pub gaps_inconclusive: bool,
}

#[derive(Debug, Clone)]
pub struct HedgehogRun {
    pub convergent_indices: Vec<usize>,
    pub stages: Vec<StageReport>,
    /// Closure of the maximal petals per stage.
    pub petal_sequence: Vec<CompactSetApprox>,
    pub families: Vec<PetalFamily>,
    /// `d_H` between consecutive closures.
    pub hausdorff_gaps: Vec<f64>,
    pub limit_candidate: CompactSetApprox,
    pub report: HedgehogReport,
    pub ball_radius: f64,
}

struct Stage {
    report: StageReport,
    closure: CompactSetApprox,
    family: PetalFamily,
}

/// A stage germ with its normal form, computed before any grid work so
/// that a hopeless stage fails the run early.
struct Prepared {
    index: usize,
    germ: Germ,
    fp: FixedPointData,
    nf: NormalFormData,
}

fn prepare(germ: Germ, fp: FixedPointData, index: usize, cfg: &HedgehogConfig) -> Result<Prepared> {
    let q = match fp.classification {
        Classification::SemiParabolic { q, .. } => q,
        _ => return Err(Error::precondition("stage germ is not semi-parabolic")),
    };
    let degree = cfg.jet_degree.max(4 * q as usize + 4);
    let nf = semiparabolic_multiplicity(&germ, &fp, degree)?;
    Ok(Prepared { index, germ, fp, nf })
}

fn run_stage(st: &Prepared, cfg: &HedgehogConfig) -> Result<Stage> {
    let (g, fp, nf, index) = (&st.germ, &st.fp, &st.nf, st.index);
    let (p, q) = match fp.classification {
        Classification::SemiParabolic { p, q } => (p, q),
        _ => return Err(Error::precondition("stage germ is not semi-parabolic")),
    };
    let b = cfg.ball_radius;
    let center: Option<JetGraph> = match g.dimension() {
        Dimension::One => None,
        Dimension::Two => Some(center_manifold_jet(g, cfg.center_degree)?),
    };
    let phi = center.as_ref().map(|j| &j.coefficients);
    let scan = periodic_point_scan(g, phi, b, q as usize, cfg.period_cap, cfg.scan_seeds);
    let chart = chart_for(g, nf, center.as_ref(), b / 2.0, b)?;
    let mp_cfg =
        MaximalPetalConfig { ball_radius: b, resolution: cfg.resolution, forward_cap: cfg.forward_cap, backward_cap: cfg.backward_cap };
    let petals = maximal_petals(&chart, &mp_cfg)?;
    let family = petals.family;
    let mut closure = family.union().unwrap_or_else(|| CompactSetApprox::empty(CHART, b, cfg.resolution));
    if let Some((i, j)) = closure.cell_of(&[0.0, 0.0]) {
        closure.insert(i, j);
    }
    let map = chart.center_chart();
    let cell = cfg.cell();
    let touching = crate::petals::petal_touches_boundary(&family, b, cfg.boundary_tol * cell);
    let filled = closure.fill_to_full();
    let report = StageReport {
        index,
        p,
        q,
        components: family.components.len(),
        cycle: petal_cycle(g, &family).ok(),
        contains_zero: closure.contains_point(&[0.0, 0.0]),
        connected: closure.is_connected(),
        boundary_contact: touching.iter().any(|&t| t),
        touching,
        invariance: check_complete_invariance(map, &closure, cfg.invariance_tol),
        filled_invariance: check_complete_invariance(map, &filled, cfg.invariance_tol + 1.0),
        fill_idempotent: filled.fill_to_full() == filled,
        hole_count: closure.hole_count(),
        petal_invariance_offset: petals.invariance_offsets.iter().copied().fold(0.0, f64::max),
        scan_clean: scan.is_clean(),
        scan_truncated: scan.truncated,
        scan_max_period: scan.max_period,
        unclassified: petals.unclassified,
    };
    Ok(Stage { report, closure, family })
}

/// The grid closure of the last set together with the cells occupied in at
/// least `ceil(K / 2)` of the last `K = min(3, len)` sets.
pub fn limit_candidate(sets: &[CompactSetApprox]) -> Option<CompactSetApprox> {
    let last = sets.last()?;
    let k = sets.len().min(3);
    let tail = &sets[sets.len() - k..];
    let need = k.div_ceil(2);
    let mut out = last.clone();
    for (i, j) in tail.iter().flat_map(|s| s.cells()) {
        if !out.contains(i, j) && tail.iter().filter(|s| s.contains(i, j)).count() >= need {
            out.insert(i, j);
        }
    }
    Some(out)
}

/// Runs the pipeline on the germs `f_n` for the convergent indices in
/// `indices`. A rational input gives a single stage on `g` itself. The
/// first failing stage aborts the run with its index attached.
pub fn hedgehog_approximate(
    g: &Germ,
    fp: &FixedPointData,
    cfe: Option<&ContinuedFractionExpansion>,
    indices: &[usize],
    cfg: &HedgehogConfig,
) -> Result<HedgehogRun> {
    if !cfg.resolution.is_power_of_two() || cfg.resolution < 8 {
        return Err(Error::precondition("resolution must be a power of two"));
    }
    let mut stages = Vec::new();
    let used: Vec<usize>;
    if fp.classification.is_rational() {
        used = Vec::new();
        let st = prepare(g.clone(), fp.clone(), 0, cfg).map_err(|e| e.at_stage(0))?;
        stages.push(run_stage(&st, cfg).map_err(|e| e.at_stage(0))?);
    } else if fp.classification.is_irrational_candidate() {
        let cfe = cfe.ok_or_else(|| Error::precondition("an irrational angle needs its continued fraction"))?;
        if indices.is_empty() {
            return Err(Error::precondition("no convergent indices"));
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut prepared = Vec::with_capacity(sorted.len());
        for &n in &sorted {
            let st = approximating_sequence(g, fp, cfe, n).and_then(|(gn, fpn)| prepare(gn, fpn, n, cfg));
            prepared.push(st.map_err(|e| e.at_stage(n))?);
        }
        for st in &prepared {
            stages.push(run_stage(st, cfg).map_err(|e| e.at_stage(st.index))?);
        }
        used = sorted;
    } else {
        return Err(Error::precondition("the fixed point is not semi-indifferent"));
    }

    let mut gaps = Vec::new();
    for w in stages.windows(2) {
        gaps.push(hausdorff_distance(&w[0].closure, &w[1].closure)?);
    }
    let sets: Vec<CompactSetApprox> = stages.iter().map(|s| s.closure.clone()).collect();
    let limit = limit_candidate(&sets).ok_or_else(|| Error::precondition("no stages"))?;
    let phi = stages.last().and_then(|s| s.family.center_jet.clone());
    let map = CenterChart::new(g, phi.as_ref());
    let invariance = check_complete_invariance(&map, &limit, cfg.invariance_tol);
    let report = HedgehogReport {
        contains_zero: limit.contains_point(&[0.0, 0.0]),
        connected: limit.is_connected(),
        full: limit.is_full(),
        completely_invariant: invariance.pass,
        invariance,
        boundary_contact: meets_boundary(&map, &limit, cfg.ball_radius, cfg.boundary_tol * cfg.cell()),
        gaps_inconclusive: gaps.len() < 2 || gaps.windows(2).any(|w| w[1] > w[0]),
    };
    let (reports, families): (Vec<StageReport>, Vec<PetalFamily>) = stages.into_iter().map(|s| (s.report, s.family)).unzip();
    Ok(HedgehogRun {
        convergent_indices: used,
        stages: reports,
        petal_sequence: sets,
        families,
        hausdorff_gaps: gaps,
        limit_candidate: limit,
        report,
        ball_radius: cfg.ball_radius,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaminationConfig {
    pub count: usize,
    /// Radius of the sampled discs in the vertical parameter.
    pub disc_radius: f64,
    /// Points per disc on the circle of radius `disc_radius`.
    pub disc_points: usize,
    /// Shooting horizon; also the length of the rate check.
    pub horizon: usize,
    pub mu_bar: f64,
    /// Vertical cone `|w1| <= cone_slope |w2|`.
    pub cone_slope: f64,
}

impl LaminationConfig {
    pub fn new(count: usize, mu_bar: f64, cone_slope: f64) -> Self {
        LaminationConfig { count, disc_radius: 0.01, disc_points: 8, horizon: 40, mu_bar, cone_slope }
    }
}

/// A sampled strong stable disc.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminationDisc {
    pub base: Point,
    /// Leaf points `base + (a, t)`; empty if the graph transform diverged.
    pub points: Vec<Point>,
    /// Largest `|da/dt|` over the disc.
    pub max_slope: f64,
    pub in_cone: bool,
    /// `dist(f^n(y), f^n(base)) / mu_bar^n` for the test point `y`.
    pub ratios: Vec<f64>,
    pub rate_ok: bool,
    pub diverged: bool,
}

impl LaminationDisc {
    pub fn passes(&self) -> bool {
        !self.diverged && self.in_cone && self.rate_ok
    }
}

/// Relative size below which the separation is dominated by the rounding
/// of the test point and carries no rate information.
const SEPARATION_FLOOR: f64 = 1e-12;

/// The ratios decrease from index 1 until the separation falls to the
/// rounding floor, and end far below where they started.
fn rate_tail_ok(ratios: &[f64], separations: &[f64]) -> bool {
    let s0 = separations[0];
    let last = separations.iter().rposition(|&s| s > SEPARATION_FLOOR * s0).unwrap_or(0);
    if last < 4 {
        return false;
    }
    let tail = &ratios[1..=last];
    tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)) && ratios[last] < 1e-2 * ratios[0]
}

/// One disc through `x`.
pub fn lamination_disc(g: &Germ, x: &Point, cfg: &LaminationConfig) -> LaminationDisc {
    let offsets: Vec<C64> = (0..cfg.disc_points.max(1))
        .map(|k| C64::from_polar(cfg.disc_radius, core::f64::consts::TAU * k as f64 / cfg.disc_points.max(1) as f64))
        .collect();
    let failed = LaminationDisc {
        base: *x,
        points: Vec::new(),
        max_slope: f64::INFINITY,
        in_cone: false,
        ratios: Vec::new(),
        rate_ok: false,
        diverged: true,
    };
    let Ok(leaf) = strong_stable_leaf(g, x, &offsets, cfg.horizon) else { return failed };
    let max_slope = leaf.iter().map(|l| l.slope.norm()).fold(0.0, f64::max);
    let y = leaf[0].point;
    let f = g.forward();
    let xd = [DDC::from(x[0]), DDC::from(x[1])];
    let orbit = orbit_dd(f, &xd, cfg.horizon);
    let delta = [DDC::from(y[0]) - xd[0], DDC::from(y[1]) - xd[1]];
    let seps: Vec<f64> = propagate_difference(f, &orbit, delta, cfg.horizon)
        .iter()
        .map(|d| libm::sqrt((d[0].norm_sqr() + d[1].norm_sqr()).to_f64()))
        .collect();
    let ratios: Vec<f64> = seps.iter().enumerate().map(|(n, s)| s / libm::pow(cfg.mu_bar, n as f64)).collect();
    LaminationDisc {
        base: *x,
        points: leaf.iter().map(|l| l.point).collect(),
        max_slope,
        in_cone: max_slope <= cfg.cone_slope,
        rate_ok: rate_tail_ok(&ratios, &seps),
        ratios,
        diverged: false,
    }
}

/// `count` discs through points of `h` (lifted to the center manifold by
/// `phi`), chosen evenly through the cell list.
pub fn strong_stable_lamination_sample(
    g: &Germ,
    phi: Option<&crate::poly::Poly1>,
    h: &CompactSetApprox,
    cfg: &LaminationConfig,
) -> Result<Vec<LaminationDisc>> {
    if g.dimension() != Dimension::Two {
        return Err(Error::precondition("the lamination needs a two-dimensional germ"));
    }
    let pts: Vec<P2> = h.points();
    if pts.is_empty() {
        return Err(Error::precondition("empty set"));
    }
    let map = CenterChart::new(g, phi);
    let count = cfg.count.min(pts.len());
    let bases: Vec<Point> = (0..count)
        .map(|k| {
            let p = pts[k * pts.len() / count.max(1)];
            map.lift(C64::new(p[0], p[1]))
        })
        .collect();
    Ok(crate::par::map_slice(&bases, |x| lamination_disc(g, x, cfg)))
}

/// Largest gap between the strong stable leaf through 0 (by shooting) and
/// the strong stable jet `x = sigma(y)` at the vertical offsets `ts`.
pub fn origin_leaf_gap(g: &Germ, sigma: &JetGraph, ts: &[C64], horizon: usize) -> Result<f64> {
    let zero = [C64::new(0.0, 0.0); 2];
    let leaf = strong_stable_leaf(g, &zero, ts, horizon)?;
    Ok(leaf.iter().zip(ts).map(|(l, &t)| (l.offset - sigma.eval(t)).norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, r: f64) -> CompactSetApprox {
        let mut s = CompactSetApprox::empty(CHART, 1.0, n);
        for k in 0..4 * n {
            let a = core::f64::consts::TAU * k as f64 / (4 * n) as f64;
            s.insert_point(&[r * libm::cos(a), r * libm::sin(a)]);
        }
        s
    }

    #[test]
    fn rotation_circle_is_invariant() {
        let lam = crate::arithmetic::root_of_unity(1, 7);
        let g = Germ::polynomial(&[C64::new(0.0, 0.0), lam], 1.0);
        let h = circle(128, 0.5);
        let map = CenterChart::new(&g, None);
        assert!(check_complete_invariance(&map, &h, 1.0).pass);
        let moved = h.shifted(10, 0);
        let c = check_complete_invariance(&map, &moved, 1.0);
        assert!(!c.pass);
        assert!((c.worst_offset - 10.0).abs() <= 2.0, "{}", c.worst_offset);
    }

    #[test]
    fn limit_candidate_majority() {
        let mut a = CompactSetApprox::empty(CHART, 1.0, 8);
        let mut b = a.clone();
        let mut c = a.clone();
        a.insert(1, 1);
        b.insert(1, 1);
        b.insert(2, 2);
        c.insert(5, 5);
        let l = limit_candidate(&[a, b, c]).unwrap();
        assert!(l.contains(1, 1) && l.contains(5, 5) && !l.contains(2, 2));
    }

    #[test]
    fn rate_tail_needs_decay() {
        let seps: Vec<f64> = (0..41).map(|n| libm::pow(0.1, n as f64).max(1e-20)).collect();
        let ratios: Vec<f64> = seps.iter().enumerate().map(|(n, s)| s / libm::pow(0.3, n as f64)).collect();
        assert!(rate_tail_ok(&ratios, &seps));
        let flat: Vec<f64> = (0..41).map(|n| libm::pow(0.5, n as f64)).collect();
        let r2: Vec<f64> = flat.iter().enumerate().map(|(n, s)| s / libm::pow(0.3, n as f64)).collect();
        assert!(!rate_tail_ok(&r2, &flat));
    }
}
