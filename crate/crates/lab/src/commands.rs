//! One function per command. Each returns a JSON report and the point
//! clouds to be written next to it.

use hedgehog_core::arithmetic::{brjuno_sum, continued_fraction_expand, ContinuedFractionExpansion};
use hedgehog_core::conefield::{certify, ConeFieldSpec, PartialHyperbolicityCertificate};
use hedgehog_core::germs::{approximating_sequence, normalize_fixed_point_with_angle, Dimension, FixedPointData, Germ};
use hedgehog_core::hedgehog::{
    hedgehog_approximate, origin_leaf_gap, strong_stable_lamination_sample, HedgehogConfig, HedgehogRun, LaminationConfig,
};
use hedgehog_core::manifolds::{center_manifold_jet, strong_stable_disc, JetGraph};
use hedgehog_core::C64;
use serde_json::{json, Value};

use crate::config::{Command, GermKind, Resolved, RunConfig};
use crate::output::{c, f};
use crate::render::{LayerRef, SceneSpec};
use crate::LabError;

pub struct CommandOutput {
    pub report: Value,
    /// File name and points, written as CSV.
    pub clouds: Vec<(String, Vec<[f64; 2]>)>,
}

pub fn execute(cfg: &RunConfig, r: &Resolved) -> Result<CommandOutput, LabError> {
    match cfg.command {
        Command::Brjuno => brjuno(cfg, r),
        Command::Classify => classify(cfg, r),
        Command::Cones => cones(cfg, r),
        Command::Manifolds => manifolds(cfg, r),
        Command::Petals => petals(cfg, r),
        Command::Hedgehog => hedgehog(cfg, r),
        Command::Render => unreachable!("render is handled by the caller"),
    }
}

/// The normalized germ with its fixed-point data.
pub struct Setup {
    pub germ: Germ,
    pub fp: FixedPointData,
}

pub fn setup(cfg: &RunConfig, r: &Resolved) -> Result<Setup, LabError> {
    let spec = cfg.germ.as_ref().ok_or_else(|| LabError::Config("no germ".into()))?;
    let domain = r.outer_radius.or(r.ball_radius).unwrap_or(1.0);
    let lambda = r.angle.multiplier();
    let zero = C64::new(0.0, 0.0);
    let (raw, guess) = match spec.kind {
        GermKind::Henon => Germ::henon(lambda, r.mu.expect("validated"), domain),
        GermKind::Polynomial => {
            let mut coef = vec![zero, lambda];
            coef.extend(&r.coefficients);
            (Germ::polynomial(&coef, domain), [zero, zero])
        }
    };
    let (germ, fp) = normalize_fixed_point_with_angle(&raw, guess, Some(&r.angle))?;
    Ok(Setup { germ, fp })
}

fn expansion_for(r: &Resolved, indices: &[usize]) -> Result<ContinuedFractionExpansion, LabError> {
    let terms = indices.iter().copied().max().unwrap_or(1).max(1);
    Ok(continued_fraction_expand(&r.angle, terms)?)
}

/// The center jet, with `B'` checked against its validity radius.
fn checked_center_jet(cfg: &RunConfig, r: &Resolved, g: &Germ, degree: usize) -> Result<JetGraph, LabError> {
    let jet = center_manifold_jet(g, degree)?;
    if let Some(outer) = r.outer_radius {
        if outer > jet.validity_radius {
            return Err(LabError::Config(format!(
                "outer_radius {outer} exceeds the center jet validity radius {} (degree {})",
                jet.validity_radius, cfg.jet_degree
            )));
        }
    }
    Ok(jet)
}

fn angle_json(r: &Resolved) -> Value {
    json!({
        "text": r.angle.to_string(),
        "value": r.angle.value(),
        "uncertainty": r.angle.uncertainty(),
    })
}

fn brjuno(cfg: &RunConfig, r: &Resolved) -> Result<CommandOutput, LabError> {
    let cfe = continued_fraction_expand(&r.angle, cfg.brjuno_terms)?;
    let report = brjuno_sum(&r.angle, cfg.brjuno_terms, r.divergence_bound)?;
    let convergents: Vec<Value> = cfe.convergents.iter().map(|(p, q)| json!([p.to_string(), q.to_string()])).collect();
    let quotients: Vec<String> = cfe.partial_quotients.iter().map(|a| a.to_string()).collect();
    Ok(CommandOutput {
        report: json!({
            "angle": angle_json(r),
            "terms": cfg.brjuno_terms,
            "partial_quotients": quotients,
            "convergents": convergents,
            "terminated": cfe.terminated,
            "brjuno": serde_json::to_value(&report).expect("report serializes"),
        }),
        clouds: Vec::new(),
    })
}

fn fixed_point_json(fp: &FixedPointData) -> Value {
    json!({
        "fixed_point": [c(fp.fixed_point[0]), c(fp.fixed_point[1])],
        "lambda": c(fp.lambda),
        "mu": fp.mu.map(c),
        "classification": fp.classification.to_string(),
    })
}

fn classify(cfg: &RunConfig, r: &Resolved) -> Result<CommandOutput, LabError> {
    let s = setup(cfg, r)?;
    Ok(CommandOutput { report: json!({ "angle": angle_json(r), "fixed_point": fixed_point_json(&s.fp) }), clouds: Vec::new() })
}

fn certificate_json(cert: &PartialHyperbolicityCertificate) -> Value {
    json!({
        "pass": cert.pass,
        "ball_radius": cert.ball_radius,
        "mu_bar": cert.mu_bar,
        "lambda_lower": cert.lambda_lower,
        "cone_half_angle": cert.cone_half_angle,
        "grid_points": cert.grid.len(),
        "covering_radius": cert.covering_radius,
        "lipschitz": cert.lipschitz,
        "worst_slack": f(cert.worst_slack),
        "required_slack": f(cert.required_slack),
        "witness": cert.witness.as_ref().map(|w| json!({
            "index": w.index,
            "point": [c(w.point[0]), c(w.point[1])],
            "vector": [c(w.vector[0]), c(w.vector[1])],
            "condition": serde_json::to_value(w.condition).expect("condition serializes"),
            "value": f(w.value),
            "bound": f(w.bound),
        })),
    })
}

/// Certificates for `f` and for the germs `f_n` at the requested indices.
fn certify_all(cfg: &RunConfig, r: &Resolved, s: &Setup) -> Result<(Value, bool), LabError> {
    let outer = r.outer_radius.ok_or_else(|| LabError::Config("cone certificate needs outer_radius".into()))?;
    let spec = ConeFieldSpec::axes(r.half_angle);
    let base = certify(&s.germ, &spec, outer, cfg.cones.density, r.mu_bar, r.lambda_lower)?;
    let mut all = base.pass;
    let mut transfers = Vec::new();
    if s.fp.classification.is_irrational_candidate() && !cfg.indices.is_empty() {
        let cfe = expansion_for(r, &cfg.indices)?;
        for &n in &cfg.indices {
            let (gn, fpn) = approximating_sequence(&s.germ, &s.fp, &cfe, n)?;
            let cert = certify(&gn, &spec, outer, cfg.cones.density, r.mu_bar, r.lambda_lower)?;
            all &= cert.pass;
            transfers.push(json!({
                "index": n,
                "lambda_n": c(fpn.lambda),
                "sup_distance": (fpn.lambda - s.fp.lambda).norm() * outer,
                "certificate": certificate_json(&cert),
            }));
        }
    }
    Ok((json!({ "germ": certificate_json(&base), "approximants": transfers, "pass": all }), all))
}

fn cones(cfg: &RunConfig, r: &Resolved) -> Result<CommandOutput, LabError> {
    let s = setup(cfg, r)?;
    if s.germ.dimension() != Dimension::Two {
        return Err(hedgehog_core::Error::Precondition("cone fields need a two-dimensional germ".into()).into());
    }
    let (cert, _) = certify_all(cfg, r, &s)?;
    Ok(CommandOutput { report: json!({ "fixed_point": fixed_point_json(&s.fp), "cones": cert }), clouds: Vec::new() })
}

fn jet_json(j: &JetGraph) -> Value {
    let coefficients: Vec<Value> = (0..=j.degree).map(|k| c(j.coefficients.coefficient(k))).collect();
    json!({
        "degree": j.degree,
        "validity_radius": j.validity_radius,
        "residual": f(j.residual),
        "coefficients": coefficients,
    })
}

fn manifolds(cfg: &RunConfig, r: &Resolved) -> Result<CommandOutput, LabError> {
    let s = setup(cfg, r)?;
    if s.germ.dimension() != Dimension::Two {
        return Err(hedgehog_core::Error::Precondition("manifold jets need a two-dimensional germ".into()).into());
    }
    let center = checked_center_jet(cfg, r, &s.germ, cfg.jet_degree)?;
    let stable = strong_stable_disc(&s.germ, cfg.jet_degree)?;
    Ok(CommandOutput {
        report: json!({
            "fixed_point": fixed_point_json(&s.fp),
            "center": jet_json(&center),
            "strong_stable": jet_json(&stable),
        }),
        clouds: Vec::new(),
    })
}

fn hedgehog_config(cfg: &RunConfig, r: &Resolved) -> HedgehogConfig {
    let mut h = HedgehogConfig::new(r.ball_radius.expect("validated"), cfg.resolution);
    h.forward_cap = cfg.forward_cap;
    h.backward_cap = cfg.backward_cap;
    h
}

fn scene(run: &HedgehogRun, title: String, layers: Vec<LayerRef>) -> Value {
    let spec = SceneSpec {
        extent: run.petal_sequence.first().map(|s| s.extent()).unwrap_or(run.ball_radius),
        resolution: run.petal_sequence.first().map(|s| s.size()).unwrap_or(1),
        ball_radius: run.ball_radius,
        title,
        layers,
    };
    serde_json::to_value(spec).expect("scene serializes")
}

fn petals(cfg: &RunConfig, r: &Resolved) -> Result<CommandOutput, LabError> {
    let s = setup(cfg, r)?;
    if !s.fp.classification.is_rational() {
        return Err(hedgehog_core::Error::Precondition("petals need a semi-parabolic fixed point".into()).into());
    }
    if s.germ.dimension() == Dimension::Two {
        checked_center_jet(cfg, r, &s.germ, cfg.jet_degree)?;
    }
    let run = hedgehog_approximate(&s.germ, &s.fp, None, &[], &hedgehog_config(cfg, r))?;
    let stage = &run.stages[0];
    let family = &run.families[0];
    let mut clouds = Vec::new();
    let mut layers = Vec::new();
    for (j, comp) in family.components.iter().enumerate() {
        let file = format!("component_{j}.csv");
        clouds.push((file.clone(), comp.points()));
        layers.push(LayerRef { name: format!("component {j}"), file, index: j });
    }
    let title = format!("maximal petals, {}, B = {}", s.fp.classification, run.ball_radius);
    Ok(CommandOutput {
        report: json!({
            "fixed_point": fixed_point_json(&s.fp),
            "petals": serde_json::to_value(stage).expect("stage serializes"),
            "component_cells": family.components.iter().map(|c| c.count()).collect::<Vec<_>>(),
            "scene": scene(&run, title, layers),
        }),
        clouds,
    })
}

fn lamination(cfg: &RunConfig, r: &Resolved, s: &Setup, run: &HedgehogRun) -> Result<Value, LabError> {
    let phi = run.families.last().and_then(|f| f.center_jet.clone());
    let lc = LaminationConfig::new(cfg.lamination_count, r.mu_bar, r.half_angle.tan());
    let discs = strong_stable_lamination_sample(&s.germ, phi.as_ref(), &run.limit_candidate, &lc)?;
    let sigma = strong_stable_disc(&s.germ, cfg.jet_degree)?;
    let ts: Vec<C64> =
        (0..lc.disc_points).map(|k| C64::from_polar(lc.disc_radius, std::f64::consts::TAU * k as f64 / lc.disc_points as f64)).collect();
    let gap = origin_leaf_gap(&s.germ, &sigma, &ts, lc.horizon)?;
    let per_disc: Vec<Value> = discs
        .iter()
        .map(|d| {
            json!({
                "base": [c(d.base[0]), c(d.base[1])],
                "max_slope": f(d.max_slope),
                "in_cone": d.in_cone,
                "rate_ok": d.rate_ok,
                "diverged": d.diverged,
            })
        })
        .collect();
    Ok(json!({
        "count": discs.len(),
        "passing": discs.iter().filter(|d| d.passes()).count(),
        "discs": per_disc,
        "origin_gap": gap,
        "cone_slope": lc.cone_slope,
        "mu_bar": lc.mu_bar,
    }))
}

fn hedgehog(cfg: &RunConfig, r: &Resolved) -> Result<CommandOutput, LabError> {
    let s = setup(cfg, r)?;
    let two = s.germ.dimension() == Dimension::Two;
    let mut cones = Value::Null;
    if two {
        checked_center_jet(cfg, r, &s.germ, cfg.jet_degree)?;
        let (cert, pass) = certify_all(cfg, r, &s)?;
        if !pass {
            return Err(hedgehog_core::Error::Precondition("the cone certificate fails on the outer ball".into()).into());
        }
        cones = cert;
    }
    let cfe = if s.fp.classification.is_irrational_candidate() { Some(expansion_for(r, &cfg.indices)?) } else { None };
    let run = hedgehog_approximate(&s.germ, &s.fp, cfe.as_ref(), &cfg.indices, &hedgehog_config(cfg, r))?;
    let mut clouds = Vec::new();
    let mut layers = Vec::new();
    for (k, (set, st)) in run.petal_sequence.iter().zip(&run.stages).enumerate() {
        let file = format!("stage_{}.csv", st.index);
        clouds.push((file.clone(), set.points()));
        layers.push(LayerRef { name: format!("stage {} ({}/{})", st.index, st.p, st.q), file, index: k });
    }
    clouds.push(("limit.csv".into(), run.limit_candidate.points()));
    let lam = if two { lamination(cfg, r, &s, &run)? } else { Value::Null };
    let title = format!("hedgehog approximation, angle {}, B = {}", r.angle, run.ball_radius);
    Ok(CommandOutput {
        report: json!({
            "fixed_point": fixed_point_json(&s.fp),
            "convergent_indices": run.convergent_indices,
            "stages": serde_json::to_value(&run.stages).expect("stages serialize"),
            "hausdorff_gaps": run.hausdorff_gaps,
            "limit": serde_json::to_value(&run.report).expect("report serializes"),
            "limit_cells": run.limit_candidate.count(),
            "cones": cones,
            "lamination": lam,
            "scene": scene(&run, title, layers),
        }),
        clouds,
    })
}
