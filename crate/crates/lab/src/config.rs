//! Run configuration. Real parameters are kept as strings so that angles
//! and radii survive parsing untouched; they are converted when a run
//! starts.

use std::path::{Path, PathBuf};

use hedgehog_core::arithmetic::RotationAngle;
use hedgehog_core::C64;
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Classify,
    Brjuno,
    Cones,
    Manifolds,
    Petals,
    Hedgehog,
    Render,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Brjuno => "brjuno",
            Command::Cones => "cones",
            Command::Manifolds => "manifolds",
            Command::Petals => "petals",
            Command::Hedgehog => "hedgehog",
            Command::Render => "render",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GermKind {
    /// `exp(2 pi i alpha) z + sum_k a_k z^k` on C.
    Polynomial,
    /// The Hénon map with eigenvalues `exp(2 pi i alpha)` and `mu` at its
    /// fixed point.
    Henon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermSpec {
    pub kind: GermKind,
    /// Dissipative eigenvalue (Hénon).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
    /// Coefficients of `z^2, z^3, ...` (polynomial).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSettings {
    #[serde(default = "default_half_angle")]
    pub half_angle_deg: String,
    #[serde(default = "default_density")]
    pub density: usize,
    #[serde(default = "default_mu_bar")]
    pub mu_bar: String,
    #[serde(default = "default_lambda_lower")]
    pub lambda_lower: String,
}

impl Default for ConeSettings {
    fn default() -> Self {
        ConeSettings {
            half_angle_deg: default_half_angle(),
            density: default_density(),
            mu_bar: default_mu_bar(),
            lambda_lower: default_lambda_lower(),
        }
    }
}

fn default_half_angle() -> String {
    "10".into()
}
fn default_density() -> usize {
    16
}
fn default_mu_bar() -> String {
    "0.3".into()
}
fn default_lambda_lower() -> String {
    "0.8".into()
}
fn default_resolution() -> usize {
    1024
}
fn default_cap() -> usize {
    100_000
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_digits() -> u32 {
    200
}
fn default_terms() -> usize {
    40
}
fn default_bound() -> String {
    "1000".into()
}
fn default_jet_degree() -> usize {
    12
}
fn default_lamination() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// `p/q`, `golden`, `liouville:<depth>` or a finite decimal.
    pub angle: String,
    #[serde(default = "default_digits")]
    pub digits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub germ: Option<GermSpec>,
    /// Ball radius `B` of the maximal petals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<String>,
    /// Outer radius `B'` of the cone certificate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_radius: Option<String>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_cap")]
    pub forward_cap: usize,
    #[serde(default = "default_cap")]
    pub backward_cap: usize,
    #[serde(default)]
    pub indices: Vec<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_terms")]
    pub brjuno_terms: usize,
    #[serde(default = "default_bound")]
    pub divergence_bound: String,
    #[serde(default = "default_jet_degree")]
    pub jet_degree: usize,
    #[serde(default = "default_lamination")]
    pub lamination_count: usize,
    #[serde(default)]
    pub cones: ConeSettings,
}

/// Parameters after conversion from text.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub angle: RotationAngle,
    pub ball_radius: Option<f64>,
    pub outer_radius: Option<f64>,
    pub mu: Option<C64>,
    pub coefficients: Vec<C64>,
    pub half_angle: f64,
    pub mu_bar: f64,
    pub lambda_lower: f64,
    pub divergence_bound: f64,
}

fn config_err(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

pub fn parse_real(text: &str, what: &str) -> Result<f64, LabError> {
    let v: f64 = text.trim().parse().map_err(|_| config_err(format!("{what}: not a number: {text:?}")))?;
    if !v.is_finite() {
        return Err(config_err(format!("{what}: not finite")));
    }
    Ok(v)
}

/// Parses `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(text: &str, what: &str) -> Result<C64, LabError> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || config_err(format!("{what}: not a complex number: {text:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(C64::new(parse_real(&t, what)?, 0.0));
    };
    // split at the last sign that is not an exponent sign or the leading one
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        s => s,
    };
    let re = parse_real(re, what).map_err(|_| bad())?;
    let im = parse_real(im, what).map_err(|_| bad())?;
    Ok(C64::new(re, im))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn needs_germ(&self) -> bool {
        !matches!(self.command, Command::Brjuno | Command::Render)
    }

    fn needs_ball(&self) -> bool {
        matches!(self.command, Command::Petals | Command::Hedgehog)
    }

    /// Checks the configuration and converts its numbers.
    pub fn resolve(&self) -> Result<Resolved, LabError> {
        let angle = RotationAngle::parse(&self.angle, self.digits).map_err(|e| config_err(format!("angle: {e}")))?;
        let ball_radius = self.ball_radius.as_deref().map(|s| parse_real(s, "ball_radius")).transpose()?;
        let outer_radius = self.outer_radius.as_deref().map(|s| parse_real(s, "outer_radius")).transpose()?;
        if let Some(b) = ball_radius {
            if !(b > 0.0) {
                return Err(config_err("ball_radius must be positive"));
            }
        }
        if let (Some(b), Some(o)) = (ball_radius, outer_radius) {
            if !(b < o) {
                return Err(config_err(format!("ball_radius {b} must be below outer_radius {o}")));
            }
        }
        if self.needs_ball() && ball_radius.is_none() {
            return Err(config_err(format!("{} needs ball_radius", self.command.name())));
        }
        if self.command == Command::Cones && outer_radius.is_none() {
            return Err(config_err("cones needs outer_radius"));
        }
        if !(self.resolution.is_power_of_two() && (256..=8192).contains(&self.resolution)) {
            return Err(config_err(format!("resolution {} must be a power of two in 256..=8192", self.resolution)));
        }
        if self.forward_cap == 0 || self.backward_cap == 0 {
            return Err(config_err("orbit caps must be positive"));
        }
        let mut mu = None;
        let mut coefficients = Vec::new();
        match (&self.germ, self.needs_germ()) {
            (None, true) => return Err(config_err(format!("{} needs a germ", self.command.name()))),
            (Some(g), _) => match g.kind {
                GermKind::Henon => {
                    let m = g.mu.as_deref().ok_or_else(|| config_err("henon germ needs mu"))?;
                    let m = parse_complex(m, "mu")?;
                    if !(m.norm() > 0.0 && m.norm() < 1.0) {
                        return Err(config_err("mu must satisfy 0 < |mu| < 1"));
                    }
                    mu = Some(m);
                }
                GermKind::Polynomial => {
                    coefficients = g.coefficients.iter().map(|c| parse_complex(c, "coefficient")).collect::<Result<_, _>>()?;
                    if coefficients.iter().all(|c| c.norm() == 0.0) {
                        return Err(config_err("polynomial germ needs a nonzero nonlinear coefficient"));
                    }
                }
            },
            (None, false) => {}
        }
        let half_angle = parse_real(&self.cones.half_angle_deg, "half_angle_deg")?;
        if !(half_angle > 0.0 && half_angle < 90.0) {
            return Err(config_err("half_angle_deg must lie in (0, 90)"));
        }
        let mu_bar = parse_real(&self.cones.mu_bar, "mu_bar")?;
        let lambda_lower = parse_real(&self.cones.lambda_lower, "lambda_lower")?;
        if !(0.0 < mu_bar && mu_bar < lambda_lower && lambda_lower < 1.0) {
            return Err(config_err("need 0 < mu_bar < lambda_lower < 1"));
        }
        let divergence_bound = parse_real(&self.divergence_bound, "divergence_bound")?;
        Ok(Resolved {
            angle,
            ball_radius,
            outer_radius,
            mu,
            coefficients,
            half_angle: half_angle.to_radians(),
            mu_bar,
            lambda_lower,
            divergence_bound,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        let c = |s| parse_complex(s, "t").unwrap();
        assert_eq!(c("0.1"), C64::new(0.1, 0.0));
        assert_eq!(c("2i"), C64::new(0.0, 2.0));
        assert_eq!(c("1-i"), C64::new(1.0, -1.0));
        assert_eq!(c("-1.5e-3+2e-2i"), C64::new(-1.5e-3, 2e-2));
        assert!(parse_complex("x", "t").is_err());
    }
}
