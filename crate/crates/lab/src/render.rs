//! Deterministic SVG rendering of point-cloud artifacts.
//!
//! The scene is described by the `scene` entry of `report.json`: the grid
//! (`extent`, `resolution`), the ball radius and a list of layers, each a CSV
//! file of cell centers. Cells are merged into horizontal runs so that large
//! grids stay compact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::output::{read_csv, read_json, REPORT_FILE};
use crate::LabError;

pub const RENDER_FILE: &str = "render.svg";

/// Canvas side in SVG user units.
const CANVAS: f64 = 800.0;

const PALETTE: [&str; 12] =
    ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f", "#393b79", "#ad494a"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRef {
    pub name: String,
    pub file: String,
    /// Palette index.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    /// Half-width of the grid box.
    pub extent: f64,
    pub resolution: usize,
    pub ball_radius: f64,
    pub title: String,
    pub layers: Vec<LayerRef>,
}

pub struct Layer {
    pub name: String,
    pub index: usize,
    pub points: Vec<[f64; 2]>,
}

pub fn color(index: usize) -> &'static str {
    PALETTE[index % PALETTE.len()]
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the scene. The output depends only on the inputs.
pub fn render_svg(spec: &SceneSpec, layers: &[Layer]) -> String {
    let view = 1.1 * spec.extent.max(spec.ball_radius);
    let scale = CANVAS / (2.0 * view);
    let px = |x: f64| (x + view) * scale;
    let py = |y: f64| (view - y) * scale;
    let h = 2.0 * spec.extent / spec.resolution as f64;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#);
    let _ = writeln!(s, "<title>{}</title>", esc(&spec.title));
    let _ = writeln!(s, r##"<rect width="{CANVAS}" height="{CANVAS}" fill="#ffffff"/>"##);
    for layer in layers {
        // rows of cells, merged into runs
        let mut rows: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
        for p in &layer.points {
            let i = ((p[0] + spec.extent) / h).floor() as i64;
            let j = ((p[1] + spec.extent) / h).floor() as i64;
            rows.entry(j).or_default().push(i);
        }
        let mut d = String::new();
        for (j, cols) in rows.iter_mut() {
            cols.sort_unstable();
            cols.dedup();
            let y_top = py(-spec.extent + (*j + 1) as f64 * h);
            let hh = h * scale;
            let mut k = 0;
            while k < cols.len() {
                let start = cols[k];
                while k + 1 < cols.len() && cols[k + 1] == cols[k] + 1 {
                    k += 1;
                }
                let x0 = px(-spec.extent + start as f64 * h);
                let w = (cols[k] - start + 1) as f64 * h * scale;
                let _ = write!(d, "M{x0:.3} {y_top:.3}h{w:.3}v{hh:.3}h{:.3}z", -w);
                k += 1;
            }
        }
        let _ = writeln!(s, r#"<path id="{}" fill="{}" fill-opacity="0.6" stroke="none" d="{d}"/>"#, esc(&layer.name), color(layer.index));
    }
    let _ = writeln!(
        s,
        r##"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="#000000" stroke-width="1.5"/>"##,
        px(0.0),
        py(0.0),
        spec.ball_radius * scale
    );
    let (ox, oy) = (px(0.0), py(0.0));
    let _ = writeln!(
        s,
        r##"<path id="origin" d="M{:.3} {oy:.3}H{:.3}M{ox:.3} {:.3}V{:.3}" stroke="#000000" stroke-width="1.5"/>"##,
        ox - 6.0,
        ox + 6.0,
        oy - 6.0,
        oy + 6.0
    );
    s.push_str("</svg>\n");
    s
}

/// Reads `report.json` and the layer files from `dir` and writes
/// `render.svg` next to them.
pub fn render_dir(dir: &Path) -> Result<PathBuf, LabError> {
    let report = read_json(&dir.join(REPORT_FILE))?;
    let scene = report.get("scene").cloned().ok_or_else(|| LabError::MissingArtifact(format!("{}: no scene", REPORT_FILE)))?;
    let spec: SceneSpec =
        serde_json::from_value(scene).map_err(|e| LabError::MissingArtifact(format!("{}: bad scene: {e}", REPORT_FILE)))?;
    let mut layers = Vec::with_capacity(spec.layers.len());
    for l in &spec.layers {
        layers.push(Layer { name: l.name.clone(), index: l.index, points: read_csv(&dir.join(&l.file))? });
    }
    let path = dir.join(RENDER_FILE);
    std::fs::write(&path, render_svg(&spec, &layers))?;
    Ok(path)
}
