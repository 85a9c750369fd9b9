use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use hedgehog_lab::output::{read_json, REPORT_FILE};
use hedgehog_lab::render::{render_svg, SceneSpec, RENDER_FILE};
use hedgehog_lab::{run, Command, RunConfig, EXIT_CONFIG, EXIT_OK, EXIT_PRECONDITION};
use proptest::prelude::*;
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&configs().join(name)).unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_hedgehog"))
}

#[test]
fn brjuno_golden_is_brjuno_likely() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&load("golden_brjuno.toml", dir.path()));
    assert_eq!(out.exit_code, EXIT_OK);
    assert_eq!(out.report["brjuno"]["verdict"], "brjuno-likely");
    let written = read_json(&dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(written, out.report);
    assert_eq!(written["partial_quotients"][0], "1");
}

#[test]
fn classify_henon_desk() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&load("henon_classify.toml", dir.path()));
    assert_eq!(out.exit_code, EXIT_OK);
    assert_eq!(out.report["fixed_point"]["classification"], "semi-parabolic(1,3)");
}

#[test]
fn inverted_radii_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let mut cfg = load("henon_petals.toml", &out_dir);
    cfg.ball_radius = Some("0.2".into());
    cfg.outer_radius = Some("0.1".into());
    let out = run(&cfg);
    assert_eq!(out.exit_code, EXIT_CONFIG);
    assert!(out.files.is_empty());
    assert!(!out_dir.exists());
    assert_eq!(out.report["error"]["family"], "config");
}

#[test]
fn bad_resolutions_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for res in [100, 128, 16384] {
        let mut cfg = load("henon_petals.toml", dir.path());
        cfg.resolution = res;
        assert_eq!(run(&cfg).exit_code, EXIT_CONFIG, "resolution {res}");
    }
}

#[test]
fn precondition_failures_are_reported_in_json() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load("henon_petals.toml", dir.path());
    cfg.angle = "golden".into();
    let out = run(&cfg);
    assert_eq!(out.exit_code, EXIT_PRECONDITION);
    let written = read_json(&dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(written["error"]["family"], "precondition");
    assert_eq!(written["command"], "petals");
}

#[test]
fn binary_runs_the_petal_pipeline_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("run{k}"))).collect();
    for o in &outs {
        let status = bin()
            .arg("--config")
            .arg(configs().join("henon_petals.toml"))
            .arg("--out")
            .arg(o)
            .args(["--resolution", "256"])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(EXIT_OK));
    }
    let mut names: Vec<String> = fs::read_dir(&outs[0]).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.len(), 6 + 2, "{names:?}");
    for n in &names {
        let a = fs::read(outs[0].join(n)).unwrap();
        let b = fs::read(outs[1].join(n)).unwrap();
        if n == REPORT_FILE {
            // the output directory differs between the two runs
            let strip = |bytes: &[u8]| {
                let mut v: Value = serde_json::from_slice(bytes).unwrap();
                v["config"]["out"] = Value::Null;
                v
            };
            assert_eq!(strip(&a), strip(&b));
        } else {
            assert_eq!(a, b, "{n} differs");
        }
    }

    // six colored regions and the rotation by one third
    let report = read_json(&outs[0].join(REPORT_FILE)).unwrap();
    assert_eq!(report["petals"]["components"], 6);
    assert_eq!(report["petals"]["cycle"]["rotation"], serde_json::json!([1, 3]));
    let perm: Vec<u64> = report["petals"]["cycle"]["permutation"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    let mut seen = [false; 6];
    for (j, &k) in perm.iter().enumerate() {
        assert_ne!(j as u64, k);
        seen[k as usize] = true;
    }
    assert!(seen.iter().all(|&s| s));
    let svg = fs::read_to_string(outs[0].join(RENDER_FILE)).unwrap();
    let fills: Vec<&str> = svg.lines().filter(|l| l.contains("fill-opacity")).collect();
    assert_eq!(fills.len(), 6);
    let colors: std::collections::BTreeSet<_> =
        fills.iter().map(|l| l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap()).collect();
    assert_eq!(colors.len(), 6);

    // re-rendering the same artifacts gives the same bytes
    let before = fs::read(outs[0].join(RENDER_FILE)).unwrap();
    let status = bin()
        .arg("--config")
        .arg(configs().join("henon_petals.toml"))
        .args(["--command", "render", "--out"])
        .arg(&outs[0])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
    assert_eq!(fs::read(outs[0].join(RENDER_FILE)).unwrap(), before);
}

#[test]
fn render_without_artifacts_is_a_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load("henon_petals.toml", dir.path());
    cfg.command = Command::Render;
    assert_eq!(run(&cfg).exit_code, EXIT_PRECONDITION);
}

#[test]
fn empty_scene_has_only_the_circle_and_origin() {
    let spec = SceneSpec { extent: 0.4, resolution: 256, ball_radius: 0.4, title: "empty".into(), layers: Vec::new() };
    let svg = render_svg(&spec, &[]);
    assert_eq!(svg.matches("<circle").count(), 1);
    assert!(svg.contains(r#"id="origin""#));
    assert!(!svg.contains("fill-opacity"));
    assert_eq!(svg, render_svg(&spec, &[]));
}

#[test]
fn example_configs_parse_and_validate() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.resolve().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    let commands = prop::sample::select(vec![
        Command::Classify,
        Command::Brjuno,
        Command::Cones,
        Command::Manifolds,
        Command::Petals,
        Command::Hedgehog,
        Command::Render,
    ]);
    (
        commands,
        prop::sample::select(vec!["golden", "1/3", "liouville:4", "0.12345678901234567890123"]),
        8u32..=13,
        prop::option::of("0\\.0[1-9]{1,12}"),
        prop::collection::vec(1usize..30, 0..5),
        prop::option::of(prop::collection::vec("-?[0-9]\\.[0-9]{1,8}([+-][0-9]\\.[0-9]{1,4}i)?", 1..4)),
    )
        .prop_map(|(command, angle, log_res, radius, indices, coefficients)| {
            let mut text = format!(
                "command = \"{}\"\nangle = \"{angle}\"\nresolution = {}\nindices = {indices:?}\n",
                command.name(),
                1usize << log_res
            );
            if let Some(r) = radius {
                text.push_str(&format!("ball_radius = \"{r}\"\n"));
            }
            match coefficients {
                Some(cs) => text.push_str(&format!("[germ]\nkind = \"polynomial\"\ncoefficients = {cs:?}\n")),
                None => text.push_str("[germ]\nkind = \"henon\"\nmu = \"0.1\"\n"),
            }
            RunConfig::from_toml(&text).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn config_round_trip_is_idempotent(cfg in arb_config()) {
        let once = cfg.to_toml();
        let parsed = RunConfig::from_toml(&once).unwrap();
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(parsed.to_toml(), once);
    }
}
