use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ifslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifslab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn read_pgm(path: &Path) -> (usize, usize, Vec<u8>) {
    let bytes = fs::read(path).unwrap();
    let text = String::from_utf8_lossy(&bytes[..20]).to_string();
    let mut it = text.split_ascii_whitespace();
    assert_eq!(it.next(), Some("P5"));
    let w: usize = it.next().unwrap().parse().unwrap();
    let h: usize = it.next().unwrap().parse().unwrap();
    let header = format!("P5\n{w} {h}\n255\n").len();
    (w, h, bytes[header..].to_vec())
}

#[test]
fn examples_list_names_the_gallery() {
    let out = ifslab(&["examples", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    let ids = String::from_utf8(out.stdout).unwrap();
    for id in ["cantor", "sierpinski", "semiattractor", "circle-rotation"] {
        assert!(ids.lines().any(|l| l == id), "{id} missing");
    }
}

#[test]
fn unknown_example_is_a_validation_error() {
    let out = ifslab(&["render", "--example", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(report(&out)["reason"].as_str().unwrap().contains("nope"));
}

#[test]
fn sierpinski_chaos_game_passes() {
    let out = ifslab(&["chaos", "--example", "sierpinski", "-n", "30000"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["passed"], Value::Bool(true));
    assert!(r["claims"]["hausdorff"]["value"].as_f64().unwrap() <= 0.02);
}

#[test]
fn semiattractor_chaos_game_fails_against_its_fixed_point() {
    let dir = TempDir::new().unwrap();
    let reference = dir.path().join("point0.csv");
    fs::write(&reference, "x\n0\n").unwrap();
    let out = ifslab(&[
        "chaos",
        "--example",
        "semiattractor",
        "--x0",
        "1",
        "--ref",
        reference.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["passed"], Value::Bool(false));
    assert_eq!(r["failure"], "numeric");
    assert!(!r["reason"].as_str().unwrap().is_empty());
    assert!(r["inputs"]["ref"]["sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn weights_not_summing_to_one_exit_2() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("bad.json");
    fs::write(
        &spec,
        r#"{"version": 1, "space": {"dim": 1, "bounds": [[0, 1]]},
            "maps": [{"type": "affine", "matrix": [[0.5]]}, {"type": "affine", "matrix": [[0.5]], "offset": [0.5]}],
            "weights": [0.6, 0.5]}"#,
    )
    .unwrap();
    let out = ifslab(&["measure", "--ifs", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["failure"], "validation");
    assert!(r["reason"].as_str().unwrap().contains("/weights"));
}

#[test]
fn malformed_json_reports_its_location() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("broken.json");
    fs::write(&spec, "{\"version\": 1,\n  \"maps\": [}\n").unwrap();
    let out = ifslab(&["render", "--ifs", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(report(&out)["reason"].as_str().unwrap().contains("line 2"));
}

#[test]
fn runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let out = ifslab(&[
            "chaos",
            "--example",
            "sierpinski",
            "--driver",
            "bernoulli",
            "--seed",
            "7",
            "-n",
            "20000",
            "--width",
            "128",
            "--height",
            "128",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["report.json", "orbit.ppm", "orbit.csv", "omega.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn stdout_matches_report_file() {
    let dir = TempDir::new().unwrap();
    let out = ifslab(&["render", "--example", "cantor", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(out.stdout, fs::read(dir.path().join("report.json")).unwrap());
    let r = report(&out);
    let artifacts: Vec<&str> = r["artifacts"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(artifacts, ["attractor.csv", "attractor.pgm"]);
}

#[test]
fn attractor_csv_round_trips_as_reference() {
    let dir = TempDir::new().unwrap();
    let out = ifslab(&["render", "--example", "sierpinski", "--tol", "0.005", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = dir.path().join("attractor.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x,y\n"));

    let original = ifslab_core::hyperspace::PointCloud::new(
        2,
        ifslab_core::geometry::Metric::Euclidean,
        ifslab::formats::read_points_csv(&csv, 2).unwrap(),
        0.0,
    )
    .unwrap();
    let copy = dir.path().join("copy.csv");
    fs::write(&copy, ifslab::formats::points_csv(original.points(), 2)).unwrap();
    let reread = ifslab_core::hyperspace::PointCloud::new(
        2,
        ifslab_core::geometry::Metric::Euclidean,
        ifslab::formats::read_points_csv(&copy, 2).unwrap(),
        0.0,
    )
    .unwrap();
    assert_eq!(ifslab_core::hyperspace::hausdorff(&original, &reread).unwrap(), 0.0);
    assert_eq!(text, fs::read_to_string(&copy).unwrap());
}

#[test]
fn sierpinski_depth_8_raster_is_sparse() {
    let dir = TempDir::new().unwrap();
    let out = ifslab(&["iterate", "--example", "sierpinski", "--depth", "8", "--prune-eps", "0.002", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let (w, h, pixels) = read_pgm(&dir.path().join("maximal.pgm"));
    assert_eq!((w, h), (512, 512));
    let black = pixels.iter().filter(|&&p| p == 0).count() as f64 / (w * h) as f64;
    assert!((0.02..=0.20).contains(&black), "black fraction {black}");
}

#[test]
fn invariant_measure_and_plan() {
    let dir = TempDir::new().unwrap();
    let reference = dir.path().join("half.csv");
    fs::write(&reference, "weight,x\n1,0.5\n").unwrap();
    let out = ifslab(&[
        "measure",
        "--example",
        "cantor",
        "--ref",
        reference.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    // the uniform Cantor measure is symmetric about 1/2
    assert!((r["metrics"]["mean"][0].as_f64().unwrap() - 0.5).abs() < 1e-9);
    let plan = fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    let mass: f64 = plan.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-9);
}

#[test]
fn periodic_sequence_is_not_disjunctive() {
    let out = ifslab(&["codes", "sequence", "--symbols", "2", "--driver", "periodic:1,2", "--check", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["metrics"]["disjunctive"], Value::Bool(false));
    let out = ifslab(&["codes", "sequence", "--symbols", "2", "--check", "4"]);
    assert_eq!(report(&out)["metrics"]["disjunctive"], Value::Bool(true));
}

#[test]
fn bad_driver_is_a_validation_error() {
    let out = ifslab(&["chaos", "--example", "cantor", "--driver", "periodic:1,3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ifslab(&["chaos", "--example", "cantor", "--driver", "sometimes"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn timings_are_opt_in() {
    let out = ifslab(&["codes", "minorant", "pow:0.5"]);
    assert!(report(&out).get("timings").is_none());
    let out = ifslab(&["codes", "minorant", "pow:0.5", "--timings"]);
    assert!(report(&out)["timings"]["total"].is_number());
}
