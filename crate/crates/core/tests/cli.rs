use std::path::Path;
use std::process::Command;

use patchup::cli::RunManifest;
use patchup::io::{read_cloud, write_cloud, CloudFormat};
use patchup::shapes::{fibonacci_sphere, Shape};

fn patchup(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_patchup")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn upsample_plane_by_four() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("plane.xyz");
    let output = dir.path().join("out.xyz");
    write_cloud(&Shape::Plane.sample(200, 0).unwrap(), &input, CloudFormat::Xyz).unwrap();
    let out = patchup(&["upsample", "--input", s(&input), "--output", s(&output), "--ratios", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_cloud(&output).unwrap().len(), 800);
}

#[test]
fn default_ratios_give_8192_points_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sphere.ply");
    let output = dir.path().join("dense.ply");
    let manifest = dir.path().join("run.json");
    write_cloud(&fibonacci_sphere(2048).unwrap(), &input, CloudFormat::PlyBinaryLe).unwrap();
    let code = patchup::cli::run([
        "patchup", "upsample", "--input", s(&input), "--output", s(&output), "--manifest", s(&manifest),
    ]);
    assert_eq!(code, 0);
    assert_eq!(read_cloud(&output).unwrap().len(), 8192);
    let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m.config.ratios, vec![1, 4]);
    assert_eq!(m.stages.len(), 2);
    assert_eq!(m.stages[1].output_points, 8192);
    assert!(m.tool_version.starts_with("patchup "));
}

#[test]
fn noisy_runs_with_same_seed_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.xyz");
    write_cloud(&Shape::Cylinder.sample(500, 4).unwrap(), &input, CloudFormat::Xyz).unwrap();
    let mut blobs = Vec::new();
    for run in 0..2 {
        let output = dir.path().join(format!("out{}.ply", run));
        let manifest = dir.path().join(format!("m{}.json", run));
        let out = patchup(&[
            "upsample", "--input", s(&input), "--output", s(&output), "--noise", "0.01", "--seed", "7",
            "--manifest", s(&manifest), "--no-timings",
        ]);
        assert!(out.status.success());
        let m = std::fs::read_to_string(&manifest).unwrap().replace(&format!("out{}", run), "out");
        blobs.push((std::fs::read(&output).unwrap(), m));
    }
    assert_eq!(blobs[0], blobs[1]);
}

#[test]
fn malformed_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.xyz");
    std::fs::write(&input, "0 0 0\n1 oops 2\n").unwrap();
    let out = patchup(&["upsample", "--input", s(&input), "--output", s(&dir.path().join("o.xyz"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.xyz");
    write_cloud(&Shape::Sphere.sample(10, 0).unwrap(), &input, CloudFormat::Xyz).unwrap();
    let o = dir.path().join("o.xyz");
    assert_eq!(patchup(&["upsample", "--input", s(&input), "--output", s(&o)]).status.code(), Some(2));
    assert_eq!(
        patchup(&["upsample", "--input", s(&input), "--output", s(&o), "--ratios", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(patchup(&["upsample", "--bogus"]).status.code(), Some(2));
}

#[test]
fn eval_identical_clouds_report_zero_distances() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("c.ply");
    let report = dir.path().join("report.json");
    write_cloud(&Shape::Torus.sample(600, 1).unwrap(), &cloud, CloudFormat::PlyBinaryLe).unwrap();
    let out = patchup(&["eval", "--pred", s(&cloud), "--gt", s(&cloud), "--report", s(&report)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["cd_l2"], 0.0);
    assert_eq!(v["cd_l1"], 0.0);
    assert_eq!(v["emd"], 0.0);
    assert!(v.get("p2f_mean").is_none() && v.get("p2f_max").is_none());
    let text = std::fs::read_to_string(report.with_extension("txt")).unwrap();
    for key in ["uniformity.0.004=", "uniformity.0.006=", "uniformity.0.008=", "uniformity.0.01="] {
        assert!(text.contains(key), "missing {} in\n{}", key, text);
    }
    assert!(!text.contains("p2f"));
}

#[test]
fn eval_with_mesh_and_size_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("p.xyz");
    let gt = dir.path().join("g.xyz");
    let mesh = dir.path().join("m.off");
    write_cloud(&Shape::Plane.sample(100, 1).unwrap(), &pred, CloudFormat::Xyz).unwrap();
    write_cloud(&Shape::Plane.sample(150, 2).unwrap(), &gt, CloudFormat::Xyz).unwrap();
    patchup::io::write_mesh(&Shape::Plane.mesh(8).unwrap(), &mesh).unwrap();
    let out = patchup(&["eval", "--pred", s(&pred), "--gt", s(&gt), "--mesh", s(&mesh)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("p2f_mean=0\n") || text.contains("p2f_mean=0.0"), "{}", text);
    assert!(!text.contains("emd="));
}

#[test]
fn bench_plane_is_exact_and_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("b{}", run));
        let out = patchup(&[
            "bench", "--shapes", "plane,sphere", "--n", "128", "--noise", "0,0.01", "--out", s(&out_dir),
            "--no-timings",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        summaries.push(std::fs::read_to_string(out_dir.join("summary.tsv")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
    let lines: Vec<&str> = summaries[0].lines().collect();
    assert!(lines[0].starts_with("shape\tn\tratio\tnoise\tcd_l2\tcd_l1\temd\tp2f_mean\tp2f_max\tuniformity_0.004"));
    let plane: Vec<&str> = lines[1].split('\t').collect();
    assert_eq!(&plane[..4], &["plane", "128", "4", "0"]);
    assert!(plane[7].parse::<f64>().unwrap() <= 1e-6);
    assert!(dir.path().join("b0/sphere_noise0.01/pred.ply").exists());
}
