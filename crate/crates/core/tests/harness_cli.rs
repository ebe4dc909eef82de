use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_rn-dirac");

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rn-dirac-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Runs the binary with its output root at `root`; returns the exit code.
fn run(root: &Path, args: &[&str]) -> i32 {
    let out = Command::new(BIN)
        .args(args)
        .env("RNDIRAC_OUT", root)
        .output()
        .unwrap();
    out.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn minimal_config_writes_one_table() {
    let root = scratch("minimal");
    std::fs::write(
        root.join("run.conf"),
        "geometry.mass = 1\ngeometry.charge = 0\nexperiment = geometry-table\n",
    )
    .unwrap();
    let code = run(
        &root,
        &[
            "run",
            "-c",
            root.join("run.conf").to_str().unwrap(),
            "--output.dir=out",
        ],
    );
    assert_eq!(code, 0);
    let csvs: Vec<_> = std::fs::read_dir(root.join("out/geometry-table"))
        .unwrap()
        .collect();
    assert_eq!(csvs.len(), 1);
    let m = json(&root.join("out/manifest.json"));
    assert_eq!(m["status"], "pass");
    assert_eq!(m["experiments"][0]["name"], "geometry-table");
}

#[test]
fn overcharged_geometry_is_rejected_before_writing() {
    let root = scratch("overcharged");
    let code = run(
        &root,
        &["geometry-table", "--geometry.charge=2", "--output.dir=out"],
    );
    assert_eq!(code, 2);
    assert!(!root.join("out").exists());
    assert_eq!(
        run(
            &root,
            &["geometry-table", "--no.such.key=1", "--output.dir=out"]
        ),
        2
    );
    assert_eq!(run(&root, &["reconstruct", "--output.dir=out"]), 2);
    assert!(!root.join("out").exists());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let root = scratch("determinism");
    for dir in ["a", "b"] {
        let code = run(
            &root,
            &[
                "smatrix-sweep",
                "--geometry.charge=0.5",
                &format!("--output.dir={dir}"),
            ],
        );
        assert_eq!(code, 0);
    }
    let read = |d: &str| std::fs::read(root.join(d).join("smatrix-sweep/smatrix.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    let checks =
        |d: &str| json(&root.join(d).join("manifest.json"))["experiments"][0]["files"].clone();
    assert_eq!(checks("a"), checks("b"));
}

#[test]
fn reconstructs_synthetic_radial_samples() {
    let root = scratch("radial");
    let (m, q2) = (1.0f64, 0.25f64);
    let rp = m + (m * m - q2).sqrt();
    let mut text = String::from("r,a_sq\n");
    for k in 0..20 {
        let r = rp * (1.1 + 0.5 * k as f64);
        text += &format!("{r:e},{:e}\n", (1.0 - 2.0 * m / r + q2 / (r * r)) / (r * r));
    }
    std::fs::write(root.join("samples.csv"), text).unwrap();
    let input = format!("--reconstruct.input={}", root.join("samples.csv").display());
    assert_eq!(run(&root, &["reconstruct", &input, "--output.dir=out"]), 0);
    let rep = json(&root.join("out/reconstruct/report.json"));
    assert!((rep["mass"].as_f64().unwrap() - m).abs() <= 1e-2);
    assert!((rep["charge_sq"].as_f64().unwrap() - q2).abs() <= 2e-2);
}

#[test]
fn end_to_end_phases_feed_reconstruct() {
    let root = scratch("e2e");
    assert_eq!(
        run(
            &root,
            &["end-to-end", "--geometry.charge=0.5", "--output.dir=out"]
        ),
        0
    );
    let phases = root.join("out/end-to-end/phases.csv");
    let input = format!("--reconstruct.input={}", phases.display());
    assert_eq!(run(&root, &["reconstruct", &input, "--output.dir=back"]), 0);
    let rep = json(&root.join("back/reconstruct/report.json"));
    assert!((rep["mass"].as_f64().unwrap() - 1.0).abs() <= 1e-2, "{rep}");
    assert!(
        (rep["charge_sq"].as_f64().unwrap() - 0.25).abs() <= 2e-2,
        "{rep}"
    );
}

#[test]
fn free_override_comparison_is_exact() {
    let root = scratch("free");
    let code = run(
        &root,
        &[
            "compare-fout",
            "--potential.free_override=true",
            "--output.dir=out",
        ],
    );
    assert_eq!(code, 0);
    let m = json(&root.join("out/manifest.json"));
    let checks = m["experiments"][0]["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert!(
        checks.iter().all(|c| c["value"].as_f64().unwrap() <= 1e-12),
        "{checks:?}"
    );
}

#[test]
fn failed_check_exits_one() {
    let root = scratch("fail");
    let code = run(
        &root,
        &[
            "geometry-table",
            "--tolerance.roundtrip=1e-300",
            "--output.dir=out",
        ],
    );
    assert_eq!(code, 1);
    assert_eq!(json(&root.join("out/manifest.json"))["status"], "fail");
}
