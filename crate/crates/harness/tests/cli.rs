use std::path::Path;
use std::process::{Command, Output};

fn projdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projdiff")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn presets_lists_every_model() {
    let out = projdiff(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["krein", "krein:spectral", "schrodinger:square-well", "schrodinger:sech2", "finite:random(<seed>)"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn invalid_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad_probe.toml", "model = \"finite:random(1)\"\nprobes = [0.0, \"x\"]\n", "probes[1]"),
        ("bad_ladder.toml", "epsilons = [0.1, 0.2]\n", "epsilons[1]"),
        ("bad_key.toml", "model = \"krein\"\n[parameters]\nlenght = 3.0\n", "parameters.lenght"),
        ("bad_model.toml", "model = \"nope\"\n", "model"),
    ];
    for (name, body, field) in cases {
        let path = write(dir.path(), name, body);
        let out = projdiff(&["run", &path, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(field), "{name}: {err}");
    }
    let out = projdiff(&["run", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.toml", "model = \"finite:random(3)\"\nsizes = [6, 10]\nprobes = [0.0, 0.3]\n");
    let out_dir = dir.path().join("out");
    let out = projdiff(&["run", &path, "--out", out_dir.to_str().unwrap(), "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["probes"].as_array().unwrap().len(), 4);
    let csv = std::fs::read_to_string(out_dir.join("d_spectrum_n10_p1.csv")).unwrap();
    assert!(csv.starts_with("index,value\n"));
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn study_rejects_short_axes() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.toml", "model = \"finite:random(3)\"\nsizes = [6, 8]\n");
    let out = projdiff(&["study", &path, "--axis", "n", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.toml", "model = \"finite:random(7)\"\nsizes = [8, 12, 16]\nprobes = [0.0, 0.2]\n");
    let mut reports = Vec::new();
    for (i, jobs) in ["1", "3"].iter().enumerate() {
        let out_dir = dir.path().join(format!("out{i}"));
        let out = projdiff(&["run", &path, "--out", out_dir.to_str().unwrap(), "--jobs", jobs]);
        assert!(out.status.success());
        reports.push(std::fs::read(out_dir.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        projdiff_harness::load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 3);
}
