use std::path::Path;
use std::process::{Command, Output};

fn wavekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavekit")).args(args).output().unwrap()
}

fn shipped(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn every_shipped_config_validates() {
    for name in [
        "fig2a-desk",
        "fig2b-desk",
        "fig2c-desk",
        "fig2a-full",
        "fig2b-full",
        "fig2c-full",
    ] {
        let out = wavekit(&["validate", "--config", &shipped(&format!("{name}.toml"))]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn bad_config_exits_with_one_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "sweep = \"array_size\"\nsweep_values = [8]\ndistance_m = 1.0\nn_y = 1\nschemes = [\"WD_DC\"]\nseeds = []\noutput_path = \"x\"\n",
    )
    .unwrap();
    let out = wavekit(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seeds"));

    let missing = wavekit(&["validate", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn small_run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(
        &cfg,
        "sweep = \"distance\"\nsweep_values = [1.0, 4.0]\nn_x = 6\nn_y = 2\n\
         schemes = [\"SVD_BOUND\", \"SPATIAL_DIVISION\", \"WD_DC\"]\nseeds = [0, 1]\noutput_path = \"unused\"\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = wavekit(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 2 * 2 * 3);
    assert!(results.starts_with("scheme,n_x,n_y,distance_m,seed,beta,num_streams,capacity_bits,duration_s"));
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 3);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert!(report["version"].as_str().is_some_and(|v| !v.is_empty()));
}
