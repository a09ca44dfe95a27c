//! The command-line binary driven end to end on small problems.

use cfie::operators::read_matrix;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cfie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfie")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn mesh_info_writes_csv_meshes_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[geometry]\nkind = \"cube\"\n[mesh]\nh = [0.75, 0.4]\n");
    let out = dir.path().join("out");
    let meshes = dir.path().join("m.off");
    let o = cfie(&["mesh-info", "--config", &cfg, "--out", out.to_str().unwrap(), "--mesh-out", meshes.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("mesh_info.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("cube,") && rows[1].contains(",2,"), "{}", rows[1]);
    assert!(dir.path().join("m_0.off").exists() && dir.path().join("m_1.off").exists());
    let manifest: toml::Table = fs::read_to_string(out.join("manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["command"].as_str(), Some("mesh-info"));
    assert_eq!(manifest["status"].as_str(), Some("ok"));
}

#[test]
fn mie_validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[wave]\nkappa = [0.5, 4.4934]\n");
    let o = cfie(&["mie-validate", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--jobs", "2"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("mie_validate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn dump_matrices_writes_consistent_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[mesh]\nh = [1.0]\n[wave]\nkappa = [2.0]\n");
    let mats = dir.path().join("mats");
    let o = cfie(&[
        "dump-matrices",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "--dump-matrices",
        mats.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut n = None;
    for name in ["G", "G_tilde", "M", "Z", "S", "C", "K", "EFIE"] {
        let m = read_matrix(fs::File::open(mats.join(format!("{name}.bin"))).unwrap()).unwrap();
        assert_eq!(m.nrows(), m.ncols());
        assert_eq!(*n.get_or_insert(m.nrows()), m.nrows(), "{name}");
    }
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[mesh]\nhh = [0.3]\n");
    let o = cfie(&["mesh-info", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), "[mesh]\nh = [-0.3]\n");
    let o = cfie(&["mesh-info", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
}
