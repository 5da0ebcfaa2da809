use std::path::Path;
use std::process::{Command, Output};

fn quasidim(args: &[&str], config: &str, out: &Path) -> Output {
    let cfg = out.join("config.toml");
    std::fs::create_dir_all(out).unwrap();
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_quasidim"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .unwrap()
}

const SMALL: &str = "[grid]\nn = 128\n";

#[test]
fn solve_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasidim(&["solve"], SMALL, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["mu.qdim", "map.qdim", "solve.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("solve.json")).unwrap()).unwrap();
    assert_eq!(summary["n"], 128);
    assert_eq!(summary["passed"], true);
    let f = std::fs::File::open(dir.path().join("map.qdim")).unwrap();
    let m = quasidim::QcMap::read_from(std::io::BufReader::new(f)).unwrap();
    assert_eq!(m.grid().n(), 128);
}

#[test]
fn motion_and_thermo_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasidim(&["motion"], SMALL, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("member_000.qdim"));
    assert!(dir.path().join("motion.json").exists());

    let o = quasidim(&["thermo"], SMALL, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("thermo.csv")).unwrap();
    assert!(csv.starts_with("lambda_re,lambda_im,p,n,"), "{csv}");
}

#[test]
fn seed_flag_changes_the_field() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    quasidim(&["solve", "--seed", "1"], SMALL, a.path());
    quasidim(&["solve", "--seed", "2"], SMALL, b.path());
    let read = |d: &Path| std::fs::read(d.join("mu.qdim")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasidim(&["solve"], "[grid]\nn = \"many\"\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = quasidim(&["solve"], "[solve]\nk = 1.5\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_contract_exits_nonzero() {
    // H never reaches 1e6, so the floor check fails
    let dir = tempfile::tempdir().unwrap();
    let o = quasidim(&["thermo"], "[grid]\nn = 128\n[thermo]\nh_floor = 1e6\n", dir.path());
    assert_eq!(o.status.code(), Some(1));
    let report = std::fs::read_to_string(dir.path().join("thermo.json")).unwrap();
    assert!(report.contains("\"passed\": false"));
}

#[test]
fn sweep_of_the_identity_is_one_dimensional() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasidim(
        &["sweep"],
        "[grid]\nn = 128\n[sweep]\nk = [0.0]\nseeds = 2\nladder = [5, 9]\nbox_scales = [2, 8]\ntriples = 200\n",
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rows = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let mut count = 0;
    for r in rows.deserialize::<std::collections::HashMap<String, String>>() {
        let r = r.unwrap();
        for col in ["dim_box", "dim_cover"] {
            let d: f64 = r[col].parse().unwrap();
            assert!((d - 1.0).abs() <= 0.02, "{col} = {d}");
        }
        count += 1;
    }
    assert!(count > 0);
    let svg = std::fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn decompose_at_one_third_meets_the_norm_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasidim(&["decompose"], "[grid]\nn = 256\n", dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("decompose.json")).unwrap()).unwrap();
    let norm = report["runs"][0]["report"]["norm_psi_achieved"].as_f64().unwrap();
    assert!(norm <= 0.6 + 0.01, "{norm}");
}
