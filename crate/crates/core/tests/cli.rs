use std::path::Path;
use std::process::{Command, Output};

fn doublon(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_doublon"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn example_config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs/braided_single_photon.toml")
        .to_string_lossy()
        .into_owned()
}

#[test]
fn evolve_from_config_writes_fingerprinted_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = example_config();
    let res = doublon(&["evolve", "--config", &cfg], tmp.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let traces = std::fs::read_to_string(tmp.path().join("evolve_traces.csv")).unwrap();
    let first = traces.lines().next().unwrap();
    assert!(first.starts_with("# doublon "), "{first}");
    assert!(first.contains("fingerprint="));
    let rows = traces.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 102);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("evolve.json")).unwrap()).unwrap();
    assert!(json["data"]["max_norm_error"].as_f64().unwrap() < 1e-9);
    assert_eq!(json["meta"]["config"]["system"]["waveguide"]["n"], 41);
}

#[test]
fn spectrum_dumps_matrix_market() {
    let tmp = tempfile::tempdir().unwrap();
    let res = doublon(&["spectrum", "--config", &example_config()], tmp.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let mtx = std::fs::read_to_string(tmp.path().join("hamiltonian.mtx")).unwrap();
    assert!(mtx.lines().any(|l| l.starts_with("%%MatrixMarket matrix coordinate real symmetric")));
}

#[test]
fn invalid_config_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    let src = std::fs::read_to_string(example_config()).unwrap().replace("points = [21, 23]", "points = [21, 230]");
    std::fs::write(&path, src).unwrap();
    let res = doublon(&["evolve", "--config", path.to_str().unwrap()], tmp.path());
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line 17: system.atoms[1].points[1]"), "{err}");
}
