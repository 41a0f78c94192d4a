use std::path::{Path, PathBuf};

use harmcanon::cli::run;
use serde_json::Value;
use tempfile::TempDir;

const SPHERE_OFF: &str = "OFF\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn harmcanon(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("harmcanon").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn generate(dir: &TempDir, args: &[&str], name: &str) -> PathBuf {
    let path = dir.path().join(name);
    let mut full = vec!["--quiet", "generate"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", s(&path)]);
    assert_eq!(harmcanon(&full).code, 0);
    path
}

fn sphere(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("sphere.off");
    std::fs::write(&path, SPHERE_OFF).unwrap();
    path
}

#[test]
fn generate_torus_off() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, &["--shape", "flat-torus", "--resolution", "8"], "t.off");
    let text = std::fs::read_to_string(path).unwrap();
    let counts: Vec<usize> = text.lines().nth(1).unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert_eq!(counts[..2], [64, 128]);
}

#[test]
fn generate_genus2_json() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, &["--shape", "genus2", "--refinement", "1"], "g2.mesh.json");
    let mesh = harmcanon::mesh::io::load_mesh_path(&path).unwrap();
    assert_eq!(mesh.topology().genus, 2);
}

#[test]
fn generate_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("k.off");
    let r = harmcanon(&["generate", "--shape", "klein-bottle", "--resolution", "4", "--out", s(&out)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("unknown shape"));
    assert_eq!(harmcanon(&["generate", "--shape", "genus2", "--refinement", "1", "--out", s(&out)]).code, 2);
    assert_eq!(harmcanon(&["generate", "--shape", "flat-torus", "--out", s(&out)]).code, 2);
    assert_eq!(harmcanon(&["frobnicate"]).code, 2);
    let unwritable = dir.path().join("missing").join("t.json");
    assert_eq!(harmcanon(&["generate", "--shape", "flat-torus", "--resolution", "4", "--out", s(&unwritable)]).code, 3);
}

#[test]
fn canonical_torus_report() {
    let dir = TempDir::new().unwrap();
    let mesh = generate(&dir, &["--shape", "flat-torus", "--resolution", "16"], "t.off");
    let report = dir.path().join("r.json");
    let field = dir.path().join("rho.ply");
    let r = harmcanon(&["--quiet", "canonical", "--mesh", s(&mesh), "--out", s(&report), "--field-out", s(&field)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&report);
    assert!(v["result"]["e_min"].as_f64().unwrap().abs() <= 1e-10);
    assert_eq!(v["mesh"]["genus"], 1);
    assert_eq!(v["discretization"]["star_scheme"], "cotan-lumped-barycentric");
    assert_eq!(v["discretization"]["wedge_scheme"], "whitney");
    assert_eq!(v["result"]["c_matrix"].as_array().unwrap().len(), 2);
    assert!(v["timings_ms"].is_object());
    let ply = std::fs::read(&field).unwrap();
    let header = String::from_utf8_lossy(&ply[..200]);
    assert!(header.starts_with("ply\nformat binary_little_endian 1.0\n"));
    assert!(header.contains("property double rho\n") && header.contains("property double rho_v\n"));
}

#[test]
fn canonical_genus2_and_sphere() {
    let dir = TempDir::new().unwrap();
    let mesh = generate(&dir, &["--shape", "genus2", "--refinement", "1"], "g.json");
    let report = dir.path().join("r.json");
    assert_eq!(harmcanon(&["--quiet", "canonical", "--mesh", s(&mesh), "--out", s(&report)]).code, 0);
    let v = json(&report);
    assert!(v["result"]["e_min"].as_f64().unwrap() > 0.0);
    assert_eq!(v["basis"]["count"], 4);

    let r = harmcanon(&["--quiet", "canonical", "--mesh", s(&sphere(&dir)), "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(r.code, 5);
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn unreadable_mesh_is_exit_3() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(harmcanon(&["--quiet", "canonical", "--mesh", "/nonexistent.off", "--out", s(&out)]).code, 3);
    let bad = dir.path().join("bad.off");
    std::fs::write(&bad, "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
    assert_eq!(harmcanon(&["--quiet", "canonical", "--mesh", s(&bad), "--out", s(&out)]).code, 3);
}

#[test]
fn energy_of_canonical_dump_is_minimal() {
    let dir = TempDir::new().unwrap();
    let mesh = generate(&dir, &["--shape", "genus2", "--refinement", "1"], "g.json");
    let rho = dir.path().join("rho.json");
    let report = dir.path().join("r.json");
    harmcanon(&["--quiet", "canonical", "--mesh", s(&mesh), "--out", s(&report), "--field-out", s(&rho)]);
    let r = harmcanon(&["--quiet", "energy", "--mesh", s(&mesh), "--rho", s(&rho)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(v["gap"].as_f64().unwrap().abs() <= 1e-10);
}

#[test]
fn energy_of_unit_rho_on_torus() {
    let dir = TempDir::new().unwrap();
    let mesh = generate(&dir, &["--shape", "flat-torus", "--resolution", "6"], "t.json");
    let rho = dir.path().join("rho.json");
    let keyed: serde_json::Map<String, Value> = (0..72).map(|t| (t.to_string(), Value::from(1.0))).collect();
    std::fs::write(&rho, serde_json::to_string(&keyed).unwrap()).unwrap();
    let r = harmcanon(&["--quiet", "energy", "--mesh", s(&mesh), "--rho", s(&rho)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(v["energy"].as_f64().unwrap() <= 1e-8);

    let mut zero = vec![1.0; 72];
    zero[5] = 0.0;
    std::fs::write(&rho, serde_json::to_string(&zero).unwrap()).unwrap();
    assert_eq!(harmcanon(&["--quiet", "energy", "--mesh", s(&mesh), "--rho", s(&rho)]).code, 6);
    std::fs::write(&rho, serde_json::to_string(&vec![2.0; 72]).unwrap()).unwrap();
    assert_eq!(harmcanon(&["--quiet", "energy", "--mesh", s(&mesh), "--rho", s(&rho)]).code, 6);
    std::fs::write(&rho, "[1.0, 1.0]").unwrap();
    assert_eq!(harmcanon(&["--quiet", "energy", "--mesh", s(&mesh), "--rho", s(&rho)]).code, 6);
}

#[test]
fn validate_reports() {
    let dir = TempDir::new().unwrap();
    let torus = generate(&dir, &["--shape", "flat-torus", "--resolution", "6"], "t.off");
    let r = harmcanon(&["--quiet", "validate", "--mesh", s(&torus)]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));

    let r = harmcanon(&["--quiet", "validate", "--mesh", s(&torus), "--inject-fault", "corrupt-star1"]);
    assert_eq!(r.code, 7);
    assert!(r.stderr.contains("adjointness"));

    let g2 = generate(&dir, &["--shape", "genus2", "--refinement", "1"], "g.json");
    let r = harmcanon(&["--quiet", "--seed", "9", "validate", "--mesh", s(&g2)]);
    assert_eq!(r.code, 0);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    let rel = v["diagnostics"]["c_sq_relative_error"].as_f64().unwrap();
    let c_sq = v["diagnostics"]["c_sq"].as_f64().unwrap();
    assert_eq!(rel, (c_sq - 4.0).abs() / 4.0);

    assert_eq!(harmcanon(&["--quiet", "validate", "--mesh", s(&sphere(&dir))]).code, 5);
}

#[test]
fn basis_dump() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("b.json");
    for (args, name, count) in [
        (["--shape", "flat-torus", "--resolution", "5"], "t.json", 2),
        (["--shape", "genus2", "--refinement", "1"], "g.json", 4),
    ] {
        let mesh = generate(&dir, &args, name);
        assert_eq!(harmcanon(&["--quiet", "basis", "--mesh", s(&mesh), "--out", s(&out)]).code, 0);
        let v = json(&out);
        assert_eq!(v["count"], count);
        assert_eq!(v["forms"].as_array().unwrap().len(), count);
        assert!(v["gram_residual"].as_f64().unwrap() <= 1e-10);
        assert_eq!(v["forms"][0].as_array().unwrap().len(), v["edges"].as_array().unwrap().len());
    }
    assert_eq!(harmcanon(&["--quiet", "basis", "--mesh", s(&sphere(&dir)), "--out", s(&out)]).code, 5);
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let mesh = generate(&dir, &["--shape", "genus2", "--refinement", "2"], "g.json");
    let again = generate(&dir, &["--shape", "genus2", "--refinement", "2"], "g2.json");
    assert_eq!(std::fs::read(&mesh).unwrap(), std::fs::read(&again).unwrap());
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for path in [&a, &b] {
        assert_eq!(harmcanon(&["--quiet", "--no-timings", "canonical", "--mesh", s(&mesh), "--out", s(path)]).code, 0);
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert!(!String::from_utf8(bytes).unwrap().contains("timings_ms"));
    let v1 = harmcanon(&["--quiet", "--no-timings", "validate", "--mesh", s(&mesh)]).stdout;
    let v2 = harmcanon(&["--quiet", "--no-timings", "validate", "--mesh", s(&mesh)]).stdout;
    assert_eq!(v1, v2);
    for path in [&a, &b] {
        assert_eq!(harmcanon(&["--quiet", "basis", "--mesh", s(&mesh), "--out", s(path)]).code, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
