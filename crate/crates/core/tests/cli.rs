use std::path::{Path, PathBuf};
use std::process::Command;

use kronspec::matcore::{format_json, format_matrix_market, sample_gaussian};
use kronspec::{FieldTag, Matrix, RandomSource};
use serde_json::Value;

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Fixture {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn mm(&self, name: &str, m: &Matrix) -> String {
        self.put(name, &format_matrix_market(m))
    }

    fn put(&self, name: &str, text: &str) -> String {
        let path = self.dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path.to_string_lossy().into_owned()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["kronspec"];
    full.extend_from_slice(args);
    let code = kronspec::cli::run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn nilpotent() -> Matrix {
    Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]])
}

#[test]
fn spectrum_reports() {
    let fx = Fixture::new();
    let d = fx.mm("d.mtx", &Matrix::diag(&[1.0, 2.0, 3.0]));
    let (code, out, _) = run(&["spectrum", &d]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["is_simple"], true);
    assert_eq!(v["is_invertible"], true);
    assert_eq!(v["eigenvalues"][2][0], 3.0);

    let nil = fx.mm("nil.mtx", &nilpotent());
    let v = json(&run(&["spectrum", &nil]).1);
    assert_eq!(v["is_simple"], false);
    assert_eq!(v["is_invertible"], false);
}

#[test]
fn json_input_is_inferred_from_extension() {
    let fx = Fixture::new();
    let path = fx.put("d.json", &format_json(&Matrix::diag(&[1.0, 2.0])).unwrap());
    let (code, out, _) = run(&["spectrum", &path]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(json(&out)["is_simple"], true);
}

#[test]
fn input_errors_exit_2() {
    let fx = Fixture::new();
    let (code, _, err) = run(&["spectrum", &fx.path("missing.mtx").to_string_lossy()]);
    assert_eq!(code, 2);
    assert!(err.contains("missing.mtx"));

    let bad = fx.put(
        "bad.mtx",
        "%%MatrixMarket matrix coordinate real general\n2 2\n",
    );
    let (code, _, err) = run(&["spectrum", &bad]);
    assert_eq!(code, 2);
    assert!(err.contains("line 1"), "{err}");

    let i2 = fx.mm("i2.mtx", &Matrix::identity(2));
    let i3 = fx.mm("i3.mtx", &Matrix::identity(3));
    assert_eq!(run(&["perturb", &i2, &i3]).0, 2);
    assert_eq!(
        run(&["perturb-tuple", &i2, &i2, "--maps", "transpose"]).0,
        2
    );
    assert_eq!(run(&["perturb", &i2, &i2, "--map-f", "square"]).0, 2);
    assert_eq!(run(&["perturb", &i2, &i2, "--eps", "-1"]).0, 2);

    let x = fx.mm("x.mtx", &Matrix::identity(6));
    assert_eq!(run(&["kron-rank", &x, "--p", "2", "--q", "2"]).0, 2);
    assert_eq!(run(&["no-such-command"]).0, 2);
}

#[test]
fn perturb_identity_pair_with_defaults() {
    let fx = Fixture::new();
    let i = fx.mm("i.mtx", &Matrix::identity(3));
    let (code, out, _) = run(&["perturb", &i, &i]);
    assert_eq!(code, 0);
    let v = json(&out);
    for d in v["deltas"].as_array().unwrap() {
        assert!(d.as_f64().unwrap() < 1e-2);
    }
    assert_eq!(v["product_report"]["is_simple"], true);
    assert_eq!(
        v["trace"]["maps"],
        serde_json::json!(["identity", "inverse"])
    );
    assert_eq!(v["perturbed"].as_array().unwrap().len(), 2);
}

#[test]
fn perturb_with_matrix_map() {
    let fx = Fixture::new();
    let s = fx.mm(
        "s.mtx",
        &sample_gaussian(3, FieldTag::Complex, &mut RandomSource::new(3)),
    );
    let i = fx.mm("i.mtx", &Matrix::identity(3));
    let map = format!("similarity:{s}");
    let (code, out, err) = run(&["perturb", &i, &i, "--map-f", &map]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(json(&out)["trace"]["maps"][0], "similarity");
}

#[test]
fn perturb_exhaustion_exits_4_with_trace() {
    let fx = Fixture::new();
    let i = fx.mm("i.mtx", &Matrix::identity(4));
    // Identity has gaps of order eps; a huge gap tolerance makes every candidate fail.
    let (code, out, _) = run(&["perturb", &i, &i, "--gap-tol", "10", "--max-attempts", "2"]);
    assert_eq!(code, 4);
    let v = json(&out);
    assert_eq!(v["error"], "attempts_exhausted");
    assert_eq!(v["trace"]["rounds"].as_array().unwrap().len(), 2);
}

#[test]
fn perturb_tuple_variants() {
    let fx = Fixture::new();
    let i = fx.mm("i.mtx", &Matrix::identity(3));
    let (code, out, _) = run(&[
        "perturb-tuple",
        &i,
        &i,
        &i,
        "--maps",
        "transpose,inverse,identity",
    ]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["perturbed"].as_array().unwrap().len(), 3);

    let (code, out, _) = run(&["perturb-tuple", &i, "--maps", "identity"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["product_report"]["is_simple"], true);
    assert!(v["deltas"][0].as_f64().unwrap() < 1e-2);
}

#[test]
fn kron_inverse_cases() {
    let fx = Fixture::new();
    let one = |v: f64| Matrix::diag(&[v]);
    let (a, b, c, d) = (
        fx.mm("a", &one(2.0)),
        fx.mm("b", &one(3.0)),
        fx.mm("c", &one(5.0)),
        fx.mm("d", &one(7.0)),
    );
    let (code, out, _) = run(&["kron-inverse", &a, &b, &c, &d, "--p", "1", "--q", "1"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["terms"].as_array().unwrap().len(), 1);
    assert_eq!(v["preprocess"], Value::Null);

    let a = fx.mm("da", &Matrix::diag(&[1.0, 2.0]));
    let b = fx.mm("db", &Matrix::identity(2));
    let d = fx.mm("dd", &Matrix::diag(&[1.0, 3.0]));
    let (code, out, _) = run(&["kron-inverse", &a, &b, &b, &d]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
    assert!(v["terms"].as_array().unwrap().len() <= 2);
    assert_eq!(v["kron_rank"]["numeric_rank"], 2);

    assert_eq!(run(&["kron-inverse", &a, &b, &b, &d, "--p", "3"]).0, 2);

    let c = fx.mm(
        "gc",
        &sample_gaussian(2, FieldTag::Complex, &mut RandomSource::new(1)),
    );
    let d = fx.mm(
        "gd",
        &sample_gaussian(2, FieldTag::Complex, &mut RandomSource::new(2)),
    );
    let (code, _, err) = run(&["kron-inverse", &b, &b, &c, &d]);
    assert_eq!(code, 5);
    assert!(err.contains("--auto-preprocess"), "{err}");

    let (code, out, _) = run(&["kron-inverse", &b, &b, &c, &d, "--auto-preprocess"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let pre = &v["preprocess"];
    assert!(pre["distance"].as_f64().unwrap() <= pre["distance_bound"].as_f64().unwrap());
    assert!(v["residual"].as_f64().unwrap() <= v["bound"].as_f64().unwrap());
}

#[test]
fn kron_rank_cases() {
    let fx = Fixture::new();
    let mut rng = RandomSource::new(5);
    let l = sample_gaussian(2, FieldTag::Real, &mut rng);
    let r = sample_gaussian(3, FieldTag::Real, &mut rng);
    let x = fx.mm("x.mtx", &kronspec::kron::kron_product(&l, &r));
    let v = json(&run(&["kron-rank", &x, "--p", "2", "--q", "3"]).1);
    assert_eq!(v["numeric_rank"], 1);
    assert_eq!(v["singular_values"].as_array().unwrap().len(), 4);
}

#[test]
fn sample_and_out_file() {
    let fx = Fixture::new();
    let out = fx.path("g.json");
    let (code, stdout, _) = run(&[
        "sample",
        "--n",
        "3",
        "--seed",
        "4",
        "--out",
        &out.to_string_lossy(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let m = kronspec::matcore::read_matrix(&out, kronspec::matcore::MatrixFormat::Json).unwrap();
    assert_eq!(
        m,
        sample_gaussian(3, FieldTag::Complex, &mut RandomSource::new(4))
    );
}

#[test]
fn selftest_exit_codes() {
    let (code, out, _) = run(&["selftest", "--trials", "0"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["passed"], true);
    let (code, out, _) = run(&["selftest", "--trials", "1", "--nmax", "3"]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = run(&["selftest", "--trials", "0", "--inject-failure"]);
    assert_ne!(code, 0);
    assert_eq!(json(&out)["passed"], false);
}

#[test]
fn binary_is_deterministic() {
    let fx = Fixture::new();
    let i = fx.mm("i.mtx", &Matrix::identity(4));
    let exe = Path::new(env!("CARGO_BIN_EXE_kronspec"));
    let outputs: Vec<_> = (0..3)
        .map(|_| {
            Command::new(exe)
                .args(["perturb", &i, &i, "--seed", "42"])
                .output()
                .unwrap()
        })
        .collect();
    assert!(outputs[0].status.success());
    assert!(outputs.iter().all(|o| o.stdout == outputs[0].stdout));

    let nil = fx.mm("nil.mtx", &nilpotent());
    let status = Command::new(exe)
        .args(["kron-inverse", &nil, &nil, &nil, &nil])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(5));
}
