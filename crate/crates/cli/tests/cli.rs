use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nataf-link"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const BETA_PAIR: &str = r#"{"marginal_i": {"dist": "beta", "params": {"alpha": 2, "beta": 3}},
                           "marginal_j": {"dist": "beta", "params": {"alpha": 2, "beta": 3}}, "rho_x": 0.9}"#;
const B2_PAIR: &str = r#"{"marginal_i": {"dist": "binomial", "params": {"n": 2, "p": 0.2}},
                         "marginal_j": {"dist": "binomial", "params": {"n": 2, "p": 0.2}}}"#;

#[test]
fn solve_beta_pair_json() {
    let dir = TempDir::new().unwrap();
    let pair = write(dir.path(), "pair.json", BETA_PAIR);
    let o = run(&["solve", "--pair", pair.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let z = v["results"][0]["rho_z"].as_f64().unwrap();
    assert!((z - 0.903).abs() <= 0.002);
    let coeffs = v["link"]["coefficients"].as_array().unwrap();
    assert_eq!(
        coeffs.len(),
        v["link"]["degree"].as_u64().unwrap() as usize + 1
    );
    // Ascending powers: b_1 dominates for this near-linear link.
    assert!(coeffs[1].as_f64().unwrap() > 0.9);

    let o = run(&[
        "solve",
        "--pair",
        pair.to_str().unwrap(),
        "--rho-x",
        "-0.3",
        "--method",
        "bisect",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["results"][0]["rho_z"].as_f64().unwrap() + 0.306).abs() <= 0.002);
}

#[test]
fn solve_text_and_fixed_degree() {
    let dir = TempDir::new().unwrap();
    let pair = write(dir.path(), "pair.json", B2_PAIR);
    let o = run(&[
        "solve",
        "--pair",
        pair.to_str().unwrap(),
        "--rho-x",
        "0.3",
        "--degree",
        "23",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("degree 23 (fixed)"), "{text}");
    let line = text.lines().find(|l| l.starts_with("rho_x = 0.3")).unwrap();
    let z: f64 = line
        .split("rho_z = ")
        .nth(1)
        .unwrap()
        .split(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((z - 0.418).abs() <= 0.002);
}

#[test]
fn uniform_zero_target() {
    let dir = TempDir::new().unwrap();
    let pair = write(
        dir.path(),
        "u.json",
        r#"{"marginal_i": {"dist": "uniform01"}, "marginal_j": {"dist": "uniform01"}, "rho_x": 0}"#,
    );
    for method in ["poly", "closed", "bisect"] {
        let o = run(&[
            "solve",
            "--pair",
            pair.to_str().unwrap(),
            "--method",
            method,
            "--json",
        ]);
        assert_eq!(o.status.code(), Some(0), "{method}");
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["results"][0]["rho_z"].as_f64().unwrap(), 0.0, "{method}");
    }
}

#[test]
fn infeasible_target_exits_3_with_range() {
    let dir = TempDir::new().unwrap();
    let pair = write(dir.path(), "b2.json", B2_PAIR);
    let o = run(&["solve", "--pair", pair.to_str().unwrap(), "--rho-x", "0.99"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("feasible range"), "{err}");
    let o = run(&[
        "solve",
        "--pair",
        pair.to_str().unwrap(),
        "--rho-x",
        "-0.9",
        "--method",
        "bisect",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"marginal_i": {"dist": "cauchy"}}"#,
    );
    assert_eq!(
        run(&["solve", "--pair", bad.to_str().unwrap(), "--rho-x", "0.1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["solve", "--pair", "/nonexistent.json", "--rho-x", "0.1"])
            .status
            .code(),
        Some(2)
    );
    let pair = write(dir.path(), "p.json", BETA_PAIR);
    assert_eq!(
        run(&["solve", "--pair", pair.to_str().unwrap(), "--rho-x", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "solve",
            "--pair",
            pair.to_str().unwrap(),
            "--method",
            "closed"
        ])
        .status
        .code(),
        Some(2)
    );
    let params = write(
        dir.path(),
        "neg.json",
        r#"{"marginal_i": {"dist": "beta", "params": {"alpha": -1, "beta": 3}}, "marginal_j": {"dist": "normal01"}, "rho_x": 0.2}"#,
    );
    assert_eq!(
        run(&["solve", "--pair", params.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["bench", "--table", "t9"]).status.code(), Some(2));
    assert_eq!(
        run(&["curve", "--pair", pair.to_str().unwrap(), "--grid", "0"])
            .status
            .code(),
        Some(2)
    );
}

fn read_matrix(v: &Value, key: &str) -> Vec<Vec<f64>> {
    v[key]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| {
            row.as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_f64().unwrap())
                .collect()
        })
        .collect()
}

#[test]
fn matrix_modes() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "ln.json",
        r#"{"marginals": [{"dist": "lognormal", "params": {"mu": 0, "sigma": 1}}, {"dist": "lognormal"}, {"dist": "lognormal"}],
            "R_X": [[1, 0.3, 0.3], [0.3, 1, 0.3], [0.3, 0.3, 1]]}"#,
    );
    let out = dir.path().join("rz.json");
    let o = run(&[
        "matrix",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let rz = read_matrix(&v, "R_Z");
    let want = (1.0 + 0.3 * (std::f64::consts::E - 1.0)).ln();
    assert!((rz[0][1] - want).abs() < 1e-12);
    assert_eq!(v["repaired"], false);

    let normal = write(
        dir.path(),
        "n.json",
        r#"{"marginals": [{"dist": "normal01"}, {"dist": "normal01"}], "R_X": [[1, 0.5], [0.5, 1]]}"#,
    );
    let o = run(&["matrix", "--spec", normal.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(read_matrix(&v, "R_Z"), vec![vec![1.0, 0.5], vec![0.5, 1.0]]);

    let adversarial = write(
        dir.path(),
        "bern.json",
        r#"{"marginals": [{"dist": "bernoulli_half"}, {"dist": "bernoulli_half"}, {"dist": "bernoulli_half"}],
            "R_X": [[1, 0.6, 0.6], [0.6, 1, -0.2], [0.6, -0.2, 1]]}"#,
    );
    let o = run(&[
        "matrix",
        "--spec",
        adversarial.to_str().unwrap(),
        "--repair",
        "clip",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["repaired"], true);
    assert!(v["min_eigenvalue"].as_f64().unwrap() >= -1e-10);
    assert!(v["max_perturbation"].as_f64().unwrap() > 0.0);
    let rz = read_matrix(&v, "R_Z");
    for i in 0..3 {
        assert_eq!(rz[i][i], 1.0);
        for j in 0..3 {
            assert_eq!(rz[i][j], rz[j][i]);
        }
    }

    let infeasible = write(
        dir.path(),
        "inf.json",
        r#"{"marginals": [{"dist": "binomial", "params": {"n": 2, "p": 0.2}}, {"dist": "binomial", "params": {"n": 2, "p": 0.2}}],
            "R_X": [[1, -0.9], [-0.9, 1]]}"#,
    );
    let o = run(&["matrix", "--spec", infeasible.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stderr).unwrap().contains("(0, 1)"));

    let asym = write(
        dir.path(),
        "asym.json",
        r#"{"marginals": [{"dist": "normal01"}, {"dist": "normal01"}], "R_X": [[1, 0.5], [0.4, 1]]}"#,
    );
    assert_eq!(
        run(&["matrix", "--spec", asym.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

fn curve_rows(text: &str) -> Vec<(f64, f64)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "rho_z,rho_x");
    lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

#[test]
fn curve_outputs() {
    let dir = TempDir::new().unwrap();
    let normal = write(
        dir.path(),
        "n.json",
        r#"{"marginal_i": {"dist": "normal01"}, "marginal_j": {"dist": "normal01"}}"#,
    );
    let o = run(&["curve", "--pair", normal.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# pair: normal01 x normal01\n# link: polynomial, degree"));
    let rows = curve_rows(&text);
    assert_eq!(rows.len(), 201);
    for (z, x) in &rows {
        assert!((z - x).abs() < 1e-12);
    }
    // Values carry 10 significant digits.
    assert!(text.contains("\n0.5000000000,0.5000000000\n"));

    let uniform = write(
        dir.path(),
        "u.json",
        r#"{"marginal_i": {"dist": "uniform01"}, "marginal_j": {"dist": "uniform01"}}"#,
    );
    let o = run(&[
        "curve",
        "--pair",
        uniform.to_str().unwrap(),
        "--no-closed-form",
    ]);
    let rows = curve_rows(&stdout(&o));
    assert!((rows.last().unwrap().1 - 1.0).abs() < 1e-3);

    let ln = write(
        dir.path(),
        "ln.json",
        r#"{"marginal_i": {"dist": "lognormal"}, "marginal_j": {"dist": "lognormal"}}"#,
    );
    let out = dir.path().join("c.csv");
    for extra in [&[][..], &["--no-closed-form"][..]] {
        let mut args = vec![
            "curve",
            "--pair",
            ln.to_str().unwrap(),
            "--grid",
            "0.5",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        assert_eq!(run(&args).status.code(), Some(0));
        let rows = curve_rows(&fs::read_to_string(&out).unwrap());
        assert_eq!(rows.len(), 5);
        let e = std::f64::consts::E;
        assert!(
            (rows[0].1 - (1.0 / e - 1.0) / (e - 1.0)).abs() < 1e-4,
            "{extra:?}"
        );
    }
}

#[test]
fn json_coefficients_round_trip() {
    let dir = TempDir::new().unwrap();
    let pair = write(dir.path(), "pair.json", BETA_PAIR);
    let o = run(&[
        "solve",
        "--pair",
        pair.to_str().unwrap(),
        "--json",
        "--degree",
        "9",
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let coeffs: Vec<f64> = v["link"]["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_f64().unwrap())
        .collect();
    let lib = nataf_link::build_link(
        &nataf_link::make_builtin(nataf_link::Builtin::Beta {
            alpha: 2.0,
            beta: 3.0,
        })
        .unwrap(),
        &nataf_link::make_builtin(nataf_link::Builtin::Beta {
            alpha: 2.0,
            beta: 3.0,
        })
        .unwrap(),
        9,
        &nataf_link::BuildOptions::default(),
    )
    .unwrap();
    for (a, b) in coeffs.iter().zip(&lib.b) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn bench_tables() {
    let o = run(&["bench", "--table", "t1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().count() >= 11);

    let o = run(&[
        "bench",
        "--table",
        "t3",
        "--mc-samples",
        "20000",
        "--seed",
        "5",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let cases = v.as_array().unwrap();
    assert_eq!(cases.len(), 2);
    assert_eq!(cases[0]["degree_used"], 23);
    assert_eq!(cases[1]["auto_degree"], 3);
    for case in cases {
        for row in case["rows"].as_array().unwrap() {
            let d = row["poly_rho_z"].as_f64().unwrap() - row["ref_rho_z"].as_f64().unwrap();
            assert!(d.abs() <= 0.002);
            assert!(row["mc"]["sample_count"] == 20000);
        }
    }
}
