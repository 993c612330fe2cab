use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_fibered-dyn");

struct Run {
    code: i32,
    report: Option<Value>,
    stderr: String,
}

fn run_in(dir: &Path, cmd: &str, config: &str, extra: &[&str], env: &[(&str, &str)]) -> Run {
    let cfg = dir.join(format!("{cmd}.config.json"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut c = Command::new(BIN);
    c.arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(&out).args(extra);
    c.env_remove("FIBERED_DYN_SEED").env_remove("FIBERED_DYN_WORKERS");
    for (k, v) in env {
        c.env(k, v);
    }
    let o: Output = c.output().unwrap();
    let report = fs::read_to_string(out.join(format!("{cmd}.json"))).ok().map(|s| serde_json::from_str(&s).unwrap());
    Run { code: o.status.code().unwrap(), report, stderr: String::from_utf8_lossy(&o.stderr).into() }
}

fn run(cmd: &str, config: &str) -> (TempDir, Run) {
    let dir = TempDir::new().unwrap();
    let r = run_in(dir.path(), cmd, config, &[], &[]);
    (dir, r)
}

/// Objects holding a numeric `value` also hold an error field.
fn check_errors_attached(v: &Value, path: &str) {
    match v {
        Value::Object(m) => {
            if m.get("value").is_some_and(Value::is_number) {
                let has = ["se", "bound", "truncation_bound", "threshold", "limit"].iter().any(|k| m.contains_key(*k));
                assert!(has, "{path} has a value without an error field: {v}");
            }
            for (k, x) in m {
                check_errors_attached(x, &format!("{path}.{k}"));
            }
        }
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| check_errors_attached(x, &format!("{path}[{i}]"))),
        _ => {}
    }
}

fn check_envelope(r: &Value, seed: u64) {
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["seed"], seed);
    let hash = r["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    check_errors_attached(r, "report");
}

#[test]
fn bj_check_torus() {
    let (_d, r) = run("bj-check", r#"{"map": "torus", "seed": 7}"#);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report.unwrap();
    check_envelope(&rep, 7);
    assert_eq!(rep["status"], "pass");
    assert!(rep["result"]["report"]["discrepancy"].as_f64().unwrap().abs() <= 2e-3);
}

#[test]
fn validate_degenerate_theta_names_resultant() {
    let cfg = r#"{"map": {"d": 2,
        "theta0": {"degree": 2, "coeffs": [[1, 0], [1, 0], [0, 0]]},
        "theta1": {"degree": 2, "coeffs": [[2, 0], [2, 0], [0, 0]]},
        "r": {"degree": 2, "terms": [{"exp": [0, 0, 2], "c": [1, 0]}]}}}"#;
    let (_d, r) = run("validate", cfg);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("resultant(theta0, theta1)"), "{}", r.stderr);
    let rep = r.report.unwrap();
    assert_eq!(rep["status"], "numerical-error");
    let failed: Vec<&str> = rep["result"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["resultant(theta0, theta1)"]);
}

#[test]
fn validate_builtins() {
    for name in ["torus", "chebyshev", "basilica_base", "cheb_coupled", "desboves"] {
        let (_d, r) = run("validate", &format!(r#"{{"map": "{name}"}}"#));
        assert_eq!(r.code, 0, "{name}: {}", r.stderr);
        assert!(r.report.unwrap()["result"]["map"]["trapping"]["epsilon"].as_f64().unwrap() > 0.0);
    }
    for name in ["mandel_family", "coupled_family"] {
        let (_d, r) = run("validate", &format!(r#"{{"family": "{name}"}}"#));
        assert_eq!(r.code, 0, "{name}: {}", r.stderr);
    }
}

#[test]
fn decomp_check_cheb_coupled() {
    let (_d, r) = run("decomp-check", r#"{"map": "cheb_coupled", "seed": 3}"#);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report.unwrap();
    check_envelope(&rep, 3);
    let rows = rep["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for row in rows {
        for side in ["direct", "nested"] {
            assert!(row[side]["value"].is_number() && row[side]["se"].as_f64().unwrap() > 0.0);
        }
        assert_eq!(row["passed"], true);
    }
}

#[test]
fn config_errors_exit_two() {
    let cases = [
        r#"{"map": "torus", "bogus": 1}"#,
        r#"{"map": "torus", "bj_check": {"samples": 10, "extra": 0}}"#,
        r#"{"map": "no_such_map"}"#,
        r#"{"map": {"d": 2}}"#,
        r#"{"map": "torus", "tol": -1}"#,
        r#"not json"#,
    ];
    for cfg in cases {
        let (_d, r) = run("bj-check", cfg);
        assert_eq!(r.code, 2, "{cfg}");
        assert!(r.report.is_none(), "no computation for {cfg}");
    }
    let (_d, r) = run("bif-scan", r#"{"map": "torus"}"#);
    assert_eq!(r.code, 2);
    let (_d, r) = run("periodic-check", r#"{"map": "torus", "periodic_check": {"n": [20]}}"#);
    assert_eq!(r.code, 2, "{}", r.stderr);
    let dir = TempDir::new().unwrap();
    assert_eq!(run_in(dir.path(), "validate", r#"{"map": "torus"}"#, &["--workers", "0"], &[]).code, 2);
    assert_eq!(run_in(dir.path(), "validate", r#"{"map": "torus"}"#, &["--frobnicate"], &[]).code, 2);
    let o = Command::new(BIN).args(["explode", "--config", "x.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn band_failure_exits_one() {
    let cfg = r#"{"map": "cheb_coupled", "periodic_check": {"n": [3, 4], "samples": 2000, "band": 1e-9, "k": 1e-9}}"#;
    let (_d, r) = run("periodic-check", cfg);
    assert_eq!(r.code, 1, "{}", r.stderr);
    assert_eq!(r.report.unwrap()["status"], "band-failure");
}

#[test]
fn periodic_check_cheb_coupled() {
    let (_d, r) = run("periodic-check", r#"{"map": "cheb_coupled", "seed": 2}"#);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report.unwrap();
    check_envelope(&rep, 2);
    assert_eq!(rep["result"]["monotone"], true);
}

#[test]
fn seed_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"map": "torus", "seed": 1, "lyapunov": {"samples": 200}}"#;
    let seed = |extra: &[&str], env: &[(&str, &str)]| {
        run_in(dir.path(), "lyapunov", cfg, extra, env).report.unwrap()["seed"].as_u64().unwrap()
    };
    assert_eq!(seed(&[], &[]), 1);
    assert_eq!(seed(&[], &[("FIBERED_DYN_SEED", "9")]), 9);
    assert_eq!(seed(&["--seed", "4"], &[("FIBERED_DYN_SEED", "9")]), 4);
    let r = run_in(dir.path(), "lyapunov", cfg, &[], &[("FIBERED_DYN_WORKERS", "1")]);
    assert_eq!(r.code, 0);
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join("out").join(name)).unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    let cases = [
        ("sample", r#"{"map": "cheb_coupled", "sample": {"samples": 300}}"#, "sample.csv"),
        ("green", r#"{"map": "cheb_coupled", "green": {"nx": 12, "ny": 9, "t": [0.5, 0]}}"#, "green.csv"),
        (
            "bif-scan",
            r#"{"family": "coupled_family", "bif_scan": {"nx": 8, "ny": 6, "samples": 100}}"#,
            "bif-scan.potential.csv",
        ),
    ];
    for (cmd, cfg, file) in cases {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        run_in(a.path(), cmd, cfg, &["--workers", "1"], &[]);
        run_in(b.path(), cmd, cfg, &["--workers", "2"], &[]);
        assert_eq!(read(a.path(), file), read(b.path(), file), "{cmd}");
        let c = TempDir::new().unwrap();
        run_in(c.path(), cmd, cfg, &["--seed", "99"], &[]);
        if cmd != "green" {
            assert_ne!(read(a.path(), file), read(c.path(), file), "{cmd} ignores the seed");
        }
    }
}

#[test]
fn green_artifacts() {
    let dir = TempDir::new().unwrap();
    let r = run_in(dir.path(), "green", r#"{"map": "torus", "green": {"nx": 10, "ny": 8}}"#, &[], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report.unwrap();
    check_envelope(&rep, 0);
    let csv = String::from_utf8(read(dir.path(), "green.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "ix,iy,re,im,value,bound");
    assert_eq!(lines.len(), 81);
    // G = log⁺|z| in the fiber over t = 0.
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        let want = f[2].hypot(f[3]).ln().max(0.0);
        assert!((f[4] - want).abs() <= 1e-8, "{l}");
    }
    let pgm = read(dir.path(), "green.pgm");
    assert!(pgm.starts_with(b"P5\n10 8\n65535\n"));
    assert_eq!(pgm.len(), b"P5\n10 8\n65535\n".len() + 2 * 80);
    assert_eq!(rep["result"]["pgm"]["levels"], 65535);
}

#[test]
fn sample_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"map": "chebyshev", "seed": 5, "sample": {"measure": "theta", "samples": 400}}"#;
    let r = run_in(dir.path(), "sample", cfg, &[], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report.unwrap();
    check_envelope(&rep, 5);
    assert_eq!(rep["result"]["burn_in"], 30);
    assert_eq!(rep["result"]["moments"].as_array().unwrap().len(), 5);
    let csv = String::from_utf8(read(dir.path(), "sample.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x0_re,x0_im,x1_re,x1_im,weight");
    assert_eq!(csv.lines().count(), 401);
}

#[test]
fn bif_scan_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"family": "mandel_family", "seed": 5,
        "bif_scan": {"nx": 12, "ny": 9, "samples": 200,
                     "compare": {"n": [2, 3], "bump": {"center": [-0.75, 0], "radius": 1.0}}}}"#;
    let r = run_in(dir.path(), "bif-scan", cfg, &[], &[]);
    assert!(r.code == 0 || r.code == 1, "{}", r.stderr);
    let rep = r.report.unwrap();
    check_envelope(&rep, 5);
    let res = &rep["result"];
    assert_eq!(res["cells"], 108);
    assert_eq!(res["compare"]["rows"].as_array().unwrap().len(), 3);
    let map = &res["pgm"];
    assert!(map["low"].as_f64().unwrap() < map["high"].as_f64().unwrap());
    assert_eq!(map["masked_level"], 0);
    let pgm = read(dir.path(), "bif-scan.density.pgm");
    assert!(pgm.starts_with(b"P5\n12 9\n65535\n"));
    for f in ["bif-scan.potential.csv", "bif-scan.density.csv", "bif-scan.periodic-n2.csv", "bif-scan.periodic-n3.csv"]
    {
        assert!(rep["artifacts"].as_array().unwrap().iter().any(|a| a == f), "{f}");
        assert_eq!(String::from_utf8(read(dir.path(), f)).unwrap().lines().count(), 109);
    }
}

#[test]
fn inline_map_and_family() {
    let map = r#"{"map": {"d": 2, "affine": {"p": {"degree": 2, "coeffs": [[-1, 0], [0, 0], [1, 0]]},
        "q": {"degree": 2, "terms": [{"exp": [0, 2], "c": [1, 0]}, {"exp": [1, 0], "c": [0.3, 0]}]}}},
        "lyapunov": {"samples": 2000}}"#;
    let (_d, r) = run("lyapunov", map);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report.unwrap()["map"], "inline");
    let fam = r#"{"family": {"name": "shifted", "d": 2,
        "theta0": [{"degree": 0, "coeffs": [[1, 0]]}, {"degree": 0, "coeffs": [[0, 0]]}, {"degree": 0, "coeffs": [[0, 0]]}],
        "theta1": [{"degree": 0, "coeffs": [[0, 0]]}, {"degree": 0, "coeffs": [[0, 0]]}, {"degree": 0, "coeffs": [[1, 0]]}],
        "r": [{"exp": [0, 0, 2], "c": {"degree": 0, "coeffs": [[1, 0]]}},
              {"exp": [0, 2, 0], "c": {"degree": 1, "coeffs": [[0, 0], [1, 0]]}}],
        "domain": {"re": [-2, 1], "im": [-1.5, 1.5]}}}"#;
    let (_d, r) = run("validate", fam);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report.unwrap()["family"], "shifted");
}

mod roundtrip {
    use fibered_dyn::bifurcation::{Bump, Rect};
    use fibered_dyn::cli::{CompareParams, RunConfig, Spec};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn run_config_survives_serialization(
            seed in any::<u64>(),
            tol in 1e-12f64..1e-3,
            samples in 2usize..100_000,
            k in 0.5f64..6.0,
            n in proptest::collection::vec(1usize..9, 1..5),
            radius in 0.01f64..3.0,
            map in prop::sample::select(vec!["torus", "chebyshev", "cheb_coupled", "desboves"]),
        ) {
            let mut c = RunConfig::parse("{}").unwrap();
            c.map = Some(Spec::Builtin(map.into()));
            c.seed = seed;
            c.tol = tol;
            c.lyapunov.samples = samples;
            c.bj_check.k = k;
            c.periodic_check.n = n.clone();
            c.bif_scan.domain = Some(Rect { re: [-1.0, radius], im: [-radius, radius] });
            c.bif_scan.compare = Some(CompareParams { n, bump: Bump { center: [0.1, -0.2], radius }, relative_band: 0.1 });
            let text = serde_json::to_string(&c).unwrap();
            prop_assert_eq!(RunConfig::parse(&text).unwrap(), c);
        }
    }
}
