use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn concorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_concorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = concorr(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn num(v: &Value, path: &[&str]) -> f64 {
    let mut x = v;
    for k in path {
        x = &x[*k];
    }
    x.as_f64()
        .unwrap_or_else(|| panic!("{path:?} missing in {v}"))
}

#[test]
fn report_ghz() {
    let v = json(&["report", "--state", "1,0,0,0,1,0", "--pair", "12", "--json"]);
    assert!((num(&v, &["connected", "gamma"]) - 2.0).abs() < 1e-9);
    assert!((num(&v, &["E4"]) - 1.0).abs() < 1e-12);
    assert!(num(&v, &["N"]).abs() < 1e-12);
}

#[test]
fn report_product_state_is_zero() {
    let v = json(&["report", "--state", "1,0,0,0,0,0", "--json"]);
    for k in ["E1", "E2", "E3", "E4", "E5", "N", "logneg"] {
        assert!(num(&v, &[k]).abs() < 1e-12, "{k}");
    }
    assert!(num(&v, &["connected", "gamma"]).abs() < 1e-12);
}

#[test]
fn report_bell_pair_from_amplitudes() {
    let h = std::f64::consts::FRAC_1_SQRT_2.to_string();
    let mut amps = vec!["0".to_string(); 16];
    amps[0] = h.clone();
    amps[12] = h;
    let v = json(&[
        "report",
        "--amps",
        &amps.join(","),
        "--pair",
        "12",
        "--json",
    ]);
    let tsirelson = 2.0 * std::f64::consts::SQRT_2;
    for k in ["gamma", "gamma_eigen", "gamma_optimizer"] {
        assert!((num(&v, &["connected", k]) - tsirelson).abs() < 1e-7, "{k}");
    }
    assert!((num(&v, &["logneg"]) - std::f64::consts::LN_2).abs() < 1e-9);
    assert!((num(&v, &["E1"]) - 1.0).abs() < 1e-8);
}

#[test]
fn malformed_input_fails_cleanly() {
    for args in [
        vec!["report", "--state", "1,2"],
        vec!["report"],
        vec!["report", "--state", "1,0,0,0,0,x"],
        vec!["report", "--amps", "0,0"],
        vec!["report", "--state", "1,0,0,0,0,0", "--pair", "14"],
        vec!["scan", "--samples", "0"],
    ] {
        let out = concorr(&args);
        assert!(!out.status.success(), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

fn scan_to(path: &Path, samples: &str, seed: &str) {
    let p = path.to_str().unwrap();
    let out = concorr(&[
        "scan",
        "--samples",
        samples,
        "--seed",
        seed,
        "--separable-fraction",
        "0.2",
        "--out",
        p,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn scan_is_stable_and_schema_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    scan_to(&a, "10", "42");
    scan_to(&b, "10", "42");
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    let mut lines = ta.lines();
    assert_eq!(
        lines.next().unwrap(),
        "seed,l0,l1,l2,l3,l4,phi,pair,E1,E2,E3,E4,E5,N,logneg,q_alpha1,q_alpha2,q_alpha3,q_gamma,\
         c_alpha1,c_alpha2,c_alpha3,c_gamma1,c_gamma2,c_theta,c_gamma,separable"
    );
    assert_eq!(lines.count(), 10);
    assert!(!ta.contains('\r'));

    let rows = concorr::scan::read_scan_file(&a).unwrap();
    for r in rows {
        assert!(r.c_gamma <= 2.0 * std::f64::consts::SQRT_2 + 1e-9);
    }
}

#[test]
fn scan_to_unwritable_path_fails() {
    let out = concorr(&["scan", "--samples", "2", "--out", "/nonexistent-dir/x.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn classify_and_fig2_read_a_scan() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("scan.csv");
    scan_to(&scan, "3000", "5");
    let s = scan.to_str().unwrap();

    for fix in ["g2theta", "a1theta"] {
        let out = concorr(&["classify", s, "--fix", fix]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let mut lines = text.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("fix,fixed_center,theta_center"));
        let total: usize = lines
            .map(|l| l.split(',').nth(5).unwrap().parse::<usize>().unwrap())
            .sum();
        assert_eq!(total, 3000);
    }

    let out = concorr(&["fig2", s]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("gamma2_center,theta_center,pairs"));
    assert!(text.lines().count() > 1);
}

#[test]
fn fig2_on_single_state_has_no_witness() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("one.csv");
    scan_to(&scan, "1", "9");
    let out = concorr(&["fig2", scan.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}

#[test]
fn classify_of_missing_file_fails() {
    let out = concorr(&["classify", "/nonexistent-dir/scan.csv"]);
    assert!(!out.status.success());
}

#[test]
fn lhv_bell_pair() {
    let args = [
        "lhv",
        "--state",
        "1,0,0,1,0,0",
        "--a",
        "0,0,1",
        "--b",
        "0,0,1",
        "--n",
        "1000000",
        "--seed",
        "3",
        "--json",
    ];
    let v = json(&args);
    let (est, se) = (num(&v, &["estimate"]), num(&v, &["stderr"]));
    assert!((est - 1.0).abs() <= 3.0 * se + 1e-12);
    assert!((num(&v, &["closed"]) - 1.0).abs() < 1e-12);
    assert_eq!(v, json(&args));
}

#[test]
fn lhv_ghz_pair_along_x_is_uncorrelated() {
    let v = json(&[
        "lhv",
        "--state",
        "1,0,0,0,1,0",
        "--a",
        "1,0,0",
        "--b",
        "1,0,0",
        "--n",
        "200000",
        "--json",
    ]);
    assert!(num(&v, &["closed"]).abs() < 1e-12);
    assert!(num(&v, &["estimate"]).abs() <= 3.0 * num(&v, &["stderr"]));
}
