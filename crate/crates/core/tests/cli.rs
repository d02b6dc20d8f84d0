use std::path::Path;
use std::process::{Command, Output};

fn kvgeom(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kvgeom"))
        .args(args)
        .env("KVGEOM_CACHE_DIR", cache)
        .output()
        .expect("spawn kvgeom")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn bch_text_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    let first = kvgeom(&["bch", "--degree", "3"], dir.path());
    assert_eq!(first.status.code(), Some(0));
    let text = stdout(&first);
    assert!(text.lines().any(|l| l == "xy: 1/2"), "{text}");
    assert!(text.lines().any(|l| l == "xxy: 1/12"), "{text}");
    assert!(dir.path().join("bch-XY-3.json").exists(), "cache taken from the environment");

    let again = kvgeom(&["bch", "--degree", "3"], dir.path());
    assert_eq!(first.stdout, again.stdout);

    let out = dir.path().join("yx.json");
    let yx = kvgeom(&["bch", "--degree", "2", "--order", "YX", "--no-cache", "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(yx.status.code(), Some(0));
    let j = read_json(&out);
    assert_eq!(j["order"], "YX");
    assert_eq!(j["coeffs"].as_array().unwrap().iter().find(|e| e["word"] == "xy").unwrap()["c"], "-1/2");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["bch", "--degree", "11"][..],
        &["bch", "--degree", "0"],
        &["bch", "--degree", "3", "--order", "ZX"],
        &["no-such-command"],
        &["geom-run", "--radius", "0.9"],
        &["geom-run", "--algebra", "e8"],
        &["geom-run", "--samples", "0"],
        &["flow", "--x", "0.1,0.2", "--y", "0,0,0"],
    ] {
        let o = kvgeom(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(kvgeom(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn solve_then_check() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("pair.json");
    let p = pair.to_str().unwrap();
    let o = kvgeom(&["solve-kv", "--degree", "5", "--out", p], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let j = read_json(&pair);
    assert_eq!(j["residual1"], "0");
    assert_eq!(j["degree"], 5);
    assert!(j["residual2_report"]["moduloReversal"].is_object());

    let c1 = kvgeom(&["check-kv1", "--degree", "5", "--input", p], dir.path());
    assert_eq!(c1.status.code(), Some(0));
    assert_eq!(stdout(&c1).trim(), "residual: 0");

    let report = dir.path().join("kv2.json");
    let c2 = kvgeom(&["check-kv2", "--degree", "5", "--input", p, "--out", report.to_str().unwrap()], dir.path());
    assert_eq!(c2.status.code(), Some(0));
    assert_eq!(read_json(&report)["pass"], true);

    // a degree-5 pair does not solve the equation at higher degree
    let c1 = kvgeom(&["check-kv1", "--degree", "7", "--input", p], dir.path());
    assert_eq!(c1.status.code(), Some(1));
}

#[test]
fn geom_run_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let base = ["geom-run", "--algebra", "sl2", "--samples", "6", "--check-points", "2", "--flow-points", "1", "--steps", "20", "--seed", "7"];
    for out in [&a, &b] {
        let mut args = base.to_vec();
        args.extend(["--out", out.to_str().unwrap()]);
        assert_eq!(kvgeom(&args, dir.path()).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let j = read_json(&a);
    assert_eq!(j["pass"], true);
    assert_eq!(j["nSamples"], 6);
}

#[test]
fn tolerance_failure_exits_one_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = kvgeom(
        &["geom-run", "--samples", "3", "--check-points", "1", "--flow-points", "0", "--tol-eq1=-1", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(read_json(&out)["pass"], false);
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn flow_from_explicit_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flow.json");
    let o = kvgeom(
        &["flow", "--x", "0.1,-0.2,0.05", "--y", "-0.1,0.1,0.2", "--steps", "40", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&out);
    let states = j["states"].as_array().unwrap();
    assert_eq!(states.len(), 41);
    assert_eq!(states[0]["t"], 0.0);
    assert_eq!(states[40]["t"], 1.0);
    assert!(j["transportPhi"].as_f64().unwrap() <= 1e-6);
}
