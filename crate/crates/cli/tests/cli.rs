use std::path::Path;
use std::process::{Command, Output};

use tautrel::io::{graph_from_json, matrix_from_mtx, vector_from_json};
use tautrel::strata::enumerate_basis;

fn tautrel(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tautrel"))
        .args(args)
        .env("TAUTREL_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn graphs_of_one_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = tautrel(dir.path(), &["graphs", "--genus", "1", "--markings", "1"]);
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], r#"{"g":1,"n":1,"genera":[1],"legs":[[1]],"edges":[]}"#);
    for l in &lines {
        graph_from_json(l).unwrap();
    }
    let text = tautrel(dir.path(), &["graphs", "--genus", "1", "--markings", "1", "--format", "text"]);
    assert_eq!(stdout(&text).lines().count(), 2);
}

#[test]
fn series_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = tautrel(dir.path(), &["verify", "--suite", "series", "--order", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("PASS") && l.contains("A/B identity")), "{out}");
    assert!(!out.contains("FAIL"));
}

#[test]
fn injected_faults_fail_their_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = tautrel(dir.path(), &["verify", "--suite", "series", "--order", "30", "--inject-fault", "edge-sign"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL") && l.contains("node factor division")));

    let o = tautrel(dir.path(), &["verify", "--suite", "algebra", "--samples", "25", "--inject-fault", "wrong-aut"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL") && l.contains("projection formula")));
}

#[test]
fn verify_json_lists_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = tautrel(dir.path(), &["verify", "--suite", "kappa", "--format", "json"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v[0]["check"], "kappa-hat brute force");
    assert_eq!(v[0]["passed"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| tautrel(dir.path(), args).status.code();
    assert_eq!(code(&["rank", "--genus", "1", "--markings", "1", "--degree", "1", "--bogus"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    // above the dimension
    assert_eq!(code(&["rank", "--genus", "1", "--markings", "1", "--degree", "2"]), Some(2));
    // unstable
    assert_eq!(code(&["graphs", "--genus", "0", "--markings", "2"]), Some(2));
    assert_eq!(code(&["rank", "--genus", "1", "--markings", "1", "--degree", "1", "--prime", "4"]), Some(2));
    assert_eq!(code(&["relation", "--genus", "1", "--markings", "1", "--degree", "1", "--a", "1,1"]), Some(2));
    assert_eq!(code(&["verify", "--suite", "nope"]), Some(2));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn cache_hits_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["basis", "--genus", "1", "--markings", "2", "--degree", "1"];
    let first = tautrel(dir.path(), &args);
    let second = tautrel(dir.path(), &args);
    let mut fresh_args = args.to_vec();
    fresh_args.push("--no-cache");
    let fresh = tautrel(dir.path(), &fresh_args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, fresh.stdout);
    assert_eq!(stdout(&first).lines().count(), enumerate_basis(1, 2, 1).unwrap().len());

    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    let raw = std::fs::read_to_string(&entries[0]).unwrap();
    assert!(raw.starts_with("tautrel-cache schema=1 sha256="));

    // a damaged entry is recomputed
    std::fs::write(&entries[0], raw.replace("\"g\":1", "\"g\":7")).unwrap();
    assert_eq!(tautrel(dir.path(), &args).stdout, fresh.stdout);
}

#[test]
fn small_rank_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = tautrel(dir.path(), &["rank", "--genus", "1", "--markings", "1", "--degree", "1", "--verify-rational"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!((v["basis"].as_u64(), v["rank"].as_u64(), v["quotient"].as_u64()), (Some(3), Some(2), Some(1)));
    assert_eq!(v["rational_rank"], 2);
    assert_eq!(v["primes"].as_array().unwrap().len(), 2);

    let o = tautrel(dir.path(), &["rank", "--genus", "0", "--markings", "4", "--degree", "1", "--prime", "1000003,998244353"]);
    let v = json(&o);
    assert_eq!(v["quotient"], 1);
    assert_eq!(v["primes"][0][0], 1000003);
}

#[test]
fn relation_and_span_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    std::fs::create_dir(&out).unwrap();
    let cache = dir.path().join("cache");
    let vec_path = out.join("vec.json");
    let o = tautrel(
        &cache,
        &["relation", "--genus", "1", "--markings", "2", "--degree", "2", "--sigma", "1", "--a", "1,0", "--out"],
    );
    assert_eq!(o.status.code(), Some(2), "--out needs a value");
    let o = tautrel(
        &cache,
        &[
            "relation", "--genus", "1", "--markings", "2", "--degree", "2", "--sigma", "1", "--a", "1,0", "--out",
            vec_path.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let basis = enumerate_basis(1, 2, 2).unwrap();
    let v = vector_from_json(&std::fs::read_to_string(&vec_path).unwrap(), 1, 2, 2, Some(&basis)).unwrap();
    assert!(!v.is_zero());

    let mtx = out.join("m.mtx");
    let jobs = out.join("jobs.jsonl");
    let modp = out.join("m_modp.mtx");
    let args = [
        "span",
        "--genus",
        "1",
        "--markings",
        "2",
        "--degree",
        "2",
        "--out",
        mtx.to_str().unwrap(),
        "--jobs-out",
        jobs.to_str().unwrap(),
        "--mod-prime",
        "1000003",
        "--mod-out",
        modp.to_str().unwrap(),
    ];
    assert!(tautrel(&cache, &args).status.success());
    let m = matrix_from_mtx(&std::fs::read_to_string(&mtx).unwrap()).unwrap();
    assert_eq!(m.ncols, basis.len());
    assert_eq!(std::fs::read_to_string(&jobs).unwrap().lines().count(), m.nrows());
    let reduced = matrix_from_mtx(&std::fs::read_to_string(&modp).unwrap()).unwrap();
    assert_eq!(reduced.nrows(), m.nrows());

    // deterministic, cached or not
    let first = std::fs::read(&mtx).unwrap();
    let mut fresh = args.to_vec();
    fresh.push("--no-cache");
    assert!(tautrel(&cache, &fresh).status.success());
    assert_eq!(std::fs::read(&mtx).unwrap(), first);
}

#[test]
fn rank_of_genus_two_four_markings_degree_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = tautrel(dir.path(), &["rank", "--genus", "2", "--markings", "4", "--degree", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["quotient"], 333);
}
