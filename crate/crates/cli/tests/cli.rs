use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const TIGHT: &str = r#"{"servers":2,"capacity":2,"threads":[
  {"breakpoints":[[0,0],[1,1],[2,1]]},
  {"breakpoints":[[0,0],[1,1],[2,1]]},
  {"breakpoints":[[0,0],[2,1]]}]}"#;

fn aa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aa"))
        .args(args)
        .env_remove("AA_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn tight_file(dir: &TempDir) -> String {
    let path = dir.path().join("tight.json");
    fs::write(&path, TIGHT).unwrap();
    path.to_str().unwrap().to_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn reads_back(p: &str) -> aa_core::Instance {
    aa_core::io::read_instance(fs::File::open(Path::new(p)).unwrap()).unwrap()
}

#[test]
fn oracle_on_tight_instance() {
    let dir = TempDir::new().unwrap();
    let out = aa(&[
        "solve",
        "--alg",
        "oracle",
        &tight_file(&dir),
        "--out",
        &path(&dir, "a.csv"),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().any(|l| l == "F*=3"));
}

#[test]
fn alg2_on_tight_instance() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "a.csv");
    let out = aa(&["solve", "--alg", "alg2", &tight_file(&dir), "--out", &csv]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().any(|l| l == "F=2.5"));
    assert!(text.lines().any(|l| l.starts_with("ratio_to_so=0.8333")));
    assert!(text.lines().any(|l| l == "lemmas=7/7"));

    let inst = aa_core::io::parse_instance(TIGHT).unwrap();
    let a = aa_core::io::read_assignment(fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(
        aa_core::verify_assignment(&inst, &a).unwrap().total_utility,
        2.5
    );
}

#[test]
fn randomized_solver_needs_a_seed() {
    let dir = TempDir::new().unwrap();
    let tight = tight_file(&dir);
    assert_eq!(aa(&["solve", "--alg", "ur", &tight]).status.code(), Some(1));
    let seeded = aa(&["solve", "--alg", "ur", "--seed", "5", &tight]);
    assert!(seeded.status.success());
    assert_eq!(
        seeded.stdout,
        aa(&["solve", "--alg", "ur", "--seed", "5", &tight]).stdout
    );
}

#[test]
fn seed_can_come_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_aa"))
        .args(["solve", "--alg", "rr", &tight_file(&dir)])
        .env("AA_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn invalid_instance_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    fs::write(
        &bad,
        r#"{"servers":1,"capacity":2,"threads":[{"breakpoints":[[0,0],[1,1],[2,3]]}]}"#,
    )
    .unwrap();
    let out = aa(&["solve", "--alg", "alg2", &bad]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_uniform_has_beta_times_m_threads() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "u.json");
    let out = aa(&[
        "gen",
        "--dist",
        "uniform",
        "--m",
        "8",
        "--beta",
        "5",
        "--capacity",
        "1000",
        "--seed",
        "7",
        "--out",
        &file,
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("n=40"));
    let inst = reads_back(&file);
    assert_eq!(inst.len(), 40);
    assert_eq!(inst.servers(), 8);
    assert_eq!(inst.capacity(), 1000);
}

#[test]
fn gen_is_deterministic() {
    let args = [
        "gen",
        "--dist",
        "normal",
        "--m",
        "2",
        "--beta",
        "3",
        "--capacity",
        "100",
        "--seed",
        "11",
    ];
    let first = aa(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, aa(&args).stdout);
}

#[test]
fn gen_discrete_echoes_parameters() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "d.json");
    let out = aa(&[
        "gen",
        "--dist",
        "discrete",
        "--gamma",
        "0.85",
        "--theta",
        "5",
        "--m",
        "4",
        "--beta",
        "2",
        "--capacity",
        "100",
        "--seed",
        "3",
        "--out",
        &file,
    ]);
    assert!(out.status.success());
    let inst = reads_back(&file);
    let dist = &inst.metadata()["generator"]["dist"];
    assert_eq!(dist["kind"], "discrete");
    assert_eq!(dist["gamma_prob"], 0.85);
    assert_eq!(dist["theta"], 5.0);
}

#[test]
fn gen_rejects_odd_capacity() {
    let out = aa(&[
        "gen",
        "--dist",
        "uniform",
        "--m",
        "2",
        "--beta",
        "1",
        "--capacity",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("even"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(aa(&["gen", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        aa(&["solve", "--alg", "nope", "x.json"]).status.code(),
        Some(1)
    );
}

#[test]
fn reduce_verdicts() {
    let yes = aa(&["reduce", "--partition", "2,4,6", "--solve"]);
    assert!(yes.status.success());
    assert!(stdout(&yes).lines().any(|l| l == "PARTITION-EXISTS"));

    let no = aa(&["reduce", "--partition", "2,2,6", "--solve"]);
    assert!(no.status.success());
    assert!(stdout(&no).lines().any(|l| l == "NO-PARTITION"));

    assert_eq!(aa(&["reduce", "--partition", "1,2"]).status.code(), Some(2));
}

#[test]
fn reduce_writes_a_valid_instance() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "r.json");
    assert!(
        aa(&["reduce", "--partition", "3,1,1,2,2,1", "--out", &file])
            .status
            .success()
    );
    let inst = reads_back(&file);
    assert_eq!((inst.servers(), inst.capacity(), inst.len()), (2, 5, 6));
}

#[test]
fn bench_is_byte_identical_across_runs_and_jobs() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str, jobs: &str| {
        let (r, s) = (
            path(&dir, &format!("r{tag}.csv")),
            path(&dir, &format!("s{tag}.csv")),
        );
        let out = aa(&[
            "bench",
            "--dist",
            "powerlaw",
            "--alpha",
            "2",
            "--m",
            "4",
            "--capacity",
            "100",
            "--beta",
            "1:3",
            "--trials",
            "5",
            "--seed",
            "1",
            "--jobs",
            jobs,
            "--out",
            &r,
            "--aggregate",
            &s,
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        (fs::read(r).unwrap(), fs::read(s).unwrap())
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));

    let results = String::from_utf8(a.0).unwrap();
    let summary = String::from_utf8(a.1).unwrap();
    assert_eq!(
        results.lines().next(),
        Some("dist,beta,trial,seed,algorithm,utility,so_value,ratio_to_so")
    );
    assert_eq!(
        summary.lines().next(),
        Some("dist,beta,algorithm,mean_ratio_to_so,stderr,mean_alg2_over_this")
    );
    // 3 cells, 5 algorithms, 5 trials.
    assert_eq!(results.lines().count(), 1 + 3 * 5 * 5);
    assert_eq!(summary.lines().count(), 1 + 3 * 5);
}

#[test]
fn bench_oracle_guard() {
    let dir = TempDir::new().unwrap();
    let out = aa(&[
        "bench",
        "--dist",
        "uniform",
        "--m",
        "8",
        "--capacity",
        "100",
        "--beta",
        "1",
        "--trials",
        "2",
        "--algs",
        "alg2,oracle",
        "--out",
        &path(&dir, "r.csv"),
        "--aggregate",
        &path(&dir, "s.csv"),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bench_on_a_fixed_instance() {
    let dir = TempDir::new().unwrap();
    let s = path(&dir, "s.csv");
    let out = aa(&[
        "bench",
        "--instance",
        &tight_file(&dir),
        "--trials",
        "2",
        "--algs",
        "alg2,oracle",
        "--out",
        &path(&dir, "r.csv"),
        "--aggregate",
        &s,
    ]);
    assert!(out.status.success());
    let summary = fs::read_to_string(s).unwrap();
    assert!(summary
        .lines()
        .any(|l| l.starts_with("fixed,1.5,alg2,0.8333")));
}
