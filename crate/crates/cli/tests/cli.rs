use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn asjq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asjq")).args(args).output().unwrap()
}

fn flights_query() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/flights/flights.asjq")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_msc_paper_on_flights() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = (dir.path().join("out.csv"), dir.path().join("report.json"));
    let o = asjq(&[
        "run", "--query", p(&flights_query()), "--algo", "msc", "--mode", "paper",
        "--out", p(&out), "--report", p(&report),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let rows = std::fs::read_to_string(&out).unwrap();
    assert_eq!(rows.lines().count(), 5);
    assert!(rows.contains("14,24,3,4,4,3,300,205"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(report["phase2_candidates"], 3);
    assert_eq!(report["cardinality"], 4);
    assert_eq!(report["mode"], "paper_faithful");
}

#[test]
fn results_go_to_stdout_by_default() {
    let o = asjq(&["run", "--query", p(&flights_query()), "--algo", "naive"]);
    assert!(o.status.success());
    let out = text(&o.stdout);
    assert!(out.starts_with("left_id,right_id,"));
    assert_eq!(out.lines().count(), 5);
}

#[test]
fn generated_instance_checks_clean() {
    let dir = tempfile::tempdir().unwrap();
    let o = asjq(&[
        "gen", "--n", "200", "--local", "2", "--agg", "2", "--cats", "3", "--dist",
        "anticorrelated", "--seed", "8", "--joins", "eq-lt", "--out", p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let query = dir.path().join("query.asjq");
    let q = std::fs::read_to_string(&query).unwrap();
    assert!(q.contains("JOIN A.key EQ B.key, A.t LT B.t"), "{q}");
    for algo in ["iterative", "msc", "dominator", "auto"] {
        let o = asjq(&["check", "--query", p(&query), "--algo", algo, "--delta", "3", "--out", p(&dir.path().join("r.csv"))]);
        assert_eq!(o.status.code(), Some(0), "{algo}: {}", text(&o.stderr));
        assert!(text(&o.stderr).contains("matches the oracle"));
    }
}

#[test]
fn paper_mode_mismatch_is_reported_not_failed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--n", "300", "--dist", "anticorrelated", "--seed", "4", "--out", p(dir.path())];
    assert!(asjq(&args).status.success());
    let query = dir.path().join("query.asjq");
    let o = asjq(&["check", "--query", p(&query), "--algo", "iterative", "--mode", "paper", "--out", p(&dir.path().join("r.csv"))]);
    assert_eq!(o.status.code(), Some(0));
    let err = text(&o.stderr);
    assert!(err.contains("extra") && err.contains("is dominated by"), "{err}");
}

#[test]
fn bench_distribution_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let o = asjq(&[
        "bench", "--sweep", "D", "--values", "correlated,independent,anticorrelated", "--repeat",
        "2", "--n", "300", "--algos", "msc,iterative", "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["sweep_param", "sweep_value", "algo", "mode", "runtime_ms", "cardinality", "comparisons", "join_pairs", "seed"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3 * 2 * 2);
    let card = |v: &str| -> usize {
        rows.iter().filter(|r| &r[1] == v).map(|r| r[5].parse::<usize>().unwrap()).sum()
    };
    assert!(card("anticorrelated") > card("independent"));
    assert!(card("independent") > card("correlated"));
}

#[test]
fn exit_codes() {
    assert_eq!(asjq(&[]).status.code(), Some(2));
    assert_eq!(asjq(&["run"]).status.code(), Some(2));
    assert_eq!(asjq(&["run", "--query", p(&flights_query()), "--algo", "fastest"]).status.code(), Some(2));
    assert_eq!(asjq(&["bench", "--sweep", "Q", "--values", "1"]).status.code(), Some(2));
    assert_eq!(asjq(&["bench", "--sweep", "N", "--values", "ten"]).status.code(), Some(2));
    assert_eq!(asjq(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    assert_eq!(asjq(&["run", "--query", p(&dir.path().join("none.asjq"))]).status.code(), Some(3));
    let bad = dir.path().join("bad.asjq");
    std::fs::write(&bad, "RELATION A FROM a.csv\nRELATION B FROM b.csv\nJOIN A.x ~ B.y\n").unwrap();
    let o = asjq(&["run", "--query", p(&bad)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(text(&o.stderr).contains("3:10"), "{}", text(&o.stderr));

    // The flights query asks for two aggregates, so the single-aggregate path refuses it.
    let o = asjq(&["run", "--query", p(&flights_query()), "--algo", "single"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_relation_file_is_a_load_error() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.asjq");
    std::fs::write(
        &q,
        "RELATION A FROM a.csv\nRELATION B FROM b.csv\nJOIN A.k EQ B.k\nAGG g = SUM(A.g, B.g) PREF MIN\n",
    )
    .unwrap();
    let o = asjq(&["run", "--query", p(&q)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(text(&o.stderr).contains("a.csv"));
}
