//! End-to-end tests for every CLI path, using the shipped fixtures and
//! small synthetic stores.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn vql() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vql"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.env("VQL_COLOR", "never").output().expect("spawn vql")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

fn setup_store(dir: &Path) -> PathBuf {
    let store = dir.join("store.jsonl");
    let out = run(vql()
        .arg("ingest")
        .arg("--input")
        .arg(fixture("sysreq.jsonl"))
        .arg("--out")
        .arg(&store)
        .arg("--dict")
        .arg(format!("os={}", fixture("os.dict").display())));
    assert!(out.status.success(), "{}", stderr(&out));
    store
}

#[test]
fn ingest_validates_and_writes_the_canonical_store() {
    let dir = tempfile::tempdir().unwrap();
    let store = setup_store(dir.path());
    assert!(store.exists());
    assert!(dir.path().join("store.jsonl.dicts").exists());
}

#[test]
fn ingest_reports_parse_errors_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    let mut lines: Vec<String> = std::fs::read_to_string(fixture("sysreq.jsonl"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    lines[6] = "{\"page_id\": oops".to_string();
    std::fs::write(&bad, lines.join("\n")).unwrap();
    let out = run(vql()
        .arg("ingest")
        .arg("--input")
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("out.jsonl")));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 7"), "{}", stderr(&out));
}

#[test]
fn ingest_rejects_duplicate_region_ids() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("dup.jsonl");
    let row = r#"{"page_id":"p","region_id":"1","xl":0,"yl":0,"xh":10,"yh":10,"text_start":0,"text_end":1,"text":"x","html_tag":"div"}"#;
    std::fs::write(&bad, format!("{row}\n{row}\n")).unwrap();
    let out = run(vql()
        .arg("ingest")
        .arg("--input")
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("out.jsonl")));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("duplicate region id"), "{}", stderr(&out));
}

#[test]
fn query_results_are_identical_across_index_configurations() {
    let dir = tempfile::tempdir().unwrap();
    let store = setup_store(dir.path());
    let out_idx = run(vql().arg("index").arg("--store").arg(&store));
    assert!(out_idx.status.success(), "{}", stderr(&out_idx));

    let mut results = Vec::new();
    for config in ["all", "none", "text", "region"] {
        let out = run(vql()
            .arg("query")
            .arg("--store")
            .arg(&store)
            .arg("--query")
            .arg(fixture("queries/q4.vql"))
            .arg("--indices")
            .arg(config));
        assert!(out.status.success(), "{config}: {}", stderr(&out));
        results.push(stdout(&out));
    }
    assert!(results.windows(2).all(|w| w[0] == w[1]));
    assert!(results[0].contains("\"region_id\":\"1.4.2.2\""));

    // The naive evaluator agrees too.
    let out = run(vql()
        .arg("query")
        .arg("--store")
        .arg(&store)
        .arg("--query")
        .arg(fixture("queries/q4.vql"))
        .arg("--naive"));
    assert!(out.status.success());
    assert_eq!(stdout(&out), results[0]);
}

#[test]
fn query_with_params_and_csv_format() {
    let dir = tempfile::tempdir().unwrap();
    let store = setup_store(dir.path());
    let out = run(vql()
        .arg("query")
        .arg("--store")
        .arg(&store)
        .arg("--query")
        .arg(fixture("queries/q1.vql"))
        .arg("--param")
        .arg("n=3")
        .arg("--format")
        .arg("csv"));
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("page_id,"));
    assert!(text.contains("30,100,180,240"), "{text}");
}

#[test]
fn empty_results_still_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let store = setup_store(dir.path());
    let out = run(vql()
        .arg("query")
        .arg("--store")
        .arg(&store)
        .arg("--q")
        .arg("select R1.VisualSpan from Phrase('no such phrase anywhere', D) as R1"));
    assert!(out.status.success());
    assert_eq!(stdout(&out), "");
}

#[test]
fn broken_queries_exit_2_with_positions() {
    let dir = tempfile::tempdir().unwrap();
    let store = setup_store(dir.path());
    let out = run(vql()
        .arg("query")
        .arg("--store")
        .arg(&store)
        .arg("--q")
        .arg("select from"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("error[1:"), "{}", stderr(&out));

    let out = run(vql()
        .arg("query")
        .arg("--store")
        .arg(&store)
        .arg("--q")
        .arg("select R1.VisualSpan from Dict('missing', D) as R1"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown dictionary"));
}

#[test]
fn runtime_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // Two roots: a cross-root aligned group has no covering super region.
    let raw = dir.path().join("two_roots.jsonl");
    std::fs::write(
        &raw,
        concat!(
            r#"{"page_id":"p","region_id":"1","xl":0,"yl":0,"xh":100,"yh":50,"text_start":0,"text_end":2,"text":"aa","html_tag":"div"}"#,
            "\n",
            r#"{"page_id":"p","region_id":"2","xl":0,"yl":60,"xh":100,"yh":110,"text_start":2,"text_end":4,"text":"bb","html_tag":"div"}"#,
            "\n"
        ),
    )
    .unwrap();
    let out = run(vql()
        .arg("query")
        .arg("--store")
        .arg(&raw)
        .arg("--q")
        .arg(
            "select G.VisualSpan from R(D) as R1 \
             group vertically aligned(R1, agg=super) as G having Count(G) >= 2",
        ));
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("covers"), "{}", stderr(&out));
}

#[test]
fn explain_prints_access_paths() {
    let dir = tempfile::tempdir().unwrap();
    let store = setup_store(dir.path());
    let out = run(vql()
        .arg("explain")
        .arg("--store")
        .arg(&store)
        .arg("--query")
        .arg(fixture("queries/q2.vql")));
    assert!(out.status.success());
    assert!(stdout(&out).contains("text_index"));

    let out = run(vql()
        .arg("explain")
        .arg("--store")
        .arg(&store)
        .arg("--query")
        .arg(fixture("queries/q2.vql"))
        .arg("--indices")
        .arg("none"));
    assert!(stdout(&out).contains("full_scan"));
}

#[test]
fn emit_sql_writes_statement_to_stdout_and_warnings_to_stderr() {
    let out = run(vql()
        .arg("emit-sql")
        .arg("--query")
        .arg(fixture("queries/q3.vql"))
        .arg("--dict")
        .arg("os"));
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("MatchesDict(R1.text, 'os')"));
    assert!(stderr(&out).is_empty());

    let out = run(vql()
        .arg("emit-sql")
        .arg("--q")
        .arg("select R1.VisualSpan from Consolidate(R(D), overlap) as R1"));
    assert!(out.status.success());
    assert!(stderr(&out).contains("hybrid"));

    let out = run(vql()
        .arg("emit-sql")
        .arg("--strict")
        .arg("--q")
        .arg("select R1.VisualSpan from Consolidate(R(D), overlap) as R1"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_is_deterministic_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out_path in [&a, &b] {
        let out = run(vql()
            .arg("gen")
            .arg("--pages")
            .arg("3")
            .arg("--regions-per-page")
            .arg("40")
            .arg("--seed")
            .arg("11")
            .arg("--out")
            .arg(out_path));
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "same seed must give byte-identical stores"
    );
    let out = run(vql()
        .arg("query")
        .arg("--store")
        .arg(&a)
        .arg("--q")
        .arg("select R1.VisualSpan from Phrase('Operating Systems', D) as R1"));
    assert!(out.status.success());
    assert!(!stdout(&out).is_empty());
}

#[test]
fn stale_index_sidecars_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let store = setup_store(dir.path());
    let out = run(vql().arg("index").arg("--store").arg(&store));
    assert!(out.status.success());
    let idx = dir.path().join("store.jsonl.idx");
    let mut bytes = std::fs::read(&idx).unwrap();
    bytes[8] = 99; // version field
    std::fs::write(&idx, &bytes).unwrap();
    let out = run(vql()
        .arg("query")
        .arg("--store")
        .arg(&store)
        .arg("--query")
        .arg(fixture("queries/q2.vql")));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("version"), "{}", stderr(&out));
    assert!(stderr(&out).contains("rebuild"), "{}", stderr(&out));
}

#[test]
fn bench_times_configurations_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = run(vql()
        .arg("bench")
        .arg("--queries")
        .arg(fixture("queries"))
        .arg("--sizes")
        .arg("400")
        .arg("--regions-per-page")
        .arg("100")
        .arg("--seed")
        .arg("7")
        .arg("--runs")
        .arg("3")
        .arg("--param")
        .arg("n=3")
        .arg("--json")
        .arg(&report));
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    assert!(table.contains("median_ms"));
    assert!(table.contains("synth-400"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let records = report.as_array().unwrap();
    // 4 queries x 4 configurations.
    assert_eq!(records.len(), 16);
    // Cardinalities are equal across configurations for each query.
    for chunk in records.chunks(4) {
        let rows: Vec<u64> = chunk.iter().map(|r| r["rows"].as_u64().unwrap()).collect();
        assert!(rows.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn color_control_via_environment() {
    let dir = tempfile::tempdir().unwrap();
    let store = setup_store(dir.path());
    let out = vql()
        .arg("query")
        .arg("--store")
        .arg(&store)
        .arg("--q")
        .arg("select from")
        .env("VQL_COLOR", "always")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("\x1b[31m"));
}
