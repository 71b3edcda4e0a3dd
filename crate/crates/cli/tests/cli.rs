use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use topks_service::{load_dataset, serve, AppState, ServiceConfig};

const SMALL: [&str; 8] = [
    "--synth-users",
    "300",
    "--synth-items",
    "400",
    "--synth-tags",
    "120",
    "--synth-triples",
    "5000",
];

fn topks(args: &[&str]) -> (String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_topks")).args(args).output().unwrap();
    let (stdout, stderr) = (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    );
    assert!(out.status.success(), "topks {args:?} failed: {stderr}");
    (stdout, stderr)
}

fn records(text: &str) -> Vec<serde_json::Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn precision_writes_one_record_per_length() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.jsonl");
    let mut args = vec![
        "precision",
        "--sample",
        "30",
        "--lengths",
        "1,3",
        "--theta",
        "p33",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend(SMALL);
    topks(&args);
    let recs = records(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0]["experiment"], "precision");
    assert_eq!(recs[0]["l"], 1);
    assert_eq!(recs[1]["l"], 3);
    assert_eq!(recs[0]["sample"], 30);
    assert_eq!(recs[0]["theta"]["percentile"], 33.0);
    assert!(recs[0]["theta_weight"].as_f64().unwrap() > 0.0);
    let p = &recs[1]["precision"];
    assert!(p["1"].as_f64().unwrap() <= p["5"].as_f64().unwrap());
}

#[test]
fn ndcg_and_scale_print_reports() {
    let mut args = vec!["ndcg", "--sample", "10", "--visited", "5,50", "--times-ms", "1"];
    args.extend(SMALL);
    let (stdout, _) = topks(&args);
    let recs = records(&stdout);
    // Two lengths, three checkpoints plus termination.
    assert_eq!(recs.len(), 8);
    assert!(recs
        .iter()
        .filter(|r| r["checkpoint"] == "termination")
        .all(|r| r["mean_ndcg"] == 1.0));

    let mut args = vec!["scale", "--sample", "5", "--chunks", "2", "--lengths", "3"];
    args.extend(SMALL);
    let (stdout, stderr) = topks(&args);
    assert_eq!(records(&stdout).len(), 2);
    assert!(stderr.contains("l=3"), "{stderr}");
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn synth_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let mut args = vec!["synth", "--seed", "4", "--out", d.path().to_str().unwrap()];
        args.extend(SMALL);
        topks(&args);
    }
    assert_eq!(read(&a.path().join("triples.tsv")), read(&b.path().join("triples.tsv")));
    assert_eq!(read(&a.path().join("edges.tsv")), read(&b.path().join("edges.tsv")));
    assert_eq!(read(&a.path().join("triples.tsv")).lines().count(), 5000);
}

#[test]
fn bad_flags_fail() {
    let out = Command::new(env!("CARGO_BIN_EXE_topks"))
        .args(["precision", "--theta", "2"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_topks"))
        .args(["precision", "--network", "bogus"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn serve_prep_output_serves_queries() {
    let raw = tempfile::tempdir().unwrap();
    let mut args = vec!["synth", "--out", raw.path().to_str().unwrap()];
    args.extend(SMALL);
    topks(&args);
    let prepped = tempfile::tempdir().unwrap();
    let triples = raw.path().join("triples.tsv");
    let edges = raw.path().join("edges.tsv");
    topks(&[
        "serve-prep",
        "--triples",
        triples.to_str().unwrap(),
        "--edges",
        edges.to_str().unwrap(),
        "--network",
        "social",
        "--theta",
        "0.1",
        "--out",
        prepped.path().to_str().unwrap(),
    ]);
    let cfg = ServiceConfig::load(&prepped.path().join("service.conf")).unwrap();
    let ds = load_dataset(&cfg).unwrap();
    assert!(ds.graph().edges().all(|(_, _, w)| w >= 0.1));
    let seeker = ds.corpus().user_name(ds.corpus().triples()[0].user).to_string();
    let tag = ds.corpus().tag_name(ds.corpus().triples()[0].tag).to_string();

    let state = AppState::new(Arc::new(ds), cfg);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, state));

    let text = format!("{} x", &tag[..2]);
    let out = tokio::task::spawn_blocking(move || {
        topks(&[
            "query",
            "--server",
            &format!("http://{addr}"),
            "--seeker",
            &seeker,
            "--alpha",
            "0.5",
            &text,
        ])
        .0
    })
    .await
    .unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(
        lines[1].split('\t').nth(4).is_some_and(|items| !items.is_empty()),
        "{out}"
    );
}
