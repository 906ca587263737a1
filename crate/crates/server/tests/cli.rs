use std::io::{BufRead, BufReader};
use std::net::TcpListener;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde_json::Value;
use v2v_core::store::ImportBundle;
use v2v_core::synth::small_fixture;

fn v2v() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_v2v"));
    cmd.env_remove("DATA_DIR").env_remove("AUTH_PLANNER_TOKEN").env("RUST_LOG", "warn");
    cmd
}

#[test]
fn validate_reports_dangling_references() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    let bad = dir.path().join("bad.json");
    let text = ImportBundle::from_corpus(&small_fixture()).to_text();
    std::fs::write(&good, &text).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["voices"][0]["topic_ids"] = serde_json::json!(["no-such-topic"]);
    std::fs::write(&bad, doc.to_string()).unwrap();

    let ok = v2v().args(["validate", "--file"]).arg(&good).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let out = v2v().args(["validate", "--file"]).arg(&bad).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error: voices/") && stderr.contains("no-such-topic"), "{stderr}");
}

#[test]
fn import_then_export_reproduces_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bundle.json");
    let data = dir.path().join("data");
    let text = ImportBundle::from_corpus(&small_fixture()).to_text();
    std::fs::write(&file, &text).unwrap();

    let out = v2v().args(["import", "--file"]).arg(&file).arg("--data-dir").arg(&data).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("voices: 24 in bundle, 24 created"));

    let out = v2v().arg("export").arg("--data-dir").arg(&data).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);

    // a failing import leaves the stored dataset alone
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["events"][0]["phase_id"] = serde_json::json!("nowhere");
    std::fs::write(&file, doc.to_string()).unwrap();
    let out = v2v().args(["import", "--merge", "--file"]).arg(&file).arg("--data-dir").arg(&data).output().unwrap();
    assert!(!out.status.success());
    let out = v2v().arg("export").arg("--data-dir").arg(&data).output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
}

#[test]
fn report_on_an_empty_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = v2v().args(["report", "--json", "--data-dir"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n_records"], 0);
    let out = v2v().args(["report", "--from", "2025-02-01", "--to", "2025-01-01", "--data-dir"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn serve_answers_http() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle.json");
    std::fs::write(&bundle, ImportBundle::from_corpus(&small_fixture()).to_text()).unwrap();
    let data = dir.path().join("data");
    assert!(v2v().args(["import", "--file"]).arg(&bundle).arg("--data-dir").arg(&data).output().unwrap().status.success());

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = v2v()
        .args(["serve", "--bind", "127.0.0.1", "--port", &port.to_string(), "--data-dir"])
        .arg(&data)
        .env("AUTH_PLANNER_TOKEN", "t0ken")
        .env("RUST_LOG", "info")
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let deadline = Instant::now() + Duration::from_secs(30);
    while Instant::now() < deadline {
        match lines.next() {
            Some(Ok(line)) if line.contains("listening on") => break,
            Some(_) => continue,
            None => panic!("server exited before listening"),
        }
    }
    let client = reqwest::blocking::Client::new();
    let r = client.get(format!("http://127.0.0.1:{port}/api/project")).send().unwrap();
    assert_eq!(r.status(), 200);
    assert_eq!(r.json::<Value>().unwrap()["stats"]["total_voices"], 24);
    let r = client
        .get(format!("http://127.0.0.1:{port}/api/admin/export"))
        .header("authorization", "Bearer t0ken")
        .send()
        .unwrap();
    assert_eq!(r.status(), 200);
    child.kill().unwrap();
    child.wait().unwrap();
}
