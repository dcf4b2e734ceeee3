use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use ehr_core::netconfig::{EXAMPLE_TOML, LOCK_FILE};
use ehr_core::txflow::Invocation;
use ehr_core::{Network, SystemClock};
use ehr_core::ledger::{rich_query, Selector};
use serde_json::{json, Value};

fn ehrnet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehrnet"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "off")
        .env_remove("EHRNET_ADMIN_SECRET")
        .env_remove("EHRNET_PASSWORD")
        .output()
        .expect("run ehrnet")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn bootstrapped() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("net.toml"), EXAMPLE_TOML).unwrap();
    let out = ehrnet(&["bootstrap", "--config", "net.toml", "--data-dir", "data"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    tmp
}

#[test]
fn bootstrap_then_verify() {
    let tmp = bootstrapped();
    let out = ehrnet(&["verify-chain", "--data-dir", "data"], tmp.path());
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("channel1: ok, 3 blocks"), "{}", stdout(&out));

    let again = ehrnet(&["bootstrap", "--config", "net.toml", "--data-dir", "data"], tmp.path());
    assert_eq!(code(&again), 1, "second bootstrap must be refused");

    let missing = ehrnet(&["verify-chain", "--data-dir", "data", "--channel", "nope"], tmp.path());
    assert_eq!(code(&missing), 1);
}

#[test]
fn invalid_config_is_a_validation_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = EXAMPLE_TOML.replace("members = [\"Org1\", \"Org2\"]", "members = [\"Org1\", \"Org9\"]");
    assert_ne!(bad, EXAMPLE_TOML);
    fs::write(tmp.path().join("bad.toml"), bad).unwrap();
    let out = ehrnet(&["bootstrap", "--config", "bad.toml", "--data-dir", "data"], tmp.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Org9"));
    assert!(!tmp.path().join("data").exists(), "failed bootstrap left files behind");

    let unreadable = ehrnet(&["bootstrap", "--config", "absent.toml", "--data-dir", "data"], tmp.path());
    assert_eq!(code(&unreadable), 1);
    let usage = ehrnet(&["enroll", "--role", "nurse"], tmp.path());
    assert_eq!(code(&usage), 1);
}

#[test]
fn enroll_requires_the_admin_secret() {
    let tmp = bootstrapped();
    let doctor = [
        "enroll", "--data-dir", "data", "--role", "doctor", "--id", "DOC003", "--name", "Dr. Ines Duarte",
        "--department", "Oncology", "--password", "ines-pass-1",
    ];
    let out = ehrnet(&doctor, tmp.path());
    assert_eq!(code(&out), 1, "enroll without a secret");
    let mut wrong = doctor.to_vec();
    wrong.extend(["--admin-secret", "guess"]);
    assert_eq!(code(&ehrnet(&wrong, tmp.path())), 1);

    let mut ok = doctor.to_vec();
    ok.extend(["--admin-secret", "change-me"]);
    let out = ehrnet(&ok, tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("enrolled DOC003 as doctor in Org1"));
    assert_eq!(code(&ehrnet(&ok, tmp.path())), 1, "duplicate subject");

    let no_name = ["enroll", "--data-dir", "data", "--role", "doctor", "--id", "DOC004", "--admin-secret", "change-me"];
    assert_eq!(code(&ehrnet(&no_name, tmp.path())), 1);

    // the directory entry is visible to a rich query
    let net = Network::open(&tmp.path().join("data"), Arc::new(SystemClock)).unwrap();
    let ledger = net.ehr_channel().unwrap().ledger();
    let doctors = rich_query(ledger.state(), "ehr", &Selector::all().eq("docType", json!("doctor")));
    let ids: Vec<&str> = doctors
        .iter()
        .filter_map(|(_, d)| d.get("doctorId").and_then(Value::as_str))
        .collect();
    assert_eq!(ids, ["DOC003"]);
    assert_eq!(doctors[0].1.get("department"), Some(&json!("Oncology")));
}

#[test]
fn seed_demo_and_patient_enrollment() {
    let tmp = bootstrapped();
    let out = ehrnet(&["seed-demo", "--data-dir", "data", "--admin-secret", "change-me"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let patient = [
        "enroll", "--data-dir", "data", "--role", "patient", "--id", "PID010", "--admin-secret", "change-me",
        "--password", "pid010-pass", "--personal",
    ];
    let mut bad = patient.to_vec();
    bad.push("[1, 2]");
    assert_eq!(code(&ehrnet(&bad, tmp.path())), 1);
    let mut good = patient.to_vec();
    good.push(r#"{"firstName":"Lea","lastName":"Moreau"}"#);
    assert_eq!(code(&ehrnet(&good, tmp.path())), 0);

    let net = Network::open(&tmp.path().join("data"), Arc::new(SystemClock)).unwrap();
    let all = net.query_as("ADMIN001", Invocation::new("ehr", "queryAllPatients")).unwrap();
    let ids: Vec<&str> = all.as_array().unwrap().iter().filter_map(|p| p["patientId"].as_str()).collect();
    assert_eq!(ids, ["PID002", "PID003", "PID004", "PID010"]);
    let own: Value = net
        .query_as("PID010", Invocation::new("ehr", "readPatient").arg("PID010"))
        .unwrap();
    assert_eq!(own["personal"]["lastName"], "Moreau");
}

#[test]
fn locked_data_dir_is_a_runtime_failure() {
    let tmp = bootstrapped();
    fs::write(tmp.path().join("data").join(LOCK_FILE), b"").unwrap();
    let out = ehrnet(&["seed-demo", "--data-dir", "data", "--admin-secret", "change-me"], tmp.path());
    assert_eq!(code(&out), 2);
    // verification reads the logs directly and works while a server runs
    assert_eq!(code(&ehrnet(&["verify-chain", "--data-dir", "data"], tmp.path())), 0);
}

#[test]
fn tampered_log_fails_verification() {
    let tmp = bootstrapped();
    let log = tmp.path().join("data/channels/channel1/blocks.log");
    let mut bytes = fs::read(&log).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    fs::write(&log, bytes).unwrap();
    let out = ehrnet(&["verify-chain", "--data-dir", "data"], tmp.path());
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("channel1: FAILED"));
}

#[test]
fn example_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ehrnet(&["example-config"], tmp.path());
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), EXAMPLE_TOML);
}

#[test]
fn serve_answers_over_tcp() {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpStream;
    use std::process::Stdio;

    let tmp = bootstrapped();
    let mut child = Command::new(env!("CARGO_BIN_EXE_ehrnet"))
        .args(["serve", "--data-dir", "data", "--bind", "127.0.0.1:0"])
        .current_dir(tmp.path())
        .env("RUST_LOG", "info")
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let addr = loop {
        let line = lines.next().expect("server exited").unwrap();
        if let Some((_, addr)) = line.split_once("gateway listening on ") {
            break addr.trim().to_owned();
        }
    };
    let mut stream = TcpStream::connect(&addr).unwrap();
    let body = r#"{"id":"ADMIN001","password":"change-me"}"#;
    write!(
        stream,
        "POST /auth/login HTTP/1.1\r\nhost: {addr}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains(r#""role":"admin""#), "{response}");
}
