use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use lyricist_entropy::classifier::plugin::{PluginClient, PluginError};
use lyricist_entropy::classifier::ClassifierConfig;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn mock(mode: &str) -> String {
    format!("python3 {} {mode}", fixtures().join("mock_plugin.py").display())
}

const SHORT: Duration = Duration::from_secs(20);

struct Session {
    candidates: Vec<String>,
    train: Vec<(String, usize)>,
    val: Vec<(String, usize)>,
    test: Vec<String>,
}

fn session() -> Session {
    let candidates = (0..10).map(|i| format!("L{i:04}")).collect();
    let train = (0..10).map(|i| (format!("marker{i} common words"), i)).collect();
    let val = (0..10).map(|i| (format!("marker{i} other"), i)).collect();
    let test = vec!["marker3 common".to_string(), "marker7 \"quoted\" 愛".to_string(), String::new()];
    Session {
        candidates,
        train,
        val,
        test,
    }
}

fn borrow(pairs: &[(String, usize)]) -> Vec<(&str, usize)> {
    pairs.iter().map(|(t, l)| (t.as_str(), *l)).collect()
}

/// Runs one full session; returns the predicted probabilities.
fn drive(command: &str) -> Result<Vec<Vec<f64>>, PluginError> {
    let s = session();
    let mut client = PluginClient::spawn(command, SHORT)?;
    let candidates: Vec<&str> = s.candidates.iter().map(String::as_str).collect();
    client.train(&candidates, &borrow(&s.train), &borrow(&s.val), &ClassifierConfig::default())?;
    let texts: Vec<&str> = s.test.iter().map(String::as_str).collect();
    let probs = client.predict(&texts, candidates.len())?;
    client.shutdown()?;
    Ok(probs)
}

#[test]
fn full_session_with_mock() {
    let probs = drive(&mock("ok")).unwrap();
    assert_eq!(probs.len(), 3);
    for p in &probs {
        assert_eq!(p.len(), 10);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let argmax = |p: &Vec<f64>| lyricist_entropy::evaluation::argmax(p);
    assert_eq!(argmax(&probs[0]), 3);
    assert_eq!(argmax(&probs[1]), 7);
}

#[test]
fn requests_match_golden_transcript() {
    let golden = fixtures().join("plugin_transcript.jsonl");
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("requests.jsonl");
    let command = format!("{} {}", mock("ok"), log.display());

    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        // Regenerate by interleaving requests with the mock's replies.
        let transcript = dir.path().join("replies.jsonl");
        let tee = format!("{command} | tee {}", transcript.display());
        drive(&tee).unwrap();
        let requests = fs::read_to_string(&log).unwrap();
        let replies = fs::read_to_string(&transcript).unwrap();
        let mut out = String::new();
        let mut replies = replies.lines();
        for req in requests.lines() {
            out.push_str(&format!("> {req}\n"));
            if !req.contains("\"shutdown\"") {
                out.push_str(&format!("< {}\n", replies.next().unwrap()));
            }
        }
        fs::write(&golden, out).unwrap();
    }

    drive(&command).unwrap();
    let sent = fs::read_to_string(&log).unwrap();
    let expected: String = fs::read_to_string(&golden)
        .unwrap()
        .lines()
        .filter_map(|l| l.strip_prefix("> "))
        .map(|l| format!("{l}\n"))
        .collect();
    assert_eq!(sent, expected);
}

#[test]
fn replaying_golden_replies_reproduces_predictions() {
    let golden = fixtures().join("plugin_transcript.jsonl");
    let command = format!("python3 {} replay {}", fixtures().join("mock_plugin.py").display(), golden.display());
    let replayed = drive(&command).unwrap();
    assert_eq!(replayed, drive(&mock("ok")).unwrap());
}

fn expect_err(mode: &str) -> PluginError {
    drive(&mock(mode)).expect_err(mode)
}

#[test]
fn handshake_failures() {
    assert!(matches!(expect_err("no-name"), PluginError::Handshake(_)));
    assert!(matches!(expect_err("bad-version"), PluginError::Handshake(_)));
    let err = drive("exit 5").unwrap_err();
    assert!(matches!(err, PluginError::Handshake(_)), "{err}");
}

#[test]
fn protocol_violations() {
    for mode in ["garbage", "no-ok", "bad-probs", "wrong-count", "wrong-width"] {
        assert!(matches!(expect_err(mode), PluginError::Protocol(_)), "{mode}");
    }
}

#[test]
fn remote_error_and_exit_status() {
    match expect_err("remote-error") {
        PluginError::Remote(msg) => assert_eq!(msg, "out of memory"),
        e => panic!("{e}"),
    }
    assert!(matches!(expect_err("crash"), PluginError::Exit(_)));
    assert!(matches!(expect_err("bad-exit"), PluginError::Exit(_)));
}

#[test]
fn timeout_kills_slow_plugin() {
    let s = session();
    let mut client = PluginClient::spawn(&mock("sleep"), Duration::from_millis(500)).unwrap();
    let candidates: Vec<&str> = s.candidates.iter().map(String::as_str).collect();
    let start = Instant::now();
    let err = client
        .train(&candidates, &borrow(&s.train), &borrow(&s.val), &ClassifierConfig::default())
        .unwrap_err();
    assert!(matches!(err, PluginError::Timeout { .. }), "{err}");
    assert!(start.elapsed() < Duration::from_secs(10));
}

#[test]
fn missing_executable_is_reported() {
    let err = drive("/nonexistent/plugin-binary").unwrap_err();
    assert!(matches!(err, PluginError::Handshake(_)), "{err}");
}
