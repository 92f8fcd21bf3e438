//! External classifier plug-ins.
//!
//! A plug-in is a child process speaking line-delimited JSON (protocol
//! version 1) on its standard input and output. One request per line, one
//! response per line:
//!
//! ```text
//! -> {"cmd":"handshake","protocol":1}          <- {"ok":true,"name":"..."}
//! -> {"cmd":"train","candidates":[..],"train":[{"label":0,"text":".."}],"val":[..],"config":{..}}
//!                                               <- {"ok":true}
//! -> {"cmd":"predict","texts":[".."]}          <- {"ok":true,"probs":[[..10 floats..]]}
//! -> {"cmd":"shutdown"}                        (child exits with status 0)
//! ```
//!
//! Standard error is inherited so plug-in logs reach the terminal.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::{ClassifierConfig, LyricistModel};
use crate::corpus::Corpus;
use crate::sampling::{ExperimentDataset, Split};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);
/// Tolerance on the sum of a returned probability vector.
const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PluginError {
    #[error("failed to spawn plug-in {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("plug-in reported an error: {0}")]
    Remote(String),
    #[error("plug-in exited with {0}")]
    Exit(String),
    #[error("plug-in did not answer {cmd:?} within {timeout:?}")]
    Timeout { cmd: String, timeout: Duration },
    #[error("plug-in i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize)]
struct Example<'a> {
    label: usize,
    text: &'a str,
}

/// A running plug-in process.
pub struct PluginClient {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    name: String,
}

impl PluginClient {
    /// Spawns `command` through `sh -c` and performs the handshake.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, PluginError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| PluginError::Spawn {
                command: command.to_string(),
                source,
            })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");

        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let eof = line.is_err();
                if tx.send(line).is_err() || eof {
                    break;
                }
            }
        });

        let mut client = PluginClient {
            child,
            stdin,
            lines,
            timeout,
            name: String::new(),
        };
        let reply = client
            .request("handshake", &json!({"cmd": "handshake", "protocol": PROTOCOL_VERSION}))
            .map_err(|e| PluginError::Handshake(e.to_string()))?;
        client.name = reply
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| PluginError::Handshake("reply has no \"name\"".into()))?
            .to_string();
        Ok(client)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn send(&mut self, message: &Value) -> Result<(), PluginError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| PluginError::Protocol("plug-in input already closed".into()))?;
        let mut line = serde_json::to_string(message).expect("json values serialize");
        line.push('\n');
        stdin.write_all(line.as_bytes())?;
        stdin.flush()?;
        Ok(())
    }

    fn receive(&mut self, cmd: &str) -> Result<Value, PluginError> {
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(line) => line?,
            Err(RecvTimeoutError::Timeout) => {
                let _ = self.child.kill();
                return Err(PluginError::Timeout {
                    cmd: cmd.to_string(),
                    timeout: self.timeout,
                });
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.child.wait()?;
                return Err(PluginError::Exit(format!("{status} before answering {cmd:?}")));
            }
        };
        let value: Value = serde_json::from_str(&line)
            .map_err(|e| PluginError::Protocol(format!("malformed reply to {cmd:?}: {e}: {line:?}")))?;
        match value.get("ok").and_then(Value::as_bool) {
            Some(true) => Ok(value),
            Some(false) => Err(PluginError::Remote(
                value
                    .get("error")
                    .map(|e| e.as_str().map_or_else(|| e.to_string(), String::from))
                    .unwrap_or_else(|| "unspecified".into()),
            )),
            None => Err(PluginError::Protocol(format!(
                "reply to {cmd:?} lacks a boolean \"ok\": {line:?}"
            ))),
        }
    }

    fn request(&mut self, cmd: &str, message: &Value) -> Result<Value, PluginError> {
        self.send(message)?;
        self.receive(cmd)
    }

    pub fn train(
        &mut self,
        candidates: &[&str],
        train: &[(&str, usize)],
        val: &[(&str, usize)],
        config: &ClassifierConfig,
    ) -> Result<(), PluginError> {
        let examples = |pairs: &[(&str, usize)]| -> Vec<Value> {
            pairs
                .iter()
                .map(|&(text, label)| serde_json::to_value(Example { label, text }).expect("serializable"))
                .collect()
        };
        let msg = json!({
            "cmd": "train",
            "candidates": candidates,
            "train": examples(train),
            "val": examples(val),
            "config": config,
        });
        self.request("train", &msg).map(|_| ())
    }

    pub fn predict(&mut self, texts: &[&str], n_classes: usize) -> Result<Vec<Vec<f64>>, PluginError> {
        let reply = self.request("predict", &json!({"cmd": "predict", "texts": texts}))?;
        let probs: Vec<Vec<f64>> = reply
            .get("probs")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| PluginError::Protocol(format!("\"probs\" is not a list of float lists: {e}")))?
            .ok_or_else(|| PluginError::Protocol("predict reply has no \"probs\"".into()))?;
        if probs.len() != texts.len() {
            return Err(PluginError::Protocol(format!(
                "{} probability vectors for {} texts",
                probs.len(),
                texts.len()
            )));
        }
        for p in &probs {
            let sum: f64 = p.iter().sum();
            if p.len() != n_classes
                || p.iter().any(|x| !(0.0..=1.0).contains(x))
                || (sum - 1.0).abs() > PROB_SUM_TOLERANCE
            {
                return Err(PluginError::Protocol(format!(
                    "invalid probability vector {p:?}"
                )));
            }
        }
        Ok(probs)
    }

    /// Sends `shutdown` and waits for a zero exit status.
    pub fn shutdown(mut self) -> Result<(), PluginError> {
        self.send(&json!({"cmd": "shutdown"}))?;
        self.stdin.take();
        let status = self.child.wait()?;
        if status.success() {
            Ok(())
        } else {
            Err(PluginError::Exit(status.to_string()))
        }
    }
}

impl Drop for PluginClient {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            if self.stdin.is_some() {
                let _ = self.send(&json!({"cmd": "shutdown"}));
                self.stdin.take();
            }
            // Give the child a moment to exit on its own.
            for _ in 0..50 {
                if let Ok(Some(_)) = self.child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(20));
            }
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

/// A model trained inside a plug-in process.
pub struct PluginModel {
    client: PluginClient,
    candidates: Vec<String>,
}

impl PluginModel {
    pub fn plugin_name(&self) -> &str {
        self.client.name()
    }

    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    pub fn shutdown(self) -> Result<(), PluginError> {
        self.client.shutdown()
    }
}

impl LyricistModel for PluginModel {
    fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    fn predict_batch(&mut self, texts: &[&str]) -> crate::Result<Vec<Vec<f64>>> {
        let n = self.candidates.len();
        Ok(self.client.predict(texts, n)?)
    }
}

/// Spawns a plug-in and trains it on `dataset`.
pub fn external_classifier(
    command: &str,
    dataset: &ExperimentDataset,
    corpus: &Corpus,
    config: &ClassifierConfig,
    timeout: Duration,
) -> crate::Result<PluginModel> {
    dataset.validate(corpus)?;
    let resolve = |split| -> crate::Result<Vec<(&str, usize)>> {
        dataset
            .labelled(split)
            .into_iter()
            .map(|(id, label)| {
                corpus
                    .song(id)
                    .map(|s| (s.lyrics.as_str(), label))
                    .ok_or_else(|| crate::Error::UnknownSong(id.to_string()))
            })
            .collect()
    };
    let train = resolve(Split::Train)?;
    let val = resolve(Split::Validation)?;

    let mut client = PluginClient::spawn(command, timeout)?;
    client.train(&dataset.candidate_ids(), &train, &val, config)?;
    Ok(PluginModel {
        client,
        candidates: dataset.candidate_ids().into_iter().map(String::from).collect(),
    })
}
