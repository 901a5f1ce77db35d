//! Client side of the subprocess oracle protocol.
//!
//! Newline-delimited JSON over the child's stdin/stdout:
//!
//! ```text
//! adapter -> engine   {"n": 10, "name": "my-model"}        (once, first)
//! engine  -> adapter  {"id": 0, "subset": [0, 3]}
//! adapter -> engine   {"id": 0, "value": 1.25}
//! ```
//!
//! Requests are pipelined and responses are matched by id, so an adapter
//! may answer out of order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use symq_core::{Error, Result, SubsetMask};

/// Environment variable holding the per-response timeout in milliseconds.
pub const TIMEOUT_ENV: &str = "SYMQ_ORACLE_TIMEOUT_MS";
pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

/// Requests written before the client starts draining responses.
const PIPELINE_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub n: usize,
    pub name: String,
}

#[derive(Debug, Serialize)]
struct Request<'a> {
    id: u64,
    subset: &'a [usize],
}

#[derive(Debug, Deserialize)]
struct Response {
    id: Option<u64>,
    value: Option<f64>,
    error: Option<String>,
}

/// Timeout from [`TIMEOUT_ENV`], falling back to the default.
pub fn timeout_from_env() -> Duration {
    let ms = std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_TIMEOUT_MS);
    Duration::from_millis(ms)
}

struct Wire {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

/// A connection to an adapter speaking the oracle protocol.
pub struct WireClient {
    wire: Mutex<Wire>,
    handshake: Handshake,
    timeout: Duration,
    child: Option<Mutex<Child>>,
}

impl std::fmt::Debug for WireClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WireClient")
            .field("handshake", &self.handshake)
            .field("timeout", &self.timeout)
            .finish_non_exhaustive()
    }
}

fn protocol(msg: impl Into<String>) -> Error {
    Error::OracleProtocol(msg.into())
}

impl WireClient {
    /// Starts `command` through the shell and reads its handshake.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Oracle(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = WireClient::from_streams(stdout, stdin, timeout)?;
        client.child = Some(Mutex::new(child));
        Ok(client)
    }

    /// Speaks the protocol over arbitrary streams.
    pub fn from_streams<R, W>(reader: R, writer: W, timeout: Duration) -> Result<Self>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut wire = Wire {
            writer: Box::new(writer),
            lines: rx,
            next_id: 0,
        };
        let first = next_line(&mut wire, timeout)?;
        let handshake: Handshake = serde_json::from_str(&first)
            .map_err(|e| protocol(format!("bad handshake `{first}`: {e}")))?;
        if handshake.n == 0 || handshake.n > 64 {
            return Err(protocol(format!("handshake n = {} outside 1..=64", handshake.n)));
        }
        Ok(WireClient {
            wire: Mutex::new(wire),
            handshake,
            timeout,
            child: None,
        })
    }

    pub fn handshake(&self) -> &Handshake {
        &self.handshake
    }

    /// Raw model outputs for `subsets`, in input order.
    pub fn request(&self, subsets: &[SubsetMask]) -> Result<Vec<f64>> {
        let mut wire = self.wire.lock().expect("wire lock poisoned");
        let mut out = Vec::with_capacity(subsets.len());
        for chunk in subsets.chunks(PIPELINE_CHUNK) {
            out.extend(self.request_chunk(&mut wire, chunk)?);
        }
        Ok(out)
    }

    fn request_chunk(&self, wire: &mut Wire, subsets: &[SubsetMask]) -> Result<Vec<f64>> {
        let first_id = wire.next_id;
        let mut buf = Vec::new();
        for (k, s) in subsets.iter().enumerate() {
            let indices: Vec<usize> = s.indices().collect();
            serde_json::to_writer(
                &mut buf,
                &Request {
                    id: first_id + k as u64,
                    subset: &indices,
                },
            )
            .expect("request serializes");
            buf.push(b'\n');
        }
        wire.next_id += subsets.len() as u64;
        wire.writer
            .write_all(&buf)
            .and_then(|_| wire.writer.flush())
            .map_err(|e| Error::Oracle(format!("cannot write to oracle: {e}")))?;

        let mut values: Vec<Option<f64>> = vec![None; subsets.len()];
        let mut pending = subsets.len();
        let mut by_id: HashMap<u64, usize> = HashMap::with_capacity(subsets.len());
        for k in 0..subsets.len() {
            by_id.insert(first_id + k as u64, k);
        }
        while pending > 0 {
            let line = next_line(wire, self.timeout)?;
            if line.trim().is_empty() {
                continue;
            }
            let r: Response = serde_json::from_str(&line)
                .map_err(|e| protocol(format!("bad response `{line}`: {e}")))?;
            let id = r.id.ok_or_else(|| protocol(format!("response without id: `{line}`")))?;
            let k = *by_id
                .get(&id)
                .ok_or_else(|| protocol(format!("response for unknown id {id}")))?;
            if let Some(msg) = r.error {
                return Err(protocol(format!("adapter error for id {id}: {msg}")));
            }
            let v = r
                .value
                .filter(|v| v.is_finite())
                .ok_or_else(|| protocol(format!("response {id} lacks a finite value")))?;
            if values[k].replace(v).is_some() {
                return Err(protocol(format!("duplicate response for id {id}")));
            }
            pending -= 1;
        }
        Ok(values.into_iter().map(|v| v.expect("all answered")).collect())
    }
}

fn next_line(wire: &mut Wire, timeout: Duration) -> Result<String> {
    match wire.lines.recv_timeout(timeout) {
        Ok(Ok(line)) => Ok(line),
        Ok(Err(e)) => Err(Error::Oracle(format!("cannot read from oracle: {e}"))),
        Err(RecvTimeoutError::Timeout) => Err(Error::OracleTimeout {
            millis: timeout.as_millis() as u64,
        }),
        Err(RecvTimeoutError::Disconnected) => Err(protocol("oracle closed its output")),
    }
}

impl Drop for WireClient {
    fn drop(&mut self) {
        if let Some(child) = &self.child {
            let mut child = child.lock().unwrap_or_else(|e| e.into_inner());
            // end-of-input is the adapter's signal to exit
            if let Ok(mut wire) = self.wire.lock() {
                wire.writer = Box::new(std::io::sink());
            }
            for _ in 0..20 {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
