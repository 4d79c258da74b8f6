use std::collections::{BTreeMap, HashMap};
use std::io::{BufReader, BufWriter};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::Deserialize;

use super::framing::{read_frame, write_frame};
use super::{Endpoint, ProtocolError};
use crate::pool::Semaphore;

type Reply = Result<Vec<u8>, ProtocolError>;

#[derive(Default)]
struct Pending {
    seq: u64,
    // request_id -> (arrival order, reply channel)
    waiting: HashMap<String, (u64, Sender<Reply>)>,
    closed: bool,
}

impl Pending {
    fn oldest(&self) -> Option<String> {
        let by_age: BTreeMap<u64, &String> = self.waiting.iter().map(|(k, (s, _))| (*s, k)).collect();
        by_age.values().next().map(|k| (*k).clone())
    }
}

/// Adapter subprocess speaking framed JSON on stdin/stdout.
///
/// Several requests may be in flight at once (bounded by `max_in_flight`);
/// a reader thread routes each response to its caller by `request_id`.
pub struct StdioEndpoint {
    child: Mutex<Child>,
    stdin: Mutex<BufWriter<ChildStdin>>,
    pending: Arc<Mutex<Pending>>,
    permits: Semaphore,
    reader: Option<JoinHandle<()>>,
}

#[derive(Deserialize)]
struct IdOnly {
    request_id: String,
}

impl StdioEndpoint {
    pub fn spawn(program: &str, args: &[String], max_in_flight: usize) -> Result<Self, ProtocolError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ProtocolError::Unreachable(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let pending = Arc::new(Mutex::new(Pending::default()));

        let routes = Arc::clone(&pending);
        let reader = std::thread::spawn(move || {
            let mut stdout = BufReader::new(stdout);
            // Runs until EOF or a broken frame.
            while let Ok(Some(frame)) = read_frame(&mut stdout) {
                let mut p = routes.lock().unwrap();
                match serde_json::from_slice::<IdOnly>(&frame) {
                    Ok(IdOnly { request_id }) if p.waiting.contains_key(&request_id) => {
                        let (_, tx) = p.waiting.remove(&request_id).unwrap();
                        let _ = tx.send(Ok(frame));
                    }
                    // Unroutable replies are charged to the oldest caller so a
                    // misbehaving adapter surfaces as an error, not a timeout.
                    parsed => {
                        if let Some(oldest) = p.oldest() {
                            let (_, tx) = p.waiting.remove(&oldest).unwrap();
                            let err = match parsed {
                                Ok(IdOnly { request_id }) => ProtocolError::RequestIdMismatch {
                                    expected: oldest,
                                    got: request_id,
                                },
                                Err(e) => ProtocolError::Schema(format!("response: {e}")),
                            };
                            let _ = tx.send(Err(err));
                        }
                    }
                }
            }
            let mut p = routes.lock().unwrap();
            p.closed = true;
            for (_, (_, tx)) in p.waiting.drain() {
                let _ = tx.send(Err(ProtocolError::Closed));
            }
        });

        Ok(Self {
            child: Mutex::new(child),
            stdin: Mutex::new(BufWriter::new(stdin)),
            pending,
            permits: Semaphore::new(max_in_flight),
            reader: Some(reader),
        })
    }
}

impl Endpoint for StdioEndpoint {
    fn exchange(&self, request_id: &str, request: &[u8], deadline: Duration) -> Result<Vec<u8>, ProtocolError> {
        let _permit = self.permits.acquire();
        let (tx, rx) = mpsc::channel();
        {
            let mut p = self.pending.lock().unwrap();
            if p.closed {
                return Err(ProtocolError::Closed);
            }
            if p.waiting.contains_key(request_id) {
                return Err(ProtocolError::Schema(format!(
                    "request_id `{request_id}` already in flight"
                )));
            }
            p.seq += 1;
            let seq = p.seq;
            p.waiting.insert(request_id.to_string(), (seq, tx));
        }
        let written = {
            let mut stdin = self.stdin.lock().unwrap();
            write_frame(&mut *stdin, request)
        };
        if let Err(e) = written {
            self.pending.lock().unwrap().waiting.remove(request_id);
            return Err(ProtocolError::Framing(format!("write: {e}")));
        }
        match rx.recv_timeout(deadline) {
            Ok(reply) => reply,
            Err(RecvTimeoutError::Timeout) => {
                self.pending.lock().unwrap().waiting.remove(request_id);
                Err(ProtocolError::Timeout {
                    request_id: request_id.to_string(),
                    millis: deadline.as_millis() as u64,
                })
            }
            Err(RecvTimeoutError::Disconnected) => Err(ProtocolError::Closed),
        }
    }
}

impl Drop for StdioEndpoint {
    fn drop(&mut self) {
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
            let _ = child.wait();
        }
        if let Some(reader) = self.reader.take() {
            let _ = reader.join();
        }
    }
}
