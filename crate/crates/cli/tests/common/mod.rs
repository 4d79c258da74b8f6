#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub const STUB: &str = env!("CARGO_BIN_EXE_stub-adapter");
pub const BENCH: &str = env!("CARGO_BIN_EXE_bench");
pub const MODELS: [&str; 3] = ["alpha", "beta", "gamma"];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// `(request, response)` byte strings of the recorded stub exchanges.
pub fn golden_exchanges() -> Vec<(String, String)> {
    let text = std::fs::read_to_string(fixtures().join("golden/stub_exchanges.jsonl")).unwrap();
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (
                v["request"].as_str().unwrap().to_string(),
                v["response"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

pub fn run(bin: &str, args: &[&str]) -> Output {
    Command::new(bin).args(args).output().unwrap()
}

/// `bench run` over one shipped model directory.
pub fn bench_run(model: &str, out: &Path) -> Output {
    let f = fixtures();
    run(
        BENCH,
        &[
            "run",
            "--manifest",
            f.join("bench.jsonl").to_str().unwrap(),
            "--run-root",
            f.join("runs").join(model).to_str().unwrap(),
            "--metrics",
            "chscore,mtscore",
            "--out",
            out.to_str().unwrap(),
        ],
    )
}

/// The stub adapter serving HTTP on an ephemeral port; killed on drop.
pub struct HttpStub {
    child: Child,
    pub url: String,
}

impl HttpStub {
    pub fn start() -> Self {
        let mut child = Command::new(STUB)
            .args(["--mode", "http"])
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        Self {
            child,
            url: line.trim().to_string(),
        }
    }
}

impl Drop for HttpStub {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
