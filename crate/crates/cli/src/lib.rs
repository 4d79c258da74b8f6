//! Shared plumbing for the command-line tools.

use std::error::Error;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chronobench::harness::Report;
use chronobench::protocol::{EndpointSpec, ProtocolError, RemoteBackend};

pub type CliResult = Result<(), Box<dyn Error>>;

/// Prints the error chain and maps it to a non-zero exit code.
pub fn finish(result: CliResult) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

/// Connects to `stdio:<cmd>` or an `http(s)://` adapter.
pub fn connect(
    spec: &str,
    max_in_flight: usize,
    deadline: Duration,
    id_prefix: &str,
) -> Result<RemoteBackend, ProtocolError> {
    let endpoint = EndpointSpec::parse(spec)?.connect(max_in_flight)?;
    Ok(RemoteBackend::new(endpoint, deadline).with_id_prefix(id_prefix))
}

pub fn read_text(path: &Path) -> Result<String, Box<dyn Error>> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Box<dyn Error>> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()).into())
}

pub fn print_json(value: &impl serde::Serialize) -> CliResult {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// Sibling paths of a JSON report: `report.json` -> `report.csv`, `report.md`.
pub fn companion_paths(out: &Path) -> (PathBuf, PathBuf) {
    (out.with_extension("csv"), out.with_extension("md"))
}

/// Writes the report JSON plus the leaderboard CSV and Markdown table next to it.
pub fn write_report(report: &Report, out: &Path) -> io::Result<()> {
    let (csv, md) = companion_paths(out);
    fs::write(out, report.to_json())?;
    fs::write(csv, report.leaderboard_csv())?;
    fs::write(md, report.markdown_table())
}
