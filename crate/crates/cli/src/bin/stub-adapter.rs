use std::io::{self, BufReader, BufWriter, Write};
use std::process::ExitCode;
use std::thread;
use std::time::Duration;

use chronobench::protocol::framing::{read_frame, write_frame};
use chronobench::protocol::stub;
use chronobench_cli::{finish, CliResult};
use clap::{Parser, ValueEnum};

/// Deterministic adapter for tests and dry runs. Answers are steered by
/// `key=value` options embedded in the video reference.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, value_enum, default_value_t = Mode::Stdio)]
    mode: Mode,
    /// Listen address for `--mode http`; the URL is printed on stdout.
    #[arg(long, default_value = "127.0.0.1:0")]
    addr: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Stdio,
    Http,
}

fn serve_stdio() -> CliResult {
    let mut input = BufReader::new(io::stdin().lock());
    let mut output = BufWriter::new(io::stdout().lock());
    while let Some(frame) = read_frame(&mut input)? {
        // A silent request simply gets no reply.
        if let Some(reply) = stub::respond(&frame) {
            write_frame(&mut output, &reply)?;
        }
    }
    Ok(())
}

fn serve_http(addr: &str) -> CliResult {
    let server = tiny_http::Server::http(addr).map_err(|e| format!("{addr}: {e}"))?;
    let bound = server
        .server_addr()
        .to_ip()
        .ok_or("server is not bound to an IP address")?;
    println!("http://{bound}/");
    io::stdout().flush()?;
    for mut request in server.incoming_requests() {
        thread::spawn(move || {
            let mut body = Vec::new();
            if request.as_reader().read_to_end(&mut body).is_err() {
                return;
            }
            match stub::respond(&body) {
                Some(reply) => {
                    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                    let _ = request.respond(tiny_http::Response::from_data(reply).with_header(header));
                }
                // Hold the connection open until the client gives up.
                None => loop {
                    thread::sleep(Duration::from_secs(3600));
                },
            }
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    finish(match args.mode {
        Mode::Stdio => serve_stdio(),
        Mode::Http => serve_http(&args.addr),
    })
}
