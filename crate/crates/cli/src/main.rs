mod cli;
mod cmd;
mod loops;
mod report;

use std::io::Write;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use cli::{Cli, Command};

fn emit(summary: &serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{summary}");
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            if code != 0 {
                emit(&json!({ "status": "error", "message": e.kind().to_string() }));
            }
            std::process::exit(code);
        }
    };

    let clock = Instant::now();
    let done = match &cli.command {
        Command::Run(a) => cmd::run::execute(a, cli.no_timing),
        Command::Benchmark(a) => cmd::benchmark::execute(a),
        Command::Bounds(a) => cmd::bounds::execute(a),
        Command::Oracle(a) => cmd::oracle::execute(a),
        Command::Shots(a) => cmd::shots::execute(a),
    };
    match done {
        Ok(mut done) => {
            if !cli.no_timing {
                done.report.wall_time_s = clock.elapsed().as_secs_f64();
                done.summary["wall_time_s"] = json!(done.report.wall_time_s);
            }
            if let Some(path) = &done.out {
                if let Err(e) = done.report.write(path) {
                    log::error!("{e:#}");
                    emit(&json!({ "status": "error", "message": format!("{e:#}") }));
                    std::process::exit(1);
                }
            }
            emit(&done.summary);
            std::process::exit(done.status.exit_code());
        }
        Err(e) => {
            log::error!("{e:#}");
            emit(&json!({ "status": "error", "message": format!("{e:#}") }));
            std::process::exit(1);
        }
    }
}
