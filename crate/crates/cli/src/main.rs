//! `cslb`: runs one verifier or scan and writes its report.
//!
//! Exit status: 0 when every assertion passed, 1 on an assertion failure or
//! runtime error, 2 on a configuration error, 3 when a resource budget ran out.

mod commands;
mod config;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use config::{Cli, RunConfig};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match RunConfig::resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cslb: configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.workers {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cslb: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match pool.install(|| commands::run(&config)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cslb: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let written = match &config.output {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            report.write(&config, &mut w)?;
            w.flush()
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report.write(&config, &mut lock)
        }
    };
    if let Err(e) = written {
        eprintln!("cslb: cannot write report: {e}");
        return ExitCode::from(1);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!("cslb: {} of {} checks failed", report.failures(), report.records.len());
        ExitCode::from(1)
    }
}
