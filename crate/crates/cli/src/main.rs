mod commands;
mod config;
mod report;

use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use config::{apply_tolerances, Cli, RunConfig};
use report::{to_pretty, write_atomic, Report, Status};

fn threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("GNT_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| gnt_core::GntError::Parse(format!("GNT_LAB_THREADS={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tolerances = match apply_tolerances(&cli.tol) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("gnt-lab: {e}");
            return ExitCode::from(Status::InvalidInput.code() as u8);
        }
    };
    let cfg = RunConfig {
        command: cli.command,
        output: cli.output,
        tolerances,
    };
    let outcome = threads().and_then(|_| commands::run(&cfg));
    let report = match outcome {
        Ok(o) => {
            let status = if o.pass { Status::Pass } else { Status::Fail };
            Report::new(cfg.clone(), status, None, o.result)
        }
        Err(e) => {
            let status = Status::from_error(&e);
            eprintln!("gnt-lab: {e:#}");
            Report::new(cfg.clone(), status, Some(format!("{e:#}")), Value::Null)
        }
    };
    let bytes = to_pretty(&report);
    match &cfg.output {
        Some(path) => {
            if let Err(e) = write_atomic(path, &bytes) {
                eprintln!("gnt-lab: {e:#}");
                return ExitCode::from(Status::InvalidInput.code() as u8);
            }
        }
        None => {
            use std::io::Write;
            let _ = std::io::stdout().write_all(&bytes);
        }
    }
    eprintln!("gnt-lab: {:?}", report.status);
    ExitCode::from(report.exit_code as u8)
}
