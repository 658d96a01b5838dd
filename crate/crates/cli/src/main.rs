//! `weylab` — batch verification campaigns; every run prints (or writes) one
//! JSON report embedding its full configuration and the library version.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use args::{invalid, Cli, Command, ValidationError};

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("WEYLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| invalid(format!("WEYLAB_THREADS must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(invalid("WEYLAB_THREADS must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<Value> {
    configure_threads()?;
    let result = match &cli.command {
        Command::Constants(a) => commands::constants(a)?,
        Command::Spectrum(a) => commands::spectrum(a)?,
        Command::WeylCheck(a) => commands::weyl_check(a)?,
        Command::PolygonCheck(a) => commands::polygon_check(a)?,
        Command::HeatCheck(a) => commands::heat_check(a)?,
        Command::PointwiseCheck(a) => commands::pointwise_check(a)?,
        Command::TauberianDemo(a) => commands::tauberian_demo(a)?,
        Command::Geometry(a) => commands::geometry(a, cli.seed)?,
        Command::ShapeOpt(a) => commands::shape_opt(a)?,
    };
    Ok(json!({
        "command": cli.command.name(),
        "version": weylab::VERSION,
        "config": cli,
        "result": result,
    }))
}

fn emit(report: &Value, out: Option<&std::path::Path>) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize");
    match out {
        Some(path) => std::fs::write(path, text + "\n"),
        None => writeln!(std::io::stdout().lock(), "{text}"),
    }
}

fn error_report(kind: &str, command: Option<&str>, message: String) -> Value {
    json!({
        "error": { "kind": kind, "message": message },
        "command": command,
        "version": weylab::VERSION,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = emit(&error_report("usage", None, e.to_string()), None);
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(report) => match emit(&report, cli.out.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                let _ = emit(&error_report("io", Some(cli.command.name()), e.to_string()), None);
                ExitCode::from(1)
            }
        },
        Err(e) => {
            let (kind, code) = if e.is::<ValidationError>() { ("validation", 2) } else { ("runtime", 1) };
            let _ = emit(&error_report(kind, Some(cli.command.name()), format!("{e:#}")), None);
            ExitCode::from(code)
        }
    }
}
