use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use galperin::cli_io::{execute, Args, CliError, RunConfig};

fn emit(cfg: &RunConfig, body: &str, sidecar: Option<&str>) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, body)?;
            if let Some(extra) = sidecar {
                let mut side = path.clone().into_os_string();
                side.push(".ambiguous.csv");
                std::fs::write(side, extra)?;
            }
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            if let Some(extra) = sidecar {
                eprint!("{extra}");
            }
        }
    }
    Ok(())
}

fn run() -> Result<i32, CliError> {
    // clap's own exit code 2 would read as a degeneracy
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            e.print()?;
            return Ok(0);
        }
        Err(e) => {
            e.print()?;
            return Ok(1);
        }
    };
    let cfg = RunConfig::from_args(&args)?;
    let out = execute(&cfg)?;
    emit(&cfg, &out.body, out.sidecar.as_deref())?;
    if let Some(flag) = &out.flag {
        eprintln!("{}", flag.to_json());
    }
    Ok(out.exit_code())
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
