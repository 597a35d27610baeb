//! `pfc` command line: `run`, `study-time`, and `study-space`, each taking
//! `--config <file>` and `--out <dir>`.

use std::path::PathBuf;
use std::process::ExitCode;

use pfc_core::config::parse_config;
use pfc_core::runner::{run, study_space, study_time};

const USAGE: &str = "\
usage: pfc <run | study-time | study-space> --config <file> [--out <dir>]

  run          execute one simulation (energy.csv, snapshots, summary.txt)
  study-time   temporal convergence table against a fine reference run
  study-space  spatial accuracy table against a fine reference grid
";

fn parse_args() -> Result<(String, PathBuf, Option<PathBuf>), String> {
    let mut args = std::env::args().skip(1);
    let verb = args.next().ok_or_else(|| "missing verb".to_string())?;
    let mut config = None;
    let mut out = None;
    while let Some(flag) = args.next() {
        match flag.as_str() {
            "--config" => {
                config = Some(PathBuf::from(
                    args.next()
                        .ok_or_else(|| "--config expects a path".to_string())?,
                ))
            }
            "--out" => {
                out = Some(PathBuf::from(
                    args.next()
                        .ok_or_else(|| "--out expects a path".to_string())?,
                ))
            }
            other => return Err(format!("unknown flag `{other}`")),
        }
    }
    let config = config.ok_or_else(|| "missing --config <file>".to_string())?;
    Ok((verb, config, out))
}

fn main() -> ExitCode {
    let (verb, config_path, out_dir) = match parse_args() {
        Ok(parts) => parts,
        Err(msg) => {
            eprintln!("error: {msg}\n{USAGE}");
            return ExitCode::from(2);
        }
    };

    let text = match std::fs::read_to_string(&config_path) {
        Ok(text) => text,
        Err(err) => {
            eprintln!("error: cannot read {}: {err}", config_path.display());
            return ExitCode::from(2);
        }
    };
    let config = match parse_config(&text) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("error: {}: {err}", config_path.display());
            return ExitCode::from(3);
        }
    };

    let out = out_dir.as_deref();
    let result = match verb.as_str() {
        "run" => run(&config, out).map(|output| {
            println!("{}", output.summary.to_record());
        }),
        "study-time" => study_time(&config, out).map(|table| {
            print!("{}", table.to_csv());
        }),
        "study-space" => study_space(&config, out).map(|table| {
            print!("{}", table.to_csv());
        }),
        other => {
            eprintln!("error: unknown verb `{other}`\n{USAGE}");
            return ExitCode::from(2);
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(4)
        }
    }
}
