//! `ssense`: command-line driver for sparse sensor placement.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or usage,
//! 3 numerical failure. Failures print one line on stderr.

mod cli;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use sparse_sensing::ErrorClass;

use cli::{Cli, Command};
use commands::Ctx;

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let args = match config::expand(raw.clone()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("ssense: error: {}", one_line(&msg));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            eprintln!("ssense: {}", one_line(first));
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let mut argv = vec!["ssense".to_string()];
    argv.extend(raw.into_iter().skip(1));
    let ctx = Ctx { argv, timestamp: !cli.no_timestamp };
    let result = match &cli.command {
        Command::Train(a) => commands::train(&ctx, a),
        Command::Place(a) => commands::place(&ctx, a),
        Command::Reconstruct(a) => commands::reconstruct(&ctx, a),
        Command::SweepRank(a) => commands::sweep_rank_cmd(&ctx, a),
        Command::SweepNoise(a) => commands::sweep_noise_cmd(&ctx, a),
        Command::CsDemo(a) => commands::cs_demo(&ctx, a),
        Command::Fekete(a) => commands::fekete(&ctx, a),
        Command::Eval(a) => commands::eval(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, label) = match e.class() {
                ErrorClass::Io => (EXIT_IO, "i/o error"),
                ErrorClass::Validation => (EXIT_USAGE, "invalid input"),
                ErrorClass::Numerical => (EXIT_NUMERICAL, "numerical failure"),
            };
            eprintln!("ssense: {label} [{}]: {}", e.name(), one_line(&e.to_string()));
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn list_parsing() {
        assert_eq!(commands::parse_usize_list("1,3:5").unwrap(), vec![1, 3, 4, 5]);
        assert!(commands::parse_usize_list("5:3").is_err());
        assert!(commands::parse_usize_list("").is_err());
        assert_eq!(commands::parse_f64_list("0, 0.1").unwrap(), vec![0.0, 0.1]);
    }

    #[test]
    fn config_flags_precede_user_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 4, "no-timestamp": true, "fekete": {"degree": 10}}"#).unwrap();
        let args: Vec<String> = ["ssense", "--config", path.to_str().unwrap(), "place", "--seed", "9"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let out = config::expand(args).unwrap();
        let tail: Vec<&str> = out[3..].iter().map(String::as_str).collect();
        assert_eq!(tail, ["place", "--no-timestamp", "--seed", "4", "--seed", "9"]);

        let args: Vec<String> = ["ssense", "--config", path.to_str().unwrap(), "fekete"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let out = config::expand(args).unwrap();
        assert!(out.windows(2).any(|w| w[0] == "--degree" && w[1] == "10"));
    }
}
