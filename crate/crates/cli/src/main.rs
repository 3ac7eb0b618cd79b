use std::process::ExitCode;

use clap::Parser;
use taskgap_cli::app::{error_json, init_threads, Status};
use taskgap_cli::{run_cli, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = init_threads(cli.common.threads).and_then(|()| run_cli(&cli));
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::VerifyFailed) => {
            eprintln!("{}", serde_json::json!({"error": {"kind": "verification", "message": "one or more theory properties failed"}}));
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            let config_error = matches!(e.kind(), "config" | "unknown_strategy");
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}
