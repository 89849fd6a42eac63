//! Shared output plumbing and exit-code policy.

use std::path::Path;
use std::process::ExitCode;
use vdkl::Error;

/// Exit codes: 0 success, 1 verification failure, 2 usage/config error,
/// 3 numerical error.
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

pub fn exit_code_for(err: &Error) -> ExitCode {
    let code = match err {
        Error::Precondition(_)
        | Error::Shape(_)
        | Error::InsufficientGrid { .. }
        | Error::Config(_) => EXIT_USAGE,
        Error::Domain { .. }
        | Error::Convergence { .. }
        | Error::Range { .. }
        | Error::Quadrature(_)
        | Error::State(_)
        | Error::Diverged(_) => EXIT_NUMERICAL,
    };
    ExitCode::from(code)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Write to the file (surfacing the path in errors) or stdout.
pub fn emit(out: Option<&Path>, content: &str) -> vdkl::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Standard CSV header block: tool line, seed, and the effective config as
/// one JSON object, each on a `#` comment line.
pub fn csv_header(tool: &str, seed: u64, config_json: &serde_json::Value) -> String {
    format!("# vdkl {tool}\n# seed = {seed}\n# config = {config_json}\n")
}
