use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(soul::harness::cli(std::env::args()) as u8)
}
