use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(linkloss::cli::run(std::env::args()) as u8)
}
