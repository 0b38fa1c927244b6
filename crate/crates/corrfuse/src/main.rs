use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(corrfuse::cli::run(std::env::args()) as u8)
}
