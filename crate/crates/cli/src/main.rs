use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(slidecross_cli::run(std::env::args_os()))
}
