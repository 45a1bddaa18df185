use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(nimbus_cli::commands::run(std::env::args_os()))
}
