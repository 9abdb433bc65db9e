use std::process::ExitCode;

fn main() -> ExitCode {
    solenoid_cli::run(std::env::args_os())
}
