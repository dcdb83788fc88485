use std::process::ExitCode;

fn main() -> ExitCode {
    ubm_cli::main_with(std::env::args_os())
}
