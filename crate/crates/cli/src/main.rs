use std::process::ExitCode;

fn main() -> ExitCode {
    mqchain_cli::main_with(std::env::args_os())
}
