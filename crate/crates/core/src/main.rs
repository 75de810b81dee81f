use std::process::ExitCode;

fn main() -> ExitCode {
    blockspectra::cli::run(std::env::args_os())
}
