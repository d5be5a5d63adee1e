use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(datl_cli::run(std::env::args_os()))
}
