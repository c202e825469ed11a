use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(codedmem::cli::main_from(std::env::args_os()) as u8)
}
