use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(spde_movement::cli::dispatch(std::env::args()) as u8)
}
