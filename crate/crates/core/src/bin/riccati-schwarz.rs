use std::process::ExitCode;

fn main() -> ExitCode {
    // A panic is an internal failure, not a check failure: report it on
    // the input-error code so scripts never mistake it for a clean pass.
    match std::panic::catch_unwind(riccati_schwarz::cli::main) {
        Ok(code) => code,
        Err(_) => ExitCode::from(2),
    }
}
