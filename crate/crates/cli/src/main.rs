use std::process::ExitCode;

fn main() -> ExitCode {
    match icu_attend_cli::run(std::env::args()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(icu_attend_cli::CliError::Usage(msg)) => {
            eprint!("{msg}");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
