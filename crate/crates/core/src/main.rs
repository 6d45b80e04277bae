use std::process::ExitCode;

fn main() -> ExitCode {
    match eigenfolio::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(eigenfolio::cli::CliError::Usage(e)) => {
            let _ = e.print();
            if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(eigenfolio::cli::CliError::Pipeline(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
