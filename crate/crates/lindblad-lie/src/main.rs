use clap::Parser;
use lindblad_lie::cli::{run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Exit 2 is reserved for numerical failure, so command-line
            // misuse maps to 1; help and version stay at 0.
            let code = u8::from(err.use_stderr());
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let class = if err.is_config() { "config" } else { "numerical" };
            eprintln!("error: {class}: {err}");
            ExitCode::from(if err.is_config() { 1 } else { 2 })
        }
    }
}
