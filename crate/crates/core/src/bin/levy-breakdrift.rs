use clap::Parser;
use levy_breakdrift::cli::args::{dispatch, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = dispatch(&cli, &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code as u8)
}
