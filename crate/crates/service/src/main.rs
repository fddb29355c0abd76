use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = rosetta_service::cli::run(std::env::args_os(), &mut io::stdin().lock(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code)
}
