use std::io::{stderr, stdout};
use std::process::ExitCode;

fn main() -> ExitCode {
    rosenblatt::cli::init_threads();
    let code = rosenblatt::cli::run(std::env::args(), &mut stdout().lock(), &mut stderr().lock());
    ExitCode::from(code as u8)
}
