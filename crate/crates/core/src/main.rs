use std::process::ExitCode;

fn main() -> ExitCode {
    ctxtrack::cli::main()
}
