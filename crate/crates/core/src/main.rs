use std::process::ExitCode;

fn main() -> ExitCode {
    uwram::cli::main()
}
