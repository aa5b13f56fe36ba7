use std::io::Write;

fn main() {
    let outcome = ultrafin::cli::run_args(std::env::args_os());
    let text = outcome.output.as_bytes();
    let _ = if outcome.code == ultrafin::cli::EXIT_USAGE || outcome.output.starts_with("error:") {
        std::io::stderr().write_all(text)
    } else {
        std::io::stdout().write_all(text)
    };
    std::process::exit(outcome.code);
}
