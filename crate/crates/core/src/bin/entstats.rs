use clap::Parser;

use entstats::cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    let result = run(&cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    std::process::exit(exit_code(&result));
}
