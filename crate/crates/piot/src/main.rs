use clap::Parser;
use piot::commands::{run, Cli};

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("piot: {e}");
        std::process::exit(e.exit_code());
    }
}
