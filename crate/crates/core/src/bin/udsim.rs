use clap::Parser;
use udsim::cli::{execute, Cli};

fn main() {
    if let Err(e) = execute(&Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
