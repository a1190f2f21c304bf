use clap::Parser;

use mensa::cli::{init_logging, Cli};

fn main() {
    init_logging();
    let cli = Cli::parse();
    if let Err(err) = cli.run() {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
