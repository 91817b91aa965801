use clap::Parser;

use lbpspot_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = lbpspot_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
