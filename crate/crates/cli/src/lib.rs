//! Command-line frontend for the lbpspot word-spotting engine: manifest
//! parsing, image decoding, index persistence, and the subcommands that
//! tie them to the core library.

pub mod args;
pub mod commands;
pub mod imageio;
pub mod manifest;
pub mod store;

use anyhow::Result;

use args::{Cli, Command};

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Index(args) => commands::cmd_index(args),
        Command::Query(args) => commands::cmd_query(args),
        Command::Evaluate(args) => commands::cmd_evaluate(args),
        Command::Describe(args) => commands::cmd_describe(args),
    }
}
