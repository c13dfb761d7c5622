//! Command-line front end for pmcgd: argument parsing, input loading and
//! the benchmark harness. The `pmcgd` binary is a thin wrapper.

pub mod bench;
pub mod commands;
pub mod inputs;

use clap::Parser;

#[derive(Debug, Parser)]
#[command(
    name = "pmcgd",
    version,
    about = "Gradient-descent feasibility search for parametric Markov chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: commands::Command,
}
