use clap::Parser;
use entroflux_cli::{run, Cli};

fn main() {
    std::process::exit(run(&Cli::parse()));
}
