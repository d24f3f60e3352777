use clap::Parser;
use roughline::cli::{dispatch, Cli};

fn main() {
    let cli = Cli::parse();
    let code = dispatch(&cli, &mut std::io::stdout());
    std::process::exit(code);
}
