use clap::Parser;
use mvgamma::cli::{exit_code, run, RunConfig};

fn main() {
    let config = RunConfig::parse();
    match run(&config) {
        Ok(out) => print!("{out}"),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}
