use clap::Parser;
use wgm_gyro::cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("wgm-gyro: {err}");
        std::process::exit(exit_code(&err));
    }
}
