use clap::Parser;
use spheremetric_cli::args::{Cli, Invocation};

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = match cli.into_invocation() {
        Invocation::Run(cfg) => spheremetric_cli::run(&cfg).map(drop),
        Invocation::Replay { report, out } => spheremetric_cli::replay::replay(&report, out).map(drop),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
