use clap::Parser;

use mrprio_cli::{execute, exit_code, Cli};

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("MRPRIO_LOG").unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    if let Err(err) = execute(&cli) {
        eprintln!("error: {err:#}");
        if let Some(mrprio_core::Error::TooManyErrors { replay_misses, .. }) =
            err.downcast_ref::<mrprio_core::Error>()
        {
            for key in replay_misses {
                eprintln!("  missing cassette key {key}");
            }
        }
        std::process::exit(exit_code(&err));
    }
}
