use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("MODNOD_LOG", "warn")).init();
    std::process::exit(modnod_cli::run(modnod_cli::Cli::parse()));
}
