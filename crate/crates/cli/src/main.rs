use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = msm_cli::Cli::parse();
    if let Err(err) = msm_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(msm_cli::exit_code(&err));
    }
}
