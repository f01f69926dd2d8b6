use clap::Parser;
use omplan_cli::output::ErrorReport;
use omplan_cli::run::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = execute(cli) {
        let report = ErrorReport::new(&e);
        let body = serde_json::json!({ "error": report });
        eprintln!("{body}");
        std::process::exit(report.exit_code());
    }
}
