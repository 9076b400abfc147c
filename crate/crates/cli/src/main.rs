use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};

use clap::Parser;
use hardcnf_cli::error::EXIT_USAGE;
use hardcnf_cli::{run, Cli};

static STOP: AtomicBool = AtomicBool::new(false);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Err(err) = ctrlc::set_handler(|| STOP.store(true, Ordering::Relaxed)) {
        log::warn!("cannot install the interrupt handler: {err}");
    }
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout, Some(&STOP)) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
