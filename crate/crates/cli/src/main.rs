mod args;
mod report;
mod run;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Format};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let ctx = run::Ctx::new(&cli.common);
    let start = Instant::now();
    let mut report = match run::execute(&cli.command, &ctx) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_resource() { 2 } else { 1 });
        }
    };
    if cli.common.timing {
        report.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    match cli.common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
        Format::Text => print!("{}", report::render_text(&report)),
    }
    if report.verified == Some(false) {
        eprintln!("error: certificate verification failed");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
