use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use nle::config::{parse_config, Command, ConfigError};
use nle::run::{run, RunError, RunReport, VERIFY_FAILED_EXIT};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Subcommand {
    Dispersion,
    Beam,
    Plate,
    Sweep,
    Convergence,
}

impl From<Subcommand> for Command {
    fn from(s: Subcommand) -> Self {
        match s {
            Subcommand::Dispersion => Command::Dispersion,
            Subcommand::Beam => Command::Beam,
            Subcommand::Plate => Command::Plate,
            Subcommand::Sweep => Command::Sweep,
            Subcommand::Convergence => Command::Convergence,
        }
    }
}

/// Nonlocal elasticity: dispersion relations and nonlocal beam and plate bending.
#[derive(Parser, Debug)]
#[command(version)]
struct Opt {
    /// what to compute
    #[arg(value_enum)]
    command: Subcommand,
    /// TOML configuration file
    #[arg(short, long)]
    config: PathBuf,
    /// evaluate the invariants that apply to this run and report pass/fail
    #[arg(long)]
    verify: bool,
    /// worker threads (defaults to the config, then to all cores)
    #[arg(short, long)]
    threads: Option<usize>,
    /// output directory (defaults to the config, then to `out`)
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn report_error(category: &str, message: &str, code: i32) -> ExitCode {
    let line = serde_json::json!({ "error": category, "message": message, "exit_code": code });
    eprintln!("{line}");
    ExitCode::from(code as u8)
}

fn print_report(report: &RunReport) {
    for path in &report.outputs {
        println!("wrote {}", path.display());
    }
    for c in &report.checks {
        println!("{} {}: {}", c.status(), c.name, c.detail);
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let opt = Opt::parse();

    let text = match fs::read_to_string(&opt.config) {
        Ok(t) => t,
        Err(e) => return report_error("io", &format!("cannot read {}: {e}", opt.config.display()), 3),
    };
    let config = match parse_config(&text, opt.command.into()) {
        Ok(c) => c,
        Err(e) => {
            let e = RunError::from(e);
            return report_error(e.category(), &e.to_string(), e.exit_code());
        }
    };
    if opt.threads == Some(0) {
        let e = RunError::from(ConfigError(vec!["--threads must be at least 1".into()]));
        return report_error(e.category(), &e.to_string(), e.exit_code());
    }
    let threads = opt.threads.or(config.threads).unwrap_or(0);
    let out = opt.out.or_else(|| config.out.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => return report_error("config", &format!("cannot start {threads} threads: {e}"), 2),
    };
    match pool.install(|| run(&config, &text, &out, opt.verify)) {
        Ok(report) => {
            print_report(&report);
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                let failed = report.checks.iter().filter(|c| c.passed == Some(false)).count();
                report_error("verification", &format!("{failed} invariant(s) failed"), VERIFY_FAILED_EXIT)
            }
        }
        Err(e) => report_error(e.category(), &e.to_string(), e.exit_code()),
    }
}
