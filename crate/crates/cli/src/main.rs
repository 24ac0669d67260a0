mod args;
mod commands;
mod error;
mod grid;
mod validate;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, RunConfig, ValidateArgs};
use commands::Provenance;
use error::{io_error, CliError, CliResult};

const THREADS_ENV: &str = "BETASPLICE_THREADS";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { error::EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(command: Command) -> CliResult<()> {
    configure_threads()?;
    let (save, config) = match command {
        Command::Run(r) => {
            let text = std::fs::read_to_string(&r.config).map_err(io_error(&r.config))?;
            let config: RunConfig =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", r.config.display())))?;
            (None, config)
        }
        Command::Simulate(a) => (a.save_config.clone(), RunConfig::Simulate(a)),
        Command::Fit(a) => (a.save_config.clone(), RunConfig::Fit(a)),
        Command::Splice(a) => (a.save_config.clone(), RunConfig::Splice(a)),
        Command::Sample(a) => (a.save_config.clone(), RunConfig::Sample(a)),
        Command::Validate(a) => (a.save_config.clone(), RunConfig::Validate(a)),
    };
    if let Some(path) = save {
        let text = serde_json::to_string_pretty(&config).expect("configs serialize");
        std::fs::write(&path, text + "\n").map_err(io_error(&path))?;
    }
    execute(&config)
}

fn execute(config: &RunConfig) -> CliResult<()> {
    let prov = Provenance::of(config);
    match config {
        RunConfig::Simulate(a) => commands::simulate(a, &prov),
        RunConfig::Fit(a) => commands::fit(a, &prov),
        RunConfig::Splice(a) => commands::splice(a, &prov),
        RunConfig::Sample(a) => commands::sample(a, &prov),
        RunConfig::Validate(a) => validate_cmd(a, &prov),
    }
}

fn validate_cmd(a: &ValidateArgs, prov: &Provenance) -> CliResult<()> {
    let report = validate::run(a.suite, a.seed, a.corrupt)?;
    for c in &report.checks {
        println!(
            "{} {} (value {}, target {}, tolerance {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.target,
            c.tolerance
        );
    }
    if let Some(path) = &a.output {
        #[derive(serde::Serialize)]
        struct Out<'a> {
            config_sha256: &'a str,
            #[serde(flatten)]
            report: &'a validate::Report,
        }
        let text = serde_json::to_string_pretty(&Out {
            config_sha256: &prov.config_sha256,
            report: &report,
        })
        .expect("reports serialize");
        std::fs::write(path, text + "\n").map_err(io_error(path))?;
    }
    let failures = report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failures))
    }
}
