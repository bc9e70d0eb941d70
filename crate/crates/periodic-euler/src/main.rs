use clap::{Parser, Subcommand};
use periodic_euler::config::RunConfig;
use periodic_euler::{runner, selftest};
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulator and verification harness for the 1-D isentropic Euler
/// equations with time-periodic forcing and supersonic inflow.
#[derive(Parser)]
#[command(name = "periodic-euler", version, about)]
struct Cli {
    /// Configuration file (TOML, dotted keys); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Repeatable key.path=value configuration override.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Run the acceptance suite and exit (code 5 on failure).
    #[arg(long)]
    self_test: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the enabled solver(s) and write field CSVs plus a summary.
    Simulate,
    /// Measure the period-difference residual and detect the onset time.
    Periodicity,
    /// Cross-validate the marching solver against the finite-volume oracle.
    Compare,
    /// Grid-convergence study against the exact background solution.
    Convergence,
    /// Tabulate the exact background solution.
    Background,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if cli.self_test {
        let results = selftest::run_all();
        let mut ok = true;
        for r in &results {
            println!("{r}");
            ok &= r.pass;
        }
        return if ok {
            println!("acceptance suite: all {} criteria passed", results.len());
            ExitCode::SUCCESS
        } else {
            println!("acceptance suite: FAILURES present");
            ExitCode::from(5)
        };
    }

    let Some(command) = cli.command else {
        eprintln!("error[config]: no subcommand given (try --help or --self-test)");
        return ExitCode::from(2);
    };

    let config = match RunConfig::load_with_overrides(cli.config.as_deref(), &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error[config]: {e}");
            return ExitCode::from(2);
        }
    };
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));

    let run = || -> Result<String, runner::RunError> {
        match command {
            Command::Simulate => runner::simulate(&config, &out_dir),
            Command::Periodicity => runner::periodicity(&config, &out_dir),
            Command::Compare => runner::compare(&config, &out_dir),
            Command::Convergence => runner::convergence(&config, &out_dir),
            Command::Background => runner::background(&config, &out_dir),
        }
    };

    match run() {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = match e.exit_code() {
                2 => "config",
                3 => "validation",
                _ => "solver",
            };
            eprintln!("error[{kind}]: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
