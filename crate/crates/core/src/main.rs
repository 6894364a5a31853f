use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zomo::cli;

#[derive(Parser)]
#[command(name = "zomo", version, about = "Accelerated zeroth-order momentum optimizers and experiment runner")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm and seed, writing traces and a summary.
    Run { config: PathBuf },
    /// Average the traces in a directory across seeds.
    Aggregate { dir: PathBuf },
    /// Print the hyperparameter condition report.
    Check { config: PathBuf },
    /// Export the poisoning dataset as CSV.
    GenData { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = match args.command {
        Command::Run { config } => cli::run_experiment(&config).map(|records| {
            for r in &records {
                println!(
                    "{} seed {}: final metric {}",
                    r.algorithm,
                    r.seed,
                    r.final_metric().map_or_else(|| "-".into(), |m| format!("{m:.6e}"))
                );
            }
        }),
        Command::Aggregate { dir } => cli::aggregate_seeds(&dir).map(|paths| {
            for p in paths {
                println!("{}", p.display());
            }
        }),
        Command::Check { config } => cli::check_config(&config).map(|r| print!("{r}")),
        Command::GenData { config } => cli::gen_data(&config).map(|p| println!("{}", p.display())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
