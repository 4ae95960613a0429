use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ivo::cli::{
    cmd_bench, cmd_noise_compare, cmd_oracle_check, cmd_simulate, SimulateOverrides, EXIT_OTHER,
};

#[derive(Parser)]
#[command(
    name = "ivo",
    version,
    about = "Ego-centric collision avoidance: simulate scenarios, compare noise robustness, benchmark planning cycles"
)]
struct Cli {
    /// Overrides every seed (scenario files and presets included).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for traces and reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Suppress stdout chatter; reports are still written to files.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (preset name or TOML file) and write the trajectory
    /// table and report. Presets: single5, antipodal6, circle10, circle50.
    Simulate {
        scenario: String,
        /// Override the scenario's step limit.
        #[arg(long)]
        max_steps: Option<u32>,
    },
    /// Monte-Carlo comparison of collision-cone error distributions
    /// (preset name or TOML file). Presets: matched-noise, agent-noise-only.
    NoiseCompare { config: String },
    /// Planning cycle-time benchmark over growing antipodal circles.
    Bench {
        /// Largest agent count to measure.
        #[arg(long, default_value_t = 6)]
        agents: u32,
        /// Independent runs per agent count.
        #[arg(long, default_value_t = 3)]
        repeats: u32,
    },
    /// Randomized check of the cone predicate against the brute-force
    /// closest-approach oracle.
    OracleCheck {
        #[arg(long, default_value_t = 10_000)]
        samples: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate {
            scenario,
            max_steps,
        } => {
            let overrides = SimulateOverrides {
                seed: cli.seed,
                max_steps,
            };
            match cmd_simulate(&scenario, &cli.out, overrides, cli.quiet) {
                Ok(report) => report.outcome.exit_code(),
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::NoiseCompare { config } => {
            match cmd_noise_compare(&config, &cli.out, cli.seed, cli.quiet) {
                Ok(_) => 0,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Bench { agents, repeats } => {
            if agents == 0 {
                eprintln!("error: --agents must be at least 1");
                EXIT_OTHER
            } else {
                cmd_bench(agents, repeats, cli.seed.unwrap_or(1), cli.quiet);
                0
            }
        }
        Command::OracleCheck { samples } => {
            let report = cmd_oracle_check(samples, cli.seed.unwrap_or(1), cli.quiet);
            if report.mismatches == 0 {
                0
            } else {
                EXIT_OTHER
            }
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}
