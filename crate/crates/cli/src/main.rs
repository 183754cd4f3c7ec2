use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flexdog_cli::commands::{self, ReferenceKind, SweepSource};
use flexdog_cli::config::ConfigArgs;
use flexdog_cli::Result;

/// Simulate a difference-of-Gaussians filter on an analog Gaussian-cell array.
#[derive(Debug, Parser)]
#[command(name = "flexdog", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one frame and write images plus a JSON report.
    Run {
        /// `pattern:<name>` or a path to an IDX or binary PGM file.
        input: Option<String>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Repeat runs under process variation and summarise the error.
    Montecarlo {
        input: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Relative sigmas to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.2])]
        levels: Vec<f64>,
        /// Variation source the levels apply to.
        #[arg(long, value_enum, default_value_t = SweepSource::Gamma)]
        sweep: SweepSource,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Compare the cell response with a Gaussian over a voltage sweep.
    Deviation {
        #[arg(long, value_enum, default_value_t = ReferenceKind::Fitted)]
        reference: ReferenceKind,
        #[arg(long, default_value_t = -1.3, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.3, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long, default_value_t = 261)]
        points: usize,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Analytic power, runtime and energy for an M x N frame.
    Perf {
        m: usize,
        n: usize,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn dispatch(cli: Cli, command_line: &str) -> Result<String> {
    Ok(match cli.command {
        Command::Run { input, cfg } => commands::format_run_summary(&commands::cmd_run(input, &cfg, command_line)?),
        Command::Montecarlo { input, trials, levels, sweep, cfg } => {
            commands::format_montecarlo_summary(&commands::cmd_montecarlo(input, &cfg, trials, &levels, sweep)?)
        }
        Command::Deviation { reference, lo, hi, points, cfg } => {
            commands::format_deviation_summary(&commands::cmd_deviation(&cfg, reference, lo, hi, points)?)
        }
        Command::Perf { m, n, cfg } => commands::format_perf_table(&commands::cmd_perf(m, n, &cfg)?),
    })
}

fn main() -> ExitCode {
    let command_line = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let cli = Cli::parse();
    match dispatch(cli, &command_line) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("flexdog: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
