use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mtdpsf_cli::commands::{self, Common};

/// Multiscale split-step propagation with phase-space filters.
#[derive(Parser)]
#[command(name = "mtdpsf", version)]
struct Cli {
    /// Directory for output files (default: the config's output.out_dir, else ./out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for per-scale parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Abort when data is not localized enough for the coarse grids.
    #[arg(long, global = true)]
    strict_assumptions: bool,
    /// Override the number of coarse scales.
    #[arg(long, global = true)]
    scales: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the state described by a config file.
    Run { config: PathBuf },
    /// Free-particle error E(k) for k = 1..21; writes E_vs_k.csv.
    SweepFrequency,
    /// Free-particle error E(sigma) for sigma = 1..128; writes E_vs_sigma.csv.
    SweepSpread,
    /// Long-range potential against the dense oracle; writes longrange_err_vs_t.csv.
    LongRange {
        #[arg(long)]
        tmax: Option<f64>,
    },
    /// Dense single-grid reference run for a config file.
    Oracle {
        config: PathBuf,
        /// Half-width of the dense box.
        #[arg(long, default_value_t = 6553.6)]
        radius: f64,
        /// Dense lattice spacing.
        #[arg(long, default_value_t = 0.1)]
        spacing: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("config error: cannot set thread count: {e}");
            return ExitCode::from(2);
        }
    }
    let common = Common {
        out_dir: cli.out_dir,
        strict_assumptions: cli.strict_assumptions,
        scales: cli.scales,
    };
    let result = match &cli.command {
        Command::Run { config } => commands::run(config, &common),
        Command::SweepFrequency => commands::sweep_frequency(&common),
        Command::SweepSpread => commands::sweep_spread(&common),
        Command::LongRange { tmax } => commands::long_range(&common, *tmax),
        Command::Oracle {
            config,
            radius,
            spacing,
        } => commands::oracle(config, &common, *radius, *spacing),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
