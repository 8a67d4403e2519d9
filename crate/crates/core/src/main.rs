use clap::{Parser, Subcommand};
use ising_mfg::cli;
use ising_mfg::config::RunConfig;
use ising_mfg::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ising-mfg",
    about = "Mesoscopic Ising mean-field game laboratory",
    version
)]
struct Cli {
    /// Configuration file; omitted means the built-in reference configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the forward-backward solver and write checkpoints and reports.
    Solve,
    /// Evaluate raw and decomposed costs for a stored spin field.
    Energy {
        /// Spin field checkpoint to evaluate.
        #[arg(long)]
        field: PathBuf,
    },
    /// Tabulate the boundary-layer costs and the symmetry-identity residual.
    Layers {
        #[arg(long, default_value_t = 33)]
        s0_points: usize,
        #[arg(long, default_value_t = 7)]
        g_points: usize,
    },
    /// Tabulate the traveling-wave cost over a front-speed grid.
    Wave {
        /// Comma-separated speeds.
        #[arg(long, default_value = "0,0.5,1,2,4")]
        c_grid: String,
    },
    /// Pitchfork table and double-well curves over a beta_inv grid.
    Sweep {
        #[arg(long, default_value = "0.66,0.9,1.1")]
        beta_inv_grid: String,
    },
    /// Print the fully populated configuration.
    PrintConfig,
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad grid entry {t:?}: {e}")))
        })
        .collect()
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => RunConfig::from_toml(&std::fs::read_to_string(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn run(args: Cli) -> Result<bool, Error> {
    let cfg = load_config(&args.config)?;
    match args.command {
        Command::Solve => cli::cmd_solve(&cfg),
        Command::Energy { field } => cli::cmd_energy(&cfg, &field).map(|_| true),
        Command::Layers { s0_points, g_points } => {
            if s0_points < 2 || g_points < 2 {
                return Err(Error::Config("layer grids need at least two points".into()));
            }
            cli::cmd_layers(&cfg, s0_points, g_points).map(|_| true)
        }
        Command::Wave { c_grid } => cli::cmd_wave(&cfg, &parse_grid(&c_grid)?).map(|_| true),
        Command::Sweep { beta_inv_grid } => {
            cli::cmd_sweep(&cfg, &parse_grid(&beta_inv_grid)?).map(|_| true)
        }
        Command::PrintConfig => {
            cli::cmd_print_config(&cfg, &mut std::io::stdout()).map(|_| true)
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        // completed with a non-convergence flag
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::Parameter(_)
                | Error::Domain(_)
                | Error::ShapeMismatch(_)
                | Error::Resolution(_)
                | Error::NegativeKernel(_)
                | Error::UnsupportedDirection(_)
                | Error::WindowOutOfRange(_) => ExitCode::from(2),
                Error::NonConvergence(_) => ExitCode::from(3),
                Error::Io(_) | Error::Json(_) => ExitCode::FAILURE,
            }
        }
    }
}
