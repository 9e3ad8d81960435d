use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use epp_cli::selfcheck::selfcheck;
use epp_cli::{cmd_figures, cmd_transform, cmd_verify, CliError, Outputs, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "epp",
    version,
    about = "Eigen-phase preserving SUSY transformations of coupled-channel potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Output directory (overrides `output_dir`; default `epp-out`)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of radial grid points (overrides `points`)
    #[arg(long, global = true, value_name = "N")]
    grid_points: Option<usize>,
    /// Eigen-phase tolerance in radians (overrides `tol_eigenphase`)
    #[arg(long, global = true, value_name = "X")]
    tol_eigenphase: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write v2_grid.csv and summary.json
    Transform { config: PathBuf },
    /// Run the invariant suite and the scattering oracle; write report.json
    Verify { config: PathBuf },
    /// Write rs_columns.csv and eigenphases.csv
    Figures { config: PathBuf },
    /// Run the built-in checks on the example parameters
    Selfcheck,
}

fn run_config(
    path: &Path,
    flags: &Flags,
    f: impl Fn(&epp_cli::config::ResolvedRun, &RunConfig) -> epp_core::Result<Outputs>,
) -> Result<bool, CliError> {
    let mut cfg = RunConfig::from_path(path)?;
    cfg.apply(&Overrides {
        out: flags.out.as_ref().map(|p| p.display().to_string()),
        grid_points: flags.grid_points,
        tol_eigenphase: flags.tol_eigenphase,
    });
    let (run, resolved) = cfg.resolve()?;
    let outputs = f(&run, &resolved)?;
    let dir = cfg.output_dir.as_deref().unwrap_or("epp-out");
    outputs.write_to(Path::new(dir))?;
    for (name, _) in &outputs.files {
        eprintln!("wrote {}", Path::new(dir).join(name).display());
    }
    Ok(outputs.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Transform { config } => run_config(config, &cli.flags, cmd_transform),
        Command::Verify { config } => run_config(config, &cli.flags, cmd_verify),
        Command::Figures { config } => run_config(config, &cli.flags, cmd_figures),
        Command::Selfcheck => {
            let lines = selfcheck();
            for l in &lines {
                println!("{l}");
            }
            Ok(lines.iter().all(|l| l.pass))
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("epp: verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("epp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
