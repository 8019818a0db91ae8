use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ricci_sphere::commands;
use ricci_sphere::config::{self, RunManifest};
use ricci_sphere::{Error, Result};

/// Exit code for configuration and I/O failures.
const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "ricci-sphere", version, about = "Normalized Ricci flow on the two-sphere with isoperimetric checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run manifest in key=value format; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding output_dir from the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the curve search, overriding the manifest.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow, write series.csv and summary.json, and check every bound.
    Simulate(Common),
    /// Grid-refinement study of κ(t_end) and the Gauss-Bonnet error.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Comma separated, strictly increasing grid sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
    },
    /// Compare a brute-force curve search with the latitude circle.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Enclosed area; accepts multiples of pi such as `2pi`.
        #[arg(long)]
        a: String,
        /// Flow time of the state to search on.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

fn load(common: &Common) -> Result<RunManifest> {
    let mut manifest = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let mut m = config::parse_config(&text)?;
            if let Some(dir) = path.parent() {
                m.resolve_paths(dir);
            }
            m
        }
        None => RunManifest::default(),
    };
    if let Some(seed) = common.seed {
        manifest.seed = seed;
    }
    Ok(manifest)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(common) => {
            let m = load(&common)?;
            commands::simulate_command(&m, common.out.as_deref())
        }
        Command::Convergence { common, grids } => {
            let m = load(&common)?;
            commands::convergence_command(&m, &grids, common.out.as_deref())
        }
        Command::Oracle {
            common,
            a,
            t,
            resolution,
            trials,
        } => {
            let m = load(&common)?;
            let a = config::parse_area(&a).ok_or_else(|| Error::InvalidConfig(format!("cannot parse --a `{a}`")))?;
            commands::oracle_command(&m, a, t, resolution, trials)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
