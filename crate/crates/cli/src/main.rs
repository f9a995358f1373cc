use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use surfmmc_core::pipeline::{
    export_checkpoint, parameterize, preprocess, run_pipeline, ErrorKind, PipelineError,
    ProblemConfig, RunOptions, Stage,
};

/// Topology optimization of shells on triangulated surfaces with moving morphable components.
#[derive(Parser)]
#[command(name = "surfmmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config against its mesh without computing anything expensive.
    Validate { config: PathBuf },
    /// Build the charts and write them to the output directory.
    Param { config: PathBuf },
    /// Run the optimization.
    Optimize {
        config: PathBuf,
        /// Compare analytic gradients with central differences before the first iteration.
        #[arg(long)]
        check_gradients: bool,
        /// Continue from a checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Write the design stored in a checkpoint as a viewer file.
    Export {
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Vtk)]
        format: Format,
        /// Defaults to the checkpoint path with the format's extension.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Vtk,
}

fn configure_threads() -> Result<(), PipelineError> {
    let Ok(value) = std::env::var("SURFMMC_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            PipelineError::new(
                Stage::Config,
                ErrorKind::Validation,
                format!("SURFMMC_THREADS must be a positive integer, got {value:?}"),
            )
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| PipelineError::new(Stage::Config, ErrorKind::Io, e.to_string()))
}

fn validate(path: &Path) -> Result<(), PipelineError> {
    let config = ProblemConfig::load(path)?;
    let problem = config.resolve()?;
    let patches = preprocess(&problem)?;
    println!(
        "{}: {} vertices, {} triangles, {} patches",
        problem.config.name,
        problem.mesh.vertex_count(),
        problem.mesh.triangle_count(),
        patches.len()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    configure_threads()?;
    match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Param { config } => {
            let prepared = parameterize(&ProblemConfig::load(&config)?)?;
            for c in &prepared.charts {
                println!(
                    "{}: {:.6} x {:.6}, mean |mu| {:.3e}",
                    c.patch_id,
                    c.width,
                    c.height,
                    c.mean_abs_mu()
                );
            }
            Ok(())
        }
        Command::Optimize {
            config,
            check_gradients,
            resume,
        } => {
            let config = ProblemConfig::load(&config)?;
            let summary = run_pipeline(
                &config,
                &RunOptions {
                    check_gradients,
                    resume,
                },
            )?;
            println!(
                "{}: {} iterations ({}), compliance {:.6e} -> {:.6e}, volume fraction {:.4}",
                summary.name,
                summary.iterations,
                if summary.converged {
                    "converged"
                } else {
                    "iteration limit"
                },
                summary.initial_compliance,
                summary.final_compliance,
                summary.final_volume_fraction
            );
            Ok(())
        }
        Command::Export {
            checkpoint,
            format: Format::Vtk,
            output,
        } => {
            let path = export_checkpoint(&checkpoint, output.as_deref())?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
