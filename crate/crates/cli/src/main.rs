//! Command-line pipeline driver: pretrain, reweight, sample, eval, heatmap
//! and dataset export. Exit codes: 0 success, 2 validation error, 3
//! numeric or sampler-starvation error.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use latentrw_cli::commands::sample::Method;
use latentrw_cli::error::{CliError, CliResult};
use latentrw_cli::{commands, config};

#[derive(Parser)]
#[command(name = "latentrw", version, about = "Latent reweighting for 2-D GANs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the WGAN-GP generator/critic pair.
    Pretrain {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the latent importance-weight net on a pretrained bundle.
    Reweight {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw samples with a chosen method.
    Sample {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional config whose ga/samplers/finetune sections override the
        /// bundle's stored settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute metrics between a fake-sample CSV and the real distribution.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// CSV of generated samples (x,y columns; wall_time_us used if present).
        #[arg(long)]
        fake: PathBuf,
        /// Real points CSV; defaults to fresh draws from the config dataset.
        #[arg(long)]
        real: Option<PathBuf>,
        /// Method label for the report; defaults to the fake CSV metadata.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render the importance-weight heatmap (CSV + SVG).
    Heatmap {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        /// Latent dims spanning the slice for d > 2, e.g. "0,1".
        #[arg(long)]
        slice: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the configured dataset as CSV.
    Dataset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_slice(slice: &str) -> CliResult<(usize, usize)> {
    let parts: Vec<&str> = slice.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::validation("--slice expects two indices like \"0,1\""));
    }
    let i = parts[0].trim().parse::<usize>();
    let j = parts[1].trim().parse::<usize>();
    match (i, j) {
        (Ok(i), Ok(j)) => Ok((i, j)),
        _ => Err(CliError::validation("--slice indices must be integers")),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Pretrain { config, out } => {
            commands::cmd_pretrain(&config, &out)?;
            Ok(())
        }
        Command::Reweight { config, bundle, out } => {
            commands::cmd_reweight(&config, &bundle, &out)?;
            Ok(())
        }
        Command::Sample { bundle, method, n, seed, config, out } => {
            let parsed = config
                .map(|p| config::load_config(&p))
                .transpose()?
                .map(|(c, _)| c);
            commands::sample::cmd_sample(&bundle, method, n, seed, parsed.as_ref(), &out)
        }
        Command::Eval { config, fake, real, method, out } => {
            commands::eval::cmd_eval(&config, &fake, real.as_deref(), method.as_deref(), &out)
        }
        Command::Heatmap { bundle, resolution, slice, out } => {
            let dims = slice.as_deref().map(parse_slice).transpose()?;
            commands::cmd_heatmap(&bundle, resolution, dims, &out)
        }
        Command::Dataset { config, out } => commands::cmd_dataset(&config, &out),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code);
    }
}
