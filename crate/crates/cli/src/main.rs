mod commands;
mod params;
mod plan;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use despeckle::phantom::PhantomKind;
use despeckle::Filter;

use params::SolverArgs;

/// Speckle synthesis, despeckling and quality measurement for grayscale images
#[derive(Parser)]
#[command(name = "despeckle", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multiply an image by L-look gamma speckle
    Noise {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        looks: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Restore a speckled image
    Despeckle {
        input: PathBuf,
        /// proposed | tdm | dong
        #[arg(long, default_value = "proposed")]
        filter: Filter,
        /// Clean reference; enables the metrics report
        #[arg(long)]
        clean: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// File name prefix for the outputs (defaults to the input stem)
        #[arg(long)]
        prefix: Option<String>,
        /// Record wall-clock time in the report
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run every image x looks x seed x filter cell of a TOML plan
    Batch {
        plan: PathBuf,
        /// Overrides the plan's out_dir
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Write one image row as `column,intensity` CSV
    Profile {
        input: PathBuf,
        #[arg(long)]
        row: usize,
        /// Output CSV (stdout when omitted)
        output: Option<PathBuf>,
    },
    /// Generate a synthetic test image
    Phantom {
        /// circle | checkerboard | ramp
        kind: PhantomKind,
        output: PathBuf,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 50.0)]
        lo: f64,
        #[arg(long, default_value_t = 200.0)]
        hi: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Noise {
            input,
            output,
            looks,
            seed,
        } => commands::noise(&input, &output, looks, seed),
        Command::Despeckle {
            input,
            filter,
            clean,
            out_dir,
            prefix,
            timing,
            solver,
        } => commands::despeckle(&commands::DespeckleJob {
            input,
            filter,
            clean,
            out_dir,
            prefix,
            timing,
            solver,
        }),
        Command::Batch { plan, out_dir, solver } => commands::batch(&plan, out_dir, &solver),
        Command::Profile { input, row, output } => commands::profile(&input, row, output.as_deref()),
        Command::Phantom {
            kind,
            output,
            size,
            lo,
            hi,
        } => commands::phantom(kind, &output, size, lo, hi),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
