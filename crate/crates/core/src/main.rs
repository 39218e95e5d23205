use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use simplex_angles::cli::{
    cmd_angle, cmd_bounds, cmd_freeze, cmd_regions, cmd_verify_main, AngleArgs, BoundsArgs,
    ConeInput, ExperimentReport, FreezeArgs, RegionsArgs, RunConfig, VerifyMainArgs,
};
use simplex_angles::mc::Method;
use simplex_angles::{Error, Result};

const EXIT_FAIL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "simplex-angles",
    version,
    about = "Solid angles of simplicial cones and simplices"
)]
struct Cli {
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 0)]
    stream: u64,
    #[arg(long, global = true, default_value_t = 1)]
    shards: usize,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Leave wall_time out so reruns are byte-identical.
    #[arg(long, global = true)]
    omit_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Solid angle of one cone.
    Angle {
        /// `gram:d:rho` or a file with one generator per row.
        #[arg(long)]
        cone: String,
        #[arg(long, value_delimiter = ',', default_value = "orthant")]
        method: Vec<Method>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Expected Gaussian angle sum against the regular simplex.
    VerifyMain {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 200)]
        simplices: usize,
        #[arg(long, default_value_t = 20_000)]
        angle_samples: u64,
    },
    /// Angle sums along the degenerating families and random simplices.
    Bounds {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,0.25,0.5,0.75,0.9,0.95,0.99"
        )]
        t_grid: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 100)]
        simplices: usize,
        #[arg(long, default_value_t = 100_000)]
        simplex_samples: u64,
    },
    /// Lifted Gaussian simplices as the ambient dimension grows.
    Freeze {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
        n_grid: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        #[arg(long, default_value_t = 100_000)]
        angle_samples: u64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Cells cut out by the facet hyperplanes of a Gaussian simplex.
    Regions {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
}

fn run(cli: &Cli) -> Result<ExperimentReport> {
    if cli.shards == 0 {
        return Err(Error::InvalidInput("--shards must be at least 1".into()));
    }
    let cfg = RunConfig {
        seed: cli.seed,
        stream: cli.stream,
        shards: cli.shards,
    };
    match &cli.command {
        Command::Angle {
            cone,
            method,
            samples,
        } => cmd_angle(
            &AngleArgs {
                input: ConeInput::parse(cone)?,
                methods: method.clone(),
                samples: *samples,
            },
            &cfg,
        ),
        Command::VerifyMain {
            dim,
            samples,
            simplices,
            angle_samples,
        } => cmd_verify_main(
            &VerifyMainArgs {
                dim: *dim,
                samples: *samples,
                simplices: *simplices,
                angle_samples: *angle_samples,
            },
            &cfg,
        ),
        Command::Bounds {
            dim,
            t_grid,
            samples,
            simplices,
            simplex_samples,
        } => cmd_bounds(
            &BoundsArgs {
                dim: *dim,
                t_grid: t_grid.clone(),
                samples: *samples,
                simplices: *simplices,
                simplex_samples: *simplex_samples,
            },
            &cfg,
        ),
        Command::Freeze {
            dim,
            n_grid,
            replicates,
            angle_samples,
            samples,
        } => cmd_freeze(
            &FreezeArgs {
                dim: *dim,
                n_grid: n_grid.clone(),
                replicates: *replicates,
                angle_samples: *angle_samples,
                samples: *samples,
            },
            &cfg,
        ),
        Command::Regions { dim, samples } => cmd_regions(
            &RegionsArgs {
                dim: *dim,
                samples: *samples,
            },
            &cfg,
        ),
    }
}

fn emit(cli: &Cli, report: &ExperimentReport) -> std::io::Result<()> {
    let mut text = match cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &cli.out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(mut report) => {
            if cli.omit_timing {
                report.wall_time = None;
            }
            if let Err(e) = emit(&cli, &report) {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(1);
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("verdict: fail ({})", report.failures().join(", "));
                ExitCode::from(EXIT_FAIL)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::GeneralPositionViolation { vertices, .. } = &e {
                eprintln!("{}", serde_json::json!({ "simplex": vertices }));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
