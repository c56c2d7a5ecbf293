//! `chainspectra`: spectra, edge-state analyses and sweeps of diatomic
//! spring-mass chains and their two-layer and square-lattice extensions.

mod commands;
mod config;
mod error;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{ChainFlags, ContinueFlags, Context, LatticeFlags, PhaseFlags, TwoLayerFlags};
use config::{AxisFlags, Config};
use error::CliError;
use table::Format;

/// Environment variable capping the worker pool.
const THREADS_VAR: &str = "CHAINSPECTRA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "chainspectra", version, about)]
struct Cli {
    /// Flat JSON object whose keys mirror the long flag names; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Table format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
struct ChainArgs {
    /// Number of unit cells (2n masses).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    /// Left grounding stiffness.
    #[arg(long)]
    k31: Option<f64>,
    /// Right grounding stiffness.
    #[arg(long)]
    k32: Option<f64>,
}

impl From<ChainArgs> for ChainFlags {
    fn from(a: ChainArgs) -> Self {
        ChainFlags {
            n: a.n,
            k1: a.k1,
            k2: a.k2,
            k31: a.k31,
            k32: a.k32,
        }
    }
}

/// Declares the `--<name>-start/stop/count` flags of one sweep axis.
macro_rules! axis_args {
    ($name:ident, $start:literal, $stop:literal, $count:literal) => {
        #[derive(Debug, Args, Clone, Copy)]
        struct $name {
            #[arg(long = $start, id = $start, allow_negative_numbers = true)]
            start: Option<f64>,
            #[arg(long = $stop, id = $stop, allow_negative_numbers = true)]
            stop: Option<f64>,
            #[arg(long = $count, id = $count)]
            count: Option<usize>,
        }

        impl From<$name> for AxisFlags {
            fn from(a: $name) -> Self {
                AxisFlags {
                    start: a.start,
                    stop: a.stop,
                    count: a.count,
                }
            }
        }
    };
}

axis_args!(K2Axis, "k2-start", "k2-stop", "k2-count");
axis_args!(K31Axis, "k31-start", "k31-stop", "k31-count");
axis_args!(K32Axis, "k32-start", "k32-stop", "k32-count");

#[derive(Debug, Subcommand)]
enum Command {
    /// Full spectrum with transfer-matrix data and labels: spectrum.csv, modes.csv.
    Spectrum {
        #[command(flatten)]
        chain: ChainArgs,
        /// Envelope threshold of the edge labels.
        #[arg(long = "eps-loc")]
        eps_loc: Option<f64>,
    },
    /// Edge-state counts over a (k2, k31, k32) grid: phase.csv.
    PhaseDiagram {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
        #[command(flatten)]
        k2_axis: K2Axis,
        #[arg(long)]
        k31: Option<f64>,
        #[command(flatten)]
        k31_axis: K31Axis,
        #[arg(long)]
        k32: Option<f64>,
        #[command(flatten)]
        k32_axis: K32Axis,
        /// Which counts to compute: both, semi or finite.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Spectra over a k32 axis with semi-infinite predictions: sweep_k32.csv, sweep_k32_semi.csv.
    SweepK32 {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        k32_axis: K32Axis,
    },
    /// Exact and asymptotic k32 placing a mode on a band edge: band_edge.csv.
    BandEdge {
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
        #[arg(long)]
        k31: Option<f64>,
        /// acoustic or optical.
        #[arg(long)]
        band: Option<String>,
        /// lower or upper.
        #[arg(long)]
        side: Option<String>,
    },
    /// Measured and predicted in-band phase increments near an edge: inband.csv.
    Inband {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        band: Option<String>,
        #[arg(long)]
        side: Option<String>,
        #[arg(long = "k-max")]
        k_max: Option<usize>,
    },
    /// Nonlinear continuation of a linear mode: branch.csv, branch_summary.json.
    Continue {
        #[command(flatten)]
        chain: ChainArgs,
        /// Cubic on-site coefficient.
        #[arg(long, allow_negative_numbers = true)]
        b: Option<f64>,
        /// Seed mode rank in ascending omega^2 (default: lowest optical mode).
        #[arg(long = "seed-rank")]
        seed_rank: Option<usize>,
        /// Stop once omega^2 is this far past the band edge.
        #[arg(long = "gap-depth")]
        gap_depth: Option<f64>,
        #[arg(long = "max-points")]
        max_points: Option<usize>,
        #[arg(long = "amplitude-max")]
        amplitude_max: Option<f64>,
        /// Also write profile_<point>.csv for every accepted point.
        #[arg(long)]
        profiles: bool,
    },
    /// Two-layer chain spectrum and layer channels: two_layer.csv, two_layer_modes.csv.
    TwoLayer {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
        #[arg(long)]
        k5: Option<f64>,
        #[arg(long)]
        k6: Option<f64>,
        #[arg(long)]
        k31: Option<f64>,
        #[arg(long)]
        k32: Option<f64>,
        #[arg(long)]
        k41: Option<f64>,
        #[arg(long)]
        k42: Option<f64>,
    },
    /// Square-lattice spectrum and edge modes: lattice2d.csv, lattice2d_modes.csv.
    Lattice2d {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
        #[arg(long)]
        k3: Option<f64>,
        #[arg(long)]
        k4: Option<f64>,
        #[arg(long)]
        k5: Option<f64>,
        #[arg(long)]
        k6: Option<f64>,
        /// auto, dense or windowed.
        #[arg(long)]
        solver: Option<String>,
        #[arg(long = "window-lo")]
        window_lo: Option<f64>,
        #[arg(long = "window-hi")]
        window_hi: Option<f64>,
        /// Which mode profiles to write: edge, all or none.
        #[arg(long)]
        dump: Option<String>,
    },
}

fn threads() -> Result<usize, CliError> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(t),
            _ => Err(CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = Config::load(cli.config.as_deref())?;
    let format = Format::parse(&config.string_or("format", cli.format, "csv")?)?;
    let out = PathBuf::from(config.string_or(
        "out",
        cli.out.map(|p| p.to_string_lossy().into_owned()),
        ".",
    )?);
    std::fs::create_dir_all(&out)?;
    let ctx = Context {
        config,
        out,
        format,
        threads: threads()?,
    };
    match cli.command {
        Command::Spectrum { chain, eps_loc } => commands::spectrum(&ctx, &chain.into(), eps_loc),
        Command::PhaseDiagram {
            n,
            k1,
            k2,
            k2_axis,
            k31,
            k31_axis,
            k32,
            k32_axis,
            mode,
        } => commands::phase_diagram(
            &ctx,
            &PhaseFlags {
                n,
                k1,
                k2,
                k2_axis: k2_axis.into(),
                k31,
                k31_axis: k31_axis.into(),
                k32,
                k32_axis: k32_axis.into(),
                mode,
            },
        ),
        Command::SweepK32 { chain, k32_axis } => commands::sweep_k32(&ctx, &chain.into(), k32_axis.into()),
        Command::BandEdge {
            n,
            k1,
            k2,
            k31,
            band,
            side,
        } => {
            let chain = ChainFlags {
                n: None,
                k1,
                k2,
                k31,
                k32: None,
            };
            commands::band_edge(&ctx, &chain, &n, band, side)
        }
        Command::Inband {
            chain,
            band,
            side,
            k_max,
        } => commands::inband(&ctx, &chain.into(), band, side, k_max),
        Command::Continue {
            chain,
            b,
            seed_rank,
            gap_depth,
            max_points,
            amplitude_max,
            profiles,
        } => commands::continue_cmd(
            &ctx,
            &ContinueFlags {
                chain: chain.into(),
                b,
                seed_rank,
                gap_depth,
                max_points,
                amplitude_max,
                profiles,
            },
        ),
        Command::TwoLayer {
            n,
            k1,
            k2,
            k5,
            k6,
            k31,
            k32,
            k41,
            k42,
        } => commands::two_layer(
            &ctx,
            &TwoLayerFlags {
                n,
                k1,
                k2,
                k5,
                k6,
                k31,
                k32,
                k41,
                k42,
            },
        ),
        Command::Lattice2d {
            n,
            k1,
            k2,
            k3,
            k4,
            k5,
            k6,
            solver,
            window_lo,
            window_hi,
            dump,
        } => commands::lattice2d(
            &ctx,
            &LatticeFlags {
                n,
                k1,
                k2,
                k3,
                k4,
                k5,
                k6,
                solver,
                window_lo,
                window_hi,
                dump,
            },
        ),
    }
}

fn main() -> ExitCode {
    // clap exits with code 2 on malformed flags.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chainspectra: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
