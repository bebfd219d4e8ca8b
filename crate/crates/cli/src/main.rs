//! `teflow`: build attention indices, derive market series and run transfer
//! entropy analyses from the command line.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use teflow::pipeline::{LagMode, Transform, WindowScheme};

use commands::{Analysis, KindArg, LabeledPath, PairInputs, RunContext, SynthArgs, VolMethod};
use settings::Settings;

#[derive(Parser)]
#[command(
    name = "teflow",
    version,
    about = "Transfer entropy between attention and market series"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed for surrogates, bootstrap and synthetic data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Logarithm base for entropies.
    #[arg(long, global = true)]
    base: Option<f64>,
    /// Quantile cut points, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    quantiles: Option<Vec<f64>>,
    /// Shuffled-source surrogates per estimate.
    #[arg(long, global = true)]
    shuffles: Option<usize>,
    /// Bootstrap replications per estimate; 0 disables the p-value.
    #[arg(long, global = true)]
    boot: Option<usize>,
    /// TOML settings file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Also write plot-ready tables.
    #[arg(long, global = true)]
    plot_data: bool,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report failures as a JSON object on stderr.
    #[arg(long, global = true)]
    error_json: bool,
    /// More log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args)]
struct PairArgs {
    /// Source series, `LABEL=PATH` or a path labelled by its file stem.
    #[arg(long)]
    source: LabeledPath,
    /// Target series; repeat for several targets.
    #[arg(long, required = true)]
    target: Vec<LabeledPath>,
    /// Target history length.
    #[arg(long)]
    k: Option<usize>,
    /// Source history length.
    #[arg(long)]
    l: Option<usize>,
    /// Markov order of the bootstrap null; defaults to `l`.
    #[arg(long)]
    block_order: Option<usize>,
    #[arg(long, value_parser = parse_transform)]
    source_transform: Option<Transform>,
    #[arg(long, value_parser = parse_transform)]
    target_transform: Option<Transform>,
    /// Only estimate source to target.
    #[arg(long)]
    one_way: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate OHLC and search-interest files and write normalized copies.
    Ingest {
        #[arg(long)]
        ohlc: Vec<PathBuf>,
        /// A trends file or a directory of them.
        #[arg(long)]
        trends: Vec<PathBuf>,
    },
    /// Build a composite attention index from per-keyword files.
    Index {
        /// Built-in keyword set.
        #[arg(
            long,
            required_unless_present = "keywords_file",
            conflicts_with = "keywords_file"
        )]
        set: Option<String>,
        /// One keyword per line.
        #[arg(long)]
        keywords_file: Option<PathBuf>,
        /// Directory holding `<keyword>.csv` files.
        #[arg(long)]
        input_dir: PathBuf,
        /// Output stem; defaults to the set name.
        #[arg(long)]
        name: Option<String>,
    },
    /// Daily log returns from close prices.
    Returns {
        #[arg(long)]
        ohlc: PathBuf,
    },
    /// Daily range-based volatility.
    Vol {
        #[arg(long)]
        ohlc: PathBuf,
        #[arg(long, value_enum, default_value = "parkinson")]
        method: VolMethod,
    },
    /// Full-sample transfer entropy for each source/target pair.
    Te(PairArgs),
    /// Transfer entropy over a range of lags.
    Lagsweep {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        max_lag: usize,
        #[arg(long, default_value_t = 1)]
        min_lag: usize,
        #[arg(long, value_parser = parse_lag_mode)]
        lag_mode: Option<LagMode>,
    },
    /// Transfer entropy over consecutive non-overlapping windows.
    Windows {
        #[command(flatten)]
        pair: PairArgs,
        /// Number of equal windows.
        #[arg(long, required_unless_present = "size", conflicts_with = "size")]
        count: Option<usize>,
        /// Observations per window.
        #[arg(long)]
        size: Option<usize>,
    },
    /// Generate a synthetic source/target pair with known coupling.
    Synthgen {
        #[arg(
            long,
            value_enum,
            required_unless_present = "spec",
            conflicts_with = "spec"
        )]
        kind: Option<KindArg>,
        /// TOML process spec; needed for coupled Markov chains.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        length: usize,
        #[arg(long, default_value_t = 1)]
        delay: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.5)]
        phi: f64,
        #[arg(long, default_value_t = 0.0)]
        coupling: f64,
    },
}

fn parse_transform(s: &str) -> std::result::Result<Transform, String> {
    match s {
        "levels" => Ok(Transform::Levels),
        "diff" | "first-difference" => Ok(Transform::FirstDifference),
        _ => Err(format!("expected levels or first-difference, got '{s}'")),
    }
}

fn parse_lag_mode(s: &str) -> std::result::Result<LagMode, String> {
    match s {
        "joint" => Ok(LagMode::Joint),
        "source-shift" => Ok(LagMode::SourceShift),
        _ => Err(format!("expected joint or source-shift, got '{s}'")),
    }
}

fn cli_settings(global: &Global, command: &Command) -> Settings {
    let mut s = Settings {
        seed: global.seed,
        base: global.base,
        quantiles: global.quantiles.clone(),
        shuffles: global.shuffles,
        boot: global.boot,
        ..Settings::default()
    };
    let pair = match command {
        Command::Te(pair) | Command::Windows { pair, .. } => Some(pair),
        Command::Lagsweep { pair, lag_mode, .. } => {
            s.lag_mode = *lag_mode;
            Some(pair)
        }
        _ => None,
    };
    if let Some(p) = pair {
        s.k = p.k;
        s.l = p.l;
        s.block_order = p.block_order;
        s.source_transform = p.source_transform;
        s.target_transform = p.target_transform;
    }
    s
}

fn pair_inputs(p: &PairArgs) -> PairInputs<'_> {
    PairInputs {
        source: &p.source,
        targets: &p.target,
        one_way: p.one_way,
    }
}

fn run(cli: Cli) -> Result<()> {
    let global = &cli.global;
    if let Some(threads) = global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring worker threads")?;
    }
    let file_settings = match &global.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let settings = file_settings
        .overlay(cli_settings(global, &cli.command))
        .resolve();
    std::fs::create_dir_all(&global.out)
        .with_context(|| format!("creating {}", global.out.display()))?;
    let ctx = RunContext {
        out: global.out.clone(),
        settings,
        plot_data: global.plot_data,
    };

    match &cli.command {
        Command::Ingest { ohlc, trends } => commands::ingest(&ctx, ohlc, trends),
        Command::Index {
            set,
            keywords_file,
            input_dir,
            name,
        } => commands::index(
            &ctx,
            set.as_deref(),
            keywords_file.as_deref(),
            input_dir,
            name.as_deref(),
        ),
        Command::Returns { ohlc } => commands::returns(&ctx, ohlc),
        Command::Vol { ohlc, method } => commands::vol(&ctx, ohlc, *method),
        Command::Te(pair) => {
            commands::analyse(&ctx, &pair_inputs(pair), Analysis::FullSample).map(drop)
        }
        Command::Lagsweep {
            pair,
            max_lag,
            min_lag,
            ..
        } => commands::analyse(
            &ctx,
            &pair_inputs(pair),
            Analysis::Lags {
                min: *min_lag,
                max: *max_lag,
            },
        )
        .map(drop),
        Command::Windows { pair, count, size } => {
            let scheme = match (count, size) {
                (Some(n), _) => WindowScheme::Count(*n),
                (None, Some(n)) => WindowScheme::Size(*n),
                (None, None) => unreachable!("clap requires --count or --size"),
            };
            commands::analyse(&ctx, &pair_inputs(pair), Analysis::Windows(scheme)).map(drop)
        }
        Command::Synthgen {
            kind,
            spec,
            length,
            delay,
            noise,
            phi,
            coupling,
        } => commands::synthgen(
            &ctx,
            &SynthArgs {
                kind: *kind,
                spec: spec.as_deref(),
                length: *length,
                delay: *delay,
                noise: *noise,
                phi: *phi,
                coupling: *coupling,
                seed_given: global.seed.is_some(),
            },
        ),
    }
}

/// 3 for failures of the statistical procedure, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let statistical = err
        .chain()
        .find_map(|e| e.downcast_ref::<teflow::Error>())
        .is_some_and(teflow::Error::is_statistical);
    if statistical {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let error_json = cli.global.error_json;

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            if error_json {
                let kind = err
                    .chain()
                    .find_map(|e| e.downcast_ref::<teflow::Error>())
                    .map_or("Error", teflow::Error::kind);
                let body = serde_json::json!({
                    "error": kind,
                    "message": format!("{err:#}"),
                    "exit_code": code,
                });
                eprintln!("{body}");
            } else {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(code)
        }
    }
}
