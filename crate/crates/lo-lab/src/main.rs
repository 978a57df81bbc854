//! Thin front-end: parse flags, hand off to `lo_lab::cli`, map errors to
//! exit codes (1 validation, 2 capacity, 3 detected invariant violation).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lo_lab::asymp::Backend;
use lo_lab::cli::{self, Command, OutputFormat, RunConfig, SetSpec};
use lo_lab::{Error, StepSet};

#[derive(Parser)]
#[command(name = "lo-lab", version, about = "Concentration of signed Bernoulli sums: exact ρ, Fourier bounds, extremal scans")]
struct CliArgs {
    /// RNG seed for randomized commands (mc, arrange-fuzz)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// Also write the report here (timing zeroed, byte-reproducible)
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker thread cap; defaults to LO_LAB_THREADS or all cores
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Text,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Text => OutputFormat::Text,
        }
    }
}

#[derive(Args)]
struct SetArgs {
    /// Comma-separated integer steps, e.g. "-2,-1,0,1,2"
    #[arg(long, conflicts_with = "v0")]
    set: Option<String>,

    /// Use the interval set V0 at this odd n
    #[arg(long)]
    v0: Option<u64>,
}

impl SetArgs {
    fn spec(&self) -> Result<SetSpec, Error> {
        match (&self.set, self.v0) {
            (Some(text), None) => Ok(SetSpec::Steps(StepSet::parse(text)?)),
            (None, Some(n)) => Ok(SetSpec::V0(n)),
            _ => Err(Error::InvalidInput(
                "give exactly one of --set or --v0".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact concentration probability ρ(V) with its argmax points
    Rho {
        #[command(flatten)]
        set: SetArgs,
    },
    /// Full distribution of S = Σ η·v
    Dist {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, default_value = "exact")]
        backend: Backend,
    },
    /// Fourier inversion value of P(S = a) vs the exact backend
    Fourier {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
    },
    /// Level set S_m = {ξ : Σ‖vξ/p‖² ≤ m}
    Levelset {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        m: f64,
    },
    /// Dual cardinality bound |S_{n/100}| ≤ 8p/n with T_a statistics
    Dual {
        #[command(flatten)]
        set: SetArgs,
    },
    /// Dyadic doubling profile of S_m with containment and Cauchy–Davenport checks
    Dyadic {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        m: f64,
        #[arg(long, default_value_t = 2.1)]
        growth: f64,
    },
    /// ρ(V₀)·n^{3/2} convergence table
    #[command(name = "asymp-table")]
    AsympTable {
        /// Comma-separated odd n values
        #[arg(long, value_delimiter = ',')]
        n: Vec<u64>,
        #[arg(long, default_value = "float")]
        backend: Backend,
    },
    /// Tail majorant sums for V₀ split by ‖ξ/p‖ regime
    Regimes {
        #[arg(long)]
        n: u64,
    },
    /// Irreducibility reduction with a replayable trace
    Reduce {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        c: f64,
        #[arg(long = "window-c")]
        window_c: f64,
    },
    /// Exhaustive dilation search in F_p
    Dilation {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, default_value_t = 0)]
        budget: usize,
    },
    /// Greedy block lower bound for ℓ(ξ) in the medium regime
    Blocks {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        xi: u64,
        #[arg(long = "window-c")]
        window_c: f64,
        /// Prime to work in (default: the canonical embedding prime)
        #[arg(long)]
        p: Option<u64>,
    },
    /// Randomized verification of the arrangement inequality
    #[command(name = "arrange-fuzz")]
    ArrangeFuzz {
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1009)]
        max_p: u64,
    },
    /// Exhaustive max of ρ over distinct n-subsets of [−B, B]
    Stanley {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        b: i64,
    },
    /// Near-maximizers of ρ with normalized variances
    Stability {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        b: i64,
        #[arg(long)]
        epsilon: f64,
    },
    /// Monte Carlo estimate of ρ
    Mc {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
}

impl Cmd {
    fn into_command(self) -> Result<Command, Error> {
        Ok(match self {
            Cmd::Rho { set } => Command::Rho { set: set.spec()? },
            Cmd::Dist { set, backend } => Command::Dist {
                set: set.spec()?,
                backend,
            },
            Cmd::Fourier { set, a } => Command::Fourier { set: set.spec()?, a },
            Cmd::Levelset { set, m } => Command::Levelset { set: set.spec()?, m },
            Cmd::Dual { set } => Command::Dual { set: set.spec()? },
            Cmd::Dyadic { set, m, growth } => Command::Dyadic {
                set: set.spec()?,
                m,
                growth,
            },
            Cmd::AsympTable { n, backend } => Command::AsympTable { ns: n, backend },
            Cmd::Regimes { n } => Command::Regimes { n },
            Cmd::Reduce { set, c, window_c } => Command::Reduce {
                set: set.spec()?,
                c,
                window_c,
            },
            Cmd::Dilation { set, budget } => Command::Dilation {
                set: set.spec()?,
                budget,
            },
            Cmd::Blocks {
                set,
                xi,
                window_c,
                p,
            } => Command::Blocks {
                set: set.spec()?,
                xi,
                window_c,
                p,
            },
            Cmd::ArrangeFuzz { trials, max_p } => Command::ArrangeFuzz { trials, max_p },
            Cmd::Stanley { n, b } => Command::Stanley { n, b },
            Cmd::Stability { n, b, epsilon } => Command::Stability { n, b, epsilon },
            Cmd::Mc { set, samples } => Command::Mc {
                set: set.spec()?,
                samples,
            },
        })
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Capacity(_) => 2,
        Error::InvariantViolation(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    // clap's default error exit is 2, which this tool reserves for
    // capacity refusals; flag problems are validation errors (exit 1)
    let args = match CliArgs::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let threads = args
        .threads
        .or_else(|| std::env::var("LO_LAB_THREADS").ok().and_then(|s| s.parse().ok()));
    let format: OutputFormat = args.format.into();
    let command = match args.command.into_command() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error kind={} msg={:?}", e.kind(), e.to_string());
            return ExitCode::from(exit_code_for(&e));
        }
    };
    let config = RunConfig {
        command,
        seed: args.seed,
        format,
        output: args.output,
        threads,
    };
    match run_and_emit(&config) {
        Ok(violation) => {
            if violation {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error kind={} msg={:?}", e.kind(), e.to_string());
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run_and_emit(config: &RunConfig) -> Result<bool, Error> {
    let outcome = cli::run(config)?;
    println!("{}", cli::render(&outcome, config.format)?);
    if let Some(path) = &config.output {
        std::fs::write(path, cli::render_for_file(&outcome, config.format)?)?;
    }
    Ok(outcome.violation)
}
