use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use permprof::Error;

mod commands;
mod output;

use output::Format;

#[derive(Parser, Debug)]
#[command(
    name = "permprof",
    version,
    about = "Pattern profiles of permutations and their spectral decomposition"
)]
struct Cli {
    /// Output format; floats appear only in text output.
    #[arg(long, value_enum, default_value_t = FormatArg::Json, global = true)]
    format: FormatArg,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct PermInput {
    /// One-line notation, e.g. "4 1 2 5 3".
    #[arg(long, conflicts_with = "perm_file")]
    pub perm: Option<String>,
    /// File holding one permutation in one-line notation.
    #[arg(long)]
    pub perm_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pattern counts and densities.
    Profile {
        #[command(flatten)]
        input: PermInput,
        #[arg(long)]
        k: usize,
        /// Estimate from randomly sampled position subsets.
        #[arg(long)]
        approx: bool,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Largest exact job, in profile work units.
        #[arg(long)]
        budget: Option<u128>,
    },
    /// Projections of the profile onto every column of U_k, by block.
    Decompose {
        #[command(flatten)]
        input: PermInput,
        #[arg(long)]
        k: usize,
    },
    /// Exact second moments of the profile under the uniform law.
    Moments {
        #[arg(long)]
        k: usize,
        /// Host size; without it the fitted polynomial matrix is printed.
        #[arg(long)]
        n: Option<usize>,
        /// Print the limiting covariance n·cov instead.
        #[arg(long, conflicts_with = "n")]
        cov: bool,
        #[arg(long)]
        long: bool,
    },
    /// Exact diagonalization check of the normalized second moments.
    Verify {
        #[arg(long)]
        k: usize,
        /// Allow enumeration up to n = 12 (k >= 5).
        #[arg(long)]
        long: bool,
        /// Generator plug-in file (JSON) for shapes not built in.
        #[arg(long)]
        generators: Option<PathBuf>,
    },
    /// Monte Carlo scaling of a projection's second moment.
    Mc {
        #[arg(long)]
        k: usize,
        /// Direction: a basis column of block r.
        #[arg(long, conflicts_with_all = ["column", "vector"])]
        block: Option<usize>,
        /// Direction: a basis column label such as R21_22.
        #[arg(long, conflicts_with = "vector")]
        column: Option<String>,
        /// Direction: explicit comma-separated coefficients.
        #[arg(long, allow_hyphen_values = true)]
        vector: Option<String>,
        /// Second direction (column label) for cross-covariances.
        #[arg(long)]
        u_column: Option<String>,
        /// Comma-separated host sizes.
        #[arg(long, default_value = "20,40,80,160")]
        n: String,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Per-sample profile budget.
        #[arg(long)]
        budget: Option<u128>,
        /// Half-width of the slope acceptance band around −r.
        #[arg(long, default_value_t = 0.3)]
        band: f64,
    },
    /// Rank test on a two-column CSV of paired observations.
    Test {
        /// CSV path, or - for stdin.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "tau")]
        statistic: String,
        #[arg(long, default_value = ",")]
        delimiter: char,
        /// Break ties at random instead of failing.
        #[arg(long)]
        break_ties: bool,
        /// Null draws for a Monte Carlo p-value; 0 skips it.
        #[arg(long, default_value_t = 0)]
        null_samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Distance of the 4-profile from uniform along the quasirandomness direction.
    Quasirandom {
        #[command(flatten)]
        input: PermInput,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::TooLarge { .. } => 3,
        Error::DegreeViolation { .. }
        | Error::Diverges { .. }
        | Error::HomomorphismViolation(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let format = match cli.format {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
        FormatArg::Text => Format::Text,
    };
    let result = match cli.command {
        Command::Profile {
            input,
            k,
            approx,
            samples,
            seed,
            budget,
        } => commands::profile(&input, k, approx, samples, seed, budget, format),
        Command::Decompose { input, k } => commands::decompose(&input, k, format),
        Command::Moments { k, n, cov, long } => commands::moments(k, n, cov, long, format),
        Command::Verify {
            k,
            long,
            generators,
        } => commands::verify(k, long, generators, format),
        Command::Mc {
            k,
            block,
            column,
            vector,
            u_column,
            n,
            samples,
            seed,
            budget,
            band,
        } => commands::mc(
            commands::McArgs {
                k,
                block,
                column,
                vector,
                u_column,
                n,
                samples,
                seed,
                budget,
                band,
            },
            format,
        ),
        Command::Test {
            input,
            statistic,
            delimiter,
            break_ties,
            null_samples,
            seed,
        } => commands::test(
            &input,
            &statistic,
            delimiter,
            break_ties,
            null_samples,
            seed,
            format,
        ),
        Command::Quasirandom { input } => commands::quasirandom(&input, format),
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.text);
            ExitCode::from(if outcome.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
