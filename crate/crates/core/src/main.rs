use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use markov_embed::cli::{render, run, CliRequest, InputFormat, OutputFormat, Source};
use markov_embed::Tolerances;

/// Decide whether a 2x2 or 3x3 stochastic matrix is the exponential of a
/// generator, and optionally print a verified witness.
///
/// Exit status: 0 embeddable, 1 not embeddable, 2 input or validation error.
#[derive(Debug, Parser)]
#[command(name = "markov-embed", version)]
struct Args {
    /// Read the matrix from a file.
    #[arg(long, value_name = "PATH", conflicts_with = "matrix", required_unless_present = "matrix")]
    input: Option<PathBuf>,

    /// Matrix given inline, e.g. "[[0.9,0.1],[0.2,0.8]]" or "0.9,0.1\n0.2,0.8".
    #[arg(long, value_name = "TEXT")]
    matrix: Option<String>,

    /// Input format. Inferred from the extension or the first character if omitted.
    #[arg(long, value_enum)]
    format: Option<InputFormat>,

    /// Synthesize and verify a witness generator.
    #[arg(long)]
    witness: bool,

    /// Synthesize a witness for every feasible logarithm branch (implies --witness).
    #[arg(long)]
    all_branches: bool,

    /// Maximum accepted |exp(G) - P| for witnesses.
    #[arg(long, value_name = "FLOAT")]
    tol_verify: Option<f64>,

    #[arg(long, value_enum, default_value = "human")]
    output: OutputFormat,

    /// Seed for the randomized generator search.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Also run a randomized generator search with this many samples (3x3 only).
    #[arg(long, value_name = "SAMPLES")]
    brute_force: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter("MARKOV_EMBED_LOG")).init();
    let args = Args::parse();
    let source = match (args.input, args.matrix) {
        (Some(path), _) => Source::Path(path),
        (None, Some(text)) => Source::Inline(text.replace("\\n", "\n")),
        (None, None) => unreachable!("clap enforces one input source"),
    };
    let mut tol = Tolerances::DEFAULT;
    if let Some(v) = args.tol_verify {
        tol.verify = v;
    }
    let request = CliRequest {
        source,
        format: args.format,
        witness: args.witness,
        all_branches: args.all_branches,
        tol,
        output: args.output,
        seed: args.seed,
        brute_force: args.brute_force,
    };
    let (code, report) = run(&request);
    let text = render(&report, request.output);
    if code == 2 && request.output == OutputFormat::Human {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
    ExitCode::from(code as u8)
}
