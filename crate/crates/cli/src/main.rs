//! Batch front end for the heyting-core library.
//!
//! One verb per decision or construction procedure, deterministic output in
//! three formats, and exit codes meant for scripting: 0 for a positive
//! verdict, 1 for a negative one, 2 for errors and exhausted budgets, 64 for
//! usage mistakes.

mod config;
mod render;
mod verbs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "heyting", version, about = "Decision procedures over free Heyting algebras")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Dot,
}

/// Flags shared by every verb.
#[derive(Args)]
pub struct Common {
    /// Number of propositional atoms x1..xn.
    #[arg(short = 'n', long = "vars", default_value_t = 2,
          value_parser = clap::value_parser!(u16).range(1..=16))]
    pub n: u16,
    /// Output format. `dot` is available where the result is a graph.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the output to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed echoed into reports; reserved for randomized verbs.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the type-count budget.
    #[arg(long)]
    pub budget_types: Option<usize>,
    /// Override the successor-meet budget.
    #[arg(long)]
    pub budget_meets: Option<usize>,
    /// Override the node-count budget.
    #[arg(long)]
    pub budget_nodes: Option<usize>,
    /// Override the level-depth budget.
    #[arg(long)]
    pub budget_levels: Option<u32>,
    /// Override the search-step budget.
    #[arg(long)]
    pub budget_steps: Option<u64>,
    /// Override the closure-width cap.
    #[arg(long)]
    pub budget_width: Option<usize>,
}

#[derive(Subcommand)]
enum Verb {
    /// Decide whether a formula is intuitionistically valid.
    Prove {
        formula: String,
        #[command(flatten)]
        common: Common,
    },
    /// Decide whether two formulas are equivalent.
    Equiv {
        left: String,
        right: String,
        #[command(flatten)]
        common: Common,
    },
    /// Split a formula into its maximal join-irreducible components.
    Decompose {
        formula: String,
        #[command(flatten)]
        common: Common,
    },
    /// List the minimal realizable types containing a formula.
    Mintype {
        formula: String,
        #[command(flatten)]
        common: Common,
    },
    /// Place a formula in the join-irreducible order: bottom, reducible,
    /// J1, J2 or J3.
    Classify {
        formula: String,
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate the forcing set of a formula level by level.
    Kenum {
        formula: String,
        #[command(flatten)]
        common: Common,
    },
    /// Build the universal model fragment and export it.
    Model {
        /// Complete levels to enumerate.
        #[arg(long, default_value_t = 2)]
        levels: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Emit the defining formula pair of fragment nodes.
    Dejongh {
        /// Complete levels to enumerate before listing nodes.
        #[arg(long, default_value_t = 2)]
        levels: u32,
        /// Restrict to a single node id.
        #[arg(long)]
        node: Option<u32>,
        /// Machine-check each emitted pair.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        common: Common,
    },
    /// List well-positioned triplets in canonical order.
    Triplets {
        /// How many triplets to produce.
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Build the witness formula of a well-positioned triplet.
    J2build {
        /// Index into the canonical triplet order.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Re-check join-irreducibility of the witness (needs a generous
        /// budget profile).
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Extend an embedded finite order by one point.
    Extend {
        /// JSON description of the order, its images and the new point.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the one-variable ladder of equivalence classes.
    Rn {
        /// Ladder depth; the list has 2 + 2*depth entries.
        #[arg(long, default_value_t = 8)]
        depth: u32,
        /// Append the pairwise entailment matrix.
        #[arg(long)]
        table: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive countermodel search over small models.
    Oracle {
        formula: String,
        /// Optional consequent; without it the formula's validity is probed.
        right: Option<String>,
        /// Largest model size to try.
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(64)
                }
            };
        }
    };
    let outcome = match cli.verb {
        Verb::Prove { formula, common } => verbs::prove(&formula, &common),
        Verb::Equiv { left, right, common } => verbs::equivalent(&left, &right, &common),
        Verb::Decompose { formula, common } => verbs::decompose(&formula, &common),
        Verb::Mintype { formula, common } => verbs::mintype(&formula, &common),
        Verb::Classify { formula, common } => verbs::classify(&formula, &common),
        Verb::Kenum { formula, common } => verbs::kenum(&formula, &common),
        Verb::Model { levels, common } => verbs::model(levels, &common),
        Verb::Dejongh { levels, node, verify, common } => {
            verbs::dejongh(levels, node, verify, &common)
        }
        Verb::Triplets { count, common } => verbs::triplets(count, &common),
        Verb::J2build { index, check, common } => verbs::j2build(index, check, &common),
        Verb::Extend { input, common } => verbs::extend(&input, &common),
        Verb::Rn { depth, table, common } => verbs::rn(depth, table, &common),
        Verb::Oracle { formula, right, max_size, common } => {
            verbs::oracle(&formula, right.as_deref(), max_size, &common)
        }
    };
    match outcome {
        Ok(run) => {
            if let Err(e) = run.deliver() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(run.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
