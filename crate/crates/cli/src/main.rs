use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oclk::{cmd_check, cmd_eval, cmd_trace, cmd_typecheck, Format, Outcome, RunConfig};

#[derive(Parser)]
#[command(
    name = "oclk",
    version,
    about = "Check OCL constraints against object snapshots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check invariants, operation contracts, constancy and traces
    Check(Args),
    /// Evaluate one expression over a snapshot
    Eval {
        #[command(flatten)]
        args: Args,
        /// OCL expression text
        expression: String,
    },
    /// Type-check constraint files without evaluating anything
    Typecheck(Args),
    /// Check `called` and `action` constraints against a message trace
    Trace(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Class model document
    #[arg(long)]
    model: Option<PathBuf>,
    /// Snapshot document; give two for a pre and a post state
    #[arg(long = "snapshot")]
    snapshots: Vec<PathBuf>,
    /// Constraint file; repeatable
    #[arg(long = "constraints")]
    constraints: Vec<PathBuf>,
    /// Invocation document describing one operation execution
    #[arg(long = "invocation")]
    invocations: Vec<PathBuf>,
    /// Message trace document
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Iteration cap for recursive derived attributes
    #[arg(long, env = "OCLK_MAX_ITER", default_value_t = oclk_core::fixpoint::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Report layout; machine rows are tab-separated
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Object bound to `self` when evaluating
    #[arg(long = "self")]
    self_id: Option<String>,
    /// Do not fail on undefined verdicts
    #[arg(long)]
    undefined_ok: bool,
}

impl From<Args> for RunConfig {
    fn from(a: Args) -> Self {
        RunConfig {
            model: a.model,
            snapshots: a.snapshots,
            constraints: a.constraints,
            invocations: a.invocations,
            trace: a.trace,
            max_iter: a.max_iter,
            format: a.format,
            self_id: a.self_id,
            undefined_ok: a.undefined_ok,
        }
    }
}

fn main() -> ExitCode {
    let out: Outcome = match Cli::parse().command {
        Command::Check(a) => cmd_check(&a.into()),
        Command::Eval { args, expression } => cmd_eval(&args.into(), &expression),
        Command::Typecheck(a) => cmd_typecheck(&a.into()),
        Command::Trace(a) => cmd_trace(&a.into()),
    };
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    ExitCode::from(out.code as u8)
}
