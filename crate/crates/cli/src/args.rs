use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "fflao", version, about = "Reduced-model SSP planning with FF-LAO*")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the reduced model from the initial state and report.
    Plan(PlanArgs),
    /// Run seeded replanning rounds against the simulated environment.
    Simulate(SimulateArgs),
    /// Pick a determinization by evaluating every candidate on a training problem.
    LearnDet(LearnDetArgs),
    /// Evaluate a list of problems in order and emit one row per problem.
    Bench(BenchArgs),
    /// Standalone deterministic planning.
    #[command(subcommand)]
    Detplan(DetplanCommand),
    /// Explicit-state reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Write a bundled domain and problem.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Serve simulation rounds over newline-delimited JSON on stdin/stdout.
    Serve(ServeArgs),
    /// Plan against a server speaking the JSON protocol on stdin/stdout.
    Client(ClientArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub problem: PathBuf,
}

/// Where the determinization comes from. Without any of these the
/// most-likely-outcome determinization is used.
#[derive(Args, Debug, Clone, Default)]
#[group(id = "det", multiple = false)]
pub struct DetSource {
    /// Determinization file (`schema/clause -> outcome` per line).
    #[arg(long)]
    pub det_file: Option<PathBuf>,
    /// Position in the enumeration order of all determinizations.
    #[arg(long)]
    pub det_index: Option<usize>,
    /// Most likely outcome of every clause.
    #[arg(long)]
    pub det_mlo: bool,
    /// Learn the determinization first.
    #[arg(long)]
    pub learn: bool,
}

impl DetSource {
    pub fn is_given(&self) -> bool {
        self.det_file.is_some() || self.det_index.is_some() || self.det_mlo || self.learn
    }
}

#[derive(Args, Debug, Clone)]
pub struct LearnOptions {
    /// Training problem for --learn; defaults to the problem being solved.
    #[arg(long)]
    pub training_problem: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub learn_rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub learn_k: u32,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicArg {
    Zero,
    RelaxedPlan,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Greedy,
    Optimal,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Exception bound of the reduction.
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    #[arg(long, default_value_t = fflao::solver::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Value given to dead ends and the cap of every value.
    #[arg(long, default_value_t = fflao::solver::DEFAULT_DEAD_END_CAP)]
    pub dead_end_cap: f64,
    #[arg(long, value_enum, default_value_t = HeuristicArg::RelaxedPlan)]
    pub heuristic: HeuristicArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Greedy)]
    pub subplanner: ModeArg,
    #[arg(long, default_value_t = fflao::detplan::DEFAULT_MAX_EXPANSIONS)]
    pub max_expansions: usize,
    /// External classical planner; `{domain}` and `{problem}` in its
    /// arguments are replaced by file paths.
    #[arg(long)]
    pub external_planner: Option<PathBuf>,
    #[arg(long = "external-arg", allow_hyphen_values = true)]
    pub external_args: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct ExecArgs {
    #[arg(long, default_value_t = fflao::executor::DEFAULT_ROUNDS)]
    pub rounds: usize,
    #[arg(long, default_value_t = fflao::executor::DEFAULT_MAX_ACTIONS)]
    pub max_actions: usize,
    /// Seconds for all rounds of one problem together.
    #[arg(long, default_value_t = 1200.0)]
    pub time_budget: f64,
    #[arg(long, env = "FFLAO_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Split rounds across this many workers with independent tables.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// JSON output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Include wall-clock timings (makes output run-dependent).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub det: DetSource,
    #[command(flatten)]
    pub learn: LearnOptions,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, env = "FFLAO_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub det: DetSource,
    #[command(flatten)]
    pub learn: LearnOptions,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub exec: ExecArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct LearnDetArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub training_problem: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub exec: ExecArgs,
    /// Where to write the selected determinization.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, default_value_t = fflao::learner::DEFAULT_ENUMERATION_CAP)]
    pub enumeration_cap: usize,
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub domain: PathBuf,
    /// Problems in evaluation order; repeat the flag.
    #[arg(long = "problem")]
    pub problems: Vec<PathBuf>,
    #[command(flatten)]
    pub det: DetSource,
    #[command(flatten)]
    pub learn: LearnOptions,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub exec: ExecArgs,
    /// JSON output path; the CSV table goes to stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub timings: bool,
}

#[derive(Subcommand, Debug)]
pub enum DetplanCommand {
    /// Solve the primary determinization (or the all-outcomes relaxation)
    /// from the initial state.
    Solve(DetplanSolveArgs),
}

#[derive(Args, Debug)]
pub struct DetplanSolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub det: DetSource,
    /// Every outcome becomes its own deterministic action.
    #[arg(long, conflicts_with = "det")]
    pub all_outcomes: bool,
    #[arg(long, value_enum, default_value_t = ModeArg::Greedy)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = fflao::detplan::DEFAULT_MAX_EXPANSIONS)]
    pub max_expansions: usize,
    #[arg(long)]
    pub external_planner: Option<PathBuf>,
    #[arg(long = "external-arg", allow_hyphen_values = true)]
    pub external_args: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum OracleCommand {
    /// Value iteration over the enumerated state space.
    Vi(OracleArgs),
    /// Dump the enumerated state space as JSON.
    Enumerate(OracleArgs),
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Reduce first with this determinization; the original problem otherwise.
    #[command(flatten)]
    pub det: DetSource,
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    #[arg(long, default_value_t = 1e-9)]
    pub epsilon: f64,
    #[arg(long, default_value_t = fflao::solver::DEFAULT_DEAD_END_CAP)]
    pub dead_end_cap: f64,
    #[arg(long, default_value_t = fflao::oracle::DEFAULT_STATE_CAP)]
    pub state_cap: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum GenCommand {
    /// Triangle tireworld of size n.
    Tireworld {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: GenOut,
    },
    /// One action that succeeds with probability p and may be retried.
    Retry {
        #[arg(long, default_value = "0.5")]
        p: String,
        #[command(flatten)]
        out: GenOut,
    },
    /// Deterministic chain of unit-cost steps.
    Chain {
        #[arg(long)]
        len: usize,
        #[command(flatten)]
        out: GenOut,
    },
    /// Short risky route against a longer safe one.
    Trap {
        #[arg(long, default_value_t = 4)]
        risky_steps: usize,
        #[arg(long, default_value_t = 6)]
        safe_steps: usize,
        #[arg(long, default_value = "0.3")]
        wreck_probability: String,
        #[command(flatten)]
        out: GenOut,
    },
}

#[derive(Args, Debug)]
pub struct GenOut {
    /// Domain file; stdout when absent.
    #[arg(long)]
    pub domain_out: Option<PathBuf>,
    /// Problem file; stdout when absent.
    #[arg(long)]
    pub problem_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = fflao::executor::DEFAULT_ROUNDS)]
    pub rounds: usize,
    #[arg(long, default_value_t = fflao::executor::DEFAULT_MAX_ACTIONS)]
    pub max_actions: usize,
    #[arg(long, env = "FFLAO_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ClientArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub det: DetSource,
    #[command(flatten)]
    pub learn: LearnOptions,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub exec: ExecArgs,
    /// Report path (stdout carries the protocol).
    #[arg(long)]
    pub out: PathBuf,
}
