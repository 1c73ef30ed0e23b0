use std::collections::{HashSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fflao::detplan::external::ExternalPlanner;
use fflao::detplan::{solve_deterministic, Budget, DeterministicProblem, PlanStatus, SearchMode};
use fflao::executor::protocol::{serve as serve_rounds, StreamEnv};
use fflao::executor::{
    round_seed, simulate_rounds, EvalConfig, EvalStats, ExecCaps, Replanner, RoundOutcome, RoundReport, TableSharing,
};
use fflao::learner::{enumerate_determinizations, learning_det, LearnConfig, LearnReport, DEFAULT_ENUMERATION_CAP};
use fflao::oracle::{enumerate, value_iteration, ExplicitModel, Ssp};
use fflao::ppddl::{ground, parse_domain, parse_problem, DomainSchema, DEFAULT_ACTION_CAP};
use fflao::solver::{ff_lao_star, HeuristicKind, Policy, RunReport, SolveError, SolverConfig, SubplannerConfig};
use fflao::{gen as bundled, make_reduction, Determinization, GroundedProblem, ReducedModel};
use serde::Serialize;

use crate::args::*;
use crate::emit::{csv_text, json, num, opt_num, versioned, write_to};
use crate::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Parse { path: path.display().to_string(), message: format!("cannot read: {e}") })
}

fn load_domain(path: &Path) -> Result<DomainSchema, CliError> {
    parse_domain(&read(path)?).map_err(|e| CliError::Parse { path: path.display().to_string(), message: e.to_string() })
}

fn load_problem(schema: &DomainSchema, path: &Path) -> Result<GroundedProblem, CliError> {
    let display = path.display().to_string();
    let desc = parse_problem(&read(path)?, schema)
        .map_err(|e| CliError::Parse { path: display.clone(), message: e.to_string() })?;
    ground(schema, &desc, DEFAULT_ACTION_CAP).map_err(|e| CliError::Ground { path: display, message: e.to_string() })
}

fn load(args: &ProblemArgs) -> Result<(DomainSchema, GroundedProblem), CliError> {
    let schema = load_domain(&args.domain)?;
    let problem = load_problem(&schema, &args.problem)?;
    Ok((schema, problem))
}

fn mode(m: ModeArg) -> SearchMode {
    match m {
        ModeArg::Greedy => SearchMode::Greedy,
        ModeArg::Optimal => SearchMode::Optimal,
    }
}

fn external(program: &Option<PathBuf>, args: &[String]) -> Option<ExternalPlanner> {
    program.as_ref().map(|p| ExternalPlanner { program: p.clone(), args: args.to_vec() })
}

fn solver_config(a: &SolverArgs, record_time: bool) -> Result<SolverConfig, CliError> {
    let cfg = SolverConfig {
        epsilon: a.epsilon,
        dead_end_cap: a.dead_end_cap,
        heuristic: match a.heuristic {
            HeuristicArg::Zero => HeuristicKind::Zero,
            HeuristicArg::RelaxedPlan => HeuristicKind::RelaxedPlan,
        },
        subplanner: SubplannerConfig {
            mode: mode(a.subplanner),
            max_expansions: a.max_expansions,
            external: external(&a.external_planner, &a.external_args),
        },
        record_time,
        ..SolverConfig::default()
    };
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn eval_config(exec: &ExecArgs, solver: SolverConfig, record_time: bool) -> Result<EvalConfig, CliError> {
    if !exec.time_budget.is_finite() || exec.time_budget <= 0.0 {
        return Err(CliError::Config(format!("time budget must be positive, got {}", exec.time_budget)));
    }
    if exec.workers == Some(0) {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    Ok(EvalConfig {
        rounds: exec.rounds,
        seed: exec.seed,
        caps: ExecCaps { max_actions: exec.max_actions, round_time: None, record_time },
        solver,
        sharing: exec.workers.map_or(TableSharing::Shared, |workers| TableSharing::Independent { workers }),
        total_time: Some(Duration::from_secs_f64(exec.time_budget)),
    })
}

fn reduce<'p>(p: &'p GroundedProblem, delta: &Determinization, k: u32) -> Result<ReducedModel<'p>, CliError> {
    make_reduction(p, delta, k).map_err(|e| CliError::Config(e.to_string()))
}

/// Resolves the determinization source; `problem_path` is the default
/// training problem for `--learn`.
fn determinization(
    det: &DetSource,
    learn: Option<&LearnOptions>,
    schema: &DomainSchema,
    problem: &GroundedProblem,
    problem_path: &Path,
    seed: u64,
    solver: &SolverConfig,
) -> Result<(Determinization, Option<LearnReport>), CliError> {
    if let Some(path) = &det.det_file {
        let d = Determinization::parse(&read(path)?)
            .map_err(|e| CliError::Parse { path: path.display().to_string(), message: e.to_string() })?;
        return Ok((d, None));
    }
    if let Some(i) = det.det_index {
        let all = enumerate_determinizations(&problem.schemas, DEFAULT_ENUMERATION_CAP)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let n = all.len();
        let d = all
            .into_iter()
            .nth(i)
            .ok_or_else(|| CliError::Config(format!("determinization index {i} out of range (0..{n})")))?;
        return Ok((d, None));
    }
    if det.learn {
        let opts = learn.ok_or_else(|| CliError::Config("--learn is not available here".into()))?;
        let train_path = opts.training_problem.as_deref().unwrap_or(problem_path);
        let train = load_problem(schema, train_path)?;
        let cfg = LearnConfig {
            k: opts.learn_k,
            eval: EvalConfig { rounds: opts.learn_rounds, seed, solver: solver.clone(), ..EvalConfig::default() },
            ..LearnConfig::default()
        };
        let report = learning_det(&train, &cfg).map_err(|e| CliError::Solve(e.to_string()))?;
        return Ok((report.selected_delta(), Some(report)));
    }
    Ok((Determinization::most_likely(&problem.schemas), None))
}

#[derive(Serialize)]
struct PolicyEntry {
    state: String,
    value: f64,
    action: Option<String>,
}

#[derive(Serialize)]
struct PlanOutput {
    problem: String,
    k: u32,
    determinization: String,
    initial_action: Option<String>,
    report: RunReport,
    /// States reachable from the initial state under the policy.
    policy: Vec<PolicyEntry>,
}

const POLICY_LISTING_CAP: usize = 10_000;

fn policy_listing(m: &ReducedModel, tables: &fflao::solver::SolverTables) -> Vec<PolicyEntry> {
    let mut seen = HashSet::from([m.initial.clone()]);
    let mut queue = VecDeque::from([m.initial.clone()]);
    let mut out = Vec::new();
    while let Some(s) = queue.pop_front() {
        if out.len() >= POLICY_LISTING_CAP {
            break;
        }
        let pi = tables.policy(&s);
        out.push(PolicyEntry {
            state: m.label(&s),
            value: tables.value(&s).unwrap_or(0.0),
            action: pi.action().map(|a| m.problem.action_name(a)),
        });
        if let Policy::Act(a) = pi {
            if let Ok(dist) = m.reduced_successors(&s, a) {
                for (t, _) in dist.entries {
                    if !m.is_goal(&t) && seen.insert(t.clone()) {
                        queue.push_back(t);
                    }
                }
            }
        }
    }
    out
}

pub fn plan(a: PlanArgs) -> Result<(), CliError> {
    let solver = solver_config(&a.solver, a.timings)?;
    let (schema, p) = load(&a.problem)?;
    let (delta, _) = determinization(&a.det, Some(&a.learn), &schema, &p, &a.problem.problem, a.seed, &solver)?;
    let m = reduce(&p, &delta, a.solver.k)?;
    let (tables, report, converged) = match ff_lao_star(&m, solver) {
        Ok((t, r)) => (t, r, true),
        Err(SolveError::IterationLimit { report, tables: Some(t) }) => (*t, *report, false),
        Err(e) => return Err(CliError::Solve(e.to_string())),
    };
    let out = PlanOutput {
        problem: p.name.clone(),
        k: a.solver.k,
        determinization: delta.to_string(),
        initial_action: tables.policy(&m.initial).action().map(|x| p.action_name(x)),
        policy: policy_listing(&m, &tables),
        report,
    };
    write_to(a.out.as_deref(), &json(&versioned("plan", out)))?;
    if converged {
        Ok(())
    } else {
        Err(CliError::Solve("no convergence within the sweep bound".into()))
    }
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    problem: &'a str,
    k: u32,
    determinization: String,
    rounds: &'a [RoundReport],
    stats: EvalStats,
}

fn outcome_name(o: RoundOutcome) -> String {
    serde_json::to_value(o).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let solver = solver_config(&a.solver, a.output.timings)?;
    let eval = eval_config(&a.exec, solver.clone(), a.output.timings)?;
    let (schema, p) = load(&a.problem)?;
    let (delta, _) = determinization(&a.det, Some(&a.learn), &schema, &p, &a.problem.problem, a.exec.seed, &solver)?;
    reduce(&p, &delta, a.solver.k)?;
    let rounds = simulate_rounds(&p, &delta, a.solver.k, &eval).map_err(|e| CliError::Solve(e.to_string()))?;
    let stats = EvalStats::from_rounds(&rounds, solver.dead_end_cap);
    if let Some(path) = &a.output.csv {
        let mut header = vec!["round", "seed", "outcome", "actions_taken", "accumulated_cost", "replans"];
        if a.output.timings {
            header.push("wall_time_secs");
        }
        let rows: Vec<Vec<String>> = rounds
            .iter()
            .map(|r| {
                let mut row = vec![
                    r.round.to_string(),
                    r.seed.to_string(),
                    outcome_name(r.outcome),
                    r.actions_taken.to_string(),
                    num(r.accumulated_cost),
                    r.replans.to_string(),
                ];
                if a.output.timings {
                    row.push(opt_num(r.wall_time_secs));
                }
                row
            })
            .collect();
        fs::write(path, csv_text(&header, &rows)?)?;
    }
    let out = SimulateOutput { problem: &p.name, k: a.solver.k, determinization: delta.to_string(), rounds: &rounds, stats };
    write_to(a.output.out.as_deref(), &json(&versioned("simulate", out)))
}

pub fn learn_det(a: LearnDetArgs) -> Result<(), CliError> {
    let solver = solver_config(&a.solver, a.timings)?;
    let mut eval = eval_config(&a.exec, solver, a.timings)?;
    let total_time = eval.total_time.take();
    let schema = load_domain(&a.domain)?;
    let train = load_problem(&schema, &a.training_problem)?;
    let cfg = LearnConfig {
        k: a.solver.k,
        eval,
        enumeration_cap: a.enumeration_cap,
        total_time,
        parallel: true,
        record_time: a.timings,
    };
    let report = learning_det(&train, &cfg).map_err(|e| CliError::Solve(e.to_string()))?;
    let mut header = vec!["rank", "id", "success_probability", "expected_cost", "cost_std_error"];
    if a.timings {
        header.push("solve_time_secs");
    }
    let rows: Vec<Vec<String>> = report
        .ranked()
        .into_iter()
        .map(|c| {
            let mut row = vec![
                c.rank.to_string(),
                c.id.to_string(),
                num(c.stats.success_probability),
                num(c.stats.expected_cost),
                num(c.stats.cost_std_error),
            ];
            if a.timings {
                row.push(opt_num(c.solve_time_secs));
            }
            row
        })
        .collect();
    if let Some(path) = &a.out {
        fs::write(path, &report.candidates[report.selected].delta)?;
    }
    if let Some(path) = &a.json {
        fs::write(path, json(&versioned("learn-det", &report)))?;
    }
    write_to(None, &csv_text(&header, &rows)?)
}

#[derive(Serialize)]
struct BenchRow {
    problem: String,
    status: &'static str,
    stats: EvalStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_secs: Option<f64>,
}

#[derive(Serialize)]
struct BenchOutput {
    k: u32,
    determinization: Option<String>,
    rows: Vec<BenchRow>,
}

pub fn bench(a: BenchArgs) -> Result<(), CliError> {
    let solver = solver_config(&a.solver, a.timings)?;
    let eval = eval_config(&a.exec, solver.clone(), a.timings)?;
    let schema = load_domain(&a.domain)?;
    let mut rows = Vec::new();
    let mut delta_text = None;
    if let Some(first) = a.problems.first() {
        let p0 = load_problem(&schema, first)?;
        let (delta, _) = determinization(&a.det, Some(&a.learn), &schema, &p0, first, a.exec.seed, &solver)?;
        delta_text = Some(delta.to_string());
        for path in &a.problems {
            let p = load_problem(&schema, path)?;
            reduce(&p, &delta, a.solver.k)?;
            let start = Instant::now();
            let rounds = simulate_rounds(&p, &delta, a.solver.k, &eval).map_err(|e| CliError::Solve(e.to_string()))?;
            let budget_hit = rounds.iter().any(|r| r.outcome == RoundOutcome::TimeBudget);
            rows.push(BenchRow {
                problem: path.display().to_string(),
                status: if budget_hit { "budget_exhausted" } else { "ok" },
                stats: EvalStats::from_rounds(&rounds, solver.dead_end_cap),
                wall_time_secs: a.timings.then(|| start.elapsed().as_secs_f64()),
            });
        }
    }
    let mut header =
        vec!["problem", "status", "rounds", "successes", "success_probability", "expected_cost", "cost_std_error", "replans"];
    if a.timings {
        header.push("wall_time_secs");
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![
                r.problem.clone(),
                r.status.to_string(),
                r.stats.rounds.to_string(),
                r.stats.successes.to_string(),
                num(r.stats.success_probability),
                num(r.stats.expected_cost),
                num(r.stats.cost_std_error),
                r.stats.replans.to_string(),
            ];
            if a.timings {
                row.push(opt_num(r.wall_time_secs));
            }
            row
        })
        .collect();
    if let Some(path) = &a.json {
        let out = BenchOutput { k: a.solver.k, determinization: delta_text, rows };
        fs::write(path, json(&versioned("bench", out)))?;
    }
    write_to(None, &csv_text(&header, &table)?)
}

#[derive(Serialize)]
struct DetplanOutput {
    status: PlanStatus,
    cost: Option<f64>,
    expansions: usize,
    plan: Vec<String>,
}

pub fn detplan(c: DetplanCommand) -> Result<(), CliError> {
    let DetplanCommand::Solve(a) = c;
    let (schema, p) = load(&a.problem)?;
    let d = if a.all_outcomes {
        DeterministicProblem::all_outcomes(&p)
    } else {
        let (delta, _) = determinization(&a.det, None, &schema, &p, &a.problem.problem, 0, &SolverConfig::default())?;
        DeterministicProblem::from_reduction(&reduce(&p, &delta, 0)?)
    };
    let result = match external(&a.external_planner, &a.external_args) {
        Some(planner) => planner.solve(&d, &p.initial_state).map_err(|e| CliError::Solve(e.to_string()))?,
        None => solve_deterministic(&d, &p.initial_state, &Budget::expansions(a.max_expansions), mode(a.mode)),
    };
    let out = DetplanOutput {
        status: result.status,
        cost: result.is_plan().then(|| result.cost()),
        expansions: result.expansions,
        plan: result.steps.iter().map(|s| p.action_name(s.action)).collect(),
    };
    write_to(a.out.as_deref(), &json(&versioned("detplan-solve", out)))?;
    match result.status {
        PlanStatus::Plan => Ok(()),
        PlanStatus::Failure => Err(CliError::Solve("no plan exists".into())),
        PlanStatus::BudgetExceeded => Err(CliError::Solve("expansion budget exceeded".into())),
    }
}

#[derive(Serialize)]
struct ViEntry {
    state: String,
    value: f64,
    action: Option<String>,
}

#[derive(Serialize)]
struct ViOutput {
    states: usize,
    transitions: usize,
    sweeps: usize,
    value_s0: f64,
    initial_action: Option<String>,
    values: Vec<ViEntry>,
}

fn vi_output<S>(em: &ExplicitModel<S>, p: &GroundedProblem, a: &OracleArgs) -> ViOutput
where
    S: Clone + Eq + std::hash::Hash,
{
    let vi = value_iteration(em, a.epsilon, a.dead_end_cap);
    let name = |pi: Policy| pi.action().map(|x| p.action_name(x));
    ViOutput {
        states: em.len(),
        transitions: em.transition_count(),
        sweeps: vi.sweeps,
        value_s0: vi.values[em.initial],
        initial_action: name(vi.policy[em.initial]),
        values: (0..em.len())
            .map(|i| ViEntry { state: em.labels[i].clone(), value: vi.values[i], action: name(vi.policy[i]) })
            .collect(),
    }
}

fn oracle_run<M: Ssp>(m: &M, p: &GroundedProblem, a: &OracleArgs, dump: bool) -> Result<String, CliError>
where
    M::S: Clone + Eq + std::hash::Hash,
{
    let em = enumerate(m, a.state_cap).map_err(|e| CliError::Solve(e.to_string()))?;
    Ok(if dump {
        json(&versioned("oracle-enumerate", em.dump()))
    } else {
        json(&versioned("oracle-vi", vi_output(&em, p, a)))
    })
}

pub fn oracle(c: OracleCommand) -> Result<(), CliError> {
    let (a, dump) = match c {
        OracleCommand::Vi(a) => (a, false),
        OracleCommand::Enumerate(a) => (a, true),
    };
    if a.epsilon.is_nan() || a.epsilon <= 0.0 || a.dead_end_cap.is_nan() || a.dead_end_cap <= 0.0 {
        return Err(CliError::Config("epsilon and dead-end cap must be positive".into()));
    }
    let (schema, p) = load(&a.problem)?;
    let text = if a.det.is_given() {
        let (delta, _) = determinization(&a.det, None, &schema, &p, &a.problem.problem, 0, &SolverConfig::default())?;
        oracle_run(&reduce(&p, &delta, a.k)?, &p, &a, dump)?
    } else {
        oracle_run(&p, &p, &a, dump)?
    };
    write_to(a.out.as_deref(), &text)
}

pub fn gen(c: GenCommand) -> Result<(), CliError> {
    let (g, out) = match c {
        GenCommand::Tireworld { n, out } => {
            if n == 0 {
                return Err(CliError::Config("tireworld size must be at least 1".into()));
            }
            (bundled::triangle_tireworld(n), out)
        }
        GenCommand::Retry { p, out } => (bundled::retry(&p), out),
        GenCommand::Chain { len, out } => {
            if len == 0 {
                return Err(CliError::Config("chain length must be at least 1".into()));
            }
            (bundled::chain(len), out)
        }
        GenCommand::Trap { risky_steps, safe_steps, wreck_probability, out } => {
            if risky_steps == 0 || safe_steps == 0 {
                return Err(CliError::Config("routes need at least one step".into()));
            }
            (bundled::trap(&bundled::TrapParams { risky_steps, safe_steps, wreck_probability }), out)
        }
    };
    match (&out.domain_out, &out.problem_out) {
        (None, None) => write_to(None, &format!("{}\n{}", g.domain, g.problem)),
        _ => {
            write_to(out.domain_out.as_deref(), &g.domain)?;
            write_to(out.problem_out.as_deref(), &g.problem)
        }
    }
}

pub fn serve(a: ServeArgs) -> Result<(), CliError> {
    let (_, p) = load(&a.problem)?;
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve_rounds(&p, a.rounds, a.seed, a.max_actions, &mut stdin.lock(), &mut stdout.lock())
        .map_err(|e| CliError::Output(std::io::Error::other(e.to_string())))?;
    Ok(())
}

#[derive(Serialize)]
struct ClientOutput<'a> {
    problem: &'a str,
    k: u32,
    determinization: String,
    rounds: &'a [RoundReport],
    stats: EvalStats,
}

pub fn client(a: ClientArgs) -> Result<(), CliError> {
    let solver = solver_config(&a.solver, false)?;
    let (schema, p) = load(&a.problem)?;
    let (delta, _) = determinization(&a.det, Some(&a.learn), &schema, &p, &a.problem.problem, a.exec.seed, &solver)?;
    let m = reduce(&p, &delta, a.solver.k)?;
    let mut agent = Replanner::new(&m, solver.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let stdin = std::io::stdin();
    let mut env = StreamEnv::new(&p, stdin.lock(), std::io::stdout());
    let caps = ExecCaps { max_actions: a.exec.max_actions, ..ExecCaps::default() };
    let mut rounds = Vec::with_capacity(a.exec.rounds);
    for i in 0..a.exec.rounds {
        let r = agent
            .run_round(&mut env, &caps, i, round_seed(a.exec.seed, i))
            .map_err(|e| CliError::Solve(e.to_string()))?;
        rounds.push(r);
    }
    let stats = EvalStats::from_rounds(&rounds, solver.dead_end_cap);
    let out = ClientOutput { problem: &p.name, k: a.solver.k, determinization: delta.to_string(), rounds: &rounds, stats };
    fs::write(&a.out, json(&versioned("client", out)))?;
    Ok(())
}

