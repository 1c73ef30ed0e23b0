//! Execution with replanning: follow the reduced-model policy in an
//! environment governed by the original problem, and call the solver again
//! from `(s, 0)` whenever the policy does not cover the observed state.

pub mod protocol;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::model::{self, State};
use crate::problem::{ActionId, GroundedProblem};
use crate::reduction::{make_reduction, AugmentedState, Determinization, ReducedModel, ReductionError};
use crate::solver::{ConfigError, Policy, SolveError, Solver, SolverConfig, SolverTables};
use crate::util::derive_seed;

pub const DEFAULT_MAX_ACTIONS: usize = 2500;
pub const DEFAULT_ROUNDS: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("environment rejected action {0}")]
    InvalidAction(String),
    #[error("round ended by the environment: {0}")]
    RoundEnded(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A stochastic environment that owns the true state.
pub trait Environment {
    /// Starts a round and returns the initial state.
    fn reset(&mut self, seed: u64) -> Result<State, EnvError>;
    /// Executes `a` and returns the next state.
    fn step(&mut self, a: ActionId) -> Result<State, EnvError>;
    /// Called once when the agent stops acting in a round.
    fn finish(&mut self, _outcome: RoundOutcome) -> Result<(), EnvError> {
        Ok(())
    }
}

/// In-process environment sampling outcomes from the problem's own
/// distributions with a ChaCha generator seeded per round.
pub struct SimEnv<'p> {
    problem: &'p GroundedProblem,
    rng: ChaCha8Rng,
    state: State,
}

impl<'p> SimEnv<'p> {
    pub fn new(problem: &'p GroundedProblem) -> Self {
        Self { problem, rng: ChaCha8Rng::seed_from_u64(0), state: problem.initial_state.clone() }
    }

    pub fn state(&self) -> &State {
        &self.state
    }
}

impl Environment for SimEnv<'_> {
    fn reset(&mut self, seed: u64) -> Result<State, EnvError> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = self.problem.initial_state.clone();
        Ok(self.state.clone())
    }

    fn step(&mut self, a: ActionId) -> Result<State, EnvError> {
        let action = self.problem.actions.get(a).ok_or_else(|| EnvError::InvalidAction(format!("#{a}")))?;
        if !action.applicable(&self.state) {
            return Err(EnvError::InvalidAction(self.problem.action_name(a)));
        }
        let r: f64 = self.rng.gen();
        let mut acc = 0.0;
        let mut pick = action.outcomes.len() - 1;
        for (i, o) in action.outcomes.iter().enumerate() {
            acc += o.p;
            if r < acc {
                pick = i;
                break;
            }
        }
        self.state = model::apply_outcome(&self.state, a, pick, self.problem);
        Ok(self.state.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundOutcome {
    Goal,
    ActionCap,
    /// The policy has no action (NOP) in a non-goal state.
    DeadEnd,
    InvalidAction,
    TimeBudget,
    /// The solver hit its sweep bound.
    SolverLimit,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    pub seed: u64,
    pub outcome: RoundOutcome,
    pub actions_taken: usize,
    pub accumulated_cost: f64,
    /// Solver invocations during the round.
    pub replans: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl RoundReport {
    pub fn succeeded(&self) -> bool {
        self.outcome == RoundOutcome::Goal
    }
}

#[derive(Clone, Debug)]
pub struct ExecCaps {
    pub max_actions: usize,
    /// Wall-time budget for one round, solver time included.
    pub round_time: Option<Duration>,
    pub record_time: bool,
}

impl Default for ExecCaps {
    fn default() -> Self {
        Self { max_actions: DEFAULT_MAX_ACTIONS, round_time: None, record_time: false }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("environment rejected {action}, which the model deems applicable")]
    EnvMismatch { action: String },
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// FF-LAO* with replanning over one reduced model. Solver tables persist
/// across rounds.
pub struct Replanner<'m, 'p> {
    solver: Solver<'m, 'p>,
    replanned: Vec<State>,
}

impl<'m, 'p> Replanner<'m, 'p> {
    pub fn new(model: &'m ReducedModel<'p>, cfg: SolverConfig) -> Result<Self, ConfigError> {
        Ok(Self { solver: Solver::new(model, cfg)?, replanned: Vec::new() })
    }

    pub fn with_tables(model: &'m ReducedModel<'p>, cfg: SolverConfig, tables: SolverTables) -> Result<Self, ConfigError> {
        Ok(Self { solver: Solver::with_tables(model, cfg, tables)?, replanned: Vec::new() })
    }

    pub fn tables(&self) -> &SolverTables {
        &self.solver.tables
    }

    /// States at which the solver was invoked, in call order.
    pub fn replanned_states(&self) -> &[State] {
        &self.replanned
    }

    pub fn into_tables(self) -> SolverTables {
        self.solver.into_tables()
    }

    /// Runs one round against `env`.
    pub fn run_round(
        &mut self,
        env: &mut dyn Environment,
        caps: &ExecCaps,
        round: usize,
        seed: u64,
    ) -> Result<RoundReport, ExecError> {
        let start = Instant::now();
        let deadline = caps.round_time.map(|d| start + d);
        self.solver.set_deadline(deadline);
        let problem = self.solver.model().problem;
        let mut s = env.reset(seed)?;
        let mut actions_taken = 0;
        let mut cost = 0.0;
        let mut replans = 0;
        let outcome = loop {
            if model::is_goal(&s, problem) {
                break RoundOutcome::Goal;
            }
            if actions_taken >= caps.max_actions {
                break RoundOutcome::ActionCap;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                break RoundOutcome::TimeBudget;
            }
            let key = AugmentedState::new(s.clone(), 0);
            if !self.solver.tables.policy(&key).is_set() {
                replans += 1;
                self.replanned.push(s.clone());
                match self.solver.solve_from(&key) {
                    Ok(_) => {}
                    Err(SolveError::Deadline(_)) => break RoundOutcome::TimeBudget,
                    Err(SolveError::IterationLimit { .. }) => break RoundOutcome::SolverLimit,
                    Err(SolveError::Config(e)) => return Err(e.into()),
                }
            }
            let a = match self.solver.tables.policy(&key) {
                Policy::Act(a) => a,
                _ => break RoundOutcome::DeadEnd,
            };
            match env.step(a) {
                Ok(next) => {
                    actions_taken += 1;
                    cost += problem.actions[a].cost_f64;
                    s = next;
                }
                Err(EnvError::InvalidAction(name)) => {
                    if problem.actions[a].applicable(&s) {
                        return Err(ExecError::EnvMismatch { action: name });
                    }
                    break RoundOutcome::InvalidAction;
                }
                Err(EnvError::RoundEnded(_)) => break RoundOutcome::ActionCap,
                Err(e) => return Err(e.into()),
            }
        };
        env.finish(outcome)?;
        Ok(RoundReport {
            round,
            seed,
            outcome,
            actions_taken,
            accumulated_cost: cost,
            replans,
            wall_time_secs: caps.record_time.then(|| start.elapsed().as_secs_f64()),
        })
    }
}

/// One round of replanning execution with fresh solver tables.
pub fn replan_execute(
    p: &GroundedProblem,
    delta: &Determinization,
    k: u32,
    cfg: SolverConfig,
    env: &mut dyn Environment,
    caps: &ExecCaps,
    seed: u64,
) -> Result<RoundReport, ExecError> {
    let m = make_reduction(p, delta, k)?;
    Replanner::new(&m, cfg)?.run_round(env, caps, 0, seed)
}

pub const COST_AGGREGATION: &str = "mean over all rounds; failed rounds count accumulated cost plus the dead-end cap";

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EvalStats {
    pub rounds: usize,
    pub successes: usize,
    pub success_probability: f64,
    pub expected_cost: f64,
    /// Standard error of the per-round costs behind `expected_cost`.
    pub cost_std_error: f64,
    pub replans: usize,
    pub cost_aggregation: &'static str,
}

impl EvalStats {
    pub fn from_rounds(reports: &[RoundReport], dead_end_cap: f64) -> Self {
        let rounds = reports.len();
        let successes = reports.iter().filter(|r| r.succeeded()).count();
        let costs: Vec<f64> = reports
            .iter()
            .map(|r| if r.succeeded() { r.accumulated_cost } else { r.accumulated_cost + dead_end_cap })
            .collect();
        let n = rounds.max(1) as f64;
        let mean = costs.iter().sum::<f64>() / n;
        let var = if rounds > 1 { costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        EvalStats {
            rounds,
            successes,
            success_probability: successes as f64 / n,
            expected_cost: mean,
            cost_std_error: (var / n).sqrt(),
            replans: reports.iter().map(|r| r.replans).sum(),
            cost_aggregation: COST_AGGREGATION,
        }
    }
}

/// How rounds share solver tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TableSharing {
    /// Rounds run in order on one set of tables.
    #[default]
    Shared,
    /// Rounds are split into contiguous blocks, one per worker, each worker
    /// with its own tables.
    Independent { workers: usize },
}

#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub rounds: usize,
    pub seed: u64,
    pub caps: ExecCaps,
    pub solver: SolverConfig,
    pub sharing: TableSharing,
    /// Wall-time budget for all rounds together; rounds that start after it
    /// is spent are recorded as time-budget failures.
    pub total_time: Option<Duration>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            rounds: DEFAULT_ROUNDS,
            seed: 0,
            caps: ExecCaps::default(),
            solver: SolverConfig::default(),
            sharing: TableSharing::Shared,
            total_time: None,
        }
    }
}

/// Seed of round `i` under base seed `seed`.
pub fn round_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, i as u64)
}

fn run_block(
    m: &ReducedModel,
    cfg: &EvalConfig,
    rounds: std::ops::Range<usize>,
    deadline: Option<Instant>,
) -> Result<Vec<RoundReport>, ExecError> {
    let mut agent = Replanner::new(m, cfg.solver.clone())?;
    let mut env = SimEnv::new(m.problem);
    let mut out = Vec::with_capacity(rounds.len());
    for i in rounds {
        let seed = round_seed(cfg.seed, i);
        let mut caps = cfg.caps.clone();
        if let Some(d) = deadline {
            let left = d.saturating_duration_since(Instant::now());
            if left.is_zero() {
                out.push(RoundReport {
                    round: i,
                    seed,
                    outcome: RoundOutcome::TimeBudget,
                    actions_taken: 0,
                    accumulated_cost: 0.0,
                    replans: 0,
                    wall_time_secs: caps.record_time.then_some(0.0),
                });
                continue;
            }
            caps.round_time = Some(caps.round_time.map_or(left, |r| r.min(left)));
        }
        out.push(agent.run_round(&mut env, &caps, i, seed)?);
    }
    Ok(out)
}

/// Runs `cfg.rounds` seeded rounds on the reduction of `p` by `delta`.
pub fn simulate_rounds(
    p: &GroundedProblem,
    delta: &Determinization,
    k: u32,
    cfg: &EvalConfig,
) -> Result<Vec<RoundReport>, ExecError> {
    let m = make_reduction(p, delta, k)?;
    let deadline = cfg.total_time.map(|t| Instant::now() + t);
    match cfg.sharing {
        TableSharing::Shared => run_block(&m, cfg, 0..cfg.rounds, deadline),
        TableSharing::Independent { workers } => {
            let workers = workers.clamp(1, cfg.rounds.max(1));
            let per = cfg.rounds.div_ceil(workers);
            let blocks: Vec<_> = (0..workers).map(|w| (w * per).min(cfg.rounds)..((w + 1) * per).min(cfg.rounds)).collect();
            let parts: Result<Vec<_>, _> = blocks.into_par_iter().map(|b| run_block(&m, cfg, b, deadline)).collect();
            Ok(parts?.into_iter().flatten().collect())
        }
    }
}

/// Monte-Carlo estimate of success probability and expected cost.
pub fn monte_carlo_evaluate(
    p: &GroundedProblem,
    delta: &Determinization,
    k: u32,
    cfg: &EvalConfig,
) -> Result<EvalStats, ExecError> {
    let reports = simulate_rounds(p, delta, k, cfg)?;
    Ok(EvalStats::from_rounds(&reports, cfg.solver.dead_end_cap))
}
