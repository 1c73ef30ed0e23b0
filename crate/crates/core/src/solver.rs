//! FF-LAO*: LAO* over an M_{k,1} reduction, with states at the exception
//! bound solved by the deterministic sub-planner and memoized.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use crate::detplan::external::ExternalPlanner;
use crate::detplan::{
    solve_deterministic, Budget, DeterministicProblem, PlanResult, PlanStatus, RelaxedPlanHeuristic, SearchMode,
    DEFAULT_MAX_EXPANSIONS,
};
use crate::problem::ActionId;
use crate::reduction::{AugmentedState, ReducedModel};

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_DEAD_END_CAP: f64 = 500.0;
pub const DEFAULT_MAX_SWEEPS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Unset,
    /// Goal, or a state judged a dead end.
    Nop,
    Act(ActionId),
}

impl Policy {
    pub fn is_set(self) -> bool {
        self != Policy::Unset
    }

    pub fn action(self) -> Option<ActionId> {
        match self {
            Policy::Act(a) => Some(a),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicKind {
    Zero,
    #[default]
    RelaxedPlan,
}

#[derive(Clone, Debug)]
pub struct SubplannerConfig {
    pub mode: SearchMode,
    pub max_expansions: usize,
    pub external: Option<ExternalPlanner>,
}

impl Default for SubplannerConfig {
    fn default() -> Self {
        Self { mode: SearchMode::Greedy, max_expansions: DEFAULT_MAX_EXPANSIONS, external: None }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub epsilon: f64,
    /// Values are capped here; a state at the cap is treated as a dead end.
    pub dead_end_cap: f64,
    pub heuristic: HeuristicKind,
    pub subplanner: SubplannerConfig,
    /// Bound on expansion plus convergence sweeps in one solve.
    pub max_sweeps: usize,
    pub deadline: Option<Instant>,
    /// Record wall time in the run report.
    pub record_time: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            dead_end_cap: DEFAULT_DEAD_END_CAP,
            heuristic: HeuristicKind::default(),
            subplanner: SubplannerConfig::default(),
            max_sweeps: DEFAULT_MAX_SWEEPS,
            deadline: None,
            record_time: false,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("dead-end cap must be positive, got {0}")]
    DeadEndCap(f64),
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(ConfigError::Epsilon(self.epsilon));
        }
        if self.dead_end_cap.is_nan() || self.dead_end_cap <= 0.0 {
            return Err(ConfigError::DeadEndCap(self.dead_end_cap));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RunReport {
    pub converged: bool,
    pub value_s0: f64,
    /// First-time state expansions.
    pub expansions: usize,
    pub bellman_updates: usize,
    pub sweeps: usize,
    pub subplanner_calls: usize,
    pub subplanner_failures: usize,
    pub subplanner_budget_exceeded: usize,
    pub subplanner_expansions: usize,
    /// Error of each convergence sweep; `None` stands for infinity.
    pub residual_trace: Vec<Option<f64>>,
    /// States reachable from the root under the policy.
    pub policy_size: usize,
    pub table_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    /// `tables` holds the best-so-far tables when the solver itself was
    /// consumed by the call.
    #[error("no convergence after {} sweeps", .report.sweeps)]
    IterationLimit { report: Box<RunReport>, tables: Option<Box<SolverTables>> },
    #[error("time budget exhausted after {} sweeps", .0.sweeps)]
    Deadline(Box<RunReport>),
}

impl SolveError {
    /// Best-so-far report, when the solve got under way.
    pub fn report(&self) -> Option<&RunReport> {
        match self {
            SolveError::Config(_) => None,
            SolveError::IterationLimit { report, .. } | SolveError::Deadline(report) => Some(report),
        }
    }
}

#[derive(Clone, Debug)]
struct Edge {
    action: ActionId,
    cost: f64,
    outcomes: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
struct Node {
    state: AugmentedState,
    goal: bool,
    v: Option<f64>,
    h: Option<f64>,
    pi: Policy,
    edges: Option<Vec<Edge>>,
    stamp: u64,
}

/// Value and policy tables over augmented states. Tables belong to one
/// reduced model; they may be carried across solves of that model.
#[derive(Clone, Debug, Default)]
pub struct SolverTables {
    nodes: Vec<Node>,
    index: HashMap<AugmentedState, usize>,
    stamp: u64,
}

impl SolverTables {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn get(&self, s: &AugmentedState) -> Option<&Node> {
        self.index.get(s).map(|&i| &self.nodes[i])
    }

    /// Stored value; goals read 0 even before their first update.
    pub fn value(&self, s: &AugmentedState) -> Option<f64> {
        self.get(s).and_then(|n| if n.goal { Some(n.v.unwrap_or(0.0)) } else { n.v })
    }

    pub fn policy(&self, s: &AugmentedState) -> Policy {
        self.get(s).map_or(Policy::Unset, |n| n.pi)
    }

    /// Overwrites an entry. Intended for warm starts and tests.
    pub fn set(&mut self, m: &ReducedModel, s: AugmentedState, v: f64, pi: Policy) {
        let i = self.intern(m, s);
        self.nodes[i].v = Some(v);
        self.nodes[i].pi = pi;
    }

    /// Entries with a policy set, in insertion order.
    pub fn entries(&self) -> impl Iterator<Item = (&AugmentedState, f64, Policy)> {
        self.nodes.iter().filter(|n| n.pi.is_set()).map(|n| (&n.state, n.v.unwrap_or(0.0), n.pi))
    }

    fn intern(&mut self, m: &ReducedModel, s: AugmentedState) -> usize {
        if let Some(&i) = self.index.get(&s) {
            return i;
        }
        let goal = m.is_goal(&s);
        self.nodes.push(Node { state: s.clone(), goal, v: None, h: None, pi: Policy::Unset, edges: None, stamp: 0 });
        self.index.insert(s, self.nodes.len() - 1);
        self.nodes.len() - 1
    }
}

#[derive(Default)]
struct Counters {
    expansions: usize,
    bellman_updates: usize,
    sweeps: usize,
    calls: usize,
    failures: usize,
    budget_exceeded: usize,
    sub_expansions: usize,
    trace: Vec<Option<f64>>,
}

/// One FF-LAO* instance over a reduced model.
pub struct Solver<'m, 'p> {
    model: &'m ReducedModel<'p>,
    cfg: SolverConfig,
    det: DeterministicProblem,
    det_h: Option<RelaxedPlanHeuristic>,
    all_outcomes: Option<(DeterministicProblem, RelaxedPlanHeuristic)>,
    pub tables: SolverTables,
    counters: Counters,
}

impl<'m, 'p> Solver<'m, 'p> {
    pub fn new(model: &'m ReducedModel<'p>, cfg: SolverConfig) -> Result<Self, ConfigError> {
        Self::with_tables(model, cfg, SolverTables::new())
    }

    pub fn with_tables(model: &'m ReducedModel<'p>, cfg: SolverConfig, tables: SolverTables) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let det = DeterministicProblem::from_reduction(model);
        let (det_h, all_outcomes) = match cfg.heuristic {
            HeuristicKind::Zero => (None, None),
            HeuristicKind::RelaxedPlan => {
                let h = RelaxedPlanHeuristic::new(&det);
                let ao = (model.k > 0).then(|| {
                    let d = DeterministicProblem::all_outcomes(model.problem);
                    let h = RelaxedPlanHeuristic::new(&d);
                    (d, h)
                });
                (Some(h), ao)
            }
        };
        Ok(Self { model, cfg, det, det_h, all_outcomes, tables, counters: Counters::default() })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.cfg.deadline = deadline;
    }

    pub fn model(&self) -> &ReducedModel<'p> {
        self.model
    }

    pub fn into_tables(self) -> SolverTables {
        self.tables
    }

    fn intern(&mut self, s: AugmentedState) -> usize {
        self.tables.intern(self.model, s)
    }

    fn heuristic(&mut self, n: usize) -> f64 {
        if let Some(h) = self.tables.nodes[n].h {
            return h;
        }
        let node = &self.tables.nodes[n];
        let h = match (&self.det_h, &self.all_outcomes) {
            (None, _) => 0.0,
            (Some(dh), ao) => {
                let rp = match ao {
                    Some((d, h)) if node.state.j < self.model.k => h.evaluate(d, &node.state.base),
                    _ => dh.evaluate(&self.det, &node.state.base),
                };
                rp.cost.min(self.cfg.dead_end_cap)
            }
        };
        self.tables.nodes[n].h = Some(h);
        h
    }

    /// Current estimate: 0 at goals, the stored value, or the heuristic.
    fn value(&mut self, n: usize) -> f64 {
        let node = &self.tables.nodes[n];
        if node.goal {
            return node.v.unwrap_or(0.0);
        }
        match node.v {
            Some(v) => v,
            None => self.heuristic(n),
        }
    }

    fn ensure_edges(&mut self, n: usize) {
        if self.tables.nodes[n].edges.is_some() {
            return;
        }
        let s = self.tables.nodes[n].state.clone();
        let mut edges = Vec::new();
        for a in self.model.applicable_actions(&s) {
            let Ok(dist) = self.model.reduced_successors(&s, a) else { continue };
            let outcomes = dist.entries.into_iter().map(|(t, p)| (self.intern(t), p)).collect();
            edges.push(Edge { action: a, cost: self.model.cost(a), outcomes });
        }
        self.tables.nodes[n].edges = Some(edges);
    }

    /// `C(a) + Σ T'·V` with unset successors valued by the heuristic.
    pub fn q_value(&mut self, s: &AugmentedState, a: ActionId) -> f64 {
        let Ok(dist) = self.model.reduced_successors(s, a) else { return f64::INFINITY };
        let mut q = self.model.cost(a);
        for (t, p) in dist.entries {
            let i = self.intern(t);
            q += p * self.value(i);
        }
        q
    }

    /// Bellman update of one state. Returns the residual.
    pub fn ff_bellman_update(&mut self, s: &AugmentedState) -> f64 {
        let n = self.intern(s.clone());
        self.update(n)
    }

    fn update(&mut self, n: usize) -> f64 {
        self.counters.bellman_updates += 1;
        let old = self.value(n);
        let cap = self.cfg.dead_end_cap;
        if self.tables.nodes[n].goal {
            let node = &mut self.tables.nodes[n];
            node.v = Some(0.0);
            node.pi = Policy::Nop;
            return old.abs();
        }
        if self.tables.nodes[n].state.j >= self.model.k {
            if self.tables.nodes[n].pi.is_set() {
                // Cached plan tail: the sub-planner is not consulted again.
                return 0.0;
            }
            self.plan_tail(n);
        } else {
            self.ensure_edges(n);
            let edges = self.tables.nodes[n].edges.take().unwrap_or_default();
            let mut best = f64::INFINITY;
            let mut arg = None;
            for e in &edges {
                let mut q = e.cost;
                for &(t, p) in &e.outcomes {
                    q += p * self.value(t);
                }
                if q < best {
                    best = q;
                    arg = Some(e.action);
                }
            }
            let node = &mut self.tables.nodes[n];
            node.edges = Some(edges);
            match arg {
                Some(a) if best < cap => {
                    node.v = Some(best);
                    node.pi = Policy::Act(a);
                }
                _ => {
                    node.v = Some(cap);
                    node.pi = Policy::Nop;
                }
            }
        }
        (self.tables.nodes[n].v.unwrap_or(cap) - old).abs()
    }

    fn call_subplanner(&mut self, n: usize) -> PlanResult {
        let s = &self.tables.nodes[n].state.base;
        let sub = &self.cfg.subplanner;
        if let Some(ext) = &sub.external {
            return ext.solve(&self.det, s).unwrap_or(PlanResult {
                status: PlanStatus::Failure,
                steps: vec![],
                suffix_costs: vec![],
                expansions: 0,
            });
        }
        let budget = Budget { max_expansions: sub.max_expansions, deadline: self.cfg.deadline };
        solve_deterministic(&self.det, s, &budget, sub.mode)
    }

    /// Solves `(s, k)` with the sub-planner and caches values and actions
    /// along the returned plan, keeping existing cheaper entries.
    fn plan_tail(&mut self, n: usize) {
        self.counters.calls += 1;
        let plan = self.call_subplanner(n);
        self.counters.sub_expansions += plan.expansions;
        let cap = self.cfg.dead_end_cap;
        match plan.status {
            PlanStatus::Plan => {
                let k = self.model.k;
                let mut next = 0.0;
                for step in plan.steps.iter().rev() {
                    let i = self.intern(AugmentedState::new(step.state.clone(), k));
                    let cand = (self.det.actions[step.index].cost + next).min(cap);
                    let node = &mut self.tables.nodes[i];
                    match node.v {
                        Some(v) if node.pi.is_set() && v <= cand => next = v,
                        _ => {
                            node.v = Some(cand);
                            node.pi = Policy::Act(step.action);
                            next = cand;
                        }
                    }
                }
            }
            status => {
                if status == PlanStatus::BudgetExceeded {
                    self.counters.budget_exceeded += 1;
                } else {
                    self.counters.failures += 1;
                }
                let node = &mut self.tables.nodes[n];
                node.v = Some(cap);
                node.pi = Policy::Nop;
            }
        }
    }

    fn next_stamp(&mut self) -> u64 {
        self.tables.stamp += 1;
        self.tables.stamp
    }

    fn visit(&mut self, n: usize, stamp: u64) -> bool {
        let node = &mut self.tables.nodes[n];
        if node.stamp == stamp {
            return false;
        }
        node.stamp = stamp;
        true
    }

    /// Successors of `n` under action `a`; empty at the exception bound.
    fn policy_children(&mut self, n: usize, a: ActionId) -> Vec<usize> {
        if self.tables.nodes[n].state.j >= self.model.k {
            return Vec::new();
        }
        self.ensure_edges(n);
        let edges = self.tables.nodes[n].edges.as_ref().expect("edges computed");
        edges.iter().find(|e| e.action == a).map(|e| e.outcomes.iter().map(|&(t, _)| t).collect()).unwrap_or_default()
    }

    /// Expansion sweep from `root`: first-time states get one update; others
    /// are updated in post order after their policy successors. Returns the
    /// number of first-time expansions.
    pub fn ff_expand(&mut self, root: &AugmentedState) -> usize {
        let root = self.intern(root.clone());
        let stamp = self.next_stamp();
        let mut cnt = 0;
        let mut stack = vec![(root, false)];
        while let Some((n, post)) = stack.pop() {
            if post {
                self.update(n);
                continue;
            }
            if !self.visit(n, stamp) {
                continue;
            }
            match self.tables.nodes[n].pi {
                Policy::Unset => {
                    self.update(n);
                    cnt += 1;
                }
                Policy::Act(a) => {
                    stack.push((n, true));
                    let children = self.policy_children(n, a);
                    stack.extend(children.into_iter().rev().map(|c| (c, false)));
                }
                Policy::Nop => {
                    self.update(n);
                }
            }
        }
        self.counters.expansions += cnt;
        cnt
    }

    /// Convergence sweep: maximum residual over the policy graph, or
    /// infinity when an unexpanded state is reached or an action changes.
    pub fn ff_test_convergence(&mut self, root: &AugmentedState) -> f64 {
        let root = self.intern(root.clone());
        let stamp = self.next_stamp();
        let mut error: f64 = 0.0;
        let mut stack: Vec<(usize, Option<Policy>)> = vec![(root, None)];
        while let Some((n, post)) = stack.pop() {
            let before = match post {
                Some(before) => before,
                None => {
                    if !self.visit(n, stamp) {
                        continue;
                    }
                    let pi = self.tables.nodes[n].pi;
                    match pi {
                        Policy::Unset => {
                            error = f64::INFINITY;
                            continue;
                        }
                        Policy::Act(a) if self.tables.nodes[n].state.j < self.model.k => {
                            stack.push((n, Some(pi)));
                            let children = self.policy_children(n, a);
                            stack.extend(children.into_iter().rev().map(|c| (c, None)));
                            continue;
                        }
                        _ => pi,
                    }
                }
            };
            error = error.max(self.update(n));
            if self.tables.nodes[n].pi != before {
                error = f64::INFINITY;
            }
        }
        error
    }

    /// Number of states reachable from `root` under the policy, counting
    /// cached plan tails at the exception bound.
    pub fn policy_size(&mut self, root: &AugmentedState) -> usize {
        let root = self.intern(root.clone());
        let stamp = self.next_stamp();
        let mut count = 0;
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            if !self.visit(n, stamp) {
                continue;
            }
            count += 1;
            let Policy::Act(a) = self.tables.nodes[n].pi else { continue };
            if self.tables.nodes[n].state.j < self.model.k {
                stack.extend(self.policy_children(n, a));
            } else if let Ok(dist) = self.model.reduced_successors(&self.tables.nodes[n].state.clone(), a) {
                for (t, _) in dist.entries {
                    stack.push(self.intern(t));
                }
            }
        }
        count
    }

    /// Runs FF-LAO* from `root`, reusing whatever the tables already hold.
    pub fn solve_from(&mut self, root: &AugmentedState) -> Result<RunReport, SolveError> {
        let start = Instant::now();
        self.counters = Counters::default();
        loop {
            loop {
                self.check_limits(root, start)?;
                self.counters.sweeps += 1;
                if self.ff_expand(root) == 0 {
                    break;
                }
            }
            loop {
                self.check_limits(root, start)?;
                self.counters.sweeps += 1;
                let error = self.ff_test_convergence(root);
                self.counters.trace.push(error.is_finite().then_some(error));
                if error < self.cfg.epsilon {
                    return Ok(self.report(root, start, true));
                }
                if error.is_infinite() {
                    break;
                }
            }
        }
    }

    fn check_limits(&mut self, root: &AugmentedState, start: Instant) -> Result<(), SolveError> {
        if self.counters.sweeps >= self.cfg.max_sweeps {
            let report = Box::new(self.report(root, start, false));
            return Err(SolveError::IterationLimit { report, tables: None });
        }
        if self.cfg.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(SolveError::Deadline(Box::new(self.report(root, start, false))));
        }
        Ok(())
    }

    fn report(&mut self, root: &AugmentedState, start: Instant, converged: bool) -> RunReport {
        let r = self.intern(root.clone());
        let value_s0 = self.value(r);
        let policy_size = self.policy_size(root);
        let c = std::mem::take(&mut self.counters);
        RunReport {
            converged,
            value_s0,
            expansions: c.expansions,
            bellman_updates: c.bellman_updates,
            sweeps: c.sweeps,
            subplanner_calls: c.calls,
            subplanner_failures: c.failures,
            subplanner_budget_exceeded: c.budget_exceeded,
            subplanner_expansions: c.sub_expansions,
            residual_trace: c.trace,
            policy_size,
            table_size: self.tables.len(),
            wall_time_secs: self.cfg.record_time.then(|| start.elapsed().as_secs_f64()),
        }
    }
}

/// Solves `m` from its initial state with fresh tables.
pub fn ff_lao_star(m: &ReducedModel, cfg: SolverConfig) -> Result<(SolverTables, RunReport), SolveError> {
    let mut solver = Solver::new(m, cfg)?;
    let root = m.initial.clone();
    match solver.solve_from(&root) {
        Ok(report) => Ok((solver.into_tables(), report)),
        Err(SolveError::IterationLimit { report, .. }) => {
            Err(SolveError::IterationLimit { report, tables: Some(Box::new(solver.into_tables())) })
        }
        Err(e) => Err(e),
    }
}
