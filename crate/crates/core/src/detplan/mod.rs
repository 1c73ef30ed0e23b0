//! Built-in classical planner for the deterministic problems induced by a
//! reduction at `j = k`, and the relaxed-plan heuristic.

pub mod external;
mod heuristic;
mod search;

use std::time::Instant;

use serde::Serialize;

pub use heuristic::{relaxed_plan_heuristic, RelaxedPlan, RelaxedPlanHeuristic};

use crate::model::{AtomId, State};
use crate::problem::{ActionId, GroundedProblem};
use crate::reduction::ReducedModel;

pub const DEFAULT_MAX_EXPANSIONS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct DetAction {
    /// Ground action this was derived from.
    pub id: ActionId,
    pub pre_pos: Vec<AtomId>,
    pub pre_neg: Vec<AtomId>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
    pub cost: f64,
}

impl DetAction {
    pub fn applicable(&self, s: &State) -> bool {
        s.contains_all(&self.pre_pos) && s.contains_none(&self.pre_neg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeterministicProblem {
    pub atom_count: usize,
    pub actions: Vec<DetAction>,
    pub goal: Vec<AtomId>,
}

impl DeterministicProblem {
    /// The problem a reduction becomes once the exception bound is reached:
    /// each action keeps only its primary outcome. Actions whose primary
    /// outcome changes nothing are dropped.
    pub fn from_reduction(m: &ReducedModel) -> Self {
        let p = m.problem;
        let actions = p
            .actions
            .iter()
            .enumerate()
            .filter_map(|(id, a)| {
                let o = &a.outcomes[m.single_primary(id)?];
                if o.add.is_empty() && o.del.is_empty() {
                    return None;
                }
                Some(DetAction {
                    id,
                    pre_pos: a.pre_pos.clone(),
                    pre_neg: a.pre_neg.clone(),
                    add: o.add.clone(),
                    del: o.del.clone(),
                    cost: a.cost_f64,
                })
            })
            .collect();
        Self { atom_count: p.atom_count(), actions, goal: p.goal.clone() }
    }

    /// All-outcomes determinization: one deterministic action per outcome.
    pub fn all_outcomes(p: &GroundedProblem) -> Self {
        let actions = p
            .actions
            .iter()
            .enumerate()
            .flat_map(|(id, a)| {
                a.outcomes.iter().filter(|o| !(o.add.is_empty() && o.del.is_empty())).map(move |o| DetAction {
                    id,
                    pre_pos: a.pre_pos.clone(),
                    pre_neg: a.pre_neg.clone(),
                    add: o.add.clone(),
                    del: o.del.clone(),
                    cost: a.cost_f64,
                })
            })
            .collect();
        Self { atom_count: p.atom_count(), actions, goal: p.goal.clone() }
    }

    pub fn is_goal(&self, s: &State) -> bool {
        s.contains_all(&self.goal)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Budget {
    pub max_expansions: usize,
    pub deadline: Option<Instant>,
}

impl Budget {
    pub fn expansions(max_expansions: usize) -> Self {
        Self { max_expansions, deadline: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Greedy best-first over helpful actions, falling back to uniform-cost
    /// search when the greedy phase runs dry.
    #[default]
    Greedy,
    /// Uniform-cost search only; plans are cost-optimal.
    Optimal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Plan,
    /// The reachable space was exhausted: no plan exists.
    Failure,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanStep {
    /// State in which the action is applied.
    pub state: State,
    /// Index into the deterministic problem's actions.
    pub index: usize,
    /// Ground action id.
    pub action: ActionId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub steps: Vec<PlanStep>,
    /// `suffix_costs[i]` is the cost of steps `i..`.
    pub suffix_costs: Vec<f64>,
    pub expansions: usize,
}

impl PlanResult {
    fn empty_plan() -> Self {
        Self { status: PlanStatus::Plan, steps: vec![], suffix_costs: vec![], expansions: 0 }
    }

    fn failure(status: PlanStatus, expansions: usize) -> Self {
        Self { status, steps: vec![], suffix_costs: vec![], expansions }
    }

    pub fn is_plan(&self) -> bool {
        self.status == PlanStatus::Plan
    }

    pub fn cost(&self) -> f64 {
        self.suffix_costs.first().copied().unwrap_or(0.0)
    }
}

pub fn solve_deterministic(d: &DeterministicProblem, s: &State, budget: &Budget, mode: SearchMode) -> PlanResult {
    search::solve(d, s, budget, mode)
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlanValidationError {
    #[error("step {0}: recorded state differs from replayed state")]
    StateMismatch(usize),
    #[error("step {0}: action not applicable")]
    NotApplicable(usize),
    #[error("plan does not end in a goal state")]
    GoalNotReached,
    #[error("step {0}: suffix cost does not match")]
    CostMismatch(usize),
}

/// Replays a plan from `s`, checking states, applicability, goal and
/// suffix-cost bookkeeping.
pub fn validate_plan(d: &DeterministicProblem, s: &State, plan: &PlanResult) -> Result<(), PlanValidationError> {
    let mut cur = s.clone();
    let total: f64 = plan.steps.iter().map(|st| d.actions[st.index].cost).sum();
    let mut remaining = total;
    for (i, step) in plan.steps.iter().enumerate() {
        if step.state != cur {
            return Err(PlanValidationError::StateMismatch(i));
        }
        let a = &d.actions[step.index];
        if !a.applicable(&cur) {
            return Err(PlanValidationError::NotApplicable(i));
        }
        if (plan.suffix_costs[i] - remaining).abs() > 1e-9 * remaining.max(1.0) {
            return Err(PlanValidationError::CostMismatch(i));
        }
        remaining -= a.cost;
        cur = cur.apply(&a.add, &a.del);
    }
    if !d.is_goal(&cur) {
        return Err(PlanValidationError::GoalNotReached);
    }
    Ok(())
}
