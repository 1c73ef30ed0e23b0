use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use super::heuristic::RelaxedPlanHeuristic;
use super::{Budget, DeterministicProblem, PlanResult, PlanStatus, PlanStep, SearchMode};
use crate::model::State;
use crate::util::OrdF64;

struct Node {
    state: State,
    parent: Option<(usize, usize)>,
    g: f64,
}

struct Tracker<'b> {
    budget: &'b Budget,
    expansions: usize,
}

impl Tracker<'_> {
    fn exhausted(&self) -> bool {
        self.expansions >= self.budget.max_expansions
            || self.budget.deadline.is_some_and(|d| self.expansions.is_multiple_of(64) && std::time::Instant::now() >= d)
    }
}

enum Phase {
    Found(Vec<Node>, usize),
    Exhausted,
    OutOfBudget,
}

pub(super) fn solve(d: &DeterministicProblem, s: &State, budget: &Budget, mode: SearchMode) -> PlanResult {
    if d.is_goal(s) {
        return PlanResult::empty_plan();
    }
    let h = RelaxedPlanHeuristic::new(d);
    if h.evaluate(d, s).cost.is_infinite() {
        return PlanResult::failure(PlanStatus::Failure, 0);
    }
    let mut tracker = Tracker { budget, expansions: 0 };
    if mode == SearchMode::Greedy {
        match greedy_helpful(d, s, &h, &mut tracker) {
            Phase::Found(nodes, goal) => return extract(d, nodes, goal, tracker.expansions),
            Phase::OutOfBudget => return PlanResult::failure(PlanStatus::BudgetExceeded, tracker.expansions),
            Phase::Exhausted => {}
        }
    }
    match uniform_cost(d, s, &h, &mut tracker) {
        Phase::Found(nodes, goal) => extract(d, nodes, goal, tracker.expansions),
        Phase::OutOfBudget => PlanResult::failure(PlanStatus::BudgetExceeded, tracker.expansions),
        Phase::Exhausted => PlanResult::failure(PlanStatus::Failure, tracker.expansions),
    }
}

/// Greedy best-first on the relaxed-plan value, restricted to helpful
/// actions (applicable actions adding a relaxed-plan subgoal). Incomplete;
/// exhaustion only means the restriction failed.
fn greedy_helpful(d: &DeterministicProblem, s: &State, h: &RelaxedPlanHeuristic, t: &mut Tracker) -> Phase {
    let mut nodes = vec![Node { state: s.clone(), parent: None, g: 0.0 }];
    let mut seen: HashMap<State, usize> = HashMap::new();
    seen.insert(s.clone(), 0);
    let mut open = BinaryHeap::new();
    let mut counter = 0usize;
    let root = h.evaluate(d, s);
    open.push(Reverse((OrdF64(root.cost), counter, 0usize, root.subgoals)));
    while let Some(Reverse((_, _, idx, subgoals))) = open.pop() {
        if t.exhausted() {
            return Phase::OutOfBudget;
        }
        t.expansions += 1;
        let state = nodes[idx].state.clone();
        for (ai, a) in d.actions.iter().enumerate() {
            if !a.applicable(&state) || !a.add.iter().any(|q| subgoals.binary_search(q).is_ok()) {
                continue;
            }
            let next = state.apply(&a.add, &a.del);
            if next == state {
                continue;
            }
            let Entry::Vacant(slot) = seen.entry(next.clone()) else { continue };
            let g = nodes[idx].g + a.cost;
            nodes.push(Node { state: next.clone(), parent: Some((idx, ai)), g });
            let child = nodes.len() - 1;
            slot.insert(child);
            if d.is_goal(&next) {
                return Phase::Found(nodes, child);
            }
            let rp = h.evaluate(d, &next);
            if rp.cost.is_infinite() {
                continue;
            }
            counter += 1;
            open.push(Reverse((OrdF64(rp.cost), counter, child, rp.subgoals)));
        }
    }
    Phase::Exhausted
}

/// Uniform-cost search; states with infinite relaxed-plan value are pruned,
/// which never removes a solution.
fn uniform_cost(d: &DeterministicProblem, s: &State, h: &RelaxedPlanHeuristic, t: &mut Tracker) -> Phase {
    let mut nodes = vec![Node { state: s.clone(), parent: None, g: 0.0 }];
    let mut best: HashMap<State, usize> = HashMap::new();
    best.insert(s.clone(), 0);
    let mut closed = vec![false];
    let mut open = BinaryHeap::new();
    let mut counter = 0usize;
    open.push(Reverse((OrdF64(0.0), counter, 0usize)));
    while let Some(Reverse((OrdF64(g), _, idx))) = open.pop() {
        if closed[idx] || g > nodes[idx].g {
            continue;
        }
        closed[idx] = true;
        let state = nodes[idx].state.clone();
        if d.is_goal(&state) {
            return Phase::Found(nodes, idx);
        }
        if t.exhausted() {
            return Phase::OutOfBudget;
        }
        t.expansions += 1;
        for (ai, a) in d.actions.iter().enumerate() {
            if !a.applicable(&state) {
                continue;
            }
            let next = state.apply(&a.add, &a.del);
            if next == state {
                continue;
            }
            let ng = g + a.cost;
            match best.get(&next) {
                Some(&ni) if nodes[ni].g <= ng || closed[ni] => continue,
                Some(&ni) => {
                    nodes[ni].g = ng;
                    nodes[ni].parent = Some((idx, ai));
                    counter += 1;
                    open.push(Reverse((OrdF64(ng), counter, ni)));
                }
                None => {
                    if h.evaluate(d, &next).cost.is_infinite() {
                        continue;
                    }
                    nodes.push(Node { state: next.clone(), parent: Some((idx, ai)), g: ng });
                    closed.push(false);
                    let ni = nodes.len() - 1;
                    best.insert(next, ni);
                    counter += 1;
                    open.push(Reverse((OrdF64(ng), counter, ni)));
                }
            }
        }
    }
    Phase::Exhausted
}

fn extract(d: &DeterministicProblem, nodes: Vec<Node>, goal: usize, expansions: usize) -> PlanResult {
    let mut rev = Vec::new();
    let mut cur = goal;
    while let Some((parent, ai)) = nodes[cur].parent {
        rev.push(PlanStep { state: nodes[parent].state.clone(), index: ai, action: d.actions[ai].id });
        cur = parent;
    }
    rev.reverse();
    let mut suffix_costs = vec![0.0; rev.len()];
    let mut acc = 0.0;
    for i in (0..rev.len()).rev() {
        acc += d.actions[rev[i].index].cost;
        suffix_costs[i] = acc;
    }
    PlanResult { status: PlanStatus::Plan, steps: rev, suffix_costs, expansions }
}
