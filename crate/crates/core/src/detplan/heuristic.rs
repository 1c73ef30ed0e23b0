use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::DeterministicProblem;
use crate::model::{AtomId, State};
use crate::util::OrdF64;

/// Result of one relaxed-plan computation.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedPlan {
    /// Cost of the extracted relaxed plan, `f64::INFINITY` when the goal is
    /// unreachable even ignoring deletes.
    pub cost: f64,
    /// Indices of relaxed-plan actions.
    pub actions: Vec<usize>,
    /// Atoms the relaxed plan needs that are false in the evaluated state.
    pub subgoals: Vec<AtomId>,
}

/// Delete-relaxation heuristic. Atom costs are propagated additively
/// (h_add); the relaxed plan is extracted through cheapest supporters and
/// its action costs summed, as FF does.
#[derive(Clone, Debug)]
pub struct RelaxedPlanHeuristic {
    /// Actions whose positive precondition contains each atom.
    consumers: Vec<Vec<usize>>,
    pre_count: Vec<usize>,
}

impl RelaxedPlanHeuristic {
    pub fn new(d: &DeterministicProblem) -> Self {
        let mut consumers = vec![Vec::new(); d.atom_count];
        for (i, a) in d.actions.iter().enumerate() {
            for &p in &a.pre_pos {
                consumers[p].push(i);
            }
        }
        let pre_count = d.actions.iter().map(|a| a.pre_pos.len()).collect();
        Self { consumers, pre_count }
    }

    pub fn evaluate(&self, d: &DeterministicProblem, s: &State) -> RelaxedPlan {
        if s.contains_all(&d.goal) {
            return RelaxedPlan { cost: 0.0, actions: vec![], subgoals: vec![] };
        }
        let n = d.atom_count;
        let mut atom_cost = vec![f64::INFINITY; n];
        let mut supporter: Vec<Option<usize>> = vec![None; n];
        let mut remaining = self.pre_count.clone();
        let mut action_cost = vec![0.0f64; d.actions.len()];
        let mut heap = BinaryHeap::new();
        for a in s.atoms() {
            if a < n {
                atom_cost[a] = 0.0;
                heap.push(Reverse((OrdF64(0.0), a)));
            }
        }
        let fire = |ai: usize,
                        action_cost: &mut [f64],
                        atom_cost: &mut [f64],
                        supporter: &mut [Option<usize>],
                        heap: &mut BinaryHeap<Reverse<(OrdF64, usize)>>| {
            let act = &d.actions[ai];
            let c = act.cost + action_cost[ai];
            for &q in &act.add {
                if c < atom_cost[q] {
                    atom_cost[q] = c;
                    supporter[q] = Some(ai);
                    heap.push(Reverse((OrdF64(c), q)));
                }
            }
        };
        for (ai, &cnt) in self.pre_count.iter().enumerate() {
            if cnt == 0 {
                fire(ai, &mut action_cost, &mut atom_cost, &mut supporter, &mut heap);
            }
        }
        let mut settled = vec![false; n];
        while let Some(Reverse((OrdF64(c), atom))) = heap.pop() {
            if settled[atom] || c > atom_cost[atom] {
                continue;
            }
            settled[atom] = true;
            for &ai in &self.consumers[atom] {
                action_cost[ai] += c;
                remaining[ai] -= 1;
                if remaining[ai] == 0 {
                    fire(ai, &mut action_cost, &mut atom_cost, &mut supporter, &mut heap);
                }
            }
        }
        if d.goal.iter().any(|&g| atom_cost[g].is_infinite()) {
            return RelaxedPlan { cost: f64::INFINITY, actions: vec![], subgoals: vec![] };
        }

        let mut in_plan = vec![false; d.actions.len()];
        let mut marked = vec![false; n];
        let mut stack: Vec<AtomId> = d.goal.iter().copied().filter(|&g| !s.contains(g)).collect();
        let mut actions = Vec::new();
        let mut subgoals = Vec::new();
        while let Some(atom) = stack.pop() {
            if marked[atom] {
                continue;
            }
            marked[atom] = true;
            subgoals.push(atom);
            let ai = supporter[atom].expect("finite-cost atom has a supporter");
            if in_plan[ai] {
                continue;
            }
            in_plan[ai] = true;
            actions.push(ai);
            for &p in &d.actions[ai].pre_pos {
                if !s.contains(p) && !marked[p] {
                    stack.push(p);
                }
            }
        }
        let cost = actions.iter().map(|&ai| d.actions[ai].cost).sum();
        actions.sort_unstable();
        subgoals.sort_unstable();
        RelaxedPlan { cost, actions, subgoals }
    }
}

/// Relaxed-plan cost from `s`; `f64::INFINITY` when relaxed-unreachable.
pub fn relaxed_plan_heuristic(d: &DeterministicProblem, s: &State) -> f64 {
    RelaxedPlanHeuristic::new(d).evaluate(d, s).cost
}
