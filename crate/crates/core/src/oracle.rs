//! Reference solvers on explicitly enumerated state spaces. These exist to
//! check the heuristic machinery on small models.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;

use serde::Serialize;

use crate::detplan::DeterministicProblem;
use crate::model::{self, State};
use crate::problem::{ActionId, GroundedProblem};
use crate::reduction::{AugmentedState, ReducedModel};
use crate::solver::Policy;
use crate::util::OrdF64;

pub const DEFAULT_STATE_CAP: usize = 100_000;

/// The view of an SSP the oracle needs.
pub trait Ssp {
    type S: Clone + Eq + Hash + Debug;
    fn initial(&self) -> Self::S;
    fn is_goal(&self, s: &Self::S) -> bool;
    /// Candidate actions in ascending id order.
    fn actions(&self, s: &Self::S) -> Vec<ActionId>;
    fn cost(&self, a: ActionId) -> f64;
    /// `None` when `a` has no well-formed distribution in `s`.
    fn successors(&self, s: &Self::S, a: ActionId) -> Option<Vec<(Self::S, f64)>>;
    fn label(&self, s: &Self::S) -> String;
}

impl Ssp for GroundedProblem {
    type S = State;

    fn initial(&self) -> State {
        self.initial_state.clone()
    }

    fn is_goal(&self, s: &State) -> bool {
        model::is_goal(s, self)
    }

    fn actions(&self, s: &State) -> Vec<ActionId> {
        model::applicable_actions(s, self)
    }

    fn cost(&self, a: ActionId) -> f64 {
        self.actions[a].cost_f64
    }

    fn successors(&self, s: &State, a: ActionId) -> Option<Vec<(State, f64)>> {
        model::successors(s, a, self).ok().map(|d| d.entries)
    }

    fn label(&self, s: &State) -> String {
        self.describe_state(s).join(" ")
    }
}

impl Ssp for ReducedModel<'_> {
    type S = AugmentedState;

    fn initial(&self) -> AugmentedState {
        self.initial.clone()
    }

    fn is_goal(&self, s: &AugmentedState) -> bool {
        ReducedModel::is_goal(self, s)
    }

    fn actions(&self, s: &AugmentedState) -> Vec<ActionId> {
        self.applicable_actions(s)
    }

    fn cost(&self, a: ActionId) -> f64 {
        ReducedModel::cost(self, a)
    }

    fn successors(&self, s: &AugmentedState, a: ActionId) -> Option<Vec<(AugmentedState, f64)>> {
        self.reduced_successors(s, a).ok().map(|d| d.entries)
    }

    fn label(&self, s: &AugmentedState) -> String {
        format!("j={} {}", s.j, self.problem.describe_state(&s.base).join(" "))
    }
}

/// A deterministic problem rooted at a given state; action ids index
/// `d.actions`.
pub struct RootedDeterministic<'a> {
    pub d: &'a DeterministicProblem,
    pub start: State,
}

impl Ssp for RootedDeterministic<'_> {
    type S = State;

    fn initial(&self) -> State {
        self.start.clone()
    }

    fn is_goal(&self, s: &State) -> bool {
        self.d.is_goal(s)
    }

    fn actions(&self, s: &State) -> Vec<ActionId> {
        (0..self.d.actions.len()).filter(|&i| self.d.actions[i].applicable(s)).collect()
    }

    fn cost(&self, a: ActionId) -> f64 {
        self.d.actions[a].cost
    }

    fn successors(&self, s: &State, a: ActionId) -> Option<Vec<(State, f64)>> {
        let act = &self.d.actions[a];
        Some(vec![(s.apply(&act.add, &act.del), 1.0)])
    }

    fn label(&self, s: &State) -> String {
        format!("{:?}", s.atoms().collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ExplicitAction {
    pub action: ActionId,
    pub cost: f64,
    pub successors: Vec<(usize, f64)>,
}

/// Dense enumeration of the states reachable from the initial state. Goal
/// states are absorbing and carry no actions.
#[derive(Clone, Debug)]
pub struct ExplicitModel<S> {
    pub states: Vec<S>,
    pub labels: Vec<String>,
    pub goal: Vec<bool>,
    pub actions: Vec<Vec<ExplicitAction>>,
    pub initial: usize,
    index: HashMap<S, usize>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("reachable state space exceeds the cap of {cap} states")]
pub struct CapExceeded {
    pub cap: usize,
}

impl<S: Clone + Eq + Hash> ExplicitModel<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn transition_count(&self) -> usize {
        self.actions.iter().map(Vec::len).sum()
    }

    pub fn dump(&self) -> ExplicitDump<'_> {
        ExplicitDump {
            initial: self.initial,
            states: (0..self.len())
                .map(|i| DumpState { id: i, label: &self.labels[i], goal: self.goal[i], actions: &self.actions[i] })
                .collect(),
        }
    }
}

/// JSON form of an explicit model.
#[derive(Serialize)]
pub struct ExplicitDump<'a> {
    pub initial: usize,
    pub states: Vec<DumpState<'a>>,
}

#[derive(Serialize)]
pub struct DumpState<'a> {
    pub id: usize,
    pub label: &'a str,
    pub goal: bool,
    pub actions: &'a [ExplicitAction],
}

/// Breadth-first enumeration from the initial state.
pub fn enumerate<M: Ssp>(m: &M, cap: usize) -> Result<ExplicitModel<M::S>, CapExceeded> {
    let mut em = ExplicitModel {
        states: Vec::new(),
        labels: Vec::new(),
        goal: Vec::new(),
        actions: Vec::new(),
        initial: 0,
        index: HashMap::new(),
    };
    let mut queue = VecDeque::new();
    let add = |em: &mut ExplicitModel<M::S>, s: M::S, queue: &mut VecDeque<usize>| -> Result<usize, CapExceeded> {
        if let Some(&i) = em.index.get(&s) {
            return Ok(i);
        }
        if em.states.len() >= cap {
            return Err(CapExceeded { cap });
        }
        let i = em.states.len();
        em.labels.push(m.label(&s));
        em.goal.push(m.is_goal(&s));
        em.actions.push(Vec::new());
        em.index.insert(s.clone(), i);
        em.states.push(s);
        queue.push_back(i);
        Ok(i)
    };
    em.initial = add(&mut em, m.initial(), &mut queue)?;
    while let Some(i) = queue.pop_front() {
        if em.goal[i] {
            continue;
        }
        let s = em.states[i].clone();
        let mut acts = Vec::new();
        for a in m.actions(&s) {
            let Some(succ) = m.successors(&s, a) else { continue };
            let mut successors = Vec::with_capacity(succ.len());
            for (t, p) in succ {
                successors.push((add(&mut em, t, &mut queue)?, p));
            }
            acts.push(ExplicitAction { action: a, cost: m.cost(a), successors });
        }
        em.actions[i] = acts;
    }
    Ok(em)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViResult {
    pub values: Vec<f64>,
    pub policy: Vec<Policy>,
    pub sweeps: usize,
}

fn greedy<S>(m: &ExplicitModel<S>, v: &[f64], i: usize, cap: f64) -> (f64, Policy) {
    if m.goal[i] {
        return (0.0, Policy::Nop);
    }
    let mut best = f64::INFINITY;
    let mut arg = None;
    for a in &m.actions[i] {
        let q = a.cost + a.successors.iter().map(|&(t, p)| p * v[t]).sum::<f64>();
        if q < best {
            best = q;
            arg = Some(a.action);
        }
    }
    match arg {
        Some(a) if best < cap => (best, Policy::Act(a)),
        _ => (cap, Policy::Nop),
    }
}

/// Gauss-Seidel value iteration of the capped Bellman operator
/// `V = min(cap, min_a Q)` from zero, until the largest residual of a sweep
/// drops below `epsilon`. The greedy policy takes the lowest action id among
/// ties and NOP where the value sits at the cap.
pub fn value_iteration<S>(m: &ExplicitModel<S>, epsilon: f64, cap: f64) -> ViResult {
    let mut v = vec![0.0; m.states.len()];
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut residual: f64 = 0.0;
        for i in 0..v.len() {
            let (nv, _) = greedy(m, &v, i, cap);
            residual = residual.max((nv - v[i]).abs());
            v[i] = nv;
        }
        if residual < epsilon {
            break;
        }
    }
    let policy = (0..v.len()).map(|i| greedy(m, &v, i, cap).1).collect();
    ViResult { values: v, policy, sweeps }
}

/// States from which some policy reaches the goal with probability one.
pub fn almost_sure_states<S>(m: &ExplicitModel<S>) -> Vec<bool> {
    let n = m.states.len();
    let mut alive = vec![true; n];
    loop {
        // Backward reachability of the goal within `alive`, using only
        // actions that keep every successor inside `alive`.
        let mut reach: Vec<bool> = m.goal.iter().zip(&alive).map(|(&g, &a)| g && a).collect();
        loop {
            let mut changed = false;
            for i in 0..n {
                if reach[i] || !alive[i] {
                    continue;
                }
                let ok = m.actions[i].iter().any(|a| {
                    a.successors.iter().all(|&(t, _)| alive[t]) && a.successors.iter().any(|&(t, _)| reach[t])
                });
                if ok {
                    reach[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if reach == alive {
            return alive;
        }
        alive = reach;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalPlan {
    pub cost: f64,
    /// (state index, action id) pairs.
    pub steps: Vec<(usize, ActionId)>,
}

/// Uniform-cost search over the single-successor actions of `m` from state
/// `from`. `None` when no goal is reachable.
pub fn optimal_plan<S>(m: &ExplicitModel<S>, from: usize) -> Option<OptimalPlan> {
    let n = m.states.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<(usize, ActionId)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Reverse((OrdF64(0.0), from)));
    while let Some(Reverse((OrdF64(d), i))) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        if m.goal[i] {
            let mut steps = Vec::new();
            let mut cur = i;
            while let Some((p, a)) = parent[cur] {
                steps.push((p, a));
                cur = p;
            }
            steps.reverse();
            return Some(OptimalPlan { cost: d, steps });
        }
        for a in &m.actions[i] {
            let [(t, _)] = a.successors[..] else { continue };
            let nd = d + a.cost;
            if nd < dist[t] {
                dist[t] = nd;
                parent[t] = Some((i, a.action));
                heap.push(Reverse((OrdF64(nd), t)));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ActionSpec, OutcomeSpec, ProblemBuilder};
    use crate::Determinization;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::One;

    fn half() -> BigRational {
        BigRational::new(BigInt::from(1), BigInt::from(2))
    }

    /// `try` succeeds with probability 1/2 at unit cost.
    fn retry() -> GroundedProblem {
        let mut b = ProblemBuilder::new("retry");
        let done = b.atom("done");
        b.goal(&[done]);
        b.action(ActionSpec {
            name: "try".into(),
            pre_neg: vec![done],
            cost: BigRational::one(),
            clauses: vec![vec![OutcomeSpec { probability: half(), add: vec![done], del: vec![] }]],
            ..Default::default()
        })
        .unwrap();
        b.build()
    }

    #[test]
    fn retry_value_is_two() {
        let p = retry();
        let em = enumerate(&p, 10).unwrap();
        assert_eq!(em.len(), 2);
        let vi = value_iteration(&em, 1e-10, 500.0);
        assert!((vi.values[em.initial] - 2.0).abs() < 1e-8);
        assert_eq!(vi.policy[em.initial], Policy::Act(0));
    }

    #[test]
    fn dead_end_reaches_cap_and_nop() {
        let mut b = ProblemBuilder::new("stuck");
        let g = b.atom("g");
        b.goal(&[g]);
        let p = b.build();
        let em = enumerate(&p, 10).unwrap();
        let vi = value_iteration(&em, 1e-6, 500.0);
        assert_eq!(vi.values[0], 500.0);
        assert_eq!(vi.policy[0], Policy::Nop);
        assert_eq!(almost_sure_states(&em), vec![false]);
        assert!(optimal_plan(&em, 0).is_none());
    }

    #[test]
    fn reduced_k1_has_at_most_two_copies() {
        let p = retry();
        let mut delta = Determinization::new();
        delta.set("try", 0, 0);
        let m = crate::make_reduction(&p, &delta, 1).unwrap();
        let em = enumerate(&m, 100).unwrap();
        assert!(em.len() <= 2 * enumerate(&p, 100).unwrap().len());
        assert!(almost_sure_states(&em)[em.initial]);
    }

    #[test]
    fn cap_is_enforced() {
        let p = retry();
        assert_eq!(enumerate(&p, 1).unwrap_err(), CapExceeded { cap: 1 });
    }
}
