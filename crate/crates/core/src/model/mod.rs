//! States, applicability, successor generation and goal tests for the
//! original SSP.

mod state;

pub use state::{AtomId, State};

use thiserror::Error;

use crate::problem::{ActionId, GroundedProblem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("action {action} is not applicable in the given state")]
pub struct NotApplicable {
    pub action: ActionId,
}

/// Distribution over successor states. Entries are distinct, in order of
/// first occurrence among the action's outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct SuccessorDistribution<S = State> {
    pub entries: Vec<(S, f64)>,
}

impl<S: PartialEq> SuccessorDistribution<S> {
    pub(crate) fn push_merged(&mut self, s: S, p: f64) {
        if let Some(e) = self.entries.iter_mut().find(|(t, _)| *t == s) {
            e.1 += p;
        } else {
            self.entries.push((s, p));
        }
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn applicable_actions(s: &State, p: &GroundedProblem) -> Vec<ActionId> {
    p.actions
        .iter()
        .enumerate()
        .filter(|(_, a)| a.applicable(s))
        .map(|(i, _)| i)
        .collect()
}

/// State reached by one specific outcome of `a`.
pub fn apply_outcome(s: &State, a: ActionId, outcome: usize, p: &GroundedProblem) -> State {
    let o = &p.actions[a].outcomes[outcome];
    s.apply(&o.add, &o.del)
}

pub fn successors(s: &State, a: ActionId, p: &GroundedProblem) -> Result<SuccessorDistribution, NotApplicable> {
    let action = &p.actions[a];
    if !action.applicable(s) {
        return Err(NotApplicable { action: a });
    }
    let mut dist = SuccessorDistribution { entries: Vec::with_capacity(action.outcomes.len()) };
    for o in &action.outcomes {
        dist.push_merged(s.apply(&o.add, &o.del), o.p);
    }
    Ok(dist)
}

pub fn is_goal(s: &State, p: &GroundedProblem) -> bool {
    s.contains_all(&p.goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ActionSpec, OutcomeSpec, ProblemBuilder};
    use crate::ppddl::schema::Rational;
    use num_bigint::BigInt;
    use num_traits::One;

    fn half() -> Rational {
        Rational::new(BigInt::from(1), BigInt::from(2))
    }

    fn toy() -> GroundedProblem {
        let mut b = ProblemBuilder::new("toy");
        let x = b.atom("x");
        let y = b.atom("y");
        let z = b.atom("z");
        b.action(ActionSpec { name: "needs-x".into(), pre_pos: vec![x], cost: Rational::one(), add: vec![y], ..Default::default() })
            .unwrap();
        b.action(ActionSpec { name: "needs-z".into(), pre_pos: vec![z], cost: Rational::one(), add: vec![y], ..Default::default() })
            .unwrap();
        b.action(ActionSpec {
            name: "coin".into(),
            pre_pos: vec![x],
            cost: Rational::one(),
            clauses: vec![vec![
                OutcomeSpec { probability: half(), add: vec![y], del: vec![] },
                OutcomeSpec { probability: half(), add: vec![y], del: vec![] },
            ]],
            ..Default::default()
        })
        .unwrap();
        b.init(&[x]).goal(&[y]);
        b.build()
    }

    #[test]
    fn applicability() {
        let p = toy();
        assert_eq!(applicable_actions(&p.initial_state, &p), vec![0, 2]);
        let empty = State::empty(p.atom_count());
        assert!(applicable_actions(&empty, &p).is_empty());
        // Hand enumeration: with only z true, exactly needs-z applies.
        let only_z = State::from_atoms(3, [2]);
        assert_eq!(applicable_actions(&only_z, &p), vec![1]);
    }

    #[test]
    fn identical_outcomes_merge() {
        let p = toy();
        let d = successors(&p.initial_state, 2, &p).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.entries[0].1, 1.0);
        assert!(is_goal(&d.entries[0].0, &p));
        assert!(!is_goal(&p.initial_state, &p));
        assert_eq!(successors(&p.initial_state, 1, &p), Err(NotApplicable { action: 1 }));
    }

    #[test]
    fn deterministic_single_successor_and_empty_goal() {
        let p = toy();
        let d = successors(&p.initial_state, 0, &p).unwrap();
        assert_eq!(d.entries.len(), 1);
        assert_eq!(d.total(), 1.0);
        let mut b = ProblemBuilder::new("vacuous");
        b.atom("a");
        let q = b.build();
        assert!(is_goal(&State::empty(1), &q));
    }
}
