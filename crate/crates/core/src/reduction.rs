//! M_{k,1} reduced models over augmented states `(s, j)`, where `j` counts
//! the exceptional (non-primary) outcomes seen so far.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{self, NotApplicable, State, SuccessorDistribution};
use crate::problem::{ActionId, GroundedProblem, SchemaInfo};
use crate::ppddl::schema::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AugmentedState {
    pub base: State,
    pub j: u32,
}

impl AugmentedState {
    pub fn new(base: State, j: u32) -> Self {
        Self { base, j }
    }
}

/// Primary outcome index per (schema name, clause index).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Determinization {
    choices: BTreeMap<(String, usize), usize>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeterminizationError {
    #[error("line {line}: expected `schema/clause -> outcome`, found `{text}`")]
    Format { line: usize, text: String },
    #[error("line {line}: `{schema}/{clause}` assigned twice")]
    Duplicate { line: usize, schema: String, clause: usize },
}

impl Determinization {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, schema: &str, clause: usize, outcome: usize) {
        self.choices.insert((schema.to_string(), clause), outcome);
    }

    pub fn get(&self, schema: &str, clause: usize) -> Option<usize> {
        self.choices.get(&(schema.to_string(), clause)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize, usize)> {
        self.choices.iter().map(|((s, c), o)| (s.as_str(), *c, *o))
    }

    /// Every clause picks its most probable outcome (null outcome included);
    /// ties go to the lowest index.
    pub fn most_likely(schemas: &[SchemaInfo]) -> Self {
        let mut d = Self::new();
        for s in schemas {
            for (ci, probs) in s.clause_probabilities.iter().enumerate() {
                let mut best = 0;
                for (i, p) in probs.iter().enumerate() {
                    if p > &probs[best] {
                        best = i;
                    }
                }
                d.set(&s.name, ci, best);
            }
        }
        d
    }

    /// Parses the `schema/clause -> outcome` text format. Blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, DeterminizationError> {
        let mut d = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || DeterminizationError::Format { line: i + 1, text: raw.to_string() };
            let (lhs, rhs) = line.split_once("->").ok_or_else(bad)?;
            let (schema, clause) = lhs.trim().rsplit_once('/').ok_or_else(bad)?;
            let clause: usize = clause.trim().parse().map_err(|_| bad())?;
            let outcome: usize = rhs.trim().parse().map_err(|_| bad())?;
            let schema = schema.trim();
            if schema.is_empty() {
                return Err(bad());
            }
            if d.get(schema, clause).is_some() {
                return Err(DeterminizationError::Duplicate { line: i + 1, schema: schema.into(), clause });
            }
            d.set(schema, clause, outcome);
        }
        Ok(d)
    }
}

impl fmt::Display for Determinization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, c, o) in self.iter() {
            writeln!(f, "{s}/{c} -> {o}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("determinization has no entry for `{schema}/{clause}`")]
    IncompleteDeterminization { schema: String, clause: usize },
    #[error("determinization picks outcome {outcome} of `{schema}/{clause}`, which has {available} outcomes")]
    OutcomeOutOfRange { schema: String, clause: usize, outcome: usize, available: usize },
}

/// A lazily evaluated reduced model. Nothing is enumerated up front.
#[derive(Clone, Debug)]
pub struct ReducedModel<'p> {
    pub problem: &'p GroundedProblem,
    /// Primary outcome indices per ground action (one each for M_{k,1}).
    primary: Vec<Vec<usize>>,
    pub k: u32,
    pub initial: AugmentedState,
}

pub fn make_reduction<'p>(
    p: &'p GroundedProblem,
    delta: &Determinization,
    k: u32,
) -> Result<ReducedModel<'p>, ReductionError> {
    let mut per_schema: Vec<Vec<usize>> = Vec::with_capacity(p.schemas.len());
    for s in &p.schemas {
        let mut picks = Vec::new();
        for clause in 0..s.clause_probabilities.len() {
            // Clauses with a single outcome need no entry.
            let outcome = match delta.get(&s.name, clause) {
                Some(o) => o,
                None if s.branching(clause) == 1 => 0,
                None => return Err(ReductionError::IncompleteDeterminization { schema: s.name.clone(), clause }),
            };
            if outcome >= s.branching(clause) {
                return Err(ReductionError::OutcomeOutOfRange {
                    schema: s.name.clone(),
                    clause,
                    outcome,
                    available: s.branching(clause),
                });
            }
            picks.push(outcome);
        }
        per_schema.push(picks);
    }
    let primary = p
        .actions
        .iter()
        .map(|a| {
            let wanted = &per_schema[a.schema_id];
            a.outcomes.iter().position(|o| &o.choice == wanted).into_iter().collect()
        })
        .collect();
    Ok(ReducedModel { problem: p, primary, k, initial: AugmentedState::new(p.initial_state.clone(), 0) })
}

impl<'p> ReducedModel<'p> {
    /// Builds a reduction with explicit primary outcome sets per ground
    /// action (general M_{k,l}); FF-LAO* itself expects singleton sets.
    pub fn with_primary_sets(p: &'p GroundedProblem, primary: Vec<Vec<usize>>, k: u32) -> Self {
        assert_eq!(primary.len(), p.action_count());
        Self { problem: p, primary, k, initial: AugmentedState::new(p.initial_state.clone(), 0) }
    }

    pub fn primary(&self, a: ActionId) -> &[usize] {
        &self.primary[a]
    }

    /// The single primary outcome of `a`, when the reduction is M_{k,1}.
    pub fn single_primary(&self, a: ActionId) -> Option<usize> {
        match self.primary[a].as_slice() {
            [o] => Some(*o),
            _ => None,
        }
    }

    pub fn replace_initial(&mut self, s: State) {
        self.initial = AugmentedState::new(s, 0);
    }

    pub fn is_goal(&self, s: &AugmentedState) -> bool {
        model::is_goal(&s.base, self.problem)
    }

    pub fn cost(&self, a: ActionId) -> f64 {
        self.problem.actions[a].cost_f64
    }

    pub fn applicable_actions(&self, s: &AugmentedState) -> Vec<ActionId> {
        model::applicable_actions(&s.base, self.problem)
    }

    pub fn reduced_successors(
        &self,
        s: &AugmentedState,
        a: ActionId,
    ) -> Result<SuccessorDistribution<AugmentedState>, NotApplicable> {
        let action = &self.problem.actions[a];
        if !action.applicable(&s.base) {
            return Err(NotApplicable { action: a });
        }
        let primary = &self.primary[a];
        let mut dist = SuccessorDistribution { entries: Vec::with_capacity(action.outcomes.len()) };
        if s.j < self.k {
            for (i, o) in action.outcomes.iter().enumerate() {
                let j = if primary.contains(&i) { s.j } else { s.j + 1 };
                dist.push_merged(AugmentedState::new(s.base.apply(&o.add, &o.del), j), o.p);
            }
        } else {
            let mass: f64 = primary.iter().map(|&i| action.outcomes[i].p).sum();
            if primary.is_empty() || mass <= 0.0 {
                return Err(NotApplicable { action: a });
            }
            for &i in primary {
                let o = &action.outcomes[i];
                dist.push_merged(AugmentedState::new(s.base.apply(&o.add, &o.del), s.j), o.p / mass);
            }
        }
        Ok(dist)
    }

    /// Exact version of the j = k renormalization, for well-formedness checks.
    pub fn renormalized_primary(&self, a: ActionId) -> Vec<Rational> {
        let action = &self.problem.actions[a];
        let mass = self.primary[a]
            .iter()
            .fold(Rational::from_integer(0.into()), |acc, &i| acc + &action.outcomes[i].probability);
        self.primary[a].iter().map(|&i| &action.outcomes[i].probability / &mass).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ActionSpec, OutcomeSpec, ProblemBuilder};
    use num_bigint::BigInt;
    use num_traits::One;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    /// `go`: 0.5 to `a`, 0.5 to `b`.
    fn coin() -> GroundedProblem {
        let mut b = ProblemBuilder::new("coin");
        let s = b.atom("s");
        let x = b.atom("a");
        let y = b.atom("b");
        b.action(ActionSpec {
            name: "go".into(),
            pre_pos: vec![s],
            cost: Rational::one(),
            del: vec![s],
            clauses: vec![vec![
                OutcomeSpec { probability: r(1, 2), add: vec![x], del: vec![] },
                OutcomeSpec { probability: r(1, 2), add: vec![y], del: vec![] },
            ]],
            ..Default::default()
        })
        .unwrap();
        b.init(&[s]).goal(&[x]);
        b.build()
    }

    #[test]
    fn determinization_text_round_trip() {
        let text = "# comment\nmove-car/0 -> 1\nchangetire/0 -> 0\n";
        let d = Determinization::parse(text).unwrap();
        assert_eq!(d.get("move-car", 0), Some(1));
        assert_eq!(Determinization::parse(&d.to_string()).unwrap(), d);
        assert!(matches!(Determinization::parse("x -> 1"), Err(DeterminizationError::Format { line: 1, .. })));
        assert!(matches!(
            Determinization::parse("a/0 -> 1\na/0 -> 0"),
            Err(DeterminizationError::Duplicate { line: 2, .. })
        ));
    }

    #[test]
    fn incomplete_and_out_of_range() {
        let p = coin();
        assert!(matches!(
            make_reduction(&p, &Determinization::new(), 0),
            Err(ReductionError::IncompleteDeterminization { .. })
        ));
        let mut d = Determinization::new();
        d.set("go", 0, 2);
        assert!(matches!(make_reduction(&p, &d, 0), Err(ReductionError::OutcomeOutOfRange { available: 2, .. })));
    }

    #[test]
    fn below_bound_keeps_probabilities() {
        let p = coin();
        let mut d = Determinization::new();
        d.set("go", 0, 0);
        let m = make_reduction(&p, &d, 3).unwrap();
        let s = AugmentedState::new(p.initial_state.clone(), 1);
        let dist = m.reduced_successors(&s, 0).unwrap();
        let js: Vec<(u32, f64)> = dist.entries.iter().map(|(t, q)| (t.j, *q)).collect();
        assert_eq!(js, vec![(1, 0.5), (2, 0.5)]);
        assert!(m.is_goal(&dist.entries[0].0));
    }

    #[test]
    fn at_bound_single_primary_is_certain() {
        let p = coin();
        let mut d = Determinization::new();
        d.set("go", 0, 1);
        let m = make_reduction(&p, &d, 0).unwrap();
        let dist = m.reduced_successors(&m.initial, 0).unwrap();
        assert_eq!(dist.entries.len(), 1);
        assert_eq!(dist.entries[0].1, 1.0);
        assert_eq!(dist.entries[0].0.j, 0);
        assert!(!m.is_goal(&dist.entries[0].0));
    }

    #[test]
    fn at_bound_two_primaries_renormalize_proportionally() {
        // Outcomes 0.3 / 0.2 primary, 0.5 exception: expect 0.6 / 0.4.
        let mut b = ProblemBuilder::new("three");
        let s = b.atom("s");
        let atoms: Vec<_> = ["a", "b", "c"].iter().map(|n| b.atom(n)).collect();
        b.action(ActionSpec {
            name: "act".into(),
            pre_pos: vec![s],
            cost: Rational::one(),
            clauses: vec![vec![
                OutcomeSpec { probability: r(3, 10), add: vec![atoms[0]], del: vec![] },
                OutcomeSpec { probability: r(2, 10), add: vec![atoms[1]], del: vec![] },
                OutcomeSpec { probability: r(5, 10), add: vec![atoms[2]], del: vec![] },
            ]],
            ..Default::default()
        })
        .unwrap();
        b.init(&[s]);
        let p = b.build();
        let m = ReducedModel::with_primary_sets(&p, vec![vec![0, 1]], 2);
        let at_k = AugmentedState::new(p.initial_state.clone(), 2);
        let dist = m.reduced_successors(&at_k, 0).unwrap();
        let probs: Vec<f64> = dist.entries.iter().map(|(_, q)| *q).collect();
        assert!((probs[0] - 0.6).abs() < 1e-12 && (probs[1] - 0.4).abs() < 1e-12);
        assert_eq!(m.renormalized_primary(0), vec![r(3, 5), r(2, 5)]);
        let exact_sum = m.renormalized_primary(0).iter().fold(Rational::from_integer(0.into()), |a, p| a + p);
        assert!(exact_sum.is_one());
    }

    #[test]
    fn empty_primary_set_is_not_applicable_at_bound() {
        let p = coin();
        let m = ReducedModel::with_primary_sets(&p, vec![vec![]], 0);
        assert!(m.reduced_successors(&m.initial, 0).is_err());
    }

    #[test]
    fn most_likely_prefers_lowest_index_on_ties() {
        let p = coin();
        let d = Determinization::most_likely(&p.schemas);
        assert_eq!(d.get("go", 0), Some(0));
    }
}
