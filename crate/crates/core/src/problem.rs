//! The grounded, factored SSP shared by every solver in the crate.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, ToPrimitive, Zero};

use crate::model::{AtomId, State};
use crate::ppddl::schema::{GroundAtom, Rational};

pub type ActionId = usize;

/// Per-schema metadata needed to interpret determinizations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaInfo {
    pub name: String,
    /// Outcome probabilities per clause, null outcome included.
    pub clause_probabilities: Vec<Vec<Rational>>,
}

impl SchemaInfo {
    pub fn branching(&self, clause: usize) -> usize {
        self.clause_probabilities[clause].len()
    }
}

#[derive(Clone, Debug)]
pub struct GroundOutcome {
    pub probability: Rational,
    /// `probability` as a float, for the solvers.
    pub p: f64,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
    /// Outcome index chosen in each clause of the schema.
    pub choice: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct GroundAction {
    pub schema_id: usize,
    pub binding: Vec<String>,
    pub pre_pos: Vec<AtomId>,
    pub pre_neg: Vec<AtomId>,
    pub cost: Rational,
    pub cost_f64: f64,
    pub outcomes: Vec<GroundOutcome>,
}

impl GroundAction {
    pub fn applicable(&self, s: &State) -> bool {
        s.contains_all(&self.pre_pos) && s.contains_none(&self.pre_neg)
    }
}

#[derive(Clone, Debug)]
pub struct GroundedProblem {
    pub name: String,
    pub atoms: Vec<GroundAtom>,
    atom_index: HashMap<GroundAtom, AtomId>,
    pub schemas: Vec<SchemaInfo>,
    pub actions: Vec<GroundAction>,
    pub initial_state: State,
    pub goal: Vec<AtomId>,
}

impl GroundedProblem {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn atom_id(&self, atom: &GroundAtom) -> Option<AtomId> {
        self.atom_index.get(atom).copied()
    }

    pub fn action_name(&self, a: ActionId) -> String {
        let act = &self.actions[a];
        let mut s = format!("({}", self.schemas[act.schema_id].name);
        for b in &act.binding {
            s.push(' ');
            s.push_str(b);
        }
        s.push(')');
        s
    }

    pub fn find_action(&self, name: &str) -> Option<ActionId> {
        let wanted: Vec<&str> = name
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split_whitespace()
            .collect();
        let (schema, args) = wanted.split_first()?;
        self.actions.iter().position(|a| {
            self.schemas[a.schema_id].name.eq_ignore_ascii_case(schema)
                && a.binding.len() == args.len()
                && a.binding.iter().zip(args).all(|(b, w)| b.eq_ignore_ascii_case(w))
        })
    }

    pub fn state_from_atoms(&self, atoms: &[GroundAtom]) -> Option<State> {
        let ids = atoms.iter().map(|a| self.atom_id(a)).collect::<Option<Vec<_>>>()?;
        Some(State::from_atoms(self.atom_count(), ids))
    }

    pub fn describe_state(&self, s: &State) -> Vec<String> {
        s.atoms().map(|a| self.atoms[a].to_string()).collect()
    }

    pub fn schema_id(&self, name: &str) -> Option<usize> {
        self.schemas.iter().position(|s| s.name == name)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BuildError {
    #[error("action {0} has nonpositive cost")]
    NonPositiveCost(String),
    #[error("clause of action {0} has outcome mass above 1")]
    MassOverflow(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
}

/// Effect of one declared outcome, over atom ids.
#[derive(Clone, Debug, Default)]
pub struct OutcomeSpec {
    pub probability: Rational,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
}

/// Declared probabilities followed by the residual mass, when positive.
pub(crate) fn with_residual<'a>(declared: impl Iterator<Item = &'a Rational>) -> Vec<Rational> {
    let mut v: Vec<Rational> = declared.cloned().collect();
    let total = v.iter().fold(Rational::zero(), |acc, p| acc + p);
    if total < Rational::one() {
        v.push(Rational::one() - total);
    }
    v
}

/// Cross product of per-clause outcome lists. Each clause's residual mass
/// is appended as a null outcome; the first clause varies slowest.
pub(crate) fn combine_clauses(
    base_add: &[AtomId],
    base_del: &[AtomId],
    clauses: &[Vec<OutcomeSpec>],
) -> Vec<GroundOutcome> {
    let completed: Vec<Vec<OutcomeSpec>> = clauses
        .iter()
        .map(|c| {
            let mut c = c.clone();
            let total = c.iter().fold(Rational::zero(), |acc, o| acc + &o.probability);
            let residual = Rational::one() - total;
            if residual > Rational::zero() {
                c.push(OutcomeSpec { probability: residual, add: vec![], del: vec![] });
            }
            c
        })
        .collect();
    let mut result = Vec::new();
    let mut choice = vec![0usize; completed.len()];
    loop {
        let mut probability = Rational::one();
        let mut add: BTreeSet<AtomId> = base_add.iter().copied().collect();
        let mut del: BTreeSet<AtomId> = base_del.iter().copied().collect();
        for (ci, &oi) in choice.iter().enumerate() {
            let o = &completed[ci][oi];
            probability *= &o.probability;
            add.extend(o.add.iter().copied());
            del.extend(o.del.iter().copied());
        }
        // Delete-then-add: a deleted atom that is also added stays true.
        let del: Vec<_> = del.difference(&add).copied().collect();
        let p = probability.to_f64().unwrap_or(0.0);
        result.push(GroundOutcome { probability, p, add: add.into_iter().collect(), del, choice: choice.clone() });
        // Odometer, last clause fastest.
        let mut i = completed.len();
        loop {
            if i == 0 {
                return result;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < completed[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

/// Programmatic construction of grounded problems, for generators and tests.
/// Every action added here becomes its own single-action schema.
#[derive(Default)]
pub struct ProblemBuilder {
    name: String,
    atoms: Vec<GroundAtom>,
    schemas: Vec<SchemaInfo>,
    actions: Vec<GroundAction>,
    init: Vec<AtomId>,
    goal: Vec<AtomId>,
}

/// An action for [`ProblemBuilder::action`].
#[derive(Clone, Debug, Default)]
pub struct ActionSpec {
    pub name: String,
    pub pre_pos: Vec<AtomId>,
    pub pre_neg: Vec<AtomId>,
    pub cost: Rational,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
    pub clauses: Vec<Vec<OutcomeSpec>>,
}

impl ProblemBuilder {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), ..Default::default() }
    }

    pub fn atom(&mut self, name: &str) -> AtomId {
        let atom = GroundAtom::new(name, &[]);
        if let Some(i) = self.atoms.iter().position(|a| *a == atom) {
            return i;
        }
        self.atoms.push(atom);
        self.atoms.len() - 1
    }

    pub fn init(&mut self, atoms: &[AtomId]) -> &mut Self {
        self.init = atoms.to_vec();
        self
    }

    pub fn goal(&mut self, atoms: &[AtomId]) -> &mut Self {
        self.goal = atoms.to_vec();
        self
    }

    pub fn action(&mut self, spec: ActionSpec) -> Result<ActionId, BuildError> {
        if spec.cost <= Rational::zero() {
            return Err(BuildError::NonPositiveCost(spec.name));
        }
        for c in &spec.clauses {
            let total = c.iter().fold(Rational::zero(), |acc, o| acc + &o.probability);
            if total > Rational::one() {
                return Err(BuildError::MassOverflow(spec.name));
            }
        }
        let clauses = if spec.clauses.is_empty() {
            vec![vec![OutcomeSpec { probability: Rational::one(), ..Default::default() }]]
        } else {
            spec.clauses
        };
        let outcomes = combine_clauses(&spec.add, &spec.del, &clauses);
        let clause_probabilities = clauses.iter().map(|c| with_residual(c.iter().map(|o| &o.probability))).collect();
        self.schemas.push(SchemaInfo { name: spec.name, clause_probabilities });
        let mut pre_pos = spec.pre_pos;
        pre_pos.sort_unstable();
        pre_pos.dedup();
        let mut pre_neg = spec.pre_neg;
        pre_neg.sort_unstable();
        pre_neg.dedup();
        self.actions.push(GroundAction {
            schema_id: self.schemas.len() - 1,
            binding: vec![],
            pre_pos,
            pre_neg,
            cost_f64: spec.cost.to_f64().unwrap_or(f64::INFINITY),
            cost: spec.cost,
            outcomes,
        });
        Ok(self.actions.len() - 1)
    }

    pub fn build(self) -> GroundedProblem {
        GroundedProblem::from_parts(self.name, self.atoms, self.schemas, self.actions, &self.init, self.goal)
    }
}

impl GroundedProblem {
    pub(crate) fn from_parts(
        name: String,
        atoms: Vec<GroundAtom>,
        schemas: Vec<SchemaInfo>,
        actions: Vec<GroundAction>,
        init: &[AtomId],
        mut goal: Vec<AtomId>,
    ) -> Self {
        goal.sort_unstable();
        goal.dedup();
        let atom_index = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let initial_state = State::from_atoms(atoms.len(), init.iter().copied());
        Self { name, atoms, atom_index, schemas, actions, initial_state, goal }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn residual_becomes_null_outcome() {
        let outs = combine_clauses(
            &[],
            &[],
            &[vec![
                OutcomeSpec { probability: r(2, 5), add: vec![0], del: vec![] },
                OutcomeSpec { probability: r(2, 5), add: vec![1], del: vec![] },
            ]],
        );
        let probs: Vec<_> = outs.iter().map(|o| o.probability.clone()).collect();
        assert_eq!(probs, vec![r(2, 5), r(2, 5), r(1, 5)]);
        assert!(outs[2].add.is_empty() && outs[2].del.is_empty());
        assert_eq!(outs[2].choice, vec![2]);
    }

    #[test]
    fn product_of_two_clauses() {
        let o = |p| OutcomeSpec { probability: p, add: vec![], del: vec![] };
        let outs = combine_clauses(&[], &[], &[vec![o(r(1, 2)), o(r(1, 2))], vec![o(r(9, 10)), o(r(1, 10))]]);
        let probs: Vec<_> = outs.iter().map(|o| o.probability.clone()).collect();
        assert_eq!(probs, vec![r(9, 20), r(1, 20), r(9, 20), r(1, 20)]);
        let total = probs.iter().fold(Rational::zero(), |a, p| a + p);
        assert!(total.is_one());
        assert_eq!(outs[1].choice, vec![0, 1]);
    }
}
