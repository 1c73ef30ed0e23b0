use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use super::schema::*;
use crate::model::AtomId;
use crate::problem::{combine_clauses, with_residual, GroundAction, GroundedProblem, OutcomeSpec, SchemaInfo};

pub const DEFAULT_ACTION_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundError {
    #[error("grounding produced more than {cap} actions (schema `{schema}`)")]
    GroundingBlowup { cap: usize, schema: String },
    #[error("action `{0}` has zero cost")]
    ZeroCost(String),
    #[error("problem refers to domain `{found}`, expected `{expected}`")]
    DomainMismatch { expected: String, found: String },
}

/// Probability, adds and deletes of one outcome.
type GroundEffect = (Rational, Vec<GroundAtom>, Vec<GroundAtom>);

#[derive(Clone, Debug)]
struct Candidate {
    schema_id: usize,
    binding: Vec<String>,
    pre_pos: Vec<GroundAtom>,
    pre_neg: Vec<GroundAtom>,
    add: Vec<GroundAtom>,
    del: Vec<GroundAtom>,
    clauses: Vec<Vec<GroundEffect>>,
}

impl Candidate {
    fn all_adds(&self) -> impl Iterator<Item = &GroundAtom> {
        self.add
            .iter()
            .chain(self.clauses.iter().flatten().flat_map(|(_, add, _)| add.iter()))
    }
}

fn instantiate(atom: &AtomSchema, binding: &HashMap<&str, &str>) -> GroundAtom {
    GroundAtom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding[v.as_str()].to_string(),
                Term::Const(c) => c.clone(),
            })
            .collect(),
    }
}

fn resolve<'a>(t: &'a Term, binding: &HashMap<&str, &'a str>) -> Option<&'a str> {
    match t {
        Term::Var(v) => binding.get(v.as_str()).copied(),
        Term::Const(c) => Some(c.as_str()),
    }
}

/// Grounds a parsed problem. Actions are ordered by schema name, then by
/// binding (lexicographic over object names). Statically false or
/// relaxed-unreachable actions are dropped; static predicates are compiled
/// out of preconditions.
pub fn ground(schema: &DomainSchema, problem: &ProblemDescription, cap: usize) -> Result<GroundedProblem, GroundError> {
    if problem.domain != schema.name {
        return Err(GroundError::DomainMismatch { expected: schema.name.clone(), found: problem.domain.clone() });
    }
    let mut objects: Vec<TypedVar> = schema.constants.clone();
    objects.extend(problem.objects.iter().cloned());
    objects.sort_by(|a, b| a.name.cmp(&b.name));
    objects.dedup_by(|a, b| a.name == b.name);

    let mut fluent_preds: HashSet<&str> = HashSet::new();
    for a in &schema.actions {
        let effects = std::iter::once(&a.effect).chain(a.clauses.iter().flat_map(|c| c.outcomes.iter().map(|o| &o.effect)));
        for e in effects {
            for at in e.add.iter().chain(&e.del) {
                fluent_preds.insert(at.predicate.as_str());
            }
        }
    }
    let init: HashSet<&GroundAtom> = problem.init.iter().collect();

    let mut order: Vec<usize> = (0..schema.actions.len()).collect();
    order.sort_by(|&a, &b| schema.actions[a].name.cmp(&schema.actions[b].name));

    let mut candidates = Vec::new();
    for &sid in &order {
        let action = &schema.actions[sid];
        let domains: Vec<Vec<&str>> = action
            .parameters
            .iter()
            .map(|p| {
                objects
                    .iter()
                    .filter(|o| schema.is_subtype(&o.ty, &p.ty))
                    .map(|o| o.name.as_str())
                    .collect()
            })
            .collect();
        let mut binding: HashMap<&str, &str> = HashMap::new();
        enumerate(
            action,
            sid,
            &domains,
            0,
            &mut binding,
            &fluent_preds,
            &init,
            &mut candidates,
            cap,
        )?;
    }

    // Relaxed reachability over fluent atoms.
    let mut reachable: HashSet<GroundAtom> = problem
        .init
        .iter()
        .filter(|a| fluent_preds.contains(a.predicate.as_str()))
        .cloned()
        .collect();
    let mut alive = vec![false; candidates.len()];
    loop {
        let mut changed = false;
        for (i, c) in candidates.iter().enumerate() {
            if alive[i] || !c.pre_pos.iter().all(|a| reachable.contains(a)) {
                continue;
            }
            alive[i] = true;
            changed = true;
            for a in c.all_adds() {
                reachable.insert(a.clone());
            }
        }
        if !changed {
            break;
        }
    }

    let mut universe: BTreeSet<GroundAtom> = reachable.into_iter().collect();
    let mut goal_atoms = Vec::new();
    for g in &problem.goal {
        if fluent_preds.contains(g.predicate.as_str()) || !init.contains(g) {
            universe.insert(g.clone());
            goal_atoms.push(g.clone());
        }
    }
    let atoms: Vec<GroundAtom> = universe.into_iter().collect();
    let index: HashMap<&GroundAtom, AtomId> = atoms.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let ids = |list: &[GroundAtom]| -> Vec<AtomId> {
        let mut v: Vec<AtomId> = list.iter().filter_map(|a| index.get(a).copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    };

    let schemas = schema_infos(schema);

    let mut actions = Vec::new();
    for (c, _) in candidates.into_iter().zip(&alive).filter(|(_, &alive)| alive) {
        let a = &schema.actions[c.schema_id];
        if a.cost.is_zero() {
            return Err(GroundError::ZeroCost(a.name.clone()));
        }
        let clauses: Vec<Vec<OutcomeSpec>> = c
            .clauses
            .iter()
            .map(|cl| {
                cl.iter()
                    .map(|(p, add, del)| OutcomeSpec { probability: p.clone(), add: ids(add), del: ids(del) })
                    .collect()
            })
            .collect();
        let outcomes = combine_clauses(&ids(&c.add), &ids(&c.del), &clauses);
        actions.push(GroundAction {
            schema_id: c.schema_id,
            binding: c.binding,
            pre_pos: ids(&c.pre_pos),
            pre_neg: ids(&c.pre_neg),
            cost_f64: a.cost.to_f64().unwrap_or(f64::INFINITY),
            cost: a.cost.clone(),
            outcomes,
        });
    }

    let init_ids: Vec<AtomId> = problem.init.iter().filter_map(|a| index.get(a).copied()).collect();
    let goal = ids(&goal_atoms);
    Ok(GroundedProblem::from_parts(problem.name.clone(), atoms, schemas, actions, &init_ids, goal))
}

#[allow(clippy::too_many_arguments)]
fn enumerate<'a>(
    action: &'a ActionSchema,
    sid: usize,
    domains: &[Vec<&'a str>],
    depth: usize,
    binding: &mut HashMap<&'a str, &'a str>,
    fluent: &HashSet<&str>,
    init: &HashSet<&GroundAtom>,
    out: &mut Vec<Candidate>,
    cap: usize,
) -> Result<(), GroundError> {
    // Prune on static literals whose variables are all bound.
    for lit in &action.precondition {
        match lit {
            PreLiteral::Equal { left, right, positive } => {
                if let (Some(l), Some(r)) = (resolve(left, binding), resolve(right, binding)) {
                    if (l == r) != *positive {
                        return Ok(());
                    }
                }
            }
            PreLiteral::Atom { atom, positive } => {
                if fluent.contains(atom.predicate.as_str()) {
                    continue;
                }
                let bound = atom.args.iter().all(|t| resolve(t, binding).is_some());
                if bound && init.contains(&instantiate(atom, binding)) != *positive {
                    return Ok(());
                }
            }
        }
    }
    if depth < action.parameters.len() {
        let var = action.parameters[depth].name.as_str();
        for &obj in &domains[depth] {
            binding.insert(var, obj);
            enumerate(action, sid, domains, depth + 1, binding, fluent, init, out, cap)?;
        }
        binding.remove(var);
        return Ok(());
    }

    let mut pre_pos = Vec::new();
    let mut pre_neg = Vec::new();
    for lit in &action.precondition {
        if let PreLiteral::Atom { atom, positive } = lit {
            if !fluent.contains(atom.predicate.as_str()) {
                continue;
            }
            let g = instantiate(atom, binding);
            if *positive {
                pre_pos.push(g);
            } else {
                pre_neg.push(g);
            }
        }
    }
    if pre_pos.iter().any(|p| pre_neg.contains(p)) {
        return Ok(());
    }
    let inst = |e: &EffectSchema| -> (Vec<GroundAtom>, Vec<GroundAtom>) {
        (
            e.add.iter().map(|a| instantiate(a, binding)).collect(),
            e.del.iter().map(|a| instantiate(a, binding)).collect(),
        )
    };
    let (add, del) = inst(&action.effect);
    let clauses = action
        .clauses
        .iter()
        .map(|c| {
            c.outcomes
                .iter()
                .map(|o| {
                    let (a, d) = inst(&o.effect);
                    (o.probability.clone(), a, d)
                })
                .collect()
        })
        .collect();
    if out.len() >= cap {
        return Err(GroundError::GroundingBlowup { cap, schema: action.name.clone() });
    }
    let binding_vec = action.parameters.iter().map(|p| binding[p.name.as_str()].to_string()).collect();
    out.push(Candidate { schema_id: sid, binding: binding_vec, pre_pos, pre_neg, add, del, clauses });
    Ok(())
}

/// Count of grounded actions per schema name, for diagnostics.
pub fn action_histogram(p: &GroundedProblem) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for a in &p.actions {
        *h.entry(p.schemas[a.schema_id].name.clone()).or_insert(0) += 1;
    }
    h
}

/// Per-schema clause distributions, residual outcome included.
pub fn schema_infos(schema: &DomainSchema) -> Vec<SchemaInfo> {
    schema
        .actions
        .iter()
        .map(|a| SchemaInfo {
            name: a.name.clone(),
            clause_probabilities: a
                .clauses
                .iter()
                .map(|c| with_residual(c.outcomes.iter().map(|o| &o.probability)))
                .collect(),
        })
        .collect()
}
