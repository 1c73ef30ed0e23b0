//! Bundled benchmark domains, emitted as PPDDL text, and seeded random
//! model generators used by the property and acceptance tests.

use std::fmt::Write as _;

/// A generated domain/problem pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated {
    pub domain: String,
    pub problem: String,
}

const TIREWORLD_DOMAIN: &str = "\
(define (domain triangle-tire)
  (:requirements :typing :strips :probabilistic-effects)
  (:types location)
  (:predicates (vehicle-at ?loc - location)
               (spare-in ?loc - location)
               (road ?from - location ?to - location)
               (not-flattire)
               (hasspare))
  (:action move-car
    :parameters (?from - location ?to - location)
    :precondition (and (vehicle-at ?from) (road ?from ?to) (not-flattire))
    :effect (and (vehicle-at ?to) (not (vehicle-at ?from))
                 (probabilistic 0.5 (not (not-flattire)) 0.5 (and))))
  (:action loadtire
    :parameters (?loc - location)
    :precondition (and (vehicle-at ?loc) (spare-in ?loc))
    :effect (and (hasspare) (not (spare-in ?loc))))
  (:action changetire
    :parameters ()
    :precondition (hasspare)
    :effect (and (not (hasspare)) (not-flattire))))
";

/// Determinization of triangle-tireworld that plans for a flat tire after
/// every move.
pub const TIREWORLD_FLAT_DET: &str = "move-car/0 -> 0\n";
/// The opposite choice: moves never cause a flat.
pub const TIREWORLD_NO_FLAT_DET: &str = "move-car/0 -> 1\n";

fn tire_loc(i: usize, j: usize) -> String {
    format!("l-{i}-{j}")
}

/// Triangle-tireworld of size `n`: a triangular grid of side `2n + 1` with
/// the car at one corner and the goal at another. The short route along the
/// base has no spare tires; the two other sides carry a spare at every
/// location and form the only safe route.
pub fn triangle_tireworld(n: usize) -> Generated {
    assert!(n >= 1, "size must be at least 1");
    let m = 2 * n + 1;
    let exists = |i: usize, j: usize| i >= 1 && j >= 1 && i + j <= m + 1;
    let mut locs = Vec::new();
    let mut roads = Vec::new();
    let mut spares = Vec::new();
    for i in 1..=m {
        for j in 1..=m + 1 - i {
            locs.push(tire_loc(i, j));
            if exists(i + 1, j) {
                roads.push((tire_loc(i, j), tire_loc(i + 1, j)));
                roads.push((tire_loc(i + 1, j), tire_loc(i, j + 1)));
            }
            if i % 2 == 1 && exists(i, j + 1) {
                roads.push((tire_loc(i, j), tire_loc(i, j + 1)));
            }
            let on_side = j == 1 || i + j == m + 1;
            if i >= 2 && on_side {
                spares.push(tire_loc(i, j));
            }
        }
    }
    let mut problem = format!("(define (problem triangle-tire-{n})\n  (:domain triangle-tire)\n  (:objects");
    for l in &locs {
        let _ = write!(problem, " {l}");
    }
    problem.push_str(" - location)\n  (:init (vehicle-at l-1-1) (not-flattire)");
    for (a, b) in &roads {
        let _ = write!(problem, "\n    (road {a} {b})");
    }
    for s in &spares {
        let _ = write!(problem, "\n    (spare-in {s})");
    }
    let _ = write!(problem, ")\n  (:goal (vehicle-at {})))\n", tire_loc(1, m));
    Generated { domain: TIREWORLD_DOMAIN.to_string(), problem }
}

/// A single `try` action that succeeds with probability `p` (written as a
/// decimal) at unit cost; failure leaves the state unchanged.
pub fn retry(p: &str) -> Generated {
    let domain = format!(
        "\
(define (domain retry)
  (:requirements :strips :negative-preconditions :probabilistic-effects)
  (:predicates (done))
  (:action try
    :parameters ()
    :precondition (not (done))
    :effect (probabilistic {p} (done))))
"
    );
    let problem = "(define (problem retry-1) (:domain retry) (:init) (:goal (done)))\n".to_string();
    Generated { domain, problem }
}

/// Determinization of the retry domain in which `try` succeeds.
pub const RETRY_SUCCESS_DET: &str = "try/0 -> 0\n";

/// A deterministic corridor of `len` unit-cost steps.
pub fn chain(len: usize) -> Generated {
    let domain = "\
(define (domain chain)
  (:requirements :typing :strips)
  (:types cell)
  (:predicates (at ?c - cell) (next ?a - cell ?b - cell))
  (:action step
    :parameters (?a - cell ?b - cell)
    :precondition (and (at ?a) (next ?a ?b))
    :effect (and (at ?b) (not (at ?a)))))
"
    .to_string();
    let mut problem = String::from("(define (problem chain-p) (:domain chain)\n  (:objects");
    for i in 0..=len {
        let _ = write!(problem, " c{i}");
    }
    problem.push_str(" - cell)\n  (:init (at c0)");
    for i in 0..len {
        let _ = write!(problem, " (next c{i} c{})", i + 1);
    }
    let _ = write!(problem, ")\n  (:goal (at c{len})))\n");
    Generated { domain, problem }
}

/// Shape of the trap domain.
#[derive(Clone, Debug)]
pub struct TrapParams {
    pub risky_steps: usize,
    pub safe_steps: usize,
    /// Probability that a risky step wrecks the vehicle, as a decimal.
    pub wreck_probability: String,
}

impl Default for TrapParams {
    fn default() -> Self {
        Self { risky_steps: 4, safe_steps: 6, wreck_probability: "0.3".into() }
    }
}

/// Two routes to the goal: a short one whose every step may wreck the
/// vehicle (a dead end) and a longer one that is safe. A determinization
/// that treats the wreck as an exception sees only the short route's cost.
/// A wreck on the last risky step still lands on the goal, so the short
/// route succeeds with probability `(1 - p)^(risky_steps - 1)`.
pub fn trap(params: &TrapParams) -> Generated {
    let domain = format!(
        "\
(define (domain trap)
  (:requirements :typing :strips :probabilistic-effects)
  (:types place)
  (:predicates (at ?p - place) (risky ?a - place ?b - place) (safe ?a - place ?b - place) (intact))
  (:action risky-move
    :parameters (?a - place ?b - place)
    :precondition (and (at ?a) (risky ?a ?b) (intact))
    :effect (and (at ?b) (not (at ?a)) (probabilistic {} (not (intact)))))
  (:action safe-move
    :parameters (?a - place ?b - place)
    :precondition (and (at ?a) (safe ?a ?b) (intact))
    :effect (and (at ?b) (not (at ?a)))))
",
        params.wreck_probability
    );
    let mut objects = vec!["start".to_string(), "goal".to_string()];
    let mut links = Vec::new();
    let mut route = |kind: &str, prefix: &str, steps: usize, links: &mut Vec<String>| {
        let mut prev = "start".to_string();
        for i in 1..steps {
            let p = format!("{prefix}{i}");
            objects.push(p.clone());
            links.push(format!("({kind} {prev} {p})"));
            prev = p;
        }
        links.push(format!("({kind} {prev} goal)"));
    };
    route("risky", "r", params.risky_steps, &mut links);
    route("safe", "s", params.safe_steps, &mut links);
    let problem = format!(
        "(define (problem trap-1) (:domain trap)\n  (:objects {} - place)\n  (:init (at start) (intact)\n    {})\n  (:goal (at goal)))\n",
        objects.join(" "),
        links.join("\n    ")
    );
    Generated { domain, problem }
}

pub mod random {
    //! Seeded random models. Everything is a pure function of the seed.

    use num_bigint::BigInt;
    use num_rational::BigRational;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::detplan::{DetAction, DeterministicProblem};
    use crate::model::State;
    use crate::problem::{ActionSpec, GroundedProblem, OutcomeSpec, ProblemBuilder};
    use crate::reduction::Determinization;

    #[derive(Clone, Debug)]
    pub struct RandomSpec {
        pub atoms: std::ops::RangeInclusive<usize>,
        pub actions: std::ops::RangeInclusive<usize>,
        pub max_clauses: usize,
        pub max_outcomes: usize,
        pub max_cost: u32,
    }

    impl Default for RandomSpec {
        fn default() -> Self {
            Self { atoms: 3..=7, actions: 3..=9, max_clauses: 2, max_outcomes: 3, max_cost: 4 }
        }
    }

    fn subset(rng: &mut ChaCha8Rng, pool: &[usize], max: usize) -> Vec<usize> {
        let n = rng.gen_range(0..=max.min(pool.len()));
        let mut v: Vec<usize> = pool.choose_multiple(rng, n).copied().collect();
        v.sort_unstable();
        v
    }

    /// A random probabilistic problem. Probabilities are multiples of 1/20
    /// and a clause may leave residual mass.
    pub fn problem(seed: u64, spec: &RandomSpec) -> GroundedProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = ProblemBuilder::new(&format!("random-{seed}"));
        let n_atoms = rng.gen_range(spec.atoms.clone());
        let atoms: Vec<usize> = (0..n_atoms).map(|i| b.atom(&format!("p{i}"))).collect();
        let init = subset(&mut rng, &atoms, n_atoms / 2);
        let goal_pool: Vec<usize> = atoms.iter().copied().filter(|a| !init.contains(a)).collect();
        let mut goal = subset(&mut rng, &goal_pool, 2);
        if goal.is_empty() {
            if let Some(&g) = goal_pool.first() {
                goal.push(g);
            }
        }
        b.init(&init);
        b.goal(&goal);
        let n_actions = rng.gen_range(spec.actions.clone());
        for i in 0..n_actions {
            let pre_pos = subset(&mut rng, &atoms, 2);
            let neg_pool: Vec<usize> = atoms.iter().copied().filter(|a| !pre_pos.contains(a)).collect();
            let pre_neg = subset(&mut rng, &neg_pool, 1);
            let n_clauses = rng.gen_range(0..=spec.max_clauses);
            let mut clauses = Vec::new();
            for _ in 0..n_clauses {
                let n_out = rng.gen_range(1..=spec.max_outcomes);
                let mut left = 20i64;
                let mut clause = Vec::new();
                for o in 0..n_out {
                    if left == 0 {
                        break;
                    }
                    let last = o + 1 == n_out;
                    let w = if last && rng.gen_bool(0.7) { left } else { rng.gen_range(1..=left) };
                    left -= w;
                    let add = subset(&mut rng, &atoms, 2);
                    let del_pool: Vec<usize> = atoms.iter().copied().filter(|a| !add.contains(a)).collect();
                    let del = subset(&mut rng, &del_pool, 2);
                    clause.push(OutcomeSpec {
                        probability: BigRational::new(BigInt::from(w), BigInt::from(20)),
                        add,
                        del,
                    });
                }
                clauses.push(clause);
            }
            let add = subset(&mut rng, &atoms, 1);
            let cost = rng.gen_range(1..=spec.max_cost);
            b.action(ActionSpec {
                name: format!("a{i}"),
                pre_pos,
                pre_neg,
                cost: BigRational::from_integer(BigInt::from(cost)),
                add,
                del: vec![],
                clauses,
            })
            .expect("generated action is well formed");
        }
        b.build()
    }

    /// A uniformly random determinization of `p`.
    pub fn determinization(seed: u64, p: &GroundedProblem) -> Determinization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut d = Determinization::new();
        for s in &p.schemas {
            for c in 0..s.clause_probabilities.len() {
                d.set(&s.name, c, rng.gen_range(0..s.branching(c)));
            }
        }
        d
    }

    /// A random deterministic problem together with a start state.
    pub fn deterministic(seed: u64, atoms: std::ops::RangeInclusive<usize>) -> (DeterministicProblem, State) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(atoms);
        let pool: Vec<usize> = (0..n).collect();
        let n_actions = rng.gen_range(n..=3 * n);
        let actions = (0..n_actions)
            .map(|id| {
                let pre_pos = subset(&mut rng, &pool, 2);
                let neg_pool: Vec<usize> = pool.iter().copied().filter(|a| !pre_pos.contains(a)).collect();
                let pre_neg = subset(&mut rng, &neg_pool, 1);
                let mut add = subset(&mut rng, &pool, 2);
                if add.is_empty() {
                    add.push(rng.gen_range(0..n));
                }
                let del_pool: Vec<usize> = pool.iter().copied().filter(|a| !add.contains(a)).collect();
                let del = subset(&mut rng, &del_pool, 2);
                DetAction { id, pre_pos, pre_neg, add, del, cost: rng.gen_range(1..=5) as f64 }
            })
            .collect();
        let start = State::from_atoms(n, subset(&mut rng, &pool, n / 2));
        let goal_pool: Vec<usize> = pool.iter().copied().filter(|a| !start.contains(*a)).collect();
        let mut goal = subset(&mut rng, &goal_pool, 3);
        if goal.is_empty() {
            goal.push(rng.gen_range(0..n));
        }
        (DeterministicProblem { atom_count: n, actions, goal }, start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppddl;

    #[test]
    fn tireworld_sizes_ground() {
        for n in 1..=6 {
            let g = triangle_tireworld(n);
            let (_, p) = ppddl::load(&g.domain, &g.problem).unwrap();
            let m = 2 * n + 1;
            assert_eq!(p.atom_id(&crate::ppddl::GroundAtom::new("vehicle-at", &[&format!("l-1-{m}")])), Some(p.goal[0]));
        }
    }

    #[test]
    fn trap_and_retry_and_chain_ground() {
        for g in [trap(&TrapParams::default()), retry("0.5"), chain(7)] {
            ppddl::load(&g.domain, &g.problem).unwrap();
        }
    }
}
