#![allow(dead_code)]

use fflao::gen::Generated;
use fflao::ppddl::{self, DomainSchema};
use fflao::GroundedProblem;

pub fn load(g: &Generated) -> GroundedProblem {
    ppddl::load(&g.domain, &g.problem).expect("bundled domain loads").1
}

pub fn load_text(domain: &str, problem: &str) -> (DomainSchema, GroundedProblem) {
    ppddl::load(domain, problem).expect("test domain loads")
}

pub fn action(p: &GroundedProblem, name: &str) -> usize {
    p.find_action(name).unwrap_or_else(|| panic!("no action {name}"))
}

/// `try` reaches the goal with probability `p` and otherwise does nothing;
/// a deterministic route of `walk` unit-cost actions reaches it surely.
/// Outcome 0 of `try` is the null outcome, outcome 1 the success.
pub fn retry_or_walk(p: &str, walk: usize) -> (String, String) {
    let domain = format!(
        "(define (domain rw)
  (:requirements :strips :probabilistic-effects :negative-preconditions)
  (:predicates (done) (at ?x) (next ?x ?y) (end ?x))
  (:action try
    :parameters ()
    :precondition (not (done))
    :effect (probabilistic {q} (and) {p} (done)))
  (:action walk
    :parameters (?x ?y)
    :precondition (and (at ?x) (next ?x ?y))
    :effect (and (at ?y) (not (at ?x))))
  (:action arrive
    :parameters (?x)
    :precondition (and (at ?x) (end ?x))
    :effect (done)))",
        q = complement(p)
    );
    let cells: Vec<String> = (0..walk).map(|i| format!("w{i}")).collect();
    let links: Vec<String> = (1..walk).map(|i| format!("(next w{} w{i})", i - 1)).collect();
    let problem = format!(
        "(define (problem rw1) (:domain rw)
  (:objects {})
  (:init (at w0) (end w{}) {})
  (:goal (done)))",
        cells.join(" "),
        walk - 1,
        links.join(" ")
    );
    (domain, problem)
}

fn complement(p: &str) -> String {
    let x: f64 = p.parse().expect("decimal probability");
    format!("{}", ((1.0 - x) * 1e6).round() / 1e6)
}
