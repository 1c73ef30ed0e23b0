//! Optional hook for delegating deterministic solves to an external
//! classical planner.
//!
//! The problem is written as propositional STRIPS PDDL: atoms are named
//! `a<i>` and actions `op<i>` after their index in the
//! [`DeterministicProblem`]. The planner is run with the domain and problem
//! paths substituted for `{domain}` and `{problem}` in its argument list and
//! must print its plan on standard output, one `(op<i>)` per line. Blank
//! lines and lines starting with `;` are ignored. An empty plan from a
//! non-goal state, or a nonzero exit status, is reported as failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{validate_plan, DeterministicProblem, PlanResult, PlanStatus, PlanStep, PlanValidationError};
use crate::model::State;

#[derive(Debug, thiserror::Error)]
pub enum ExternalPlannerError {
    #[error("external planner i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("unrecognized plan line {line}: {text:?}")]
    BadPlanLine { line: usize, text: String },
    #[error("external plan does not validate: {0}")]
    InvalidPlan(#[from] PlanValidationError),
}

#[derive(Clone, Debug)]
pub struct ExternalPlanner {
    pub program: PathBuf,
    pub args: Vec<String>,
}

static FILE_COUNTER: AtomicUsize = AtomicUsize::new(0);

impl ExternalPlanner {
    pub fn solve(&self, d: &DeterministicProblem, s: &State) -> Result<PlanResult, ExternalPlannerError> {
        let (domain, problem) = write_pddl(d, s);
        let stem = format!("fflao-{}-{}", std::process::id(), FILE_COUNTER.fetch_add(1, Ordering::Relaxed));
        let dir = std::env::temp_dir();
        let dpath = dir.join(format!("{stem}-domain.pddl"));
        let ppath = dir.join(format!("{stem}-problem.pddl"));
        std::fs::write(&dpath, domain)?;
        std::fs::write(&ppath, problem)?;
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| {
                a.replace("{domain}", &dpath.to_string_lossy()).replace("{problem}", &ppath.to_string_lossy())
            })
            .collect();
        let out = Command::new(&self.program).args(&args).output();
        let _ = std::fs::remove_file(&dpath);
        let _ = std::fs::remove_file(&ppath);
        let out = out?;
        if !out.status.success() {
            return Ok(failure());
        }
        let indices = parse_plan_text(&String::from_utf8_lossy(&out.stdout), d.actions.len())?;
        if indices.is_empty() && !d.is_goal(s) {
            return Ok(failure());
        }
        let plan = replay(d, s, &indices);
        validate_plan(d, s, &plan)?;
        Ok(plan)
    }
}

fn failure() -> PlanResult {
    PlanResult { status: PlanStatus::Failure, steps: vec![], suffix_costs: vec![], expansions: 0 }
}

fn replay(d: &DeterministicProblem, s: &State, indices: &[usize]) -> PlanResult {
    let mut steps = Vec::with_capacity(indices.len());
    let mut cur = s.clone();
    for &i in indices {
        let a = &d.actions[i];
        steps.push(PlanStep { state: cur.clone(), index: i, action: a.id });
        cur = cur.apply(&a.add, &a.del);
    }
    let mut suffix_costs = vec![0.0; steps.len()];
    let mut acc = 0.0;
    for i in (0..steps.len()).rev() {
        acc += d.actions[steps[i].index].cost;
        suffix_costs[i] = acc;
    }
    PlanResult { status: PlanStatus::Plan, steps, suffix_costs, expansions: 0 }
}

/// Parses `(op<i>)` lines into action indices below `action_count`.
pub fn parse_plan_text(text: &str, action_count: usize) -> Result<Vec<usize>, ExternalPlannerError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let bad = || ExternalPlannerError::BadPlanLine { line: n + 1, text: raw.to_string() };
        let inner = line.strip_prefix('(').and_then(|l| l.strip_suffix(')')).ok_or_else(bad)?;
        let idx: usize = inner.trim().to_ascii_lowercase().strip_prefix("op").and_then(|i| i.parse().ok()).ok_or_else(bad)?;
        if idx >= action_count {
            return Err(bad());
        }
        out.push(idx);
    }
    Ok(out)
}

/// Propositional domain and problem text for `d` with initial state `s`.
pub fn write_pddl(d: &DeterministicProblem, s: &State) -> (String, String) {
    let lits = |atoms: &[usize], neg: bool| -> String {
        atoms
            .iter()
            .map(|a| if neg { format!(" (not (a{a}))") } else { format!(" (a{a})") })
            .collect()
    };
    let mut dom = String::from("(define (domain det)\n  (:requirements :strips :negative-preconditions :action-costs)\n  (:predicates");
    for a in 0..d.atom_count {
        let _ = write!(dom, " (a{a})");
    }
    dom.push_str(")\n  (:functions (total-cost))\n");
    for (i, a) in d.actions.iter().enumerate() {
        let _ = writeln!(
            dom,
            "  (:action op{i}\n    :precondition (and{}{})\n    :effect (and{}{} (increase (total-cost) {})))",
            lits(&a.pre_pos, false),
            lits(&a.pre_neg, true),
            lits(&a.add, false),
            lits(&a.del, true),
            a.cost
        );
    }
    dom.push_str(")\n");
    let init: Vec<usize> = s.atoms().collect();
    let prob = format!(
        "(define (problem det-p) (:domain det)\n  (:init{})\n  (:goal (and{}))\n  (:metric minimize (total-cost)))\n",
        lits(&init, false),
        lits(&d.goal, false)
    );
    (dom, prob)
}
