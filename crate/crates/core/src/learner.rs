//! Learning a determinization by exhaustive search: every candidate is
//! evaluated by Monte-Carlo replanning on a training problem, and the one
//! with the highest success rate, then the lowest expected cost, wins.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::executor::{monte_carlo_evaluate, EvalConfig, EvalStats, ExecError};
use crate::problem::{GroundedProblem, SchemaInfo};
use crate::reduction::Determinization;

pub const DEFAULT_ENUMERATION_CAP: usize = 4096;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("{} determinizations exceed the cap of {cap}; per-clause branching: {}",
    count.map_or_else(|| "too many".to_string(), |c| c.to_string()),
    branching.iter().map(|(s, c, b)| format!("{s}/{c}={b}")).collect::<Vec<_>>().join(", "))]
pub struct EnumerationBlowup {
    /// `None` when the count overflows.
    pub count: Option<u128>,
    pub cap: usize,
    pub branching: Vec<(String, usize, usize)>,
}

/// All determinizations: the cross product of outcome choices over every
/// (schema, clause), residual outcome included. The first clause of the
/// first schema varies slowest. Single-outcome clauses are left out of the
/// maps since they admit one choice only.
pub fn enumerate_determinizations(schemas: &[SchemaInfo], cap: usize) -> Result<Vec<Determinization>, EnumerationBlowup> {
    let slots: Vec<(String, usize, usize)> = schemas
        .iter()
        .flat_map(|s| (0..s.clause_probabilities.len()).map(move |c| (s.name.clone(), c, s.branching(c))))
        .filter(|&(_, _, b)| b > 1)
        .collect();
    let count = slots.iter().try_fold(1u128, |acc, &(_, _, b)| acc.checked_mul(b as u128));
    if count.is_none_or(|c| c > cap as u128) {
        return Err(EnumerationBlowup { count, cap, branching: slots });
    }
    let mut out = Vec::new();
    let mut digits = vec![0usize; slots.len()];
    loop {
        let mut d = Determinization::new();
        for ((name, clause, _), &o) in slots.iter().zip(&digits) {
            d.set(name, *clause, o);
        }
        out.push(d);
        let mut i = slots.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < slots[i].2 {
                break;
            }
            digits[i] = 0;
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct DetCandidate {
    /// Position in enumeration order.
    pub id: usize,
    pub delta: String,
    pub stats: EvalStats,
    /// 1-based position in the ranking.
    pub rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_time_secs: Option<f64>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LearnReport {
    pub k: u32,
    pub rounds: usize,
    pub seed: u64,
    pub selected: usize,
    /// Candidates in enumeration order.
    pub candidates: Vec<DetCandidate>,
}

impl LearnReport {
    pub fn selected_delta(&self) -> Determinization {
        Determinization::parse(&self.candidates[self.selected].delta).expect("candidate text round-trips")
    }

    /// Candidates ordered by rank.
    pub fn ranked(&self) -> Vec<&DetCandidate> {
        let mut v: Vec<&DetCandidate> = self.candidates.iter().collect();
        v.sort_by_key(|c| c.rank);
        v
    }
}

#[derive(Clone, Debug)]
pub struct LearnConfig {
    pub k: u32,
    pub eval: EvalConfig,
    pub enumeration_cap: usize,
    /// Budget for the whole search, split evenly between candidates.
    pub total_time: Option<Duration>,
    pub parallel: bool,
    pub record_time: bool,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            k: 0,
            eval: EvalConfig::default(),
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            total_time: None,
            parallel: true,
            record_time: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error(transparent)]
    Enumeration(#[from] EnumerationBlowup),
    #[error("candidate {id}: {source}")]
    Evaluation { id: usize, source: ExecError },
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Index of the candidate with maximum success probability, then minimum
/// expected cost, then lowest index.
pub fn select(table: &[(f64, f64)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &row) in table.iter().enumerate() {
        if best.is_none_or(|b| better(row, table[b])) {
            best = Some(i);
        }
    }
    best
}

/// 1-based ranks under the selection order.
pub fn ranks(table: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, ca) = table[a];
        let (pb, cb) = table[b];
        pb.total_cmp(&pa).then(ca.total_cmp(&cb)).then(a.cmp(&b))
    });
    let mut r = vec![0; table.len()];
    for (pos, i) in order.into_iter().enumerate() {
        r[i] = pos + 1;
    }
    r
}

/// Evaluates every determinization of `problem`'s schemas and selects one.
pub fn learning_det(problem: &GroundedProblem, cfg: &LearnConfig) -> Result<LearnReport, LearnError> {
    let deltas = enumerate_determinizations(&problem.schemas, cfg.enumeration_cap)?;
    let mut eval = cfg.eval.clone();
    if let Some(t) = cfg.total_time {
        let per = t / deltas.len().max(1) as u32;
        eval.total_time = Some(eval.total_time.map_or(per, |e| e.min(per)));
    }
    let run = |(id, delta): (usize, &Determinization)| -> Result<(EvalStats, f64), LearnError> {
        let start = Instant::now();
        let stats =
            monte_carlo_evaluate(problem, delta, cfg.k, &eval).map_err(|source| LearnError::Evaluation { id, source })?;
        Ok((stats, start.elapsed().as_secs_f64()))
    };
    let results: Vec<(EvalStats, f64)> = if cfg.parallel {
        deltas.par_iter().enumerate().map(run).collect::<Result<_, _>>()?
    } else {
        deltas.iter().enumerate().map(run).collect::<Result<_, _>>()?
    };
    let table: Vec<(f64, f64)> = results.iter().map(|(s, _)| (s.success_probability, s.expected_cost)).collect();
    let selected = select(&table).unwrap_or(0);
    let rank = ranks(&table);
    let candidates = deltas
        .iter()
        .zip(results)
        .enumerate()
        .map(|(id, (delta, (stats, secs)))| DetCandidate {
            id,
            delta: delta.to_string(),
            stats,
            rank: rank[id],
            solve_time_secs: cfg.record_time.then_some(secs),
        })
        .collect();
    Ok(LearnReport { k: cfg.k, rounds: cfg.eval.rounds, seed: cfg.eval.seed, selected, candidates })
}
