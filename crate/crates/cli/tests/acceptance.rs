//! Acceptance suite: one pass/fail line per criterion. Runs without the
//! libtest harness so the lines always reach the terminal.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fflao::detplan::{solve_deterministic, validate_plan, Budget, PlanStatus, SearchMode};
use fflao::executor::{
    monte_carlo_evaluate, round_seed, EnvError, Environment, EvalConfig, ExecCaps, Replanner, SimEnv,
};
use fflao::gen::{random, retry, trap, triangle_tireworld, TrapParams, RETRY_SUCCESS_DET, TIREWORLD_FLAT_DET};
use fflao::learner::{learning_det, LearnConfig};
use fflao::oracle::{almost_sure_states, enumerate, optimal_plan, value_iteration, RootedDeterministic, Ssp};
use fflao::solver::{ff_lao_star, HeuristicKind, Policy, SolverConfig};
use fflao::{make_reduction, ppddl, AugmentedState, Determinization, GroundedProblem, ReducedModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: f64 = 500.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn load(g: &fflao::gen::Generated) -> GroundedProblem {
    ppddl::load(&g.domain, &g.problem).expect("bundled problem loads").1
}

/// Solver value against value iteration on small random reductions with a
/// proper policy, using the zero heuristic and the admissible sub-planner.
fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let spec = random::RandomSpec::default();
    let mut cases = 0;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut seed = 0u64;
    while cases < 120 {
        seed += 1;
        let p = random::problem(seed, &spec);
        if enumerate(&p, 2000).is_err() {
            continue;
        }
        let k = (seed % 3) as u32;
        let m = make_reduction(&p, &random::determinization(seed, &p), k).unwrap();
        let Ok(em) = enumerate(&m, 20_000) else { continue };
        if !almost_sure_states(&em)[em.initial] {
            continue;
        }
        cases += 1;
        let vi = value_iteration(&em, 1e-10, CAP).values[em.initial];
        let mut cfg = SolverConfig { epsilon: 1e-6, heuristic: HeuristicKind::Zero, ..SolverConfig::default() };
        cfg.subplanner.mode = SearchMode::Optimal;
        match ff_lao_star(&m, cfg) {
            Ok((_, report)) => {
                let err = (report.value_s0 - vi).abs();
                worst = worst.max(err);
                if err > 1e-3 {
                    failures.push(format!("seed {seed} k={k}: {} vs {vi}", report.value_s0));
                }
            }
            Err(e) => failures.push(format!("seed {seed} k={k}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        failures.is_empty() && secs < 120.0,
        format!("{cases} problems, worst gap {worst:.2e}, {secs:.1}s, failures {failures:?}"),
    )
}

/// The primary outcome of `a` under `delta`, read directly from the
/// grounded outcome choices.
fn primary_outcome(p: &GroundedProblem, delta: &Determinization, a: usize) -> Option<usize> {
    let action = &p.actions[a];
    let schema = &p.schemas[action.schema_id];
    let wanted: Vec<usize> =
        (0..schema.clause_probabilities.len()).map(|c| delta.get(&schema.name, c).unwrap_or(0)).collect();
    action.outcomes.iter().position(|o| o.choice == wanted)
}

/// Successor distribution of the reduction computed from first principles.
fn expected_successors(
    p: &GroundedProblem,
    delta: &Determinization,
    k: u32,
    s: &AugmentedState,
    a: usize,
) -> Option<HashMap<AugmentedState, f64>> {
    let action = &p.actions[a];
    let primary = primary_outcome(p, delta, a);
    let mut out = HashMap::new();
    if s.j < k {
        for (i, o) in action.outcomes.iter().enumerate() {
            let j = if Some(i) == primary { s.j } else { s.j + 1 };
            *out.entry(AugmentedState::new(s.base.apply(&o.add, &o.del), j)).or_insert(0.0) += o.p;
        }
    } else {
        let o = &action.outcomes[primary?];
        out.insert(AugmentedState::new(s.base.apply(&o.add, &o.del), s.j), 1.0);
    }
    Some(out)
}

fn well_formedness() -> Outcome {
    let target = 100_000;
    let mut pairs = 0usize;
    let mut violations = Vec::new();
    let mut seed = 0u64;
    while pairs < target {
        seed += 1;
        let p = random::problem(seed, &random::RandomSpec::default());
        let delta = random::determinization(seed, &p);
        let k = (seed % 3) as u32;
        let m = make_reduction(&p, &delta, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = m.initial();
        for _ in 0..200 {
            let acts = m.applicable_actions(&s);
            for &a in &acts {
                pairs += 1;
                let got = m.reduced_successors(&s, a).ok();
                let want = expected_successors(&p, &delta, k, &s, a);
                match (&got, &want) {
                    (None, None) => {}
                    (Some(d), Some(w)) => {
                        let total = d.total();
                        let same = d.len() == w.len()
                            && d.entries.iter().all(|(t, pr)| w.get(t).is_some_and(|x| (x - pr).abs() <= 1e-9));
                        let steps = d.entries.iter().all(|(t, _)| t.j <= k && (t.j == s.j || t.j == s.j + 1));
                        if (total - 1.0).abs() > 1e-9 || !same || !steps || (k == 0 && d.len() != 1) {
                            violations.push(format!("seed {seed} action {a} j={}", s.j));
                        }
                    }
                    _ => violations.push(format!("seed {seed} action {a} j={}: applicability differs", s.j)),
                }
            }
            let next = if m.is_goal(&s) || acts.is_empty() {
                None
            } else {
                let a = acts[rng.gen_range(0..acts.len())];
                m.reduced_successors(&s, a).ok().map(|d| {
                    let r: f64 = rng.gen();
                    let mut acc = 0.0;
                    let pick = d.entries.iter().position(|(_, pr)| {
                        acc += pr;
                        r < acc
                    });
                    d.entries[pick.unwrap_or(d.len() - 1)].0.clone()
                })
            };
            s = next.unwrap_or_else(|| m.initial());
        }
    }
    violations.truncate(5);
    check(violations.is_empty(), format!("{pairs} pairs over {seed} models, violations {violations:?}"))
}

fn eval(p: &GroundedProblem, delta: &Determinization, k: u32, rounds: usize, seed: u64) -> fflao::executor::EvalStats {
    let cfg = EvalConfig { rounds, seed, ..Default::default() };
    monte_carlo_evaluate(p, delta, k, &cfg).expect("evaluation runs")
}

fn tireworld_learning() -> Outcome {
    let flat = Determinization::parse(TIREWORLD_FLAT_DET).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;

    let p1 = load(&triangle_tireworld(1));
    for seed in 0..10 {
        let cfg = LearnConfig { eval: EvalConfig { rounds: 50, seed, ..Default::default() }, ..Default::default() };
        let report = learning_det(&p1, &cfg).expect("learning runs");
        let chosen = &report.candidates[report.selected];
        if report.selected_delta() != flat || chosen.stats.success_probability != 1.0 {
            ok = false;
            notes.push(format!("seed {seed} chose {:?}", chosen.delta));
        }
    }

    let p2 = load(&triangle_tireworld(2));
    let cfg = LearnConfig { eval: EvalConfig { rounds: 50, seed: 1, ..Default::default() }, ..Default::default() };
    let report = learning_det(&p2, &cfg).expect("learning runs");
    let pf = report.candidates.iter().find(|c| c.delta == TIREWORLD_FLAT_DET).unwrap().stats.success_probability;
    let po = report.candidates.iter().find(|c| c.delta != TIREWORLD_FLAT_DET).unwrap().stats.success_probability;
    ok &= po < pf;
    notes.push(format!("n=2 P flat {pf} other {po}"));

    for n in 1..=3 {
        let p = load(&triangle_tireworld(n));
        let em = enumerate(&p, 1_000_000).expect("tireworld enumerates");
        let v_star = value_iteration(&em, 1e-10, CAP).values[em.initial];
        let stats = eval(&p, &flat, 0, 1000, 1);
        let within = (stats.expected_cost - v_star).abs() <= 3.0 * stats.cost_std_error;
        ok &= within && stats.success_probability == 1.0;
        notes.push(format!(
            "n={n} cost {:.3} se {:.3} V* {v_star:.3}",
            stats.expected_cost, stats.cost_std_error
        ));
    }
    check(ok, notes.join("; "))
}

fn k_sensitivity() -> Outcome {
    let p = load(&trap(&TrapParams::default()));
    let delta = Determinization::most_likely(&p.schemas);
    let k0 = eval(&p, &delta, 0, 200, 1).success_probability;
    let k1 = eval(&p, &delta, 1, 200, 1).success_probability;
    check(k0 < 0.5 && k1 == 1.0, format!("determinization {:?}, P(k=0) {k0}, P(k=1) {k1}", delta.to_string()))
}

fn subplanner_contract() -> Outcome {
    let mut solvable = 0;
    let mut unsolvable = 0;
    let mut violations = Vec::new();
    let mut seed = 0u64;
    while solvable < 1000 {
        seed += 1;
        let (d, s) = random::deterministic(seed, 3..=8);
        let Ok(em) = enumerate(&RootedDeterministic { d: &d, start: s.clone() }, 2000) else { continue };
        let best = optimal_plan(&em, em.initial);
        if best.is_some() {
            solvable += 1;
        } else {
            unsolvable += 1;
        }
        for mode in [SearchMode::Greedy, SearchMode::Optimal] {
            let plan = solve_deterministic(&d, &s, &Budget::expansions(1_000_000), mode);
            let ok = match &best {
                Some(b) => {
                    plan.status == PlanStatus::Plan
                        && validate_plan(&d, &s, &plan).is_ok()
                        && plan.cost() >= b.cost - 1e-9
                }
                None => plan.status == PlanStatus::Failure,
            };
            if !ok {
                violations.push(format!("seed {seed} {mode:?}"));
            }
        }
    }
    check(violations.is_empty(), format!("{solvable} solvable, {unsolvable} unsolvable, violations {violations:?}"))
}

fn dead_end_value(m: &ReducedModel, cfg: &SolverConfig) -> Result<(), String> {
    let (tables, report) = ff_lao_star(m, cfg.clone()).map_err(|e| e.to_string())?;
    let em = enumerate(m, 50_000).map_err(|e| e.to_string())?;
    let vi = value_iteration(&em, 1e-9, CAP).values[em.initial];
    if report.value_s0 != CAP || tables.policy(&m.initial) != Policy::Nop || vi != CAP {
        return Err(format!("solver {} {:?}, VI {vi}", report.value_s0, tables.policy(&m.initial)));
    }
    Ok(())
}

fn dead_end_cap() -> Outcome {
    let mut checked = 0;
    let mut errors = Vec::new();
    let p = load(&trap(&TrapParams::default()));
    let intact = p.atom_id(&ppddl::GroundAtom::new("intact", &[])).unwrap();
    let delta = Determinization::most_likely(&p.schemas);
    for k in 0..=2 {
        let mut m = make_reduction(&p, &delta, k).unwrap();
        m.replace_initial(p.initial_state.apply(&[], &[intact]));
        for cfg in [SolverConfig::default(), SolverConfig { heuristic: HeuristicKind::Zero, ..SolverConfig::default() }] {
            checked += 1;
            if let Err(e) = dead_end_value(&m, &cfg) {
                errors.push(format!("trap k={k}: {e}"));
            }
        }
    }
    // Every state of a random model from which no goal is reachable at all.
    for seed in 1..=60u64 {
        let p = random::problem(seed, &random::RandomSpec::default());
        let Ok(em) = enumerate(&p, 2000) else { continue };
        let vi = value_iteration(&em, 1e-9, CAP);
        let reach = reaches_goal(&em);
        let delta = random::determinization(seed, &p);
        for (i, s) in em.states.iter().enumerate() {
            if reach[i] {
                continue;
            }
            checked += 1;
            if vi.values[i] != CAP {
                errors.push(format!("seed {seed} state {i}: VI {}", vi.values[i]));
            }
            let mut m = make_reduction(&p, &delta, (seed % 3) as u32).unwrap();
            m.replace_initial(s.clone());
            if let Err(e) = dead_end_value(&m, &SolverConfig::default()) {
                errors.push(format!("seed {seed} state {i}: {e}"));
            }
        }
    }
    errors.truncate(5);
    check(errors.is_empty(), format!("{checked} dead-end checks, errors {errors:?}"))
}

/// States with some path to a goal, ignoring probabilities.
fn reaches_goal<S>(em: &fflao::oracle::ExplicitModel<S>) -> Vec<bool> {
    let mut reach = em.goal.clone();
    loop {
        let mut changed = false;
        for i in 0..em.states.len() {
            if !reach[i] && em.actions[i].iter().any(|a| a.successors.iter().any(|&(t, _)| reach[t])) {
                reach[i] = true;
                changed = true;
            }
        }
        if !changed {
            return reach;
        }
    }
}

fn run_cli(args: &[String]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fflao"))
        .args(args)
        .env_remove("FFLAO_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn write_problem(dir: &Path, stem: &str, g: &fflao::gen::Generated) -> (String, String) {
    let d = dir.join(format!("{stem}-domain.pddl"));
    let p = dir.join(format!("{stem}.pddl"));
    std::fs::write(&d, &g.domain).unwrap();
    std::fs::write(&p, &g.problem).unwrap();
    (d.display().to_string(), p.display().to_string())
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (td, t1) = write_problem(dir.path(), "tire1", &triangle_tireworld(1));
    let (_, t2) = write_problem(dir.path(), "tire2", &triangle_tireworld(2));
    let (rd, rp) = write_problem(dir.path(), "trap", &trap(&TrapParams::default()));
    let (yd, yp) = write_problem(dir.path(), "retry", &retry("0.5"));
    let side = |name: &str| dir.path().join(name).display().to_string();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let configs: Vec<(Vec<String>, Vec<String>)> = vec![
        (s(&["plan", "--domain", &td, "--problem", &t2, "--det-index", "0"]), vec![]),
        (s(&["plan", "--domain", &rd, "--problem", &rp, "--k", "1", "--heuristic", "zero"]), vec![]),
        (s(&["plan", "--domain", &td, "--problem", &t2, "--learn", "--training-problem", &t1, "--seed", "4"]), vec![]),
        (s(&["simulate", "--domain", &td, "--problem", &t2, "--seed", "5", "--rounds", "40"]), vec![]),
        (
            s(&["simulate", "--domain", &rd, "--problem", &rp, "--seed", "6", "--csv", &side("sim.csv")]),
            vec![side("sim.csv")],
        ),
        (s(&["simulate", "--domain", &yd, "--problem", &yp, "--seed", "7", "--rounds", "60", "--workers", "3"]), vec![]),
        (s(&["learn-det", "--domain", &td, "--training-problem", &t1, "--seed", "8"]), vec![]),
        (
            s(&["learn-det", "--domain", &rd, "--training-problem", &rp, "--k", "1", "--seed", "9", "--json", &side("l.json")]),
            vec![side("l.json")],
        ),
        (s(&["bench", "--domain", &td, "--problem", &t1, "--problem", &t2, "--seed", "10", "--rounds", "20"]), vec![]),
        (s(&["bench", "--domain", &yd, "--problem", &yp, "--seed", "11", "--json", &side("b.json")]), vec![side("b.json")]),
    ];
    let mut differing = Vec::new();
    for (i, (args, files)) in configs.iter().enumerate() {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let mut bytes = run_cli(args)?;
            for f in files {
                bytes.extend(std::fs::read(f).map_err(|e| format!("{f}: {e}"))?);
            }
            runs.push(bytes);
        }
        if runs[0] != runs[1] || runs[0].is_empty() {
            differing.push(i);
        }
    }
    check(differing.is_empty(), format!("{} configurations, differing {differing:?}", configs.len()))
}

/// Records every state the environment reports.
struct Recording<'p> {
    inner: SimEnv<'p>,
    visited: Vec<fflao::State>,
}

impl Environment for Recording<'_> {
    fn reset(&mut self, seed: u64) -> Result<fflao::State, EnvError> {
        let s = self.inner.reset(seed)?;
        self.visited.push(s.clone());
        Ok(s)
    }

    fn step(&mut self, a: usize) -> Result<fflao::State, EnvError> {
        let s = self.inner.step(a)?;
        self.visited.push(s.clone());
        Ok(s)
    }
}

fn replanning_loop() -> Outcome {
    let p = load(&retry("0.5"));
    let delta = Determinization::parse(RETRY_SUCCESS_DET).unwrap();
    let m = make_reduction(&p, &delta, 0).unwrap();
    let mut agent = Replanner::new(&m, SolverConfig::default()).unwrap();
    let mut env = Recording { inner: SimEnv::new(&p), visited: Vec::new() };
    let caps = ExecCaps::default();
    let rounds = 1000;
    let mut cost = 0.0;
    let mut replans = 0;
    for i in 0..rounds {
        let r = agent.run_round(&mut env, &caps, i, round_seed(1, i)).map_err(|e| e.to_string())?;
        if !r.succeeded() {
            return Err(format!("round {i} ended with {:?}", r.outcome));
        }
        cost += r.accumulated_cost;
        replans += r.replans;
    }
    let mean = cost / rounds as f64;
    let novel: HashSet<_> = env.visited.iter().filter(|s| !fflao::model::is_goal(s, &p)).collect();
    let states = agent.replanned_states();
    let planned: HashSet<_> = states.iter().collect();
    // One solver call per novel non-goal state, and none at a state seen before.
    let audit = states.len() == replans && planned.len() == states.len() && planned == novel;
    check(
        (mean - 2.0).abs() <= 0.15 && audit,
        format!(
            "mean cost {mean:.3}, {replans} solver calls, {} novel non-goal states, {} visits",
            novel.len(),
            env.visited.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("reduction well-formedness", well_formedness),
        ("tireworld determinization learning", tireworld_learning),
        ("exception-bound sensitivity", k_sensitivity),
        ("deterministic sub-planner contract", subplanner_contract),
        ("dead-end cap", dead_end_cap),
        ("reproducibility", reproducibility),
        ("replanning loop", replanning_loop),
    ];
    let started = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = Duration::as_secs_f64(&t.elapsed());
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", criteria.len() - failed, started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
