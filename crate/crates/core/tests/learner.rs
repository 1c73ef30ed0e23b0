mod common;

use fflao::executor::EvalConfig;
use fflao::gen::{chain, triangle_tireworld, TIREWORLD_FLAT_DET};
use fflao::learner::{enumerate_determinizations, learning_det, ranks, select, LearnConfig, LearnError};
use fflao::oracle::{enumerate, value_iteration};
use fflao::Determinization;
use proptest::prelude::*;

fn cfg(rounds: usize, seed: u64) -> LearnConfig {
    LearnConfig { eval: EvalConfig { rounds, seed, ..Default::default() }, ..Default::default() }
}

#[test]
fn tireworld_has_two_candidates() {
    let p = common::load(&triangle_tireworld(1));
    let ds = enumerate_determinizations(&p.schemas, 4096).unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds[0], Determinization::parse(TIREWORLD_FLAT_DET).unwrap());
}

#[test]
fn deterministic_domain_has_one_empty_candidate() {
    let p = common::load(&chain(3));
    let ds = enumerate_determinizations(&p.schemas, 4096).unwrap();
    assert_eq!(ds, vec![Determinization::new()]);
}

#[test]
fn blowup_is_reported_not_truncated() {
    let p = common::load(&triangle_tireworld(1));
    let e = enumerate_determinizations(&p.schemas, 1).unwrap_err();
    assert_eq!((e.count, e.cap), (Some(2), 1));
    assert!(matches!(
        learning_det(&p, &LearnConfig { enumeration_cap: 1, ..cfg(5, 0) }),
        Err(LearnError::Enumeration(_))
    ));
}

#[test]
fn tireworld_learns_the_flat_determinization() {
    let p = common::load(&triangle_tireworld(1));
    let report = learning_det(&p, &cfg(50, 7)).unwrap();
    assert_eq!(report.selected_delta(), Determinization::parse(TIREWORLD_FLAT_DET).unwrap());
    let best = &report.candidates[report.selected];
    assert_eq!(best.rank, 1);
    assert_eq!(best.stats.success_probability, 1.0);
    assert!(report.candidates.iter().all(|c| c.stats.success_probability <= 1.0));
}

#[test]
fn equal_success_prefers_the_cheaper_candidate() {
    // Trying succeeds at 0.8 for 1.25 expected; walking costs 3.
    let (d, pr) = common::retry_or_walk("0.8", 3);
    let (_, p) = common::load_text(&d, &pr);
    let report = learning_det(&p, &cfg(400, 2)).unwrap();
    assert_eq!(report.candidates.len(), 2);
    assert!(report.candidates.iter().all(|c| c.stats.success_probability == 1.0));
    assert_eq!(report.candidates[0].stats.expected_cost, 3.0);
    assert_eq!(report.selected, 1);
    let em = enumerate(&p, 1000).unwrap();
    let vi = value_iteration(&em, 1e-12, 500.0);
    assert!((vi.values[em.initial] - 1.25).abs() < 1e-9);
    let c = &report.candidates[1].stats;
    assert!((c.expected_cost - 1.25).abs() <= 3.0 * c.cost_std_error);
}

#[test]
fn parallel_and_sequential_agree() {
    let p = common::load(&triangle_tireworld(1));
    let a = learning_det(&p, &cfg(20, 3)).unwrap();
    let b = learning_det(&p, &LearnConfig { parallel: false, ..cfg(20, 3) }).unwrap();
    assert_eq!(a, b);
}

#[test]
fn selection_rule_examples() {
    assert_eq!(select(&[]), None);
    assert_eq!(select(&[(0.9, 5.0), (1.0, 9.0), (1.0, 7.0)]), Some(2));
    assert_eq!(select(&[(1.0, 7.0), (1.0, 7.0)]), Some(0));
    assert_eq!(ranks(&[(0.9, 5.0), (1.0, 9.0), (1.0, 7.0)]), vec![3, 2, 1]);
}

proptest! {
    #[test]
    fn selected_row_dominates(rows in prop::collection::vec((0u8..=4, 0u8..=20), 1..12)) {
        let table: Vec<(f64, f64)> = rows.iter().map(|&(p, c)| (p as f64 / 4.0, c as f64)).collect();
        let i = select(&table).unwrap();
        for (j, &(p, c)) in table.iter().enumerate() {
            prop_assert!(p < table[i].0 || (p == table[i].0 && (c > table[i].1 || (c == table[i].1 && j >= i))));
        }
        let r = ranks(&table);
        prop_assert_eq!(r[i], 1);
        let mut sorted = r.clone();
        sorted.sort();
        prop_assert_eq!(sorted, (1..=table.len()).collect::<Vec<_>>());
    }
}
