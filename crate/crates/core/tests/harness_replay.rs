use dyniso_core::harness::{gen_scenario, parse_scenario, run_scenario, Mode, Report, RunOptions};
use proptest::prelude::*;

fn verified(kind: Mode, n: usize, batches: usize, k: usize, seed: u64) -> Report {
    let text = gen_scenario(kind, n, batches, k, seed).unwrap();
    let sc = parse_scenario(&text).unwrap();
    assert_eq!(sc.batches.len(), batches);
    run_scenario(&sc, kind, &RunOptions { verify: true, seed, ..RunOptions::default() }).unwrap()
}

fn without_timing(r: &Report) -> String {
    let mut r = r.clone();
    for rec in &mut r.records {
        rec.micros = 0;
    }
    r.summary.dynamic_micros = 0;
    r.to_jsonl()
}

#[test]
fn gen_examples() {
    let a = gen_scenario(Mode::Rank, 4, 10, 2, 7).unwrap();
    assert_eq!(parse_scenario(&a).unwrap().batches.len(), 10);
    assert_eq!(a, gen_scenario(Mode::Rank, 4, 10, 2, 7).unwrap());
    assert_ne!(a, gen_scenario(Mode::Rank, 4, 10, 2, 8).unwrap());
    assert!(gen_scenario(Mode::Reach, 1, 10, 2, 7).is_err());
    assert!(gen_scenario(Mode::Reach, 8, 10, 0, 7).is_err());
}

#[test]
fn random_rank_hundred_batches() {
    let r = verified(Mode::Rank, 12, 100, 4, 3);
    assert_eq!(r.summary.verified, 100);
    assert!(r.ok(), "{}", r.to_text());
}

#[test]
fn match_det_fifty_batches() {
    let r = verified(Mode::MatchDet, 8, 50, 3, 1);
    assert!(r.summary.verified > 50);
    assert!(r.ok(), "{}", r.to_text());
}

#[test]
fn default_matrix_is_clean() {
    for (i, kind) in Mode::ALL.into_iter().enumerate() {
        for n in [4, 7] {
            let r = verified(kind, n, 25, 3, 11 + i as u64);
            assert!(r.ok(), "{kind} n={n}\n{}", r.to_text());
            assert_eq!(r.summary.unverified, 0);
        }
    }
}

#[test]
fn reports_are_deterministic() {
    for kind in Mode::ALL {
        let a = verified(kind, 6, 15, 3, 21);
        let b = verified(kind, 6, 15, 3, 21);
        assert_eq!(without_timing(&a), without_timing(&b), "{kind}");
    }
}

#[test]
fn timing_reports_speedup() {
    let sc = parse_scenario(&gen_scenario(Mode::Rank, 32, 6, 4, 2).unwrap()).unwrap();
    let r = run_scenario(&sc, Mode::Rank, &RunOptions { timing: true, ..RunOptions::default() }).unwrap();
    assert!(r.summary.scratch_micros.is_some());
    assert!(r.summary.speedup.unwrap() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gen_round_trips(kind in 0usize..5, n in 2usize..20, batches in 0usize..12, k in 1usize..8, seed in any::<u64>()) {
        let kind = Mode::ALL[kind];
        let text = gen_scenario(kind, n, batches, k, seed).unwrap();
        let sc = parse_scenario(&text).unwrap();
        prop_assert_eq!(sc.batches.len(), batches);
        prop_assert!(sc.batches.iter().skip(1).all(|b| b.edits.len() <= k));
        prop_assert_eq!(text, gen_scenario(kind, n, batches, k, seed).unwrap());
    }
}
