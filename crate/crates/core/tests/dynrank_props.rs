use dyniso_core::dynrank::{AGoodState, EntryBatch};
use dyniso_core::field::FieldPrime;
use dyniso_core::oracles::{oracle_rank, RankModulus};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn oracle(a: &[Vec<u64>], p: FieldPrime) -> usize {
    let a: Vec<Vec<i64>> = a.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
    oracle_rank(&a, RankModulus::Prime(p)).unwrap()
}

/// Sparse-ish random entry values so that rank moves in both directions.
fn random_batch(rng: &mut impl Rng, n: usize, p: u64, k: usize) -> Vec<(usize, usize, u64)> {
    (0..rng.gen_range(1..=k))
        .map(|_| {
            let v = if rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..p) };
            (rng.gen_range(0..n), rng.gen_range(0..n), v)
        })
        .collect()
}

#[test]
fn long_runs_keep_a_good_invariants() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut widest = 0;
    let mut gained = 0;
    for &p in &[5u64, 97, 1009] {
        let fp = FieldPrime::new(p).unwrap();
        for &n in &[4usize, 9, 16] {
            let mut a = vec![vec![0u64; n]; n];
            let mut s = AGoodState::init(&a, fp).unwrap();
            for _ in 0..400 {
                let updates = random_batch(&mut rng, n, p, 4);
                for &(i, j, v) in &updates {
                    a[i][j] = v;
                }
                s.apply_entry_batch(&EntryBatch { updates }).unwrap();
                s.check_invariants().unwrap();
                assert_eq!(s.rank(), oracle(&a, fp));
                widest = widest.max(s.stats().max_phase_column);
                gained += s.stats().pc_terms.gained;
            }
        }
    }
    // every column of D1, E1, D2, E2 has at most k + 1 nonzeros
    assert!(widest <= 4 + 1, "phase column with {widest} nonzeros");
    eprintln!("widest phase column {widest}, pc gained outside R1/R2: {gained}");
}

#[test]
fn reverting_a_batch_restores_rank() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let fp = FieldPrime::new(97).unwrap();
    let n = 8;
    let mut a: Vec<Vec<u64>> = (0..n).map(|_| (0..n).map(|_| if rng.gen_bool(0.3) { rng.gen_range(1..97) } else { 0 }).collect()).collect();
    let mut s = AGoodState::init(&a, fp).unwrap();
    for _ in 0..100 {
        let before = s.rank();
        let updates = random_batch(&mut rng, n, 97, 3);
        let undo: Vec<(usize, usize, u64)> = updates.iter().rev().map(|&(i, j, _)| (i, j, a[i][j])).collect();
        s.apply_entry_batch(&EntryBatch { updates: updates.clone() }).unwrap();
        s.apply_entry_batch(&EntryBatch { updates: undo }).unwrap();
        assert_eq!(s.rank(), before);
        s.check_invariants().unwrap();
        for &(i, j, v) in &updates {
            a[i][j] = v;
        }
        s.apply_entry_batch(&EntryBatch { updates }).unwrap();
        assert_eq!(s.rank(), oracle(&a, fp));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn init_matches_elimination(
        n in 1usize..10,
        seed in any::<u64>(),
        p in prop::sample::select(vec![2u64, 5, 97, 1009]),
    ) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let fp = FieldPrime::new(p).unwrap();
        let a: Vec<Vec<u64>> = (0..n).map(|_| (0..n).map(|_| if rng.gen_bool(0.5) { rng.gen_range(0..p) } else { 0 }).collect()).collect();
        let s = AGoodState::init(&a, fp).unwrap();
        s.check_invariants().unwrap();
        prop_assert_eq!(s.rank(), oracle(&a, fp));
    }

    #[test]
    fn batches_preserve_invariants(seed in any::<u64>(), n in 2usize..12, k in 1usize..5) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let fp = FieldPrime::new(7).unwrap();
        let mut a = vec![vec![0u64; n]; n];
        let mut s = AGoodState::init(&a, fp).unwrap();
        for _ in 0..30 {
            let updates = random_batch(&mut rng, n, 7, k);
            for &(i, j, v) in &updates {
                a[i][j] = v;
            }
            s.apply_entry_batch(&EntryBatch { updates }).unwrap();
            prop_assert!(s.check_invariants().is_ok());
            prop_assert_eq!(s.rank(), oracle(&a, fp));
            prop_assert_eq!(s.rank(), s.rank_from_kernel());
        }
    }
}
