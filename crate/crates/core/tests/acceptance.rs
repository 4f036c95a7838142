//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dyniso_core::dynmatch::{GenTutteState, MatchConfig, TutteRankState};
use dyniso_core::dynrank::{AGoodState, EntryBatch};
use dyniso_core::dynreach::{ReachConfig, ReachDistState};
use dyniso_core::field::FieldPrime;
use dyniso_core::graph::{EdgeBatch, Graph};
use dyniso_core::harness::{gen_scenario, parse_scenario, run_scenario, Mode, RunOptions};
use dyniso_core::isoweights::{
    circulation_search_growing, combine_with_old, count_cycles, fgt_weight_family, select_isolating,
    undirected_support, verify_isolating_pm, verify_nonzero_circulation, WeightAssignment, WeightFamily,
    DEFAULT_ATTEMPTS, DEFAULT_MAX_TUPLES,
};
use dyniso_core::oracles::{
    oracle_dist, oracle_mcm, oracle_rank, oracle_reach, oracle_series_det, oracle_series_inverse, RankModulus,
};
use dyniso_core::poly::{decompose_change, det_update, woodbury_update, PolyMatrix, TruncPoly, DEFAULT_BATCH_CAP};
use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rank_oracle(a: &[Vec<u64>], p: FieldPrime) -> usize {
    let a: Vec<Vec<i64>> = a.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
    oracle_rank(&a, RankModulus::Prime(p)).unwrap()
}

fn rank_vs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0;
    for n in [8usize, 16] {
        for p in [5u64, 97, 1009] {
            let fp = FieldPrime::new(p).map_err(e2s)?;
            let mut a: Vec<Vec<u64>> =
                (0..n).map(|_| (0..n).map(|_| if rng.gen_bool(0.3) { rng.gen_range(1..p) } else { 0 }).collect()).collect();
            let mut st = AGoodState::init(&a, fp).map_err(e2s)?;
            for step in 0..1000 {
                let updates: Vec<_> = (0..rng.gen_range(1..=4))
                    .map(|_| {
                        let v = if rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..p) };
                        (rng.gen_range(0..n), rng.gen_range(0..n), v)
                    })
                    .collect();
                for &(i, j, v) in &updates {
                    a[i][j] = v;
                }
                // the pc count formula is checked against a recount inside every update
                st.apply_entry_batch(&EntryBatch { updates }).map_err(|e| format!("n={n} p={p} step {step}: {e}"))?;
                st.check_invariants().map_err(|e| format!("n={n} p={p} step {step}: {e}"))?;
                let want = rank_oracle(&a, fp);
                ensure!(st.rank() == want, "n={n} p={p} step {step}: rank {} vs oracle {want}", st.rank());
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} batches"))
}

fn random_series(rng: &mut impl Rng, m: usize) -> TruncPoly {
    let degrees: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(1..=m)).collect();
    let mut p = TruncPoly::zero(m);
    for d in degrees {
        p.add_assign(&TruncPoly::monomial(d, m));
    }
    p
}

fn woodbury_vs_series() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut updates = 0;
    while updates < 500 {
        let n = rng.gen_range(2..=8);
        let m = rng.gen_range(4..=32);
        let mut a = PolyMatrix::zero(n, n, m);
        for i in 0..n {
            for j in 0..n {
                if rng.gen_bool(0.3) {
                    a.set(i, j, random_series(&mut rng, m));
                }
            }
        }
        let mut c = oracle_series_inverse(&a).map_err(e2s)?;
        let mut d = oracle_series_det(&PolyMatrix::identity(n, m).add(&a).map_err(e2s)?).map_err(e2s)?;
        for _ in 0..20 {
            let k = rng.gen_range(1..=3.min(n));
            let rows: Vec<usize> = (0..n).choose_multiple(&mut rng, k);
            let cols: Vec<usize> = (0..n).choose_multiple(&mut rng, k);
            let delta: Vec<_> = (0..rng.gen_range(1..=2 * k))
                .map(|_| (*rows.choose(&mut rng).unwrap(), *cols.choose(&mut rng).unwrap(), random_series(&mut rng, m)))
                .collect();
            let chg = decompose_change(&delta, n, m, DEFAULT_BATCH_CAP).map_err(e2s)?;
            let c2 = woodbury_update(&c, &chg).map_err(e2s)?;
            let d2 = det_update(&d, &c, &chg).map_err(e2s)?;
            for (r, col, v) in &delta {
                a.get_mut(*r, *col).add_assign(v);
            }
            let want_c = oracle_series_inverse(&a).map_err(e2s)?;
            let want_d = oracle_series_det(&PolyMatrix::identity(n, m).add(&a).map_err(e2s)?).map_err(e2s)?;
            ensure!(c2 == want_c, "update {updates} (n={n}, m={m}): inverse differs from the series sum");
            ensure!(d2 == want_d, "update {updates} (n={n}, m={m}): determinant {:?} vs {:?}", d2.degrees(), want_d.degrees());
            c = c2;
            d = d2;
            updates += 1;
        }
    }
    Ok(format!("{updates} chained updates"))
}

/// Up to `k` changes; deletion probability grows with the edge count around `target`.
fn random_batch(
    g: &Graph,
    rng: &mut impl Rng,
    k: usize,
    max_len: u64,
    target: usize,
    pair: impl Fn(&mut dyn rand::RngCore) -> (usize, usize),
) -> EdgeBatch {
    let mut batch = EdgeBatch::default();
    let mut next = g.clone();
    let mut touched = BTreeSet::new();
    for _ in 0..rng.gen_range(1..=k) {
        let present: Vec<_> = next.edges().map(|e| (e.0, e.1)).collect();
        let p_del = (present.len() as f64 / (2 * target) as f64).clamp(0.1, 0.9);
        let (u, v) = if !present.is_empty() && rng.gen_bool(p_del) {
            present[rng.gen_range(0..present.len())]
        } else {
            pair(rng)
        };
        if u == v || !touched.insert(g.key(u, v)) {
            continue;
        }
        if next.has_edge(u, v) {
            next.remove(u, v).unwrap();
            batch.del.push((u, v));
        } else {
            let len = rng.gen_range(1..=max_len);
            next.insert(u, v, len).unwrap();
            batch.ins.push((u, v, len));
        }
    }
    batch
}

fn distance_vs_dijkstra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut pairs = 0;
    for n in [4usize, 6, 8] {
        let cfg = ReachConfig { seed: n as u64, ..ReachConfig::default() };
        let mut st = ReachDistState::init(&Graph::new(n, true), cfg).map_err(e2s)?;
        for step in 0..300 {
            let b = random_batch(st.graph(), &mut rng, 3, 4, 3 * n / 2, |r| (r.gen_range(0..n), r.gen_range(0..n)));
            st.apply_edge_batch(&b).map_err(|e| format!("n={n} step {step}: {e}"))?;
            let g = st.graph();
            for s in 0..n {
                for t in 0..n {
                    let d = st.query_dist(s, t).map_err(e2s)?;
                    ensure!(d == oracle_dist(g, s, t), "n={n} step {step}: dist({s},{t}) {d:?} vs {:?}", oracle_dist(g, s, t));
                    let r = st.query_reach(s, t).map_err(e2s)?;
                    ensure!(r == oracle_reach(g, s, t), "n={n} step {step}: reach({s},{t}) {r}");
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("{pairs} pair checks over 900 batches"))
}

/// Runs both matching routes; returns (summary, determinant checks, zero determinants).
fn matching_runs() -> Result<(String, usize, usize), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut steps, mut det_checks, mut zero_dets) = (0, 0, 0);
    for half in [3usize, 4, 5, 6] {
        let cfg = MatchConfig { seed: half as u64, ..MatchConfig::default() };
        let g = Graph::new(2 * half, false);
        let mut det = GenTutteState::build(&g, cfg.clone()).map_err(e2s)?;
        let mut rank = TutteRankState::build(&g, cfg).map_err(e2s)?;
        for step in 0..300 {
            let b = random_batch(det.graph(), &mut rng, 3, 1, 3 * half / 2, |r| {
                (r.gen_range(0..half), r.gen_range(half..2 * half))
            });
            det.apply_edge_batch_det(&b).map_err(|e| format!("{half}+{half} step {step}: {e}"))?;
            rank.apply_edge_batch_rank(&b).map_err(|e| format!("{half}+{half} step {step}: {e}"))?;
            for c in 0..det.candidates() {
                det_checks += 1;
                if det.det(c).is_zero() {
                    zero_dets += 1;
                }
            }
            let g = det.graph();
            let want = oracle_mcm(g).map_err(e2s)?;
            let a = det.query_mcm().map_err(e2s)?.size;
            let r = rank.query_mcm_rank().map_err(e2s)?.size;
            ensure!(a == want && r == want, "{half}+{half} step {step}: det {a}, rank {r}, oracle {want}");
            let m = det.extract_matching().map_err(|e| format!("{half}+{half} step {step}: {e}"))?;
            let mut used = BTreeSet::new();
            let valid = m.iter().all(|&(u, v)| g.has_edge(u, v) && used.insert(u) && used.insert(v));
            ensure!(valid && m.len() == want, "{half}+{half} step {step}: witness {m:?} for size {want}");
            steps += 1;
        }
    }
    Ok((format!("{steps} batches, both routes and witnesses"), det_checks, zero_dets))
}

fn isolation_family() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let prime_bits = MatchConfig::default().prime_bits;
    let mut tuples = 0;
    for inst in 0..200 {
        let half = rng.gen_range(2..=6);
        let n = 2 * half;
        let mut right: Vec<usize> = (half..n).collect();
        right.shuffle(&mut rng);
        // a planted perfect matching keeps the instance non-vacuous
        let mut all: BTreeSet<(usize, usize)> = (0..half).map(|l| (l, right[l])).collect();
        for l in 0..half {
            for r in half..n {
                if rng.gen_bool(0.3) {
                    all.insert((l, r));
                }
            }
        }
        let k = rng.gen_range(1..=6.min(all.len()));
        let new: Vec<(usize, usize)> = all.iter().copied().choose_multiple(&mut rng, k);
        let old: Vec<(usize, usize, u64)> =
            all.iter().filter(|e| !new.contains(e)).map(|&(u, v)| (u, v, 1)).collect();
        let g_old = Graph::from_edges(n, false, &old).map_err(e2s)?;
        let full: Vec<_> = all.iter().map(|&(u, v)| (u, v, 1)).collect();
        let g = Graph::from_edges(n, false, &full).map_err(e2s)?;
        let u = circulation_search_growing(&g_old, inst, DEFAULT_ATTEMPTS, 1 << 20).map_err(e2s)?;
        let base = u.bound();
        let old_w = WeightAssignment::new(old.iter().map(|&(l, r, _)| ((l, r), (base + u.get(l, r)) as u64)).collect());
        let fam = fgt_weight_family(k, prime_bits, DEFAULT_MAX_TUPLES).map_err(e2s)?;
        let family = combine_with_old(&old_w, &WeightFamily::from_fgt(&fam, &new).map_err(e2s)?, half).map_err(e2s)?;
        tuples += family.candidates.len();
        for (c, cand) in family.candidates.iter().enumerate() {
            let same = old_w.weights.iter().all(|(e, w)| cand.weights.get(e) == Some(w));
            ensure!(same, "instance {inst}: candidate {c} changes an old weight");
        }
        let pick = select_isolating(&g, &family).map_err(|e| format!("instance {inst} ({half}+{half}, {k} new): {e}"))?;
        ensure!(verify_isolating_pm(&g, &family.candidates[pick]).map_err(e2s)?, "instance {inst}: re-check failed");
    }
    Ok(format!("200 instances, {tuples} candidates"))
}

fn deletion_closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut subsets = 0;
    let mut done = 0;
    while done < 50 {
        let n = rng.gen_range(4..=6);
        let m = rng.gen_range(4..=8);
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let edges: Vec<(usize, usize, u64)> =
            pairs.choose_multiple(&mut rng, m.min(pairs.len())).map(|&(u, v)| (u, v, 1)).collect();
        let g = Graph::from_edges(n, false, &edges).map_err(e2s)?;
        if count_cycles(&g).map_err(e2s)? == 0 {
            continue;
        }
        let w = circulation_search_growing(&g, done, DEFAULT_ATTEMPTS, 1 << 20).map_err(e2s)?;
        ensure!(verify_nonzero_circulation(&g, &w).map_err(e2s)?, "instance {done}: search returned a bad circulation");
        for mask in 0u32..1 << edges.len() {
            let kept: Vec<_> = edges.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e).collect();
            let sub = Graph::from_edges(n, false, &kept).map_err(e2s)?;
            let ws = w.restrict(&undirected_support(&sub));
            ensure!(verify_nonzero_circulation(&sub, &ws).map_err(e2s)?, "instance {done}: subset {mask:#b} has a zero cycle");
            subsets += 1;
        }
        done += 1;
    }
    Ok(format!("50 instances, {subsets} subgraphs"))
}

fn rank_speedup() -> Outcome {
    let text = gen_scenario(Mode::Rank, 256, 101, 4, 8).map_err(e2s)?;
    let sc = parse_scenario(&text).map_err(e2s)?;
    let sizes: BTreeMap<usize, usize> = sc.batches.iter().skip(1).fold(BTreeMap::new(), |mut acc, b| {
        *acc.entry(b.edits.len()).or_default() += 1;
        acc
    });
    ensure!(sizes.keys().eq([4].iter()), "batch sizes {sizes:?}");
    let r = run_scenario(&sc, Mode::Rank, &RunOptions { timing: true, ..RunOptions::default() }).map_err(e2s)?;
    ensure!(r.ok(), "errors in the timed run");
    let s = &r.summary;
    let x = s.speedup.unwrap_or(0.0);
    let detail = format!(
        "dynamic {:.3} ms/batch, from scratch {:.3} ms/batch, speedup {x:.1}x",
        s.dynamic_micros as f64 / 100e3,
        s.scratch_micros.unwrap_or(0) as f64 / 100e3
    );
    if x < 5.0 {
        return Err(detail);
    }
    Ok(detail)
}

struct Line {
    id: usize,
    name: &'static str,
    outcome: Outcome,
    elapsed: Duration,
    limit: Option<u64>,
}

fn timed(id: usize, name: &'static str, limit: Option<u64>, f: impl FnOnce() -> Outcome) -> Line {
    let t = Instant::now();
    let outcome = f();
    Line { id, name, outcome, elapsed: t.elapsed(), limit }
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut lines = vec![
        timed(1, "dynamic rank vs oracle", Some(30), rank_vs_oracle),
        timed(2, "woodbury and determinant vs series", Some(10), woodbury_vs_series),
        timed(3, "dynamic distance vs dijkstra", Some(60), distance_vs_dijkstra),
    ];
    let t = Instant::now();
    let runs = matching_runs();
    let elapsed = t.elapsed();
    let (m4, m7) = match runs {
        Ok((s, checks, zeros)) => (
            Ok(s),
            if zeros == 0 {
                Ok(format!("{checks} determinants, none zero"))
            } else {
                Err(format!("{zeros} of {checks} determinants zero"))
            },
        ),
        Err(e) => (Err(e.clone()), Err(format!("matching runs aborted: {e}"))),
    };
    lines.push(Line { id: 4, name: "matching, both routes, vs oracle", outcome: m4, elapsed, limit: Some(120) });
    lines.push(timed(5, "isolation family soundness", Some(30), isolation_family));
    lines.push(timed(6, "deletion closure of circulation", Some(10), deletion_closure));
    lines.push(Line { id: 7, name: "determinant never zero", outcome: m7, elapsed: Duration::ZERO, limit: None });
    lines.push(timed(8, "rank n=256 dynamic vs from scratch", None, rank_speedup));
    lines.sort_by_key(|l| l.id);

    let mut failed = 0;
    for l in &lines {
        let over = l.limit.is_some_and(|s| l.elapsed.as_secs_f64() > s as f64);
        let (tag, detail) = match (&l.outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over the {}s budget", l.limit.unwrap())),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("criterion {} {tag} [{:.2}s] {}: {detail}", l.id, l.elapsed.as_secs_f64(), l.name);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
