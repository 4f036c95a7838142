//! Seeded scenario generator.

use std::collections::BTreeSet;
use std::fmt::Write;

use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{GRAPH_SIZE_CAP, MATRIX_SIZE_CAP, SCENARIO_BATCH_CAP};
use super::Mode;
use crate::error::{Error, Result};

/// Modulus of generated rank scenarios.
const GEN_PRIME: u64 = 1009;
const MAX_LEN: u64 = 4;

/// A scenario with `batches` batches; the first loads the initial instance
/// and each later one holds `batch_size` edits (fewer only when a graph has
/// no eligible pair left). Same arguments give the same bytes.
pub fn gen_scenario(kind: Mode, n: usize, batches: usize, batch_size: usize, seed: u64) -> Result<String> {
    let cap = if kind == Mode::Rank { MATRIX_SIZE_CAP } else { GRAPH_SIZE_CAP };
    if n < 2 || n > cap {
        return Err(Error::Parameter(format!("size {n} outside 2..={cap}")));
    }
    if batch_size == 0 || batch_size > SCENARIO_BATCH_CAP {
        return Err(Error::Parameter(format!("batch size {batch_size} outside 1..={SCENARIO_BATCH_CAP}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!("# {kind} scenario, seed {seed}\n");
    match kind {
        Mode::Rank => gen_rank(&mut out, &mut rng, n, batches, batch_size),
        _ => gen_graph(&mut out, &mut rng, kind, n, batches, batch_size),
    }
    Ok(out)
}

fn gen_rank(out: &mut String, rng: &mut ChaCha8Rng, n: usize, batches: usize, k: usize) {
    writeln!(out, "matrix {n} {GEN_PRIME}").unwrap();
    // sparse rows keep small matrices rank deficient often enough to matter
    let density = if n <= 16 { 0.3 } else { 0.5 };
    for b in 0..batches {
        out.push_str("batch\n");
        if b == 0 {
            for i in 1..=n {
                for j in 1..=n {
                    if rng.gen_bool(density) {
                        writeln!(out, "set {i} {j} {}", rng.gen_range(1..GEN_PRIME)).unwrap();
                    }
                }
            }
        } else {
            for _ in 0..k {
                let v = if rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..GEN_PRIME) };
                writeln!(out, "set {} {} {v}", rng.gen_range(1..=n), rng.gen_range(1..=n)).unwrap();
            }
        }
        out.push_str("q rank\n");
    }
}

fn gen_graph(out: &mut String, rng: &mut ChaCha8Rng, kind: Mode, n: usize, batches: usize, k: usize) {
    let matching = matches!(kind, Mode::MatchDet | Mode::MatchRank);
    let half = n / 2;
    let pairs: Vec<(usize, usize)> = if matching {
        (0..half).flat_map(|l| (half..n).map(move |r| (l, r))).collect()
    } else {
        (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))).collect()
    };
    let target = if matching { n } else { n * 3 / 2 };
    match kind {
        Mode::Dist => writeln!(out, "graph {n} directed weighted").unwrap(),
        Mode::Reach => writeln!(out, "graph {n} directed").unwrap(),
        _ => writeln!(out, "graph {n} undirected").unwrap(),
    }
    let mut present: BTreeSet<(usize, usize)> = BTreeSet::new();
    for b in 0..batches {
        out.push_str("batch\n");
        let mut touched = BTreeSet::new();
        let edits = if b == 0 { target } else { k };
        for _ in 0..edits {
            let p_del = if b == 0 { 0.0 } else { (present.len() as f64 / (2 * target) as f64).clamp(0.1, 0.9) };
            let del = rng.gen_bool(p_del);
            let pick = if del {
                present.iter().copied().filter(|e| !touched.contains(e)).choose(rng)
            } else {
                pairs.iter().copied().filter(|e| !present.contains(e) && !touched.contains(e)).choose(rng)
            };
            let Some((u, v)) = pick else { continue };
            touched.insert((u, v));
            if del {
                present.remove(&(u, v));
                writeln!(out, "del {} {}", u + 1, v + 1).unwrap();
            } else {
                present.insert((u, v));
                match kind {
                    Mode::Dist => writeln!(out, "ins {} {} {}", u + 1, v + 1, rng.gen_range(1..=MAX_LEN)).unwrap(),
                    _ => writeln!(out, "ins {} {}", u + 1, v + 1).unwrap(),
                }
            }
        }
        match kind {
            Mode::Reach | Mode::Dist => {
                for _ in 0..3 {
                    let (s, t) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
                    let q = if kind == Mode::Reach { "reach" } else if rng.gen_bool(0.25) { "path" } else { "dist" };
                    writeln!(out, "q {q} {s} {t}").unwrap();
                }
            }
            Mode::MatchDet => {
                out.push_str("q match\n");
                if b % 5 == 0 {
                    out.push_str("q witness\n");
                }
            }
            _ => out.push_str("q match\n"),
        }
    }
}
