//! Route B: matching size as half the rank of a weighted Tutte matrix mod p.
//!
//! `B[u][v] = 2^{w(u, v)}` and `B[v][u] = -2^{w(u, v)}` for `u < v`. Each
//! (candidate, prime) pair keeps its own [`AGoodState`]; an evaluation can
//! only lose rank, so the answer is the largest rank over all copies, halved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{next_graph, MatchConfig, MatchStats, MatchWeights, MATCH_SIZE_CAP};
use crate::dynrank::{AGoodState, EntryBatch};
use crate::error::{Error, Result};
use crate::field::{is_prime, mod_pow, FieldPrime};
use crate::graph::{EdgeBatch, Graph};

/// Fixed primes used alongside one seeded random prime.
pub const DEFAULT_PRIME_POOL: [u64; 3] = [1_000_003, 999_983, 65_537];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankAnswer {
    pub size: usize,
    pub rank: usize,
    pub candidate: usize,
    pub prime: u64,
    /// The largest rank was odd (a sign of an unlucky prime or candidate).
    pub odd: bool,
}

#[derive(Debug, Clone)]
pub struct TutteRankState {
    g: Graph,
    cfg: MatchConfig,
    w: MatchWeights,
    primes: Vec<FieldPrime>,
    /// `copies[candidate][prime]`.
    copies: Vec<Vec<AGoodState>>,
    stats: MatchStats,
}

/// Random prime in `[2^61, 2^62)`.
pub fn random_word_prime(seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let c = rng.gen_range(1u64 << 61..1u64 << 62) | 1;
        if is_prime(c) {
            return c;
        }
    }
}

impl TutteRankState {
    pub fn build(g: &Graph, cfg: MatchConfig) -> Result<Self> {
        if g.n() > MATCH_SIZE_CAP {
            return Err(Error::Parameter(format!("{} vertices above cap {MATCH_SIZE_CAP}", g.n())));
        }
        if cfg.epoch_len == 0 {
            return Err(Error::Parameter("epoch length must be positive".into()));
        }
        next_graph(g, &EdgeBatch::default())?;
        let pool = if cfg.primes.is_empty() {
            let mut p = DEFAULT_PRIME_POOL.to_vec();
            p.push(random_word_prime(cfg.seed));
            p
        } else {
            cfg.primes.clone()
        };
        let primes = pool.into_iter().map(FieldPrime::new).collect::<Result<Vec<_>>>()?;
        let w = MatchWeights::build(g, &cfg, 1, cfg.new_allowance)?;
        let mut st = TutteRankState { g: g.clone(), cfg, w, primes, copies: Vec::new(), stats: MatchStats::default() };
        st.init_copies()?;
        Ok(st)
    }

    pub fn graph(&self) -> &Graph {
        &self.g
    }

    pub fn weights(&self) -> &MatchWeights {
        &self.w
    }

    pub fn stats(&self) -> &MatchStats {
        &self.stats
    }

    pub fn primes(&self) -> Vec<u64> {
        self.primes.iter().map(|p| p.get()).collect()
    }

    pub fn copy(&self, cand: usize, prime: usize) -> &AGoodState {
        &self.copies[cand][prime]
    }

    pub fn copy_count(&self) -> usize {
        self.copies.iter().map(Vec::len).sum()
    }

    /// Entry `(u, v)` of the weighted Tutte matrix (u < v positive, skew below).
    fn entry(&self, cand: usize, p: FieldPrime, u: usize, v: usize) -> u64 {
        let x = mod_pow(2, self.w.weight(cand, u, v), p);
        if u < v {
            x
        } else {
            p.neg(x)
        }
    }

    /// The weighted Tutte matrix of candidate `cand` mod `p`, built from scratch.
    pub fn tutte_matrix(&self, cand: usize, p: FieldPrime) -> Vec<Vec<u64>> {
        let n = self.g.n();
        let mut a = vec![vec![0u64; n]; n];
        for (u, v, _) in self.g.edges() {
            a[u][v] = self.entry(cand, p, u, v);
            a[v][u] = self.entry(cand, p, v, u);
        }
        a
    }

    fn init_copies(&mut self) -> Result<()> {
        let mut copies = Vec::with_capacity(self.w.candidates());
        for c in 0..self.w.candidates() {
            let row = self
                .primes
                .iter()
                .map(|&p| AGoodState::init(&self.tutte_matrix(c, p), p).map(|s| s.with_cap(self.cfg.rank_cap)))
                .collect::<Result<Vec<_>>>()?;
            copies.push(row);
        }
        self.copies = copies;
        self.stats.rebuilds += 1;
        self.stats.max_bound = self.stats.max_bound.max(self.w.bound());
        Ok(())
    }

    fn rebuild(&mut self) -> Result<()> {
        self.w = MatchWeights::build(&self.g, &self.cfg, self.w.epoch + 1, self.cfg.new_allowance)?;
        self.init_copies()
    }

    pub fn apply_edge_batch_rank(&mut self, batch: &EdgeBatch) -> Result<()> {
        let next = next_graph(&self.g, batch)?;
        let forced = !self.w.fits(batch);
        if forced || self.w.age + 1 >= self.cfg.epoch_len {
            self.g = next;
            if forced {
                self.stats.forced_rebuilds += 1;
            }
            return self.rebuild();
        }
        for &(a, b) in &batch.del {
            self.w.release(a, b);
        }
        self.g = next;
        for &(a, b, _) in &batch.ins {
            self.w.claim(a, b);
        }
        for c in 0..self.copies.len() {
            for pi in 0..self.primes.len() {
                let p = self.primes[pi];
                let mut updates = Vec::new();
                for &(a, b) in &batch.del {
                    updates.push((a, b, 0));
                    updates.push((b, a, 0));
                }
                for &(a, b, _) in &batch.ins {
                    updates.push((a, b, self.entry(c, p, a, b)));
                    updates.push((b, a, self.entry(c, p, b, a)));
                }
                self.copies[c][pi].apply_entry_batch(&EntryBatch { updates })?;
            }
        }
        self.w.age += 1;
        self.stats.dynamic_batches += 1;
        Ok(())
    }

    /// Forces an epoch rebuild on the current graph.
    pub fn force_rebuild(&mut self) -> Result<()> {
        self.stats.forced_rebuilds += 1;
        self.rebuild()
    }

    pub fn query_mcm_rank(&self) -> Result<RankAnswer> {
        let mut best: Option<RankAnswer> = None;
        for (c, row) in self.copies.iter().enumerate() {
            for (pi, st) in row.iter().enumerate() {
                let r = st.rank();
                if best.is_none_or(|b| r > b.rank) {
                    best = Some(RankAnswer { size: r / 2, rank: r, candidate: c, prime: self.primes[pi].get(), odd: r % 2 == 1 });
                }
            }
        }
        let best = best.ok_or_else(|| Error::Invariant("no rank copies".into()))?;
        if best.odd {
            log::warn!("odd rank {} from candidate {} mod {}", best.rank, best.candidate, best.prime);
        }
        Ok(best)
    }

    /// Skew-symmetry of every maintained matrix and the A-good invariants of every copy.
    pub fn check_invariants(&self) -> Result<()> {
        for (c, row) in self.copies.iter().enumerate() {
            for (pi, st) in row.iter().enumerate() {
                let p = self.primes[pi];
                let a = st.matrix();
                for (i, ai) in a.iter().enumerate() {
                    for (j, &x) in ai.iter().enumerate() {
                        if p.add(x, a[j][i]) != 0 {
                            return Err(Error::Invariant(format!("copy ({c}, {}) not skew at ({i},{j})", p.get())));
                        }
                    }
                }
                if a != self.tutte_matrix(c, p).as_slice() {
                    return Err(Error::Invariant(format!("copy ({c}, {}) differs from the graph", p.get())));
                }
                st.check_invariants()?;
            }
        }
        Ok(())
    }
}
