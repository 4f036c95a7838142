//! Bipartite maximum matching under edge batches.
//!
//! Route A ([`GenTutteState`]) maintains the inverse and determinant of a
//! series matrix whose determinant lists matchings by weight. Route B
//! ([`TutteRankState`]) maintains the rank of weighted Tutte matrices mod p.
//! Both draw edge weights from [`MatchWeights`]: a nonzero circulation on
//! the epoch's starting graph plus a residue family for edges inserted since.

mod det;
mod rank;

pub use det::{GenTutteState, MatchAnswer};
pub use rank::{RankAnswer, TutteRankState, DEFAULT_PRIME_POOL};

use std::collections::BTreeSet;

use serde::Serialize;

use crate::dynrank::DEFAULT_RANK_BATCH_CAP;
use crate::error::{Error, Result};
use crate::field::PrimeTuple;
use crate::graph::{bipartition, EdgeBatch, Graph};
use crate::isoweights::{
    circulation_search_growing, fgt_weight_family, pow2_above, undirected_support, SkewWeights, DEFAULT_ATTEMPTS,
    DEFAULT_MAX_TUPLES,
};

/// Largest vertex count accepted by the matching engines.
pub const MATCH_SIZE_CAP: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchConfig {
    pub seed: u64,
    pub epoch_len: usize,
    pub max_candidates: usize,
    /// New-edge slots per epoch.
    pub new_allowance: usize,
    pub prime_bits: u32,
    /// Largest truncation degree for route A.
    pub degree_cap: usize,
    /// Rows or columns one series update may touch.
    pub batch_cap: usize,
    /// Distinct rows per rank sub-batch.
    pub rank_cap: usize,
    /// Primes for route B; empty means [`DEFAULT_PRIME_POOL`] plus a seeded random prime.
    pub primes: Vec<u64>,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            seed: 0,
            epoch_len: 8,
            max_candidates: DEFAULT_MAX_TUPLES,
            new_allowance: 1,
            prime_bits: 3,
            degree_cap: 1 << 20,
            batch_cap: 16,
            rank_cap: DEFAULT_RANK_BATCH_CAP,
            primes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MatchStats {
    pub rebuilds: usize,
    pub forced_rebuilds: usize,
    pub dynamic_batches: usize,
    pub max_m: usize,
    pub max_bound: i64,
}

/// Edge weights for one epoch.
///
/// An edge of the starting graph weighs `U + u(l -> r)`, where `u` has nonzero
/// circulation and `l` is on the left side. An edge outside the starting
/// graph takes a slot `j` and weighs `shift * f_c(j)` in candidate `c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchWeights {
    pub epoch: u64,
    sides: Vec<bool>,
    u: SkewWeights,
    support: BTreeSet<(usize, usize)>,
    shift: u64,
    families: Vec<(Option<PrimeTuple>, Vec<u64>)>,
    slots: Vec<Option<(usize, usize)>>,
    pub age: usize,
}

impl MatchWeights {
    /// Weights for `g` with `allowance` new-edge slots.
    pub fn build(g: &Graph, cfg: &MatchConfig, epoch: u64, allowance: usize) -> Result<Self> {
        if g.directed() {
            return Err(Error::Parameter("matching needs an undirected graph".into()));
        }
        let pairs = undirected_support(g);
        let sides = bipartition(g.n(), &pairs)?;
        let seed = cfg.seed ^ epoch.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let u = circulation_search_growing(g, seed, DEFAULT_ATTEMPTS, 1 << 20)?;
        let span = (g.n() / 2).max(1) as u128;
        let shift = pow2_above(span * 2 * u.bound() as u128)?;
        let mut families = vec![(None, Vec::new())];
        if allowance > 0 {
            let mut bits = cfg.prime_bits;
            let fam = loop {
                match fgt_weight_family(allowance, bits, cfg.max_candidates) {
                    Err(Error::BudgetExhausted { .. }) if bits < 20 => bits += 1,
                    other => break other?,
                }
            };
            let mut seen = BTreeSet::new();
            families = fam
                .tuples
                .iter()
                .zip(&fam.weights)
                .filter(|(_, w)| seen.insert((*w).clone()))
                .map(|(t, w)| (Some(t.clone()), w.clone()))
                .collect();
        }
        Ok(MatchWeights {
            epoch,
            sides,
            u,
            support: pairs.into_iter().collect(),
            shift,
            families,
            slots: vec![None; allowance],
            age: 0,
        })
    }

    pub fn candidates(&self) -> usize {
        self.families.len()
    }

    pub fn tuple(&self, cand: usize) -> Option<&PrimeTuple> {
        self.families[cand].0.as_ref()
    }

    pub fn circulation(&self) -> &SkewWeights {
        &self.u
    }

    pub fn bound(&self) -> i64 {
        self.u.bound()
    }

    pub fn allowance(&self) -> usize {
        self.slots.len()
    }

    /// Weight of edge `{a, b}` (any order) in candidate `cand`.
    pub fn weight(&self, cand: usize, a: usize, b: usize) -> u64 {
        let key = (a.min(b), a.max(b));
        if let Some(j) = self.slots.iter().position(|s| *s == Some(key)) {
            return self.shift * self.families[cand].1[j];
        }
        let (l, r) = if self.sides[key.0] { (key.1, key.0) } else { key };
        (self.u.bound() + self.u.get(l, r)) as u64
    }

    /// Strict upper bound on the weight of any matching of at most `span` edges.
    pub fn sum_bound(&self, span: usize) -> u64 {
        let old = 2 * self.u.bound() as u64;
        let max_mid = self.families.iter().flat_map(|f| f.1.iter().copied()).max().unwrap_or(0);
        let new_edges = self.slots.len().min(span) as u64;
        span as u64 * old + new_edges * self.shift * max_mid + 1
    }

    /// True iff the batch fits the free slots.
    fn fits(&self, batch: &EdgeBatch) -> bool {
        let key = |u: usize, v: usize| (u.min(v), u.max(v));
        let dels: BTreeSet<(usize, usize)> = batch.del.iter().map(|&(u, v)| key(u, v)).collect();
        let free = self.slots.iter().filter(|s| s.is_none_or(|k| dels.contains(&k))).count();
        let need = batch.ins.iter().filter(|&&(u, v, _)| !self.support.contains(&key(u, v))).count();
        need <= free
    }

    fn release(&mut self, u: usize, v: usize) {
        let key = (u.min(v), u.max(v));
        if let Some(s) = self.slots.iter_mut().find(|s| **s == Some(key)) {
            *s = None;
        }
    }

    fn claim(&mut self, u: usize, v: usize) {
        let key = (u.min(v), u.max(v));
        if !self.support.contains(&key) {
            let free = self.slots.iter().position(|s| s.is_none()).expect("checked by fits");
            self.slots[free] = Some(key);
        }
    }
}

/// Validates a batch against `g` (atomic apply plus bipartiteness) and returns the new graph.
fn next_graph(g: &Graph, batch: &EdgeBatch) -> Result<Graph> {
    let mut next = g.clone();
    next.apply(batch)?;
    bipartition(next.n(), &undirected_support(&next))?;
    Ok(next)
}

/// Rows touched by a batch (both endpoints of every edge).
fn touched(batch: &EdgeBatch) -> usize {
    let set: BTreeSet<usize> =
        batch.ins.iter().flat_map(|e| [e.0, e.1]).chain(batch.del.iter().flat_map(|e| [e.0, e.1])).collect();
    set.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_follow_sides_and_slots() {
        let g = Graph::from_edges(4, false, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)]).unwrap();
        let cfg = MatchConfig::default();
        let mut w = MatchWeights::build(&g, &cfg, 1, 1).unwrap();
        let c = w.circulation().clone();
        // sides: 0, 2 left; 1, 3 right
        let alt = c.get(0, 1) - c.get(2, 1) + c.get(2, 3) - c.get(0, 3);
        assert_ne!(alt, 0);
        let wsum = |w: &MatchWeights, m: &[(usize, usize)]| m.iter().map(|&(a, b)| w.weight(0, a, b) as i64).sum::<i64>();
        assert_eq!(wsum(&w, &[(0, 1), (2, 3)]) - wsum(&w, &[(2, 1), (0, 3)]), alt);
        assert_eq!(w.candidates(), 2);
        let batch = EdgeBatch { ins: vec![(1, 4, 1)], del: vec![] };
        assert!(w.fits(&batch));
        w.claim(1, 4);
        let weights: BTreeSet<u64> = (0..2).map(|c| w.weight(c, 4, 1)).collect();
        assert_eq!(weights, BTreeSet::from([0, 2 * w.shift]));
        assert!(!w.fits(&EdgeBatch { ins: vec![(3, 4, 1)], del: vec![] }));
        assert!(w.fits(&EdgeBatch { ins: vec![(3, 4, 1)], del: vec![(1, 4)] }));
        assert!(w.fits(&EdgeBatch { ins: vec![(0, 1, 1)], del: vec![(0, 1)] }));
        assert!(w.sum_bound(2) > 2 * 2 * w.bound() as u64 + 2 * w.shift);
    }

    #[test]
    fn odd_cycle_rejected() {
        let g = Graph::from_edges(3, false, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        assert!(matches!(next_graph(&g, &EdgeBatch { ins: vec![(0, 2, 1)], del: vec![] }), Err(Error::NotBipartite(_))));
        assert!(MatchWeights::build(&Graph::new(2, true), &MatchConfig::default(), 1, 0).is_err());
    }
}
