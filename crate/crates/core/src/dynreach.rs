//! Reachability and shortest distances under edge batches.
//!
//! Each candidate keeps `C = (I + A_w)^{-1}` over GF(2)[[x]] truncated at `m`,
//! where `A_w[u, v] = x^{w(u, v)}` and `w` is the field concatenation
//! `<length, family weight, c + u>`. A nonzero coefficient of `C[s, t]` at
//! degree `d` certifies an odd number of `s`-`t` walks of weight `d`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::PrimeTuple;
use crate::graph::{EdgeBatch, Graph};
use crate::isoweights::{
    circulation_search_growing, fgt_weight_family, undirected_support, DistanceLayout, SkewWeights, DEFAULT_ATTEMPTS,
    DEFAULT_MAX_TUPLES,
};
use crate::poly::{decompose_change, series_inverse_monomial, woodbury_entry, woodbury_in_place, PolyMatrix, TruncPoly};

/// Largest vertex count accepted by [`ReachDistState::init`].
pub const REACH_SIZE_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReachConfig {
    pub seed: u64,
    /// Batches per epoch before a rebuild.
    pub epoch_len: usize,
    pub max_candidates: usize,
    /// New-edge slots per epoch; more insertions force a rebuild.
    pub new_allowance: usize,
    /// Prime pool for the new-edge family is every prime below `2^prime_bits`.
    pub prime_bits: u32,
    /// Lengths above `max(len_bound, current max length)` force a rebuild.
    pub len_bound: u64,
    /// Largest truncation degree tolerated before the new-edge field is dropped.
    pub degree_cap: usize,
    /// Cap on rows or columns touched by one change.
    pub batch_cap: usize,
}

impl Default for ReachConfig {
    fn default() -> Self {
        ReachConfig {
            seed: 0,
            epoch_len: 8,
            max_candidates: DEFAULT_MAX_TUPLES,
            new_allowance: 2,
            prime_bits: 3,
            len_bound: 4,
            degree_cap: 1 << 22,
            batch_cap: 16,
        }
    }
}

/// One weight choice for the epoch's new-edge slots and its inverse.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub tuple: Option<PrimeTuple>,
    /// Family weight per slot.
    pub mids: Vec<u64>,
    pub c: PolyMatrix,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReachStats {
    pub rebuilds: usize,
    pub forced_rebuilds: usize,
    pub dynamic_batches: usize,
    /// Largest truncation degree and circulation bound over all epochs.
    pub max_m: usize,
    pub max_bound: i64,
}

#[derive(Debug, Clone)]
pub struct ReachDistState {
    g: Graph,
    cfg: ReachConfig,
    base_u: SkewWeights,
    support: BTreeSet<(usize, usize)>,
    layout: DistanceLayout,
    candidates: Vec<Candidate>,
    /// Slot -> edge key for edges outside the epoch's support.
    slots: Vec<Option<(usize, usize)>>,
    epoch: u64,
    epoch_age: usize,
    stats: ReachStats,
}

/// A query answer with the candidate that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DistAnswer {
    pub dist: Option<u64>,
    pub candidate: Option<usize>,
}

impl ReachDistState {
    pub fn init(g: &Graph, cfg: ReachConfig) -> Result<Self> {
        if g.n() > REACH_SIZE_CAP {
            return Err(Error::Parameter(format!("{} vertices above cap {REACH_SIZE_CAP}", g.n())));
        }
        if cfg.epoch_len == 0 || cfg.max_candidates == 0 {
            return Err(Error::Parameter("epoch length and candidate cap must be positive".into()));
        }
        let mut st = ReachDistState {
            g: g.clone(),
            cfg,
            base_u: SkewWeights::new(),
            support: BTreeSet::new(),
            layout: DistanceLayout::new(1, 1, 0, 0, 0)?,
            candidates: Vec::new(),
            slots: Vec::new(),
            epoch: 0,
            epoch_age: 0,
            stats: ReachStats::default(),
        };
        st.rebuild()?;
        st.stats.rebuilds = 1;
        Ok(st)
    }

    pub fn graph(&self) -> &Graph {
        &self.g
    }

    pub fn config(&self) -> &ReachConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &DistanceLayout {
        &self.layout
    }

    pub fn base_u(&self) -> &SkewWeights {
        &self.base_u
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn stats(&self) -> &ReachStats {
        &self.stats
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn m(&self) -> usize {
        self.layout.m
    }

    /// Arcs `(from, to, len)`; undirected edges give both orientations.
    fn arcs(g: &Graph) -> Vec<(usize, usize, u64)> {
        let mut out = Vec::new();
        for (a, b, len) in g.edges() {
            out.push((a, b, len));
            if !g.directed() {
                out.push((b, a, len));
            }
        }
        out
    }

    /// Combined weight of arc `from -> to` for candidate `cand`.
    pub fn arc_weight(&self, cand: usize, from: usize, to: usize, len: u64) -> Result<u64> {
        let key = self.g.key(from, to);
        match self.slots.iter().position(|s| *s == Some(key)) {
            Some(j) => self.layout.new_edge(len, self.candidates[cand].mids[j]),
            None => self.layout.old_edge(len, self.base_u.get(from, to)),
        }
    }

    /// `A_w` for candidate `cand` as a polynomial matrix.
    pub fn weighted_matrix(&self, cand: usize) -> Result<PolyMatrix> {
        let n = self.g.n();
        let m = self.layout.m;
        let mut a = PolyMatrix::zero(n, n, m);
        for (u, v, len) in Self::arcs(&self.g) {
            a.set(u, v, TruncPoly::monomial(self.arc_weight(cand, u, v, len)? as usize, m));
        }
        Ok(a)
    }

    fn rebuild(&mut self) -> Result<()> {
        self.epoch += 1;
        self.epoch_age = 0;
        self.stats.rebuilds += 1;
        let seed = self.cfg.seed ^ self.epoch.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let n = self.g.n();
        self.base_u = circulation_search_growing(&self.g, seed, DEFAULT_ATTEMPTS, 1 << 20)?;
        self.support = undirected_support(&self.g).into_iter().collect();
        let max_len = self.cfg.len_bound.max(self.g.max_len()).max(1);
        let bound = self.base_u.bound() as u64;

        let mut allowance = self.cfg.new_allowance;
        let mut families: Vec<(Option<PrimeTuple>, Vec<u64>)> = vec![(None, Vec::new())];
        if allowance > 0 {
            let mut bits = self.cfg.prime_bits;
            let fam = loop {
                match fgt_weight_family(allowance, bits, self.cfg.max_candidates) {
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
        let max_mid = families.iter().flat_map(|f| f.1.iter().copied()).max().unwrap_or(0);
        let layout = match DistanceLayout::new(n, max_len, bound, max_mid, allowance) {
            Ok(l) if l.m <= self.cfg.degree_cap => l,
            _ => {
                allowance = 0;
                families = vec![(None, Vec::new())];
                let l = DistanceLayout::new(n, max_len, bound, 0, 0)?;
                if l.m > self.cfg.degree_cap {
                    return Err(Error::Magnitude(format!("truncation degree {} above cap {}", l.m, self.cfg.degree_cap)));
                }
                l
            }
        };
        self.layout = layout;
        self.stats.max_m = self.stats.max_m.max(self.layout.m);
        self.stats.max_bound = self.stats.max_bound.max(self.base_u.bound());
        self.slots = vec![None; allowance];
        let mut entries = Vec::new();
        for (u, v, len) in Self::arcs(&self.g) {
            entries.push((u, v, self.layout.old_edge(len, self.base_u.get(u, v))? as usize));
        }
        let c = series_inverse_monomial(n, self.layout.m, &entries)?;
        self.candidates =
            families.into_iter().map(|(tuple, mids)| Candidate { tuple, mids, c: c.clone() }).collect();
        log::debug!(
            "reach epoch {}: m = {}, U = {}, {} candidates",
            self.epoch,
            self.layout.m,
            bound,
            self.candidates.len()
        );
        Ok(())
    }

    /// Applies an atomic batch. Rebuilds when the epoch is over or the
    /// batch does not fit the current layout.
    pub fn apply_edge_batch(&mut self, batch: &EdgeBatch) -> Result<()> {
        let mut next = self.g.clone();
        next.apply(batch)?;
        let forced = self.needs_rebuild(batch);
        if forced || self.epoch_age + 1 >= self.cfg.epoch_len {
            self.g = next;
            if forced {
                self.stats.forced_rebuilds += 1;
            }
            return self.rebuild();
        }
        let m = self.layout.m;
        let mut deltas: Vec<Vec<(usize, usize, TruncPoly)>> = vec![Vec::new(); self.candidates.len()];
        for &(u, v) in &batch.del {
            let len = self.g.len(u, v).expect("validated");
            for (ci, d) in deltas.iter_mut().enumerate() {
                for (a, b) in self.orientations(u, v) {
                    d.push((a, b, TruncPoly::monomial(self.arc_weight(ci, a, b, len)? as usize, m)));
                }
            }
        }
        for &(u, v) in &batch.del {
            let key = self.g.key(u, v);
            if let Some(s) = self.slots.iter_mut().find(|s| **s == Some(key)) {
                *s = None;
            }
        }
        self.g = next;
        for &(u, v, len) in &batch.ins {
            let key = self.g.key(u, v);
            if !self.support.contains(&(u.min(v), u.max(v))) {
                let free = self.slots.iter().position(|s| s.is_none()).expect("checked by needs_rebuild");
                self.slots[free] = Some(key);
            }
            for (ci, d) in deltas.iter_mut().enumerate() {
                for (a, b) in self.orientations(u, v) {
                    d.push((a, b, TruncPoly::monomial(self.arc_weight(ci, a, b, len)? as usize, m)));
                }
            }
        }
        let n = self.g.n();
        for (cand, delta) in self.candidates.iter_mut().zip(&deltas) {
            let chg = decompose_change(delta, n, m, self.cfg.batch_cap)?;
            woodbury_in_place(&mut cand.c, &chg)?;
        }
        self.epoch_age += 1;
        self.stats.dynamic_batches += 1;
        Ok(())
    }

    fn orientations(&self, u: usize, v: usize) -> Vec<(usize, usize)> {
        if self.g.directed() {
            vec![(u, v)]
        } else {
            vec![(u, v), (v, u)]
        }
    }

    fn needs_rebuild(&self, batch: &EdgeBatch) -> bool {
        let max_len = self.layout.max_len;
        if batch.ins.iter().any(|e| e.2 > max_len) {
            return true;
        }
        let arcs = if self.g.directed() { 1 } else { 2 };
        let touched: BTreeSet<usize> = batch.ins.iter().map(|e| e.0).chain(batch.del.iter().map(|e| e.0)).collect();
        let touched_cols: BTreeSet<usize> = batch.ins.iter().map(|e| e.1).chain(batch.del.iter().map(|e| e.1)).collect();
        if arcs * touched.len().max(touched_cols.len()) > self.cfg.batch_cap {
            return true;
        }
        let dels: BTreeSet<(usize, usize)> = batch.del.iter().map(|&(u, v)| self.g.key(u, v)).collect();
        let free_after_del =
            self.slots.iter().filter(|s| s.is_none_or(|k| dels.contains(&k))).count();
        let need = batch.ins.iter().filter(|&&(u, v, _)| !self.support.contains(&(u.min(v), u.max(v)))).count();
        need > free_after_del
    }

    /// Forces an epoch rebuild on the current graph.
    pub fn force_rebuild(&mut self) -> Result<()> {
        self.stats.forced_rebuilds += 1;
        self.rebuild()
    }

    pub fn query_reach(&self, s: usize, t: usize) -> Result<bool> {
        self.check_pair(s, t)?;
        Ok(self.candidates.iter().any(|c| !c.c.get(s, t).is_zero()))
    }

    pub fn query_dist(&self, s: usize, t: usize) -> Result<Option<u64>> {
        Ok(self.query_dist_detail(s, t)?.dist)
    }

    /// Distance with the first candidate attaining it.
    pub fn query_dist_detail(&self, s: usize, t: usize) -> Result<DistAnswer> {
        self.check_pair(s, t)?;
        let mut best = DistAnswer { dist: None, candidate: None };
        for (i, c) in self.candidates.iter().enumerate() {
            if let Some(deg) = c.c.get(s, t).min_degree() {
                let d = self.layout.decode_len(deg as u64);
                if best.dist.is_none_or(|b| d < b) {
                    best = DistAnswer { dist: Some(d), candidate: Some(i) };
                }
            }
        }
        Ok(best)
    }

    fn check_pair(&self, s: usize, t: usize) -> Result<()> {
        if s >= self.g.n() || t >= self.g.n() {
            return Err(Error::Parameter(format!("vertex pair ({s},{t}) outside 0..{}", self.g.n())));
        }
        Ok(())
    }

    /// Edges of the isolated shortest `s`-`t` path, in order from `s`.
    ///
    /// Each edge is probed by a temporary removal on the candidate attaining
    /// the distance; an edge lies on the path iff removing it changes the
    /// lowest degree of `C[s, t]`.
    pub fn extract_path(&self, s: usize, t: usize) -> Result<Vec<(usize, usize)>> {
        let ans = self.query_dist_detail(s, t)?;
        let (Some(dist), Some(ci)) = (ans.dist, ans.candidate) else {
            return Err(Error::NoPath(s, t));
        };
        if s == t {
            return Ok(Vec::new());
        }
        let cand = &self.candidates[ci];
        let base = cand.c.get(s, t).min_degree();
        let m = self.layout.m;
        let n = self.g.n();
        let mut on_path: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (a, b, len) in self.g.edges() {
            let mut delta = Vec::new();
            for (x, y) in self.orientations(a, b) {
                delta.push((x, y, TruncPoly::monomial(self.arc_weight(ci, x, y, len)? as usize, m)));
            }
            let chg = decompose_change(&delta, n, m, self.cfg.batch_cap)?;
            if woodbury_entry(&cand.c, &chg, s, t)?.min_degree() != base {
                on_path.insert((a, b), len);
            }
        }
        let fail = |on_path: &BTreeMap<(usize, usize), u64>| Error::IsolationFailure {
            candidate: ci,
            detail: format!("probed edges {:?} do not form an s-t path of length {dist}", on_path.keys()),
        };
        let mut left = on_path.clone();
        let mut path = Vec::new();
        let mut at = s;
        let mut total = 0u64;
        while at != t {
            let next = left.keys().copied().find(|&(a, b)| a == at || (!self.g.directed() && b == at));
            let Some(key) = next else { return Err(fail(&on_path)) };
            total += left.remove(&key).expect("present");
            let to = if key.0 == at { key.1 } else { key.0 };
            path.push((at, to));
            at = to;
        }
        if total != dist || !left.is_empty() {
            return Err(fail(&on_path));
        }
        Ok(path)
    }

    /// Each candidate's `C` against the series `sum A_w^i` computed independently.
    pub fn check_series(&self, oracle: impl Fn(&PolyMatrix) -> Result<PolyMatrix>) -> Result<()> {
        let n = self.g.n();
        for (ci, cand) in self.candidates.iter().enumerate() {
            let want = oracle(&self.weighted_matrix(ci)?)?;
            for i in 0..n {
                for j in 0..n {
                    if cand.c.get(i, j) != want.get(i, j) {
                        return Err(Error::Invariant(format!("candidate {ci} entry ({i},{j}) differs from the series")));
                    }
                }
            }
        }
        Ok(())
    }
}
