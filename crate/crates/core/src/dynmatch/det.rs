//! Route A: matchings read off a determinant over GF(2)[[y]].
//!
//! Pendant vertices are eliminated (their self-loop entry is 1) and row and
//! column `v` are rescaled by `y^{a_v}`, where `a_v` is the pendant weight of
//! `v`. What remains is `S = I + N` on the real vertices with
//! `N[u][v] = y^{a_u + a_v - w(u, v)}`. In characteristic two only involutions
//! survive in `det S`, so `det S = sum over matchings M of y^{2 (sum a - W(M))}`
//! where `W(M)` is the weight of the generalized perfect matching that
//! completes `M` with pendant edges. The top degree of `det S` gives the
//! minimum `W`.
//!
//! Weights are concatenated fields `<w', w'', w'''>`: `w' = 1` on real and
//! pendant edges, `w''(v, t_v) = v`, and `w'''` comes from [`MatchWeights`].

use serde::Serialize;

use super::{next_graph, touched, MatchConfig, MatchStats, MatchWeights, MATCH_SIZE_CAP};
use crate::error::{Error, Result};
use crate::graph::{EdgeBatch, Graph};
use crate::isoweights::{pow2_above, ConcatWeights};
use crate::poly::{apply_change, decompose_change, det_ratio, series_inverse_monomial, PolyMatrix, TruncPoly};

#[derive(Debug, Clone)]
struct DetCandidate {
    c: PolyMatrix,
    d: TruncPoly,
}

/// Decoded matching answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchAnswer {
    pub size: usize,
    /// Minimum generalized perfect matching weight `W`.
    pub min_weight: u64,
    /// Sum of `w''` over unmatched vertices.
    pub pendant_sum: u64,
    /// Sum of `w'''` over matched edges.
    pub edge_sum: u64,
    pub candidate: usize,
}

#[derive(Debug, Clone)]
pub struct GenTutteState {
    g: Graph,
    cfg: MatchConfig,
    w: MatchWeights,
    concat: ConcatWeights,
    m: usize,
    cands: Vec<DetCandidate>,
    stats: MatchStats,
    /// Determinants checked for a unit constant term.
    pub det_checks: usize,
}

impl GenTutteState {
    pub fn build(g: &Graph, cfg: MatchConfig) -> Result<Self> {
        if g.n() > MATCH_SIZE_CAP {
            return Err(Error::Parameter(format!("{} vertices above cap {MATCH_SIZE_CAP}", g.n())));
        }
        if cfg.epoch_len == 0 {
            return Err(Error::Parameter("epoch length must be positive".into()));
        }
        next_graph(g, &EdgeBatch::default())?;
        let w = MatchWeights::build(g, &cfg, 1, 0)?;
        let mut st = GenTutteState {
            g: g.clone(),
            cfg,
            w,
            concat: ConcatWeights::new(vec![0, 1, 1]),
            m: 0,
            cands: Vec::new(),
            stats: MatchStats::default(),
            det_checks: 0,
        };
        st.rebuild(1)?;
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

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn layout(&self) -> &ConcatWeights {
        &self.concat
    }

    pub fn candidates(&self) -> usize {
        self.cands.len()
    }

    /// Maintained determinant of candidate `cand`.
    pub fn det(&self, cand: usize) -> &TruncPoly {
        &self.cands[cand].d
    }

    /// Pendant weight `a_v = <1, v, 0>`.
    pub fn pendant_weight(&self, v: usize) -> u64 {
        self.concat.top_unit() + v as u64 * self.concat.radices[2]
    }

    /// Edge weight `<1, 0, w'''>` in candidate `cand`.
    pub fn edge_weight(&self, cand: usize, a: usize, b: usize) -> u64 {
        self.concat.top_unit() + self.w.weight(cand, a, b)
    }

    fn exponent(&self, cand: usize, a: usize, b: usize) -> usize {
        (self.pendant_weight(a) + self.pendant_weight(b) - self.edge_weight(cand, a, b)) as usize
    }

    fn pendant_total(&self) -> u64 {
        (0..self.g.n()).map(|v| self.pendant_weight(v)).sum()
    }

    /// `S = I + N` for candidate `cand`, built from scratch.
    pub fn series_matrix(&self, cand: usize) -> PolyMatrix {
        let n = self.g.n();
        let mut s = PolyMatrix::identity(n, self.m);
        for (a, b, _) in self.g.edges() {
            let e = self.exponent(cand, a, b);
            s.set(a, b, TruncPoly::monomial(e, self.m));
            s.set(b, a, TruncPoly::monomial(e, self.m));
        }
        s
    }

    fn layout_for(&mut self, allowance: usize) -> Result<()> {
        let n = self.g.n();
        let span = (n / 2).max(1);
        let epoch = self.w.epoch;
        self.w = MatchWeights::build(&self.g, &self.cfg, epoch, allowance)?;
        let r3 = pow2_above(self.w.sum_bound(span) as u128)?;
        let r2 = pow2_above((n * n.saturating_sub(1) / 2) as u128)?;
        self.concat = ConcatWeights::new(vec![0, r2, r3]);
        let max_exp = (self.concat.top_unit() as u128) + (2 * n.saturating_sub(1)) as u128 * r3 as u128;
        let m = 2 * span as u128 * max_exp;
        if m > self.cfg.degree_cap as u128 {
            return Err(Error::Magnitude(format!("truncation degree {m} above cap {}", self.cfg.degree_cap)));
        }
        self.m = m as usize;
        Ok(())
    }

    fn rebuild(&mut self, epoch: u64) -> Result<()> {
        self.w.epoch = epoch;
        if let Err(e) = self.layout_for(self.cfg.new_allowance) {
            if self.cfg.new_allowance == 0 {
                return Err(e);
            }
            self.layout_for(0)?;
        }
        let n = self.g.n();
        let mut entries = Vec::new();
        for (a, b, _) in self.g.edges() {
            let e = self.exponent(0, a, b);
            entries.push((a, b, e));
            entries.push((b, a, e));
        }
        let c = series_inverse_monomial(n, self.m, &entries)?;
        let d = self.series_matrix(0).det()?;
        self.cands = vec![DetCandidate { c, d }; self.w.candidates()];
        self.stats.rebuilds += 1;
        self.stats.max_m = self.stats.max_m.max(self.m);
        self.stats.max_bound = self.stats.max_bound.max(self.w.bound());
        self.check_dets()
    }

    fn check_dets(&mut self) -> Result<()> {
        for (i, c) in self.cands.iter().enumerate() {
            self.det_checks += 1;
            if !c.d.constant() {
                return Err(Error::Invariant(format!("determinant of candidate {i} lost its unit constant term")));
            }
        }
        Ok(())
    }

    /// Applies an atomic batch; rebuilds at the end of an epoch or when the
    /// batch does not fit.
    pub fn apply_edge_batch_det(&mut self, batch: &EdgeBatch) -> Result<()> {
        let next = next_graph(&self.g, batch)?;
        let forced = !self.w.fits(batch) || touched(batch) > self.cfg.batch_cap;
        if forced || self.w.age + 1 >= self.cfg.epoch_len {
            self.g = next;
            if forced {
                self.stats.forced_rebuilds += 1;
            }
            return self.rebuild(self.w.epoch + 1);
        }
        let m = self.m;
        let k = self.cands.len();
        let mut deltas: Vec<Vec<(usize, usize, TruncPoly)>> = vec![Vec::new(); k];
        let push = |st: &Self, deltas: &mut Vec<Vec<(usize, usize, TruncPoly)>>, a: usize, b: usize| {
            for (ci, d) in deltas.iter_mut().enumerate() {
                let e = st.exponent(ci, a, b);
                d.push((a, b, TruncPoly::monomial(e, m)));
                d.push((b, a, TruncPoly::monomial(e, m)));
            }
        };
        for &(a, b) in &batch.del {
            push(self, &mut deltas, a, b);
        }
        for &(a, b) in &batch.del {
            self.w.release(a, b);
        }
        self.g = next;
        for &(a, b, _) in &batch.ins {
            self.w.claim(a, b);
            push(self, &mut deltas, a, b);
        }
        let n = self.g.n();
        for (cand, delta) in self.cands.iter_mut().zip(&deltas) {
            let chg = decompose_change(delta, n, m, self.cfg.batch_cap)?;
            apply_change(&mut cand.c, &mut cand.d, &chg)?;
        }
        self.w.age += 1;
        self.stats.dynamic_batches += 1;
        self.check_dets()
    }

    /// Forces an epoch rebuild on the current graph.
    pub fn force_rebuild(&mut self) -> Result<()> {
        self.stats.forced_rebuilds += 1;
        self.rebuild(self.w.epoch + 1)
    }

    fn decode(&self, cand: usize, d: &TruncPoly) -> Result<MatchAnswer> {
        let top = d.max_degree().ok_or_else(|| Error::Invariant(format!("zero determinant in candidate {cand}")))?;
        if top % 2 == 1 {
            return Err(Error::Invariant(format!("odd top degree {top} in candidate {cand}")));
        }
        let w_min = self.pendant_total() - (top / 2) as u64;
        let fields = self.concat.decode(w_min);
        let n = self.g.n();
        let unmatched_plus_size = fields[0] as usize;
        if unmatched_plus_size > n || 2 * unmatched_plus_size < n {
            return Err(Error::Invariant(format!("top field {unmatched_plus_size} impossible for {n} vertices")));
        }
        let size = n - unmatched_plus_size;
        Ok(MatchAnswer { size, min_weight: w_min, pendant_sum: fields[1], edge_sum: fields[2], candidate: cand })
    }

    /// Largest size over candidates, ties broken by smaller `W`.
    pub fn query_mcm(&self) -> Result<MatchAnswer> {
        let mut best: Option<MatchAnswer> = None;
        for (i, c) in self.cands.iter().enumerate() {
            let a = self.decode(i, &c.d)?;
            if best.is_none_or(|b| a.size > b.size || (a.size == b.size && a.min_weight < b.min_weight)) {
                best = Some(a);
            }
        }
        best.ok_or_else(|| Error::Invariant("no candidates".into()))
    }

    /// Edges of the isolated minimum-weight maximum matching.
    ///
    /// Each edge is probed by a temporary removal on the winning candidate;
    /// it is in the matching iff the top degree of the determinant changes.
    pub fn extract_matching(&self) -> Result<Vec<(usize, usize)>> {
        let ans = self.query_mcm()?;
        let ci = ans.candidate;
        let cand = &self.cands[ci];
        let top = cand.d.max_degree();
        let n = self.g.n();
        let mut out = Vec::new();
        for (a, b, _) in self.g.edges() {
            let e = self.exponent(ci, a, b);
            let delta = [(a, b, TruncPoly::monomial(e, self.m)), (b, a, TruncPoly::monomial(e, self.m))];
            let chg = decompose_change(&delta, n, self.m, self.cfg.batch_cap)?;
            let probed = cand.d.mul_trunc(&det_ratio(&cand.c, &chg)?)?;
            if probed.max_degree() != top {
                out.push((a, b));
            }
        }
        let mut used = vec![false; n];
        let disjoint = out.iter().all(|&(a, b)| !std::mem::replace(&mut used[a], true) && !std::mem::replace(&mut used[b], true));
        let weight: u64 = out.iter().map(|&(a, b)| self.edge_weight(ci, a, b)).sum::<u64>()
            + (0..n).filter(|&v| !used[v]).map(|v| self.pendant_weight(v)).sum::<u64>();
        if !disjoint || out.len() != ans.size || weight != ans.min_weight {
            return Err(Error::IsolationFailure {
                candidate: ci,
                detail: format!("probed edges {out:?} are not a matching of size {} and weight {}", ans.size, ans.min_weight),
            });
        }
        Ok(out)
    }

    /// Each candidate's `(C, d)` against `S` rebuilt from the graph.
    pub fn check_against_scratch(&self, inverse: impl Fn(&PolyMatrix) -> Result<PolyMatrix>) -> Result<()> {
        for (i, cand) in self.cands.iter().enumerate() {
            let s = self.series_matrix(i);
            if s.det()? != cand.d {
                return Err(Error::Invariant(format!("candidate {i}: maintained determinant differs")));
            }
            if inverse(&s)? != cand.c {
                return Err(Error::Invariant(format!("candidate {i}: maintained inverse differs")));
            }
        }
        Ok(())
    }
}
