//! Weight synthesis: skew-symmetric circulations, prime-residue weight
//! families for inserted edges, field concatenation, isolation checks.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{mod_pow, primes_up_to, FieldPrime, PrimeTuple};
use crate::graph::Graph;
use crate::oracles::{oracle_enumerate_pms, ENUM_ORACLE_CAP};

/// Default number of candidate tuples in a family.
pub const DEFAULT_MAX_TUPLES: usize = 256;
/// Default random draws per bound in [`circulation_search`].
pub const DEFAULT_ATTEMPTS: usize = 64;

/// Edge weights keyed by the graph's edge key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WeightAssignment {
    pub weights: BTreeMap<(usize, usize), u64>,
    pub max_weight: u64,
}

impl WeightAssignment {
    pub fn new(weights: BTreeMap<(usize, usize), u64>) -> Self {
        let max_weight = weights.values().copied().max().unwrap_or(0);
        WeightAssignment { weights, max_weight }
    }

    pub fn get(&self, key: (usize, usize)) -> u64 {
        self.weights.get(&key).copied().unwrap_or(0)
    }
}

/// Skew-symmetric weights on the pairs of an undirected support:
/// `w(u -> v) = -w(v -> u)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SkewWeights {
    /// Weight of the orientation `min -> max` for each unordered pair.
    forward: BTreeMap<(usize, usize), i64>,
    bound: i64,
}

impl SkewWeights {
    pub fn new() -> Self {
        SkewWeights::default()
    }

    /// Sets `w(u -> v) = x` (and so `w(v -> u) = -x`).
    pub fn set(&mut self, u: usize, v: usize, x: i64) {
        let (key, val) = if u < v { ((u, v), x) } else { ((v, u), -x) };
        self.forward.insert(key, val);
        self.bound = self.bound.max(x.abs());
    }

    /// `w(u -> v)`; zero for pairs outside the support.
    pub fn get(&self, u: usize, v: usize) -> i64 {
        if u < v {
            self.forward.get(&(u, v)).copied().unwrap_or(0)
        } else {
            -self.forward.get(&(v, u)).copied().unwrap_or(0)
        }
    }

    /// Largest absolute weight.
    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn restrict(&self, pairs: &[(usize, usize)]) -> SkewWeights {
        let mut out = SkewWeights::new();
        for &(u, v) in pairs {
            out.set(u, v, self.get(u, v));
        }
        out
    }
}

/// Unordered pairs `{u, v}` joined by at least one edge.
pub fn undirected_support(g: &Graph) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = g.edges().map(|(u, v, _)| (u.min(v), u.max(v))).collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Calls `visit` with the circulation of every simple cycle (length >= 3) of
/// the undirected support, each cycle once per direction. Stops early when
/// `visit` returns false.
fn for_each_cycle(n: usize, pairs: &[(usize, usize)], w: &SkewWeights, mut visit: impl FnMut(i64) -> bool) -> Result<bool> {
    if n > ENUM_ORACLE_CAP {
        return Err(Error::OracleScale { got: n, cap: ENUM_ORACLE_CAP });
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in pairs {
        adj[u].push(v);
        adj[v].push(u);
    }
    struct Walk<'a, F> {
        adj: &'a [Vec<usize>],
        w: &'a SkewWeights,
        on_path: Vec<bool>,
        visit: F,
    }
    impl<F: FnMut(i64) -> bool> Walk<'_, F> {
        // extends a path start -> ... -> u of `len` edges with circulation `sum`
        fn go(&mut self, start: usize, u: usize, len: usize, sum: i64) -> bool {
            for k in 0..self.adj[u].len() {
                let v = self.adj[u][k];
                if v == start && len >= 2 {
                    if !(self.visit)(sum + self.w.get(u, v)) {
                        return false;
                    }
                } else if v > start && !self.on_path[v] {
                    self.on_path[v] = true;
                    let ok = self.go(start, v, len + 1, sum + self.w.get(u, v));
                    self.on_path[v] = false;
                    if !ok {
                        return false;
                    }
                }
            }
            true
        }
    }
    let mut walk = Walk { adj: &adj, w, on_path: vec![false; n], visit: &mut visit };
    for s in 0..n {
        walk.on_path[s] = true;
        let ok = walk.go(s, s, 0, 0);
        walk.on_path[s] = false;
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff every simple cycle of the undirected support of `g` has nonzero
/// circulation under `w`. Cycles of length two (one pair traversed twice) are
/// not simple and are skipped.
pub fn verify_nonzero_circulation(g: &Graph, w: &SkewWeights) -> Result<bool> {
    for_each_cycle(g.n(), &undirected_support(g), w, |c| c != 0)
}

/// Number of simple cycles of the undirected support (each counted once).
pub fn count_cycles(g: &Graph) -> Result<usize> {
    let mut count = 0usize;
    for_each_cycle(g.n(), &undirected_support(g), &SkewWeights::new(), |_| {
        count += 1;
        true
    })?;
    Ok(count / 2)
}

/// Random skew weights in `[-bound, bound]`, redrawn until the circulation
/// check passes or `attempts` draws fail.
pub fn circulation_search(g: &Graph, bound: i64, seed: u64, attempts: usize) -> Result<SkewWeights> {
    let pairs = undirected_support(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts.max(1) {
        let mut w = SkewWeights::new();
        for &(u, v) in &pairs {
            w.set(u, v, rng.gen_range(-bound..=bound));
        }
        if verify_nonzero_circulation(g, &w)? {
            return Ok(w);
        }
    }
    Err(Error::SearchFailure { attempts: attempts.max(1), bound })
}

/// [`circulation_search`] with bounds 1, 2, 4, ... up to `max_bound`.
pub fn circulation_search_growing(g: &Graph, seed: u64, attempts: usize, max_bound: i64) -> Result<SkewWeights> {
    let mut bound = 1i64;
    loop {
        match circulation_search(g, bound, seed ^ (bound as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15), attempts) {
            Ok(w) => return Ok(w),
            Err(Error::SearchFailure { .. }) if bound < max_bound => bound *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// Candidate weights for the inserted edges `e_1..e_N`, one candidate per prime tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FgtFamily {
    pub num_new_edges: usize,
    pub tuples: Vec<PrimeTuple>,
    /// `weights[c][j - 1]` is the weight of `e_j` under candidate `c`.
    pub weights: Vec<Vec<u64>>,
    /// Per-field base `(largest pool prime) * N + 1`.
    pub field_base: u64,
    /// Strict upper bound on every candidate weight.
    pub weight_bound: u64,
}

/// Stage count `max(1, ceil(log2 N))`.
pub fn fgt_stages(n: usize) -> usize {
    if n <= 2 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Concatenated residues `<2^j mod p_1, ..., 2^j mod p_l>` for every tuple of
/// `l` distinct primes below `2^prime_bits`, tuples in lexicographic order.
pub fn fgt_weight_family(num_new_edges: usize, prime_bits: u32, max_tuples: usize) -> Result<FgtFamily> {
    if num_new_edges == 0 {
        return Err(Error::Parameter("weight family needs at least one new edge".into()));
    }
    if !(2..=20).contains(&prime_bits) {
        return Err(Error::Parameter(format!("prime_bits {prime_bits} outside 2..=20")));
    }
    let l = fgt_stages(num_new_edges);
    let pool = primes_up_to((1u64 << prime_bits) - 1)?;
    if pool.len() < l {
        return Err(Error::BudgetExhausted { bits: prime_bits });
    }
    let field_base = pool.last().unwrap() * num_new_edges as u64 + 1;
    let weight_bound = (field_base as u128).pow(l as u32);
    if weight_bound > 1u128 << 62 {
        return Err(Error::Magnitude(format!("{l} fields of base {field_base}")));
    }
    let mut tuples = Vec::new();
    let mut idx: Vec<usize> = (0..l).collect();
    while tuples.len() < max_tuples.max(1) {
        tuples.push(PrimeTuple::new(idx.iter().map(|&i| pool[i]).collect(), prime_bits)?);
        // next increasing combination
        let Some(pos) = (0..l).rev().find(|&i| idx[i] < pool.len() - l + i) else { break };
        idx[pos] += 1;
        for i in pos + 1..l {
            idx[i] = idx[i - 1] + 1;
        }
    }
    let weights = tuples
        .iter()
        .map(|t| {
            (1..=num_new_edges as u64)
                .map(|j| {
                    t.primes.iter().fold(0u64, |acc, &p| {
                        let r = mod_pow(2, j, FieldPrime::new(p).expect("pool prime"));
                        acc * field_base + r
                    })
                })
                .collect()
        })
        .collect();
    Ok(FgtFamily { num_new_edges, tuples, weights, field_base, weight_bound: weight_bound as u64 })
}

/// A family of full weight assignments with the tuple behind each one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightFamily {
    pub candidates: Vec<WeightAssignment>,
    pub provenance: Vec<Option<PrimeTuple>>,
}

impl WeightFamily {
    /// Binds an FGT family to concrete new edges (`new_edges[j - 1]` is `e_j`).
    pub fn from_fgt(fam: &FgtFamily, new_edges: &[(usize, usize)]) -> Result<Self> {
        if new_edges.len() > fam.num_new_edges {
            return Err(Error::Parameter(format!(
                "{} new edges for a family built for {}",
                new_edges.len(),
                fam.num_new_edges
            )));
        }
        let candidates = fam
            .weights
            .iter()
            .map(|ws| WeightAssignment::new(new_edges.iter().zip(ws).map(|(&e, &w)| (e, w)).collect()))
            .collect();
        Ok(WeightFamily { candidates, provenance: fam.tuples.iter().cloned().map(Some).collect() })
    }
}

/// Keeps old weights and scales every new-edge weight by `base`.
pub fn combine_with_base(old: &WeightAssignment, fam: &WeightFamily, base: u64) -> Result<WeightFamily> {
    if fam.candidates.is_empty() {
        return Ok(WeightFamily { candidates: vec![old.clone()], provenance: vec![None] });
    }
    let mut candidates = Vec::with_capacity(fam.candidates.len());
    for cand in &fam.candidates {
        let mut weights = old.weights.clone();
        for (&e, &w) in &cand.weights {
            if old.weights.contains_key(&e) {
                return Err(Error::Parameter(format!("edge {e:?} is both old and new")));
            }
            let scaled = (w as u128) * (base as u128);
            if scaled >= 1u128 << 63 {
                return Err(Error::Magnitude(format!("new weight {w} * {base}")));
            }
            weights.insert(e, scaled as u64);
        }
        candidates.push(WeightAssignment::new(weights));
    }
    Ok(WeightFamily { candidates, provenance: fam.provenance.clone() })
}

/// Smallest power of two strictly above `max_old * span`.
pub fn shift_base(max_old: u64, span: usize) -> Result<u64> {
    let need = (max_old as u128) * (span as u128);
    pow2_above(need)
}

/// Smallest power of two strictly above `x`.
pub fn pow2_above(x: u128) -> Result<u64> {
    let p = (x + 1).next_power_of_two();
    if p > 1u128 << 62 {
        return Err(Error::Magnitude(format!("base above {x}")));
    }
    Ok(p as u64)
}

/// [`combine_with_base`] with `B` the smallest power of two above
/// `max old weight * span`, where `span` bounds how many old edges one
/// structure (path or matching) can use; `span = |E|` always suffices.
pub fn combine_with_old(old: &WeightAssignment, fam: &WeightFamily, span: usize) -> Result<WeightFamily> {
    combine_with_base(old, fam, shift_base(old.max_weight, span)?)
}

/// True iff the minimum-weight perfect matching of the bipartite `g` is unique
/// (vacuously true without perfect matchings).
pub fn verify_isolating_pm(g: &Graph, w: &WeightAssignment) -> Result<bool> {
    let pms = oracle_enumerate_pms(g, |u, v| w.get(g.key(u, v)) as i64)?;
    let Some(min) = pms.iter().map(|m| m.1).min() else { return Ok(true) };
    Ok(pms.iter().filter(|m| m.1 == min).count() == 1)
}

/// Index of the first isolating candidate.
pub fn select_isolating(g: &Graph, fam: &WeightFamily) -> Result<usize> {
    for (i, c) in fam.candidates.iter().enumerate() {
        if verify_isolating_pm(g, c)? {
            return Ok(i);
        }
    }
    Err(Error::FamilyFailure)
}

/// Mixed-radix concatenation `<w_1, ..., w_k>`: the value is
/// `((w_1 * R_2 + w_2) * R_3 + ...) * R_k + w_k`. Field `i > 1` must stay below `R_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConcatWeights {
    /// `radices[i]` is the base of field `i + 1`; `radices[0]` is unused (top field).
    pub radices: Vec<u64>,
}

impl ConcatWeights {
    pub fn new(radices: Vec<u64>) -> Self {
        ConcatWeights { radices }
    }

    /// Uniform base `B` over `k` fields.
    pub fn uniform(k: usize, base: u64) -> Self {
        ConcatWeights { radices: vec![base; k] }
    }

    pub fn fields(&self) -> usize {
        self.radices.len()
    }

    pub fn encode(&self, fields: &[u64]) -> Result<u64> {
        if fields.len() != self.radices.len() {
            return Err(Error::Dimension(format!("{} fields for a {}-field layout", fields.len(), self.radices.len())));
        }
        let mut acc: u128 = 0;
        for (i, (&f, &r)) in fields.iter().zip(&self.radices).enumerate() {
            if i > 0 && f >= r {
                return Err(Error::Magnitude(format!("field {i} value {f} exceeds base {r}")));
            }
            acc = if i == 0 { f as u128 } else { acc * r as u128 + f as u128 };
            if acc >= 1u128 << 63 {
                return Err(Error::Magnitude("concatenated weight above 2^63".into()));
            }
        }
        Ok(acc as u64)
    }

    /// Splits a value (or a sum of encoded values without carries) back into fields.
    pub fn decode(&self, value: u64) -> Vec<u64> {
        let mut out = vec![0u64; self.radices.len()];
        let mut v = value;
        for i in (1..self.radices.len()).rev() {
            out[i] = v % self.radices[i];
            v /= self.radices[i];
        }
        if !out.is_empty() {
            out[0] = v;
        }
        out
    }

    /// Weight of one unit of the top field.
    pub fn top_unit(&self) -> u64 {
        self.radices[1..].iter().product()
    }
}

/// Field layout for distances: `<length, family weight, c + u>`.
///
/// The low field is `c + u(e)` with `c = n * U + 1` for old edges and `c` for
/// new ones, so on equal-length paths edge count dominates circulation.
/// Bases exceed the largest field sum over one simple path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistanceLayout {
    pub concat: ConcatWeights,
    pub offset: u64,
    pub circulation_bound: u64,
    pub max_len: u64,
    pub max_mid: u64,
    /// Truncation degree: `(n - 1)` times the largest edge weight.
    pub m: usize,
}

impl DistanceLayout {
    /// `new_allowance` is the number of new edges the epoch may add (0 disables the middle field).
    pub fn new(n: usize, max_len: u64, circulation_bound: u64, max_mid: u64, new_allowance: usize) -> Result<Self> {
        let steps = n.saturating_sub(1).max(1) as u128;
        let offset = n as u64 * circulation_bound + 1;
        let low = pow2_above(steps * (offset + circulation_bound) as u128)?;
        let mid_span = (new_allowance.min(n.saturating_sub(1))) as u128;
        let mid = if new_allowance == 0 { 1 } else { pow2_above(mid_span * max_mid as u128)? };
        let concat = ConcatWeights::new(vec![0, mid, low]);
        let max_w = concat.encode(&[max_len, if new_allowance == 0 { 0 } else { max_mid }, offset + circulation_bound])?;
        let m = steps * max_w as u128;
        if m > 1 << 40 {
            return Err(Error::Magnitude(format!("truncation degree {m}")));
        }
        Ok(DistanceLayout { concat, offset, circulation_bound, max_len, max_mid, m: m as usize })
    }

    /// Weight of an old edge of length `len` with circulation value `u`.
    pub fn old_edge(&self, len: u64, u: i64) -> Result<u64> {
        if u.unsigned_abs() > self.circulation_bound {
            return Err(Error::Magnitude(format!("circulation value {u}")));
        }
        self.concat.encode(&[len, 0, (self.offset as i64 + u) as u64])
    }

    /// Weight of a new edge carrying family weight `mid`.
    pub fn new_edge(&self, len: u64, mid: u64) -> Result<u64> {
        self.concat.encode(&[len, mid, self.offset])
    }

    /// Length field of a path weight.
    pub fn decode_len(&self, weight: u64) -> u64 {
        weight / self.concat.top_unit()
    }
}

/// Per-candidate distance weights `<len, mid, c + u>` for every edge of `g`;
/// `new_edges[j - 1]` is `e_j` and takes the family weight, others take `u`.
pub fn distance_weights(
    g: &Graph,
    layout: &DistanceLayout,
    fam: &FgtFamily,
    new_edges: &[(usize, usize)],
    u: &SkewWeights,
) -> Result<Vec<WeightAssignment>> {
    let mut out = Vec::new();
    for cand in &fam.weights {
        let mut weights = BTreeMap::new();
        for (a, b, len) in g.edges() {
            let w = match new_edges.iter().position(|&e| e == (a, b)) {
                Some(j) => layout.new_edge(len, cand[j])?,
                None => layout.old_edge(len, u.get(a, b))?,
            };
            weights.insert((a, b), w);
        }
        out.push(WeightAssignment::new(weights));
    }
    Ok(out)
}
