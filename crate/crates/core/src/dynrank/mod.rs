//! Rank of a square matrix mod `p` under batched entry changes, maintained
//! through an A-good basis.
//!
//! The state keeps a basis `B` (columns) and `M = A B`. Every basis column
//! is either in the kernel of `A` or *unique*: it is the only column of `M`
//! that is nonzero in some row. The rank is the number of unique columns.

mod basis;

pub use basis::{
    col_basis_small, combine_blocks, invert_mod, rank_mod, row_basis_small, select_small_prime, BasisMode,
    SMALL_PRIME_POOL,
};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldPrime;
use basis::Echelon;

/// Default cap on distinct rows per sub-batch.
pub const DEFAULT_RANK_BATCH_CAP: usize = 4;

/// Entry updates `(row, col, new_value)`; later entries win on repeated positions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntryBatch {
    pub updates: Vec<(usize, usize, u64)>,
}

/// Shape of the most recent sub-batch.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BatchStats {
    pub r0: usize,
    pub r1: usize,
    pub c2_tilde: usize,
    pub r2: usize,
    pub touched: usize,
    /// Largest nonzero count of a column of `D1`, `E1`, `D2` or `E2`.
    pub max_phase_column: usize,
    pub pc_terms: PcTerms,
}

#[derive(Debug, Clone)]
pub struct AGoodState {
    p: FieldPrime,
    n: usize,
    cap: usize,
    /// Row-major `A`.
    a: Vec<Vec<u64>>,
    /// Basis columns.
    b: Vec<Vec<u64>>,
    /// Columns of `M = A B`.
    m: Vec<Vec<u64>>,
    /// Number of nonzero entries of `M` in each row.
    row_count: Vec<usize>,
    changed_rows: Vec<bool>,
    in_kernel: Vec<bool>,
    pc: Vec<Option<usize>>,
    pc_count: usize,
    stats: BatchStats,
}

impl AGoodState {
    /// Builds a state for `A` by column-reducing it to reduced echelon form.
    pub fn init(a: &[Vec<u64>], p: FieldPrime) -> Result<Self> {
        let n = a.len();
        if a.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("matrix must be square".into()));
        }
        let a: Vec<Vec<u64>> = a.iter().map(|r| r.iter().map(|&x| p.reduce(x)).collect()).collect();
        let mut m: Vec<Vec<u64>> = (0..n).map(|j| (0..n).map(|i| a[i][j]).collect()).collect();
        let mut b: Vec<Vec<u64>> = (0..n).map(|j| (0..n).map(|i| (i == j) as u64).collect()).collect();
        let mut pivoted = vec![false; n];
        for i in 0..n {
            let Some(j) = (0..n).find(|&j| !pivoted[j] && m[j][i] != 0) else { continue };
            pivoted[j] = true;
            let s = p.inv(m[j][i])?;
            scale(&mut m[j], s, p);
            scale(&mut b[j], s, p);
            for k in 0..n {
                if k != j && m[k][i] != 0 {
                    let f = m[k][i];
                    let (mk, mj) = pair(&mut m, k, j);
                    axpy(mk, mj, p.neg(f), p);
                    let (bk, bj) = pair(&mut b, k, j);
                    axpy(bk, bj, p.neg(f), p);
                }
            }
        }
        let mut st = AGoodState {
            p,
            n,
            cap: DEFAULT_RANK_BATCH_CAP,
            a,
            b,
            m,
            row_count: vec![0; n],
            changed_rows: vec![false; n],
            in_kernel: vec![false; n],
            pc: vec![None; n],
            pc_count: 0,
            stats: BatchStats::default(),
        };
        st.recount_rows();
        for j in 0..n {
            st.refresh_column(j);
        }
        st.pc_count = st.pc.iter().filter(|x| x.is_some()).count();
        Ok(st)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap.max(1);
        self
    }

    pub fn prime(&self) -> FieldPrime {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[Vec<u64>] {
        &self.a
    }

    /// Basis column `j`.
    pub fn basis_column(&self, j: usize) -> &[u64] {
        &self.b[j]
    }

    pub fn pc(&self, j: usize) -> Option<usize> {
        self.pc[j]
    }

    pub fn in_kernel(&self, j: usize) -> bool {
        self.in_kernel[j]
    }

    pub fn stats(&self) -> &BatchStats {
        &self.stats
    }

    /// Number of columns with a principal component.
    pub fn rank(&self) -> usize {
        self.pc_count
    }

    /// `n` minus the number of kernel columns.
    pub fn rank_from_kernel(&self) -> usize {
        self.n - self.in_kernel.iter().filter(|&&k| k).count()
    }

    /// Applies entry updates, splitting into sub-batches of at most `cap` distinct rows.
    pub fn apply_entry_batch(&mut self, batch: &EntryBatch) -> Result<()> {
        let mut latest: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for &(i, j, v) in &batch.updates {
            if i >= self.n || j >= self.n {
                return Err(Error::Dimension(format!("entry ({i},{j}) outside {0}x{0}", self.n)));
            }
            latest.insert((i, j), self.p.reduce(v));
        }
        let mut by_row: BTreeMap<usize, Vec<(usize, u64)>> = BTreeMap::new();
        for ((i, j), v) in latest {
            if self.a[i][j] != v {
                by_row.entry(i).or_default().push((j, v));
            }
        }
        let rows: Vec<(usize, Vec<(usize, u64)>)> = by_row.into_iter().collect();
        for chunk in rows.chunks(self.cap) {
            self.apply_rows(chunk)?;
        }
        Ok(())
    }

    fn apply_rows(&mut self, rows: &[(usize, Vec<(usize, u64)>)]) -> Result<()> {
        let p = self.p;
        let n = self.n;
        let r0: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let p_old = self.pc_count;
        let pc_old = self.pc.clone();
        let lost: Vec<usize> = (0..n).filter(|&j| pc_old[j].is_some_and(|i| r0.contains(&i))).collect();
        let mut touched = vec![false; n];
        let mut stats = BatchStats { r0: r0.len(), ..Default::default() };

        // M' = A'B differs from M only on rows R0
        for (i, updates) in rows {
            for &(c, v) in updates {
                let delta = p.sub(v, self.a[*i][c]);
                self.a[*i][c] = v;
                for j in 0..n {
                    let bcj = self.b[j][c];
                    if bcj != 0 {
                        self.m[j][*i] = p.add(self.m[j][*i], p.mul(delta, bcj));
                    }
                }
            }
            self.row_count[*i] = (0..n).filter(|&j| self.m[j][*i] != 0).count();
            self.changed_rows[*i] = true;
        }
        for &j in &lost {
            touched[j] = true;
        }
        for j in 0..n {
            if self.in_kernel[j] && r0.iter().any(|&i| self.m[j][i] != 0) {
                touched[j] = true;
            }
        }

        // Phase 1
        let strip: Vec<Vec<u64>> = r0.iter().map(|&i| (0..n).map(|j| self.m[j][i]).collect()).collect();
        let r1: Vec<usize> = row_basis_small(&strip, p, BasisMode::Elimination)?.into_iter().map(|k| r0[k]).collect();
        let strip1: Vec<Vec<u64>> = r1.iter().map(|&i| (0..n).map(|j| self.m[j][i]).collect()).collect();
        let c1 = col_basis_small(&strip1, p);
        stats.r1 = r1.len();
        debug_assert_eq!(c1.len(), r1.len());
        let mut max_col = self.eliminate(&r1, &c1, &mut touched)?;

        // Phase 2: columns outside C1 that are neither kernel nor unique
        let mut in_c1 = vec![false; n];
        for &c in &c1 {
            in_c1[c] = true;
        }
        let c2_tilde: Vec<usize> = (0..n)
            .filter(|&j| !in_c1[j] && touched[j] && !self.is_zero_col(j) && self.unique_row(j).is_none())
            .collect();
        stats.c2_tilde = c2_tilde.len();
        let mut r2 = Vec::new();
        if !c2_tilde.is_empty() {
            let mut e = Echelon::new(p);
            for i in 0..n {
                let row: Vec<u64> = c2_tilde.iter().map(|&j| self.m[j][i]).collect();
                if e.insert(&row) {
                    r2.push(i);
                }
                if r2.len() == c2_tilde.len() {
                    break;
                }
            }
            let strip2: Vec<Vec<u64>> = r2.iter().map(|&i| c2_tilde.iter().map(|&j| self.m[j][i]).collect()).collect();
            let c2: Vec<usize> = col_basis_small(&strip2, p).into_iter().map(|k| c2_tilde[k]).collect();
            debug_assert_eq!(c2.len(), r2.len());
            max_col = max_col.max(self.eliminate(&r2, &c2, &mut touched)?);
        }
        stats.r2 = r2.len();
        stats.max_phase_column = max_col;

        // principal components of touched columns and of columns sharing rows whose count moved
        let mut recheck = touched.clone();
        for (j, old) in pc_old.iter().enumerate() {
            if old.is_some_and(|i| self.changed_rows[i]) {
                recheck[j] = true;
            }
        }
        for i in 0..n {
            if self.changed_rows[i] && self.row_count[i] == 1 {
                if let Some(j) = (0..n).find(|&j| self.m[j][i] != 0) {
                    recheck[j] = true;
                }
            }
            self.changed_rows[i] = false;
        }
        for j in 0..n {
            if recheck[j] {
                self.refresh_column(j);
            }
        }
        stats.touched = touched.iter().filter(|&&t| t).count();

        let in_r1: Vec<bool> = (0..n).map(|i| r1.contains(&i)).collect();
        let in_r2: Vec<bool> = (0..n).map(|i| r2.contains(&i)).collect();
        let mut terms = PcTerms { p_old, lost: lost.len(), ..Default::default() };
        for j in (0..n).filter(|&j| recheck[j]) {
            let new = self.pc[j];
            let fresh = new.is_some_and(|i| in_r1[i] || in_r2[i]);
            match new {
                Some(i) if in_r1[i] => terms.v_r1 += 1,
                Some(i) if in_r2[i] => terms.v_r2 += 1,
                _ => {}
            }
            let kept_old = pc_old[j].is_some_and(|i| !r0.contains(&i));
            if kept_old && (fresh || new.is_none()) {
                terms.v1 += 1;
            }
            if !kept_old && new.is_some() && !fresh {
                terms.gained += 1;
            }
        }
        let predicted = pc_count_delta(&terms)?;
        let recount = self.pc.iter().filter(|x| x.is_some()).count();
        if predicted != recount {
            return Err(Error::Invariant(format!(
                "pc count formula gives {predicted}, recount gives {recount} ({terms:?})"
            )));
        }
        stats.pc_terms = terms;
        self.pc_count = recount;
        self.stats = stats;
        Ok(())
    }

    /// Makes `M[rows, cols]` the identity (the `D` step) and clears `rows`
    /// from every other column (the `E` step). Returns the largest number of
    /// nonzeros in a column of either transform.
    fn eliminate(&mut self, rows: &[usize], cols: &[usize], touched: &mut [bool]) -> Result<usize> {
        if rows.is_empty() {
            return Ok(0);
        }
        let p = self.p;
        let n = self.n;
        let k = rows.len();
        let sub: Vec<Vec<u64>> = rows.iter().map(|&i| cols.iter().map(|&j| self.m[j][i]).collect()).collect();
        let inv = invert_mod(&sub, p)?;
        let mut max_col = 0;
        // D: new column t = sum_s old column s * inv[s][t]
        let old_b: Vec<Vec<u64>> = cols.iter().map(|&j| self.b[j].clone()).collect();
        let old_m: Vec<Vec<u64>> = cols.iter().map(|&j| self.m[j].clone()).collect();
        for (t, &jt) in cols.iter().enumerate() {
            let mut nb = vec![0u64; n];
            let mut nm = vec![0u64; n];
            let mut nnz = 0;
            for s in 0..k {
                let f = inv[s][t];
                if f == 0 {
                    continue;
                }
                nnz += 1;
                axpy(&mut nb, &old_b[s], f, p);
                axpy(&mut nm, &old_m[s], f, p);
            }
            max_col = max_col.max(nnz);
            self.b[jt] = nb;
            self.set_image(jt, nm);
            touched[jt] = true;
        }
        // E: column j -= sum_t column cols[t] * M[rows[t], j]
        let mut in_cols = vec![false; n];
        for &c in cols {
            in_cols[c] = true;
        }
        let piv_b: Vec<Vec<u64>> = cols.iter().map(|&j| self.b[j].clone()).collect();
        let piv_m: Vec<Vec<u64>> = cols.iter().map(|&j| self.m[j].clone()).collect();
        for j in 0..n {
            if in_cols[j] {
                continue;
            }
            let coeffs: Vec<u64> = rows.iter().map(|&i| self.m[j][i]).collect();
            let nnz = coeffs.iter().filter(|&&c| c != 0).count();
            if nnz == 0 {
                continue;
            }
            let mut nm = self.m[j].clone();
            for (t, &f) in coeffs.iter().enumerate() {
                if f != 0 {
                    axpy(&mut self.b[j], &piv_b[t], p.neg(f), p);
                    axpy(&mut nm, &piv_m[t], p.neg(f), p);
                }
            }
            self.set_image(j, nm);
            max_col = max_col.max(nnz + 1);
            touched[j] = true;
        }
        Ok(max_col)
    }

    /// Replaces column `j` of `M`, keeping row counts current.
    fn set_image(&mut self, j: usize, col: Vec<u64>) {
        for i in 0..self.n {
            let (was, now) = (self.m[j][i] != 0, col[i] != 0);
            if was != now {
                if now {
                    self.row_count[i] += 1;
                } else {
                    self.row_count[i] -= 1;
                }
                self.changed_rows[i] = true;
            }
        }
        self.m[j] = col;
    }

    fn is_zero_col(&self, j: usize) -> bool {
        self.m[j].iter().all(|&x| x == 0)
    }

    /// Smallest row where column `j` is the only nonzero column.
    fn unique_row(&self, j: usize) -> Option<usize> {
        (0..self.n).find(|&i| self.m[j][i] != 0 && self.row_count[i] == 1)
    }

    fn refresh_column(&mut self, j: usize) {
        self.in_kernel[j] = self.is_zero_col(j);
        self.pc[j] = if self.in_kernel[j] { None } else { self.unique_row(j) };
    }

    fn recount_rows(&mut self) {
        let n = self.n;
        for i in 0..n {
            self.row_count[i] = (0..n).filter(|&j| self.m[j][i] != 0).count();
        }
    }

    /// Full check of the A-good invariants: `B` nonsingular, `M = A B`, every
    /// column kernel or unique at its (minimal) principal component, rank = pc count.
    pub fn check_invariants(&self) -> Result<()> {
        let p = self.p;
        let n = self.n;
        let bt: Vec<Vec<u64>> = self.b.clone();
        if rank_mod(&bt, p) != n {
            return Err(Error::Invariant("basis matrix is singular".into()));
        }
        for j in 0..n {
            for i in 0..n {
                let mut s = 0;
                for c in 0..n {
                    s = p.add(s, p.mul(self.a[i][c], self.b[j][c]));
                }
                if s != self.m[j][i] {
                    return Err(Error::Invariant(format!("M[{i},{j}] out of sync with A*B")));
                }
            }
        }
        for j in 0..n {
            let zero = self.is_zero_col(j);
            let unique = (0..n).find(|&i| self.m[j][i] != 0 && (0..n).all(|k| k == j || self.m[k][i] == 0));
            if zero == unique.is_some() {
                return Err(Error::Invariant(format!("column {j} is neither kernel nor unique")));
            }
            if self.in_kernel[j] != zero || self.pc[j] != unique {
                return Err(Error::Invariant(format!("stale flags on column {j}")));
            }
        }
        if self.pc_count != self.pc.iter().filter(|x| x.is_some()).count() {
            return Err(Error::Invariant("pc count out of sync".into()));
        }
        if self.pc_count != self.rank_from_kernel() {
            return Err(Error::Invariant("pc count disagrees with kernel count".into()));
        }
        Ok(())
    }
}

/// Cardinalities feeding [`pc_count_delta`], all taken over touched columns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PcTerms {
    pub p_old: usize,
    /// Columns whose old pc row was changed.
    pub lost: usize,
    /// Columns whose new pc lies in `R1`.
    pub v_r1: usize,
    /// Columns whose new pc lies in `R2`.
    pub v_r2: usize,
    /// Columns with an old pc outside `R0` that now sit in `R1 ∪ R2` (or lost it).
    pub v1: usize,
    /// Columns without a surviving old pc that are now unique outside `R1 ∪ R2`.
    pub gained: usize,
}

/// `P_new = P_old - |lost| + |V_R1| + |V_R2| - |V1| + |gained|`.
pub fn pc_count_delta(t: &PcTerms) -> Result<usize> {
    (t.p_old + t.v_r1 + t.v_r2 + t.gained)
        .checked_sub(t.lost + t.v1)
        .ok_or_else(|| Error::Invariant("pc count formula went negative".into()))
}

/// Convenience constructor matching the free-function form.
pub fn init_agood(a: &[Vec<u64>], p: FieldPrime) -> Result<AGoodState> {
    AGoodState::init(a, p)
}

/// Rank over the rationals as the maximum of ranks modulo the pool primes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RationalRank {
    pub rank: usize,
    /// True when the pool product exceeds the Hadamard bound, so no full-rank
    /// minor can vanish modulo every pool prime.
    pub exact: bool,
    pub per_prime: Vec<(u64, usize)>,
}

pub fn rank_over_q(a: &[Vec<i64>], pool: &[u64]) -> Result<RationalRank> {
    if pool.is_empty() {
        return Err(Error::Parameter("prime pool is empty".into()));
    }
    let mut per_prime = Vec::new();
    let mut log_pool = 0.0f64;
    for &q in pool {
        let fp = FieldPrime::new(q)?;
        let red: Vec<Vec<u64>> = a.iter().map(|r| r.iter().map(|&x| fp.reduce_signed(x)).collect()).collect();
        per_prime.push((q, AGoodState::init(&red, fp)?.rank()));
        log_pool += (q as f64).log2();
    }
    let n = a.len();
    let log_hadamard: f64 = (0..a.first().map_or(0, |r| r.len()))
        .map(|j| {
            let s: f64 = (0..n).map(|i| (a[i][j] as f64).powi(2)).sum();
            if s > 0.0 {
                0.5 * s.log2()
            } else {
                0.0
            }
        })
        .sum();
    let rank = per_prime.iter().map(|x| x.1).max().unwrap_or(0);
    Ok(RationalRank { rank, exact: log_pool > log_hadamard + 1.0, per_prime })
}

fn scale(v: &mut [u64], s: u64, p: FieldPrime) {
    for x in v.iter_mut() {
        *x = p.mul(*x, s);
    }
}

/// `dst += f * src`.
fn axpy(dst: &mut [u64], src: &[u64], f: u64, p: FieldPrime) {
    if f == 0 {
        return;
    }
    for (d, &s) in dst.iter_mut().zip(src) {
        if s != 0 {
            *d = p.add(*d, p.mul(f, s));
        }
    }
}

fn pair(v: &mut [Vec<u64>], a: usize, b: usize) -> (&mut Vec<u64>, &Vec<u64>) {
    if a < b {
        let (x, y) = v.split_at_mut(b);
        (&mut x[a], &y[0])
    } else {
        let (x, y) = v.split_at_mut(a);
        (&mut y[0], &x[b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{oracle_rank, RankModulus};
    use rand::{Rng, SeedableRng};

    fn fp(p: u64) -> FieldPrime {
        FieldPrime::new(p).unwrap()
    }

    fn oracle(a: &[Vec<u64>], p: FieldPrime) -> usize {
        let a: Vec<Vec<i64>> = a.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
        oracle_rank(&a, RankModulus::Prime(p)).unwrap()
    }

    #[test]
    fn init_examples() {
        let z = AGoodState::init(&vec![vec![0; 3]; 3], fp(5)).unwrap();
        assert_eq!(z.rank(), 0);
        assert!((0..3).all(|j| z.in_kernel(j)));
        let id: Vec<Vec<u64>> = (0..3).map(|i| (0..3).map(|j| (i == j) as u64).collect()).collect();
        let s = AGoodState::init(&id, fp(5)).unwrap();
        assert_eq!(s.rank(), 3);
        assert!((0..3).all(|j| s.pc(j) == Some(j)));
        let s = AGoodState::init(&[vec![1, 2], vec![2, 4]], fp(5)).unwrap();
        assert_eq!(s.rank(), 1);
        s.check_invariants().unwrap();
    }

    #[test]
    fn batch_examples() {
        let mut s = AGoodState::init(&vec![vec![0; 3]; 3], fp(5)).unwrap();
        s.apply_entry_batch(&EntryBatch { updates: vec![(0, 0, 1)] }).unwrap();
        assert_eq!(s.rank(), 1);
        s.apply_entry_batch(&EntryBatch { updates: vec![(1, 2, 3), (2, 1, 4)] }).unwrap();
        assert_eq!(s.rank(), 3);
        s.apply_entry_batch(&EntryBatch { updates: vec![(1, 2, 0), (2, 1, 0)] }).unwrap();
        assert_eq!(s.rank(), 1);
        s.check_invariants().unwrap();
    }

    #[test]
    fn random_batches_match_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for &(n, p) in &[(6, 7), (5, 2), (8, 5)] {
            let p = fp(p);
            let mut a = vec![vec![0u64; n]; n];
            let mut s = AGoodState::init(&a, p).unwrap();
            for _ in 0..200 {
                let k = rng.gen_range(1..=2);
                let updates: Vec<(usize, usize, u64)> =
                    (0..k).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..p.get()))).collect();
                for &(i, j, v) in &updates {
                    a[i][j] = v;
                }
                s.apply_entry_batch(&EntryBatch { updates }).unwrap();
                s.check_invariants().unwrap();
                assert_eq!(s.rank(), oracle(&a, p));
            }
        }
    }

    #[test]
    fn wide_batches_are_split() {
        let n = 6;
        let p = fp(97);
        let mut s = AGoodState::init(&vec![vec![0; n]; n], p).unwrap().with_cap(2);
        let updates: Vec<(usize, usize, u64)> = (0..n).map(|i| (i, i, 1)).collect();
        s.apply_entry_batch(&EntryBatch { updates }).unwrap();
        assert_eq!(s.rank(), n);
        s.check_invariants().unwrap();
    }

    #[test]
    fn pc_formula_examples() {
        let t = PcTerms { p_old: 3, ..Default::default() };
        assert_eq!(pc_count_delta(&t).unwrap(), 3);
        assert_eq!(pc_count_delta(&PcTerms { lost: 1, ..t }).unwrap(), 2);
        assert!(pc_count_delta(&PcTerms { p_old: 0, lost: 1, ..t }).is_err());
    }

    #[test]
    fn rational_rank_examples() {
        let id: Vec<Vec<i64>> = (0..3).map(|i| (0..3).map(|j| (i == j) as i64).collect()).collect();
        assert_eq!(rank_over_q(&id, &[2]).unwrap().rank, 3);
        assert_eq!(rank_over_q(&[vec![2, 4], vec![1, 2]], &[3, 5, 7]).unwrap().rank, 1);
        // determinant 6
        let a = vec![vec![2, 0], vec![0, 3]];
        let r = rank_over_q(&a, &[2, 3, 5]).unwrap();
        assert_eq!(r.rank, 2);
        assert_eq!(r.per_prime, vec![(2, 1), (3, 1), (5, 2)]);
        assert!(r.exact);
        assert!(!rank_over_q(&[vec![1000, 7], vec![3, 1000]], &[2]).unwrap().exact);
    }
}
