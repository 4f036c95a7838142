//! Small-strip linear algebra mod a prime: row and column bases, prime
//! selection, block assembly.

use crate::error::{Error, Result};
use crate::field::FieldPrime;

/// Default pool searched by [`select_small_prime`].
pub const SMALL_PRIME_POOL: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisMode {
    /// Incremental Gaussian elimination.
    Elimination,
    /// Tests each row against every linear combination of the rows kept so far.
    /// Limited to at most 4 rows and `q <= 7`.
    Exhaustive,
}

/// Incremental echelon basis of vectors mod `p`.
pub(crate) struct Echelon {
    p: FieldPrime,
    // (pivot position, normalized vector with 1 at pivot)
    rows: Vec<(usize, Vec<u64>)>,
}

impl Echelon {
    pub(crate) fn new(p: FieldPrime) -> Self {
        Echelon { p, rows: Vec::new() }
    }

    pub(crate) fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Inserts `v` if it is independent of the current basis.
    pub(crate) fn insert(&mut self, v: &[u64]) -> bool {
        let p = self.p;
        let mut v: Vec<u64> = v.iter().map(|&x| p.reduce(x)).collect();
        for (piv, r) in &self.rows {
            let f = v[*piv];
            if f != 0 {
                for (x, &y) in v.iter_mut().zip(r) {
                    if y != 0 {
                        *x = p.sub(*x, p.mul(f, y));
                    }
                }
            }
        }
        let Some(piv) = v.iter().position(|&x| x != 0) else { return false };
        let inv = p.inv(v[piv]).expect("nonzero");
        for x in v.iter_mut() {
            *x = p.mul(*x, inv);
        }
        self.rows.push((piv, v));
        true
    }
}

/// Rank of a row list mod `q`.
pub fn rank_mod(rows: &[Vec<u64>], q: FieldPrime) -> usize {
    let mut e = Echelon::new(q);
    for r in rows {
        e.insert(r);
    }
    e.rank()
}

/// Indices of a maximal independent row set, chosen greedily in row order.
pub fn row_basis_small(rows: &[Vec<u64>], q: FieldPrime, mode: BasisMode) -> Result<Vec<usize>> {
    match mode {
        BasisMode::Elimination => {
            let mut e = Echelon::new(q);
            Ok((0..rows.len()).filter(|&i| e.insert(&rows[i])).collect())
        }
        BasisMode::Exhaustive => {
            if rows.len() > 4 || q.get() > 7 {
                return Err(Error::Parameter(format!(
                    "exhaustive basis needs at most 4 rows and q <= 7 (got {} rows, q = {q})",
                    rows.len()
                )));
            }
            let mut kept: Vec<usize> = Vec::new();
            for i in 0..rows.len() {
                if !in_span_exhaustive(&rows[i], &kept.iter().map(|&k| &rows[k]).collect::<Vec<_>>(), q) {
                    kept.push(i);
                }
            }
            Ok(kept)
        }
    }
}

/// True iff `v` equals some combination of `basis` (all `q^|basis|` tried).
fn in_span_exhaustive(v: &[u64], basis: &[&Vec<u64>], q: FieldPrime) -> bool {
    let target: Vec<u64> = v.iter().map(|&x| q.reduce(x)).collect();
    let k = basis.len();
    let total = q.get().pow(k as u32);
    for code in 0..total {
        let mut c = code;
        let mut acc = vec![0u64; target.len()];
        for b in basis {
            let coef = c % q.get();
            c /= q.get();
            if coef == 0 {
                continue;
            }
            for (a, &x) in acc.iter_mut().zip(b.iter()) {
                *a = q.add(*a, q.mul(coef, q.reduce(x)));
            }
        }
        if acc == target {
            return true;
        }
    }
    false
}

/// Greedy prefix-rank column basis: column `j` is kept iff the rank of
/// columns `0..=j` exceeds that of columns `0..j`.
pub fn col_basis_small(rows: &[Vec<u64>], q: FieldPrime) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut e = Echelon::new(q);
    (0..ncols)
        .filter(|&j| {
            let col: Vec<u64> = rows.iter().map(|r| r[j]).collect();
            e.insert(&col)
        })
        .collect()
}

/// Smallest pool prime whose rank on the strip matches the rank mod `p`; falls back to `p`.
pub fn select_small_prime(rows: &[Vec<u64>], p: FieldPrime, pool: &[u64]) -> FieldPrime {
    let want = rank_mod(rows, p);
    for &q in pool {
        let Ok(q) = FieldPrime::new(q) else { continue };
        if rank_mod(rows, q) == want {
            return q;
        }
    }
    p
}

/// Inverse of a square matrix mod `p` by Gauss-Jordan elimination.
pub fn invert_mod(a: &[Vec<u64>], p: FieldPrime) -> Result<Vec<Vec<u64>>> {
    let n = a.len();
    let mut m: Vec<Vec<u64>> = a.to_vec();
    let mut inv: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u64).collect()).collect();
    for c in 0..n {
        let piv = (c..n).find(|&r| m[r][c] != 0).ok_or(Error::NotInvertible(0, p.get()))?;
        m.swap(piv, c);
        inv.swap(piv, c);
        let s = p.inv(m[c][c])?;
        for j in 0..n {
            m[c][j] = p.mul(m[c][j], s);
            inv[c][j] = p.mul(inv[c][j], s);
        }
        for r in 0..n {
            if r != c && m[r][c] != 0 {
                let f = m[r][c];
                for j in 0..n {
                    m[r][j] = p.sub(m[r][j], p.mul(f, m[c][j]));
                    inv[r][j] = p.sub(inv[r][j], p.mul(f, inv[c][j]));
                }
            }
        }
    }
    Ok(inv)
}

/// Assembles `Y` (n x n) with `Y[R,C] = X11`, `Y[R,C̄] = X12`, `Y[R̄,C] = X21`,
/// `Y[R̄,C̄] = X22`, each block keeping the ascending order of its index sets.
pub fn combine_blocks(
    x11: &[Vec<u64>],
    x12: &[Vec<u64>],
    x21: &[Vec<u64>],
    x22: &[Vec<u64>],
    rset: &[usize],
    cset: &[usize],
    n: usize,
) -> Result<Vec<Vec<u64>>> {
    let in_r: Vec<bool> = (0..n).map(|i| rset.contains(&i)).collect();
    let in_c: Vec<bool> = (0..n).map(|j| cset.contains(&j)).collect();
    if rset.iter().chain(cset).any(|&i| i >= n) {
        return Err(Error::Dimension(format!("index set outside 0..{n}")));
    }
    let (nr, nc) = (rset.len(), cset.len());
    let dims = |x: &[Vec<u64>], r: usize, c: usize| x.len() == r && x.iter().all(|row| row.len() == c);
    let ok = dims(x11, nr, nc) && dims(x12, nr, n - nc) && dims(x21, n - nr, nc) && dims(x22, n - nr, n - nc);
    if !ok {
        return Err(Error::Dimension("block shapes disagree with the index sets".into()));
    }
    // pos_R(r) = rank of r inside R; pos_R̄(r) = r - |R ∩ [0, r)|
    let pos = |mask: &[bool], i: usize| (0..i).filter(|&k| mask[k] == mask[i]).count();
    let mut y = vec![vec![0u64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let (pi, pj) = (pos(&in_r, i), pos(&in_c, j));
            y[i][j] = match (in_r[i], in_c[j]) {
                (true, true) => x11[pi][pj],
                (true, false) => x12[pi][pj],
                (false, true) => x21[pi][pj],
                (false, false) => x22[pi][pj],
            };
        }
    }
    Ok(y)
}
