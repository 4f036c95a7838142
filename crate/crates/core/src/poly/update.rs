//! Low-rank updates of a maintained inverse and determinant.
//!
//! A change `ΔA = U B V` is stored by the row set of `U`, the column set of
//! `V` (both 0/1 selections) and the dense block `B`. With `C = A^{-1}`,
//! `K = I + B C[cols, rows]` gives
//! `(A + UBV)^{-1} = C - C[:, rows] K^{-1} B C[cols, :]` and
//! `det(A + UBV) = det(A) det(K)`.

use super::matrix::PolyMatrix;
use super::series::TruncPoly;
use crate::error::{Error, Result};

/// Default cap on the number of rows or columns a single change may touch.
pub const DEFAULT_BATCH_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowRankChange {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    b: PolyMatrix,
}

impl LowRankChange {
    /// Width of the change (rows of `B`).
    pub fn width(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn block(&self) -> &PolyMatrix {
        &self.b
    }

    /// `U` as an explicit `n x |rows|` selection matrix.
    pub fn u_matrix(&self) -> PolyMatrix {
        let mut u = PolyMatrix::zero(self.n, self.rows.len(), self.b.m());
        for (k, &r) in self.rows.iter().enumerate() {
            u.set(r, k, TruncPoly::one(self.b.m()));
        }
        u
    }

    /// `V` as an explicit `|cols| x n` selection matrix.
    pub fn v_matrix(&self) -> PolyMatrix {
        let mut v = PolyMatrix::zero(self.cols.len(), self.n, self.b.m());
        for (k, &c) in self.cols.iter().enumerate() {
            v.set(k, c, TruncPoly::one(self.b.m()));
        }
        v
    }

    /// Reassembles the dense `n x n` delta.
    pub fn dense(&self) -> PolyMatrix {
        let mut d = PolyMatrix::zero(self.n, self.n, self.b.m());
        for (i, &r) in self.rows.iter().enumerate() {
            for (j, &c) in self.cols.iter().enumerate() {
                d.set(r, c, self.b.get(i, j).clone());
            }
        }
        d
    }

    /// `I + B C[cols, rows]`.
    fn capacitance(&self, c: &PolyMatrix) -> PolyMatrix {
        let m = c.m();
        let l = self.rows.len();
        let mut k = PolyMatrix::identity(l, m);
        for i in 0..l {
            for (j, &cj) in self.cols.iter().enumerate() {
                let bij = self.b.get(i, j);
                if bij.is_zero() {
                    continue;
                }
                for (t, &rt) in self.rows.iter().enumerate() {
                    let cv = c.get(cj, rt);
                    if !cv.is_zero() {
                        k.get_mut(i, t).add_mul_assign(bij, cv);
                    }
                }
            }
        }
        k
    }
}

/// Groups sparse entry updates `(row, col, delta)` into a low-rank change.
///
/// Repeated positions are summed.
pub fn decompose_change(delta: &[(usize, usize, TruncPoly)], n: usize, m: usize, cap: usize) -> Result<LowRankChange> {
    let mut rows: Vec<usize> = Vec::new();
    let mut cols: Vec<usize> = Vec::new();
    for (r, c, v) in delta {
        if *r >= n || *c >= n {
            return Err(Error::Dimension(format!("entry ({r},{c}) outside {n}x{n}")));
        }
        if v.m() != m {
            return Err(Error::TruncationMismatch(m, v.m()));
        }
        if !rows.contains(r) {
            rows.push(*r);
        }
        if !cols.contains(c) {
            cols.push(*c);
        }
    }
    rows.sort_unstable();
    cols.sort_unstable();
    let got = rows.len().max(cols.len());
    if got > cap {
        return Err(Error::BatchTooLarge { got, cap });
    }
    let mut b = PolyMatrix::zero(rows.len(), cols.len(), m);
    for (r, c, v) in delta {
        let i = rows.binary_search(r).expect("row present");
        let j = cols.binary_search(c).expect("col present");
        b.get_mut(i, j).add_assign(v);
    }
    Ok(LowRankChange { n, rows, cols, b })
}

/// Returns `C'` with `C' = (A + UBV)^{-1}` to precision `m`, given `C = A^{-1}`.
pub fn woodbury_update(c: &PolyMatrix, chg: &LowRankChange) -> Result<PolyMatrix> {
    let mut out = c.clone();
    woodbury_in_place(&mut out, chg)?;
    Ok(out)
}

/// `det(I + B C[cols, rows])`, the determinant ratio of the change.
pub fn det_ratio(c: &PolyMatrix, chg: &LowRankChange) -> Result<TruncPoly> {
    check(c, chg)?;
    chg.capacitance(c).det()
}

/// `d * det(I + B C[cols, rows])`.
pub fn det_update(d: &TruncPoly, c: &PolyMatrix, chg: &LowRankChange) -> Result<TruncPoly> {
    if d.m() != c.m() {
        return Err(Error::TruncationMismatch(c.m(), d.m()));
    }
    Ok(d.mul_unchecked(&det_ratio(c, chg)?))
}

/// Entry `(i, j)` of the updated inverse without forming the rest of it.
pub fn woodbury_entry(c: &PolyMatrix, chg: &LowRankChange, i: usize, j: usize) -> Result<TruncPoly> {
    check(c, chg)?;
    let mut out = c.get(i, j).clone();
    if chg.is_empty() {
        return Ok(out);
    }
    let kinv = chg.capacitance(c).inv_small()?;
    let l = chg.rows.len();
    // z = B C[cols, j]
    let mut z = vec![TruncPoly::zero(c.m()); l];
    for (t, zt) in z.iter_mut().enumerate() {
        for (s, &cs) in chg.cols.iter().enumerate() {
            zt.add_mul_assign(chg.b.get(t, s), c.get(cs, j));
        }
    }
    for (a, &ra) in chg.rows.iter().enumerate() {
        let left = c.get(i, ra);
        if left.is_zero() {
            continue;
        }
        let mut y = TruncPoly::zero(c.m());
        for (t, zt) in z.iter().enumerate() {
            y.add_mul_assign(kinv.get(a, t), zt);
        }
        out.add_mul_assign(left, &y);
    }
    Ok(out)
}

fn check(c: &PolyMatrix, chg: &LowRankChange) -> Result<()> {
    if c.rows() != chg.n || c.cols() != chg.n {
        return Err(Error::Dimension(format!(
            "{}x{} inverse for a change on dimension {}",
            c.rows(),
            c.cols(),
            chg.n
        )));
    }
    if c.m() != chg.b.m() {
        return Err(Error::TruncationMismatch(c.m(), chg.b.m()));
    }
    Ok(())
}

/// In-place Woodbury step; returns the capacitance matrix `K` for reuse.
pub fn woodbury_in_place(c: &mut PolyMatrix, chg: &LowRankChange) -> Result<PolyMatrix> {
    check(c, chg)?;
    let n = chg.n;
    let m = c.m();
    let k = chg.capacitance(c);
    if chg.is_empty() {
        return Ok(k);
    }
    let kinv = k.inv_small()?;
    // y = K^{-1} B C[cols, :]
    let bc = chg.b.mul(&c.select(&chg.cols, &(0..n).collect::<Vec<_>>()))?;
    let y = kinv.mul(&bc)?;
    let left = c.select(&(0..n).collect::<Vec<_>>(), &chg.rows);
    let l = chg.rows.len();
    for i in 0..n {
        for t in 0..l {
            let a = left.get(i, t);
            if a.is_zero() {
                continue;
            }
            for j in 0..n {
                let yv = y.get(t, j);
                if !yv.is_zero() {
                    c.get_mut(i, j).add_mul_assign(a, yv);
                }
            }
        }
    }
    debug_assert_eq!(c.m(), m);
    Ok(k)
}

/// Applies a change to a maintained `(C, d)` pair.
pub fn apply_change(c: &mut PolyMatrix, d: &mut TruncPoly, chg: &LowRankChange) -> Result<()> {
    let k = woodbury_in_place(c, chg)?;
    *d = d.mul_unchecked(&k.det()?);
    Ok(())
}
