use super::series::TruncPoly;
use crate::error::{Error, Result};

/// Dense matrix of truncated series sharing one truncation degree.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    m: usize,
    entries: Vec<TruncPoly>,
}

impl std::fmt::Debug for PolyMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "PolyMatrix {}x{} (m={})", self.rows, self.cols, self.m)?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                writeln!(f, "  [{i},{j}] {:?}", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

impl PolyMatrix {
    pub fn zero(rows: usize, cols: usize, m: usize) -> Self {
        PolyMatrix { rows, cols, m, entries: vec![TruncPoly::zero(m); rows * cols] }
    }

    pub fn identity(n: usize, m: usize) -> Self {
        let mut out = Self::zero(n, n, m);
        for i in 0..n {
            out.entries[i * n + i] = TruncPoly::one(m);
        }
        out
    }

    /// Builds from row-major entries; every entry must carry truncation `m`.
    pub fn from_entries(rows: usize, cols: usize, m: usize, entries: Vec<TruncPoly>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if let Some(e) = entries.iter().find(|e| e.m() != m) {
            return Err(Error::TruncationMismatch(m, e.m()));
        }
        Ok(PolyMatrix { rows, cols, m, entries })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &TruncPoly {
        &self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut TruncPoly {
        &mut self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: TruncPoly) {
        debug_assert_eq!(value.m(), self.m);
        self.entries[i * self.cols + j] = value;
    }

    /// Submatrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> PolyMatrix {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                entries.push(self.get(i, j).clone());
            }
        }
        PolyMatrix { rows: rows.len(), cols: cols.len(), m: self.m, entries }
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let e = self.get(i, j);
                    if i == j {
                        e.is_one()
                    } else {
                        e.is_zero()
                    }
                })
            })
    }

    /// Constant-term matrix over GF(2) as rows of booleans.
    pub fn constant_part(&self) -> Vec<Vec<bool>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).constant()).collect())
            .collect()
    }

    pub fn add(&self, other: &PolyMatrix) -> Result<PolyMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} + {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.m != other.m {
            return Err(Error::TruncationMismatch(self.m, other.m));
        }
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            a.add_assign(b);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &PolyMatrix) -> Result<PolyMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.m != other.m {
            return Err(Error::TruncationMismatch(self.m, other.m));
        }
        let mut out = PolyMatrix::zero(self.rows, other.cols, self.m);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(l, j);
                    if b.is_zero() {
                        continue;
                    }
                    out.entries[i * other.cols + j].add_mul_assign(a, b);
                }
            }
        }
        Ok(out)
    }

    /// Inverse by Gauss-Jordan elimination with unit-constant pivots.
    pub fn inv_small(&self) -> Result<PolyMatrix> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!("inverse of {}x{}", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = PolyMatrix::identity(n, self.m);
        for col in 0..n {
            let piv = (col..n).find(|&r| a.get(r, col).constant()).ok_or(Error::Singular)?;
            if piv != col {
                a.swap_rows(piv, col);
                inv.swap_rows(piv, col);
            }
            let pinv = a.get(col, col).inv_trunc()?;
            a.scale_row(col, &pinv);
            inv.scale_row(col, &pinv);
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col).clone();
                a.row_axpy(r, col, &f);
                inv.row_axpy(r, col, &f);
            }
        }
        Ok(inv)
    }

    /// Determinant. Elimination when unit pivots exist, cofactor expansion otherwise.
    pub fn det(&self) -> Result<TruncPoly> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!("determinant of {}x{}", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = TruncPoly::one(self.m);
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| a.get(r, col).constant()) else {
                // remaining block has a non-unit pivot column; expand it directly
                let idx: Vec<usize> = (col..n).collect();
                let rest = a.select(&idx, &idx).det_cofactor();
                return Ok(det.mul_unchecked(&rest));
            };
            // row swaps change sign only, which is invisible in characteristic two
            a.swap_rows(piv, col);
            let p = a.get(col, col).clone();
            det = det.mul_unchecked(&p);
            let pinv = p.inv_trunc()?;
            for r in col + 1..n {
                if a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col).mul_unchecked(&pinv);
                a.row_axpy(r, col, &f);
            }
        }
        Ok(det)
    }

    /// Laplace expansion along the first row.
    pub fn det_cofactor(&self) -> TruncPoly {
        let n = self.rows;
        match n {
            0 => TruncPoly::one(self.m),
            1 => self.get(0, 0).clone(),
            _ => {
                let mut acc = TruncPoly::zero(self.m);
                let rows: Vec<usize> = (1..n).collect();
                for j in 0..n {
                    if self.get(0, j).is_zero() {
                        continue;
                    }
                    let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
                    let minor = self.select(&rows, &cols).det_cofactor();
                    acc.add_mul_assign(self.get(0, j), &minor);
                }
                acc
            }
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn scale_row(&mut self, r: usize, f: &TruncPoly) {
        for j in 0..self.cols {
            let e = &mut self.entries[r * self.cols + j];
            if !e.is_zero() {
                *e = e.mul_unchecked(f);
            }
        }
    }

    /// `row[dst] += f * row[src]`.
    fn row_axpy(&mut self, dst: usize, src: usize, f: &TruncPoly) {
        for j in 0..self.cols {
            let s = self.entries[src * self.cols + j].clone();
            if s.is_zero() {
                continue;
            }
            self.entries[dst * self.cols + j].add_mul_assign(f, &s);
        }
    }
}

/// `(I + N)^{-1}` for `N` with monomial entries `x^w`, `w >= 1`.
///
/// Uses `C = I + N*C`: coefficients of `C` in a band of width `min w` only
/// depend on lower bands, so each band is filled by shifted copies.
pub fn series_inverse_monomial(n: usize, m: usize, entries: &[(usize, usize, usize)]) -> Result<PolyMatrix> {
    let wmin = entries.iter().map(|e| e.2).min().unwrap_or(m + 1);
    if wmin == 0 {
        return Err(Error::Parameter("monomial exponents must be positive".into()));
    }
    let mut by_row: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &(i, j, w) in entries {
        if i >= n || j >= n {
            return Err(Error::Dimension(format!("entry ({i},{j}) outside {n}x{n}")));
        }
        if w <= m {
            by_row[i].push((j, w));
        }
    }
    let mut c = PolyMatrix::identity(n, m);
    let mut lo = wmin;
    while lo <= m {
        let hi = (lo + wmin).min(m + 1);
        for s in 0..n {
            for &(v, w) in &by_row[s] {
                for t in 0..n {
                    if v == s {
                        let src = c.get(v, t).clone();
                        c.get_mut(s, t).xor_shifted_range(&src, w, lo, hi);
                    } else {
                        let (dst, src) = c.pair_mut(s * n + t, v * n + t);
                        dst.xor_shifted_range(src, w, lo, hi);
                    }
                }
            }
        }
        lo = hi;
    }
    Ok(c)
}

impl PolyMatrix {
    fn pair_mut(&mut self, a: usize, b: usize) -> (&mut TruncPoly, &TruncPoly) {
        debug_assert_ne!(a, b);
        if a < b {
            let (x, y) = self.entries.split_at_mut(b);
            (&mut x[a], &y[0])
        } else {
            let (x, y) = self.entries.split_at_mut(a);
            (&mut y[0], &x[b])
        }
    }
}
