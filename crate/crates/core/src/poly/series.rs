use std::fmt;

use super::clmul::mul_trunc_words;
use crate::error::{Error, Result};

/// A power series over GF(2) kept modulo `x^(m+1)`.
///
/// Coefficient `i` lives in bit `i % 64` of word `i / 64`; bits above `m`
/// are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruncPoly {
    m: usize,
    words: Vec<u64>,
}

#[inline]
fn words_for(m: usize) -> usize {
    m / 64 + 1
}

impl TruncPoly {
    pub fn zero(m: usize) -> Self {
        TruncPoly { m, words: vec![0; words_for(m)] }
    }

    pub fn one(m: usize) -> Self {
        Self::monomial(0, m)
    }

    /// `x^deg`, or zero when `deg > m`.
    pub fn monomial(deg: usize, m: usize) -> Self {
        let mut p = Self::zero(m);
        if deg <= m {
            p.words[deg / 64] = 1 << (deg % 64);
        }
        p
    }

    /// Builds from a coefficient list (index = degree); entries past `m` are dropped.
    pub fn from_coeffs(coeffs: &[u8], m: usize) -> Self {
        let mut p = Self::zero(m);
        for (i, &c) in coeffs.iter().enumerate().take(m + 1) {
            if c & 1 == 1 {
                p.words[i / 64] |= 1 << (i % 64);
            }
        }
        p
    }

    /// Builds from the set of degrees carrying a one.
    pub fn from_degrees(degrees: &[usize], m: usize) -> Self {
        let mut p = Self::zero(m);
        for &d in degrees {
            if d <= m {
                p.words[d / 64] ^= 1 << (d % 64);
            }
        }
        p
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn coeff(&self, i: usize) -> bool {
        i <= self.m && (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set_coeff(&mut self, i: usize, value: bool) {
        if i > self.m {
            return;
        }
        let bit = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_one(&self) -> bool {
        self.words[0] == 1 && self.words[1..].iter().all(|&w| w == 0)
    }

    /// Constant term.
    #[inline]
    pub fn constant(&self) -> bool {
        self.words[0] & 1 == 1
    }

    /// Degrees of all nonzero coefficients, ascending.
    pub fn degrees(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push(wi * 64 + w.trailing_zeros() as usize);
                w &= w - 1;
            }
        }
        out
    }

    /// Reads up to 64 coefficients starting at degree `start` (bits past `m` read as zero).
    #[inline]
    fn bits_at(&self, start: usize, len: usize) -> u64 {
        let (wi, bi) = (start / 64, start % 64);
        let mut v = self.words.get(wi).copied().unwrap_or(0) >> bi;
        if bi > 0 {
            if let Some(&next) = self.words.get(wi + 1) {
                v |= next << (64 - bi);
            }
        }
        if len < 64 {
            v &= (1u64 << len) - 1;
        }
        v
    }

    /// For every degree `d` in `[lo, hi)`: `self[d] ^= src[d - shift]`.
    pub(crate) fn xor_shifted_range(&mut self, src: &TruncPoly, shift: usize, lo: usize, hi: usize) {
        let hi = hi.min(self.m + 1);
        let mut d = lo.max(shift);
        while d < hi {
            // align writes to word boundaries of the destination
            let room = 64 - d % 64;
            let len = room.min(hi - d);
            let bits = src.bits_at(d - shift, len);
            self.words[d / 64] ^= bits << (d % 64);
            d += len;
        }
    }

    /// Lowest degree with coefficient one.
    pub fn min_degree(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    /// Highest degree with coefficient one.
    pub fn max_degree(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    fn mask_top(&mut self) {
        let used = self.m % 64 + 1;
        if used < 64 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << used) - 1;
        }
    }

    /// Same series at a different truncation degree.
    pub fn with_truncation(&self, m: usize) -> Self {
        let mut words = self.words.clone();
        words.resize(words_for(m), 0);
        let mut p = TruncPoly { m, words };
        p.mask_top();
        p
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.m != other.m {
            return Err(Error::TruncationMismatch(self.m, other.m));
        }
        Ok(())
    }

    /// Coefficient-wise sum (XOR); subtraction is the same operation.
    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.m, other.m);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        out.add_assign(other);
        Ok(out)
    }

    /// Multiplication by `x^k`.
    pub fn shift_up(&self, k: usize) -> Self {
        let mut out = Self::zero(self.m);
        if k > self.m {
            return out;
        }
        let (ws, bs) = (k / 64, k % 64);
        let n = self.words.len();
        for i in (ws..n).rev() {
            let src = i - ws;
            let mut w = self.words[src] << bs;
            if bs > 0 && src > 0 {
                w |= self.words[src - 1] >> (64 - bs);
            }
            out.words[i] = w;
        }
        out.mask_top();
        out
    }

    /// `self += f * g` (truncated).
    pub fn add_mul_assign(&mut self, f: &Self, g: &Self) {
        debug_assert!(self.m == f.m && f.m == g.m);
        mul_trunc_words(&f.words, &g.words, &mut self.words);
        self.mask_top();
    }

    /// Truncated product.
    pub fn mul_trunc(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.m);
        out.add_mul_assign(self, other);
        out
    }

    fn square(&self) -> Self {
        // squaring over GF(2) spreads bits: sum a_i x^{2i}
        let mut out = Self::zero(self.m);
        for d in self.degrees() {
            if 2 * d > self.m {
                break;
            }
            out.words[(2 * d) / 64] |= 1 << ((2 * d) % 64);
        }
        out
    }

    /// Inverse modulo `x^(m+1)`; requires a unit constant term.
    ///
    /// Newton iteration `g <- h*g^2` doubles the number of correct
    /// coefficients per step in characteristic two.
    pub fn inv_trunc(&self) -> Result<Self> {
        if !self.constant() {
            return Err(Error::SeriesNotInvertible);
        }
        let mut g = TruncPoly::one(0);
        let mut prec = 1usize;
        while prec < self.m + 1 {
            prec = (2 * prec).min(self.m + 1);
            let h = self.with_truncation(prec - 1);
            let g2 = g.with_truncation(prec - 1).square();
            g = h.mul_unchecked(&g2);
        }
        Ok(g.with_truncation(self.m))
    }

    /// Reverses the coefficient order within degree `deg`: `x^deg * f(1/x)`.
    /// Terms above `deg` must be absent.
    pub fn reverse(&self, deg: usize) -> Result<Self> {
        if let Some(top) = self.max_degree() {
            if top > deg {
                return Err(Error::Parameter(format!(
                    "cannot reverse within degree {deg}: term of degree {top} present"
                )));
            }
        }
        let mut out = Self::zero(self.m.max(deg));
        for d in self.degrees() {
            out.set_coeff(deg - d, true);
        }
        Ok(out)
    }
}

/// `(degree, found)` of the lowest nonzero term.
pub fn min_degree_term(f: &TruncPoly) -> (usize, bool) {
    match f.min_degree() {
        Some(d) => (d, true),
        None => (0, false),
    }
}

impl fmt::Debug for TruncPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let degs = self.degrees();
        if degs.is_empty() {
            return write!(f, "0 (m={})", self.m);
        }
        let terms: Vec<String> = degs
            .iter()
            .take(12)
            .map(|&d| match d {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{d}"),
            })
            .collect();
        let more = if degs.len() > 12 { " + ..." } else { "" };
        write!(f, "{}{} (m={})", terms.join(" + "), more, self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Schoolbook product over GF(2) on coefficient vectors.
    fn naive_mul(f: &[u8], g: &[u8]) -> Vec<u8> {
        let mut out = vec![0u8; f.len() + g.len()];
        for (i, a) in f.iter().enumerate() {
            for (j, b) in g.iter().enumerate() {
                out[i + j] ^= a & b;
            }
        }
        out
    }

    /// Long division of 1 by h, coefficient by coefficient.
    fn series_division(h: &[u8], m: usize) -> Vec<u8> {
        let mut q = vec![0u8; m + 1];
        let mut rem = vec![0u8; m + 1];
        rem[0] = 1;
        for i in 0..=m {
            if rem[i] == 1 {
                q[i] = 1;
                for (j, &c) in h.iter().enumerate() {
                    if i + j <= m {
                        rem[i + j] ^= c;
                    }
                }
            }
        }
        q
    }

    #[test]
    fn mul_examples() {
        let f = TruncPoly::from_coeffs(&[1, 1], 4);
        assert_eq!(f.mul_trunc(&f).unwrap(), TruncPoly::from_coeffs(&[1, 0, 1], 4));
        assert_eq!(f.mul_trunc(&TruncPoly::one(4)).unwrap(), f);
        let a = TruncPoly::from_coeffs(&[1, 1, 0, 1], 5);
        let b = TruncPoly::from_coeffs(&[1, 0, 1], 5);
        assert_eq!(
            a.mul_trunc(&b).unwrap(),
            TruncPoly::from_coeffs(&[1, 1, 1, 0, 0, 1], 5)
        );
        assert_eq!(
            a.mul_trunc(&TruncPoly::one(4)),
            Err(Error::TruncationMismatch(5, 4))
        );
    }

    #[test]
    fn inverse_examples() {
        let h = TruncPoly::from_coeffs(&[1, 1], 3);
        assert_eq!(h.inv_trunc().unwrap(), TruncPoly::from_coeffs(&[1, 1, 1, 1], 3));
        for m in [0, 1, 7, 64, 200] {
            assert!(TruncPoly::one(m).inv_trunc().unwrap().is_one());
        }
        let h = TruncPoly::from_coeffs(&[1, 1, 1], 4);
        let want = TruncPoly::from_coeffs(&series_division(&[1, 1, 1], 4), 4);
        assert_eq!(h.inv_trunc().unwrap(), want);
        assert_eq!(
            TruncPoly::from_coeffs(&[0, 1], 3).inv_trunc(),
            Err(Error::SeriesNotInvertible)
        );
    }

    #[test]
    fn min_degree_examples() {
        assert_eq!(min_degree_term(&TruncPoly::from_degrees(&[3, 5], 8)), (3, true));
        assert!(!min_degree_term(&TruncPoly::zero(8)).1);
        assert_eq!(TruncPoly::from_degrees(&[3, 70], 100).max_degree(), Some(70));
    }

    #[test]
    fn shift_and_reverse() {
        let f = TruncPoly::from_degrees(&[0, 2, 63], 130);
        assert_eq!(f.shift_up(65).degrees(), vec![65, 67, 128]);
        assert_eq!(f.shift_up(100).degrees(), vec![100, 102]);
        assert_eq!(f.reverse(63).unwrap().degrees(), vec![0, 61, 63]);
        assert!(f.reverse(10).is_err());
    }

    proptest! {
        #[test]
        fn truncation_coherence(
            f in proptest::collection::vec(0u8..2, 1..300),
            g in proptest::collection::vec(0u8..2, 1..300),
            m in 0usize..400,
        ) {
            let full = naive_mul(&f, &g);
            let got = TruncPoly::from_coeffs(&f, m).mul_trunc(&TruncPoly::from_coeffs(&g, m)).unwrap();
            prop_assert_eq!(got, TruncPoly::from_coeffs(&full, m));
        }

        #[test]
        fn inverse_contract(mut h in proptest::collection::vec(0u8..2, 1..200), m in 0usize..300) {
            h[0] = 1;
            let hp = TruncPoly::from_coeffs(&h, m);
            let inv = hp.inv_trunc().unwrap();
            prop_assert!(hp.mul_trunc(&inv).unwrap().is_one());
            prop_assert_eq!(inv, TruncPoly::from_coeffs(&series_division(&h, m), m));
        }

        #[test]
        fn shift_is_monomial_product(f in proptest::collection::vec(0u8..2, 1..200), k in 0usize..250, m in 0usize..260) {
            let fp = TruncPoly::from_coeffs(&f, m);
            prop_assert_eq!(fp.shift_up(k), fp.mul_trunc(&TruncPoly::monomial(k, m)).unwrap());
        }
    }
}
