//! Word-sized prime fields and prime selection.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Default cap for [`primes_up_to`].
pub const DEFAULT_SIEVE_CAP: u64 = 1 << 20;

/// A prime modulus. Residues are always kept in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldPrime(u64, u64);

impl FieldPrime {
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 63 {
            return Err(Error::Parameter(format!("modulus {p} exceeds 2^63")));
        }
        if !is_prime(p) {
            return Err(Error::Parameter(format!("{p} is not prime")));
        }
        // Barrett constant floor(2^64 / p), used while p fits in 32 bits
        Ok(FieldPrime(p, (u64::MAX / p) + u64::from(u64::MAX % p == p - 1)))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn reduce(self, a: u64) -> u64 {
        if self.0 <= u32::MAX as u64 {
            self.barrett(a)
        } else {
            a % self.0
        }
    }

    /// `a mod p` for any `a < 2^64` when `p < 2^32`.
    #[inline]
    fn barrett(self, a: u64) -> u64 {
        let q = ((a as u128 * self.1 as u128) >> 64) as u64;
        let r = a - q * self.0;
        if r >= self.0 {
            r - self.0
        } else {
            r
        }
    }

    /// Reduces a signed integer into `[0, p)`.
    #[inline]
    pub fn reduce_signed(self, a: i64) -> u64 {
        let p = self.0 as i128;
        (((a as i128) % p + p) % p) as u64
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        if self.0 <= u32::MAX as u64 {
            self.barrett(a * b)
        } else {
            ((a as u128 * b as u128) % self.0 as u128) as u64
        }
    }

    pub fn pow(self, base: u64, exp: u64) -> u64 {
        mod_pow(base, exp, self)
    }

    pub fn inv(self, a: u64) -> Result<u64> {
        mod_inverse(a, self)
    }
}

impl std::fmt::Display for FieldPrime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered tuple of distinct primes, each below `2^bit_budget`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct PrimeTuple {
    pub primes: Vec<u64>,
    pub bit_budget: u32,
}

impl PrimeTuple {
    pub fn new(primes: Vec<u64>, bit_budget: u32) -> Result<Self> {
        let mut seen = HashSet::new();
        for &p in &primes {
            if !is_prime(p) {
                return Err(Error::Parameter(format!("{p} is not prime")));
            }
            if bit_budget < 64 && p >= 1u64 << bit_budget {
                return Err(Error::Parameter(format!("{p} exceeds 2^{bit_budget}")));
            }
            if !seen.insert(p) {
                return Err(Error::Parameter(format!("duplicate prime {p}")));
            }
        }
        Ok(PrimeTuple { primes, bit_budget })
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }
}

/// Sieve of Eratosthenes up to `bound` inclusive, with the default cap.
pub fn primes_up_to(bound: u64) -> Result<Vec<u64>> {
    primes_up_to_capped(bound, DEFAULT_SIEVE_CAP)
}

pub fn primes_up_to_capped(bound: u64, cap: u64) -> Result<Vec<u64>> {
    if bound < 2 {
        return Err(Error::Parameter(format!("sieve bound {bound} < 2")));
    }
    if bound > cap {
        return Err(Error::Parameter(format!("sieve bound {bound} over cap {cap}")));
    }
    let n = bound as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    Ok(out)
}

/// `base^exp mod p` by square-and-multiply.
pub fn mod_pow(base: u64, mut exp: u64, p: FieldPrime) -> u64 {
    let mut result = 1 % p.get();
    let mut b = p.reduce(base);
    while exp > 0 {
        if exp & 1 == 1 {
            result = p.mul(result, b);
        }
        b = p.mul(b, b);
        exp >>= 1;
    }
    result
}

/// Inverse by the extended Euclidean algorithm.
pub fn mod_inverse(a: u64, p: FieldPrime) -> Result<u64> {
    let a = p.reduce(a);
    if a == 0 {
        return Err(Error::NotInvertible(a, p.get()));
    }
    let (mut r0, mut r1) = (p.get() as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1);
    let m = p.get() as i128;
    Ok(((t0 % m + m) % m) as u64)
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod_u64(r, b, m);
        }
        b = mul_mod_u64(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &q in &SMALL {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &SMALL {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `p < 2^bit_budget` under which the values are pairwise
/// distinct residues.
pub fn fks_prime_for_set(values: &[u64], bit_budget: u32) -> Result<FieldPrime> {
    let distinct: Vec<u64> = {
        let mut v = values.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    if distinct.len() < 2 {
        return Err(Error::Parameter("need at least two distinct values".into()));
    }
    if bit_budget == 0 || bit_budget > 40 {
        return Err(Error::Parameter(format!("bit budget {bit_budget} outside 1..=40")));
    }
    let limit = (1u64 << bit_budget) - 1;
    if limit < 2 {
        return Err(Error::BudgetExhausted { bits: bit_budget });
    }
    let mut residues = HashSet::with_capacity(distinct.len());
    let mut p = 2u64;
    while p <= limit {
        if is_prime(p) {
            residues.clear();
            if distinct.iter().all(|&x| residues.insert(x % p)) {
                return FieldPrime::new(p);
            }
        }
        p += 1;
    }
    Err(Error::BudgetExhausted { bits: bit_budget })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn sieve_examples() {
        assert_eq!(primes_up_to(10).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(primes_up_to(2).unwrap(), vec![2]);
        let hundred = primes_up_to(100).unwrap();
        assert_eq!(hundred.len(), 25);
        assert_eq!(*hundred.last().unwrap(), 97);
        assert!(primes_up_to(1).is_err());
        assert!(primes_up_to(DEFAULT_SIEVE_CAP + 1).is_err());
    }

    #[test]
    fn sieve_matches_trial_division() {
        let sieve = primes_up_to(10_000).unwrap();
        let oracle: Vec<u64> = (2..=10_000).filter(|&n| trial_division(n)).collect();
        assert_eq!(sieve, oracle);
    }

    #[test]
    fn miller_rabin_agrees_with_sieve() {
        let sieve: HashSet<u64> = primes_up_to(20_000).unwrap().into_iter().collect();
        for n in 0..20_000 {
            assert_eq!(is_prime(n), sieve.contains(&n), "n = {n}");
        }
        assert!(is_prime(1_000_003));
        assert!(is_prime(999_983));
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn pow_examples() {
        let p = FieldPrime::new(1_000_003).unwrap();
        assert_eq!(mod_pow(2, 10, p), 1024);
        assert_eq!(mod_pow(2, 0, FieldPrime::new(7).unwrap()), 1);
        assert_eq!(mod_pow(3, 100, FieldPrime::new(101).unwrap()), 1);
        assert_eq!(mod_pow(5, u64::MAX, FieldPrime::new(7).unwrap()), {
            // 5 has order 6 mod 7; u64::MAX mod 6 = 3
            5u64.pow(3) % 7
        });
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        for p in primes_up_to(97).unwrap() {
            let fp = FieldPrime::new(p).unwrap();
            for b in 0..p {
                let mut naive = 1 % p;
                for e in 0..=12u64 {
                    assert_eq!(mod_pow(b, e, fp), naive);
                    naive = naive * b % p;
                }
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let seven = FieldPrime::new(7).unwrap();
        assert_eq!(mod_inverse(1, seven).unwrap(), 1);
        assert_eq!(mod_inverse(3, seven).unwrap(), 5);
        let big = FieldPrime::new(1_000_003).unwrap();
        let v = mod_inverse(10, big).unwrap();
        assert_eq!(10 * v % 1_000_003, 1);
        assert_eq!(mod_inverse(0, seven), Err(Error::NotInvertible(0, 7)));
        assert_eq!(mod_inverse(14, seven), Err(Error::NotInvertible(0, 7)));
    }

    #[test]
    fn inverse_exhaustive_small() {
        for p in [2u64, 3, 5, 97, 1009] {
            let fp = FieldPrime::new(p).unwrap();
            for a in 1..p {
                assert_eq!(a * mod_inverse(a, fp).unwrap() % p, 1);
            }
        }
    }

    #[test]
    fn fks_examples() {
        assert_eq!(fks_prime_for_set(&[0, 1, 3], 4).unwrap().get(), 5);
        assert_eq!(fks_prime_for_set(&[0, 1], 2).unwrap().get(), 2);
        assert_eq!(fks_prime_for_set(&[6, 20, 34], 5).unwrap().get(), 3);
        assert_eq!(
            fks_prime_for_set(&[0, 6], 2),
            Err(Error::BudgetExhausted { bits: 2 })
        );
    }

    #[test]
    fn field_prime_rejects_composites() {
        assert!(FieldPrime::new(1).is_err());
        assert!(FieldPrime::new(91).is_err());
        assert!(PrimeTuple::new(vec![3, 3], 4).is_err());
        assert!(PrimeTuple::new(vec![3, 17], 4).is_err());
        assert_eq!(PrimeTuple::new(vec![3, 5, 7], 4).unwrap().len(), 3);
    }

    proptest::proptest! {
        #[test]
        fn fks_output_separates(values in proptest::collection::hash_set(0u64..10_000, 2..12)) {
            let values: Vec<u64> = values.into_iter().collect();
            let p = fks_prime_for_set(&values, 16).unwrap().get();
            for (i, x) in values.iter().enumerate() {
                for y in &values[i + 1..] {
                    proptest::prop_assert_ne!(x % p, y % p);
                }
            }
            // Smallest: every smaller prime collides somewhere.
            for q in primes_up_to(p - 1).unwrap_or_default() {
                let distinct: HashSet<u64> = values.iter().map(|x| x % q).collect();
                proptest::prop_assert!(distinct.len() < values.len());
            }
        }

        #[test]
        fn signed_reduction_is_consistent(a in -1_000_000i64..1_000_000) {
            let p = FieldPrime::new(1009).unwrap();
            let r = p.reduce_signed(a);
            proptest::prop_assert!(r < 1009);
            proptest::prop_assert_eq!((r as i64 - a).rem_euclid(1009), 0);
        }
    }
}
