//! Carry-less multiplication of bit-packed polynomials over GF(2).
//!
//! The word kernel uses `pclmulqdq` when the CPU has it and a bit-serial loop
//! otherwise. Products above [`KARATSUBA_WORDS`] words recurse through
//! Karatsuba.

use std::sync::OnceLock;

const KARATSUBA_WORDS: usize = 24;

fn has_pclmul() -> bool {
    static FLAG: OnceLock<bool> = OnceLock::new();
    *FLAG.get_or_init(|| {
        #[cfg(target_arch = "x86_64")]
        {
            std::arch::is_x86_feature_detected!("pclmulqdq")
                && std::arch::is_x86_feature_detected!("sse2")
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            false
        }
    })
}

/// 64x64 -> 128 carry-less product, software path.
#[inline]
fn clmul_serial(a: u64, b: u64) -> (u64, u64) {
    let mut lo = 0u64;
    let mut hi = 0u64;
    let mut bb = b;
    while bb != 0 {
        let i = bb.trailing_zeros();
        lo ^= a << i;
        if i > 0 {
            hi ^= a >> (64 - i);
        }
        bb &= bb - 1;
    }
    (lo, hi)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq,sse2")]
unsafe fn mul_school_hw(a: &[u64], b: &[u64], out: &mut [u64]) {
    use std::arch::x86_64::*;
    let nout = out.len();
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 || i >= nout {
            continue;
        }
        let va = _mm_set_epi64x(0, ai as i64);
        let jmax = b.len().min(nout - i);
        for (j, &bj) in b[..jmax].iter().enumerate() {
            if bj == 0 {
                continue;
            }
            let vb = _mm_set_epi64x(0, bj as i64);
            let r = _mm_clmulepi64_si128(va, vb, 0x00);
            let lo = _mm_cvtsi128_si64(r) as u64;
            let hi = _mm_cvtsi128_si64(_mm_unpackhi_epi64(r, r)) as u64;
            out[i + j] ^= lo;
            if i + j + 1 < nout {
                out[i + j + 1] ^= hi;
            }
        }
    }
}

fn mul_school_soft(a: &[u64], b: &[u64], out: &mut [u64]) {
    let nout = out.len();
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 || i >= nout {
            continue;
        }
        let jmax = b.len().min(nout - i);
        for (j, &bj) in b[..jmax].iter().enumerate() {
            if bj == 0 {
                continue;
            }
            let (lo, hi) = clmul_serial(ai, bj);
            out[i + j] ^= lo;
            if i + j + 1 < nout {
                out[i + j + 1] ^= hi;
            }
        }
    }
}

/// `out ^= a*b`, truncated to `out.len()` words.
fn mul_school(a: &[u64], b: &[u64], out: &mut [u64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if has_pclmul() {
            // SAFETY: the required CPU features were detected at runtime.
            unsafe { mul_school_hw(a, b, out) };
            return;
        }
    }
    mul_school_soft(a, b, out)
}

/// Full product `out ^= a*b` with `out.len() >= a.len() + b.len()`.
fn mul_full(a: &[u64], b: &[u64], out: &mut [u64]) {
    let n = a.len().min(b.len());
    if n < KARATSUBA_WORDS {
        mul_school(a, b, out);
        return;
    }
    if a.len() != b.len() {
        // split the longer operand into chunks of the shorter one's length
        let (long, short) = if a.len() > b.len() { (a, b) } else { (b, a) };
        let mut off = 0;
        while off < long.len() {
            let end = (off + short.len()).min(long.len());
            mul_full(&long[off..end], short, &mut out[off..]);
            off = end;
        }
        return;
    }
    let h = n / 2;
    let (a0, a1) = a.split_at(h);
    let (b0, b1) = b.split_at(h);
    // z0 = a0*b0, z2 = a1*b1, z1 = (a0+a1)(b0+b1) - z0 - z2
    let mut z0 = vec![0u64; 2 * h];
    mul_full(a0, b0, &mut z0);
    let hl = n - h;
    let mut z2 = vec![0u64; 2 * hl];
    mul_full(a1, b1, &mut z2);
    let mut sa = a1.to_vec();
    for (x, y) in sa.iter_mut().zip(a0) {
        *x ^= y;
    }
    let mut sb = b1.to_vec();
    for (x, y) in sb.iter_mut().zip(b0) {
        *x ^= y;
    }
    let mut z1 = vec![0u64; 2 * hl];
    mul_full(&sa, &sb, &mut z1);
    for (x, y) in z1.iter_mut().zip(&z0) {
        *x ^= y;
    }
    for (x, y) in z1.iter_mut().zip(&z2) {
        *x ^= y;
    }
    for (i, w) in z0.iter().enumerate() {
        out[i] ^= w;
    }
    for (i, w) in z1.iter().enumerate() {
        out[i + h] ^= w;
    }
    for (i, w) in z2.iter().enumerate() {
        out[i + 2 * h] ^= w;
    }
}

/// `out ^= (a*b) mod x^(64*out.len())`.
pub(crate) fn mul_trunc_words(a: &[u64], b: &[u64], out: &mut [u64]) {
    let a = trim(a);
    let b = trim(b);
    if a.is_empty() || b.is_empty() {
        return;
    }
    let nout = out.len();
    let a = &a[..a.len().min(nout)];
    let b = &b[..b.len().min(nout)];
    let sparse = a.iter().filter(|&&w| w != 0).count().min(b.iter().filter(|&&w| w != 0).count());
    if a.len().min(b.len()) < KARATSUBA_WORDS || sparse * 4 < a.len().min(b.len()) {
        mul_school(a, b, out);
        return;
    }
    let mut full = vec![0u64; a.len() + b.len()];
    mul_full(a, b, &mut full);
    for (o, w) in out.iter_mut().zip(&full) {
        *o ^= w;
    }
}

fn trim(w: &[u64]) -> &[u64] {
    let mut n = w.len();
    while n > 0 && w[n - 1] == 0 {
        n -= 1;
    }
    &w[..n]
}
