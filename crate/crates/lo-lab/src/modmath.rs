//! Small modular-arithmetic helpers for primes up to the scan guardrail.

/// Deterministic primality by trial division; fine for the p ≤ 2²⁶ range
/// this crate scans.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest odd prime strictly greater than `threshold`.
pub fn next_odd_prime_above(threshold: u64) -> u64 {
    let mut p = threshold.max(2) + 1;
    if p % 2 == 0 {
        p += 1;
    }
    while !is_prime(p) {
        p += 2;
    }
    p
}

/// `base^exp mod modulus` by square-and-multiply.
pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut acc = 1u128;
    let mut b = (base % modulus) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Inverse of `a` modulo a prime `p` (Fermat).
pub fn mod_inverse(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    mod_pow(a, p - 2, p)
}

/// Centered representative of `x mod p` in `(−p/2, p/2]`.
pub fn centered(x: i64, p: u64) -> i64 {
    let p_i = p as i64;
    let mut r = x.rem_euclid(p_i);
    if r > p_i / 2 {
        r -= p_i;
    }
    r
}

/// Numerator of the distance to the nearest integer: for `x ∈ [0, p)`,
/// `‖x/p‖ = min(x, p−x)/p`. All integer, no rounding.
pub fn dist_numerator(x: u64, p: u64) -> u64 {
    debug_assert!(x < p);
    x.min(p - x)
}
