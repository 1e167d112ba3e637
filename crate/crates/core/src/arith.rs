//! Elementary integer arithmetic: primality, factorization, divisor counts,
//! Legendre symbols and modular exponentiation.
//!
//! Everything here operates on machine integers; the group orders in play
//! stay below 2^52, so `u64` with `u128` intermediates is exact.

/// Trial-division primality. The sizes in this crate never exceed a few
/// million, so nothing fancier is warranted.
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

pub fn is_odd_prime(p: u64) -> bool {
    p != 2 && is_prime(p)
}

/// Prime factorization as (prime, exponent) pairs, ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Number of positive divisors.
pub fn sigma0(n: u64) -> u64 {
    factorize(n).iter().map(|&(_, e)| e as u64 + 1).product()
}

/// Largest odd divisor of n.
pub fn largest_odd_divisor(mut n: u64) -> u64 {
    while n % 2 == 0 {
        n /= 2;
    }
    n
}

/// Euler phi.
pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .iter()
        .map(|&(p, e)| (p - 1) * p.pow(e - 1))
        .product()
}

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// b^e mod m, with m possibly 1 (result 0).
pub fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut base = (b % m) as u128;
    let m128 = m as u128;
    let mut acc = 1u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m128;
        }
        base = base * base % m128;
        e >>= 1;
    }
    acc as u64
}

/// Inverse of a mod m when gcd(a, m) = 1.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m as i128) as u64)
}

/// p-adic valuation of n (n > 0).
pub fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Legendre symbol (a | p) for odd prime p, as -1, 0 or 1.
pub fn legendre(a: i64, p: u64) -> i64 {
    let r = a.rem_euclid(p as i64) as u64;
    if r == 0 {
        return 0;
    }
    match pow_mod(r, (p - 1) / 2, p) {
        1 => 1,
        x if x == p - 1 => -1,
        _ => unreachable!("legendre power must be +-1 for prime modulus"),
    }
}

/// Smallest quadratic non-residue mod the odd prime p.
pub fn smallest_nonresidue(p: u64) -> u64 {
    (2..p)
        .find(|&a| legendre(a as i64, p) == -1)
        .expect("every odd prime has a non-residue")
}

/// Multiplicative order of a mod m divides `bound`; returns the exact order.
/// Requires a^bound = 1 mod m (else None).
pub fn exact_order(a: u64, m: u64, bound: u64) -> Option<u64> {
    if pow_mod(a, bound, m) != 1 {
        return None;
    }
    let mut ord = bound;
    for (q, _) in factorize(bound) {
        while ord % q == 0 && pow_mod(a, ord / q, m) == 1 {
            ord /= q;
        }
    }
    Some(ord)
}

/// CRT for two coprime moduli.
pub fn crt2(r1: u64, m1: u64, r2: u64, m2: u64) -> u64 {
    debug_assert_eq!(gcd(m1, m2), 1);
    let m1i = inv_mod(m1 % m2, m2).expect("coprime moduli");
    let k = ((r2 + m2 - r1 % m2) % m2) as u128 * m1i as u128 % m2 as u128;
    (r1 as u128 + k * m1 as u128) as u64
}

/// Deterministic xorshift-style generator used for reproducible sampling in
/// construction-time self checks and tests.
#[derive(Clone)]
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed ^ 0x9e3779b97f4a7c15)
    }

    pub fn next_u64(&mut self) -> u64 {
        // splitmix64
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n.max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_and_factorization() {
        assert!(is_odd_prime(3));
        assert!(is_odd_prime(13));
        assert!(!is_odd_prime(2));
        assert!(!is_odd_prime(1));
        assert!(!is_odd_prime(91));
        assert_eq!(factorize(168), vec![(2, 3), (3, 1), (7, 1)]);
        assert_eq!(sigma0(12), 6);
        assert_eq!(sigma0(1), 1);
        assert_eq!(largest_odd_divisor(14), 7);
        assert_eq!(largest_odd_divisor(8), 1);
        assert_eq!(euler_phi(27), 18);
    }

    #[test]
    fn modular_helpers() {
        assert_eq!(pow_mod(2, 10, 1000), 24);
        assert_eq!(inv_mod(3, 7), Some(5));
        assert_eq!(inv_mod(6, 9), None);
        assert_eq!(legendre(3, 7), -1);
        assert_eq!(legendre(2, 7), 1);
        assert_eq!(legendre(14, 7), 0);
        assert_eq!(smallest_nonresidue(3), 2);
        assert_eq!(smallest_nonresidue(5), 2);
        assert_eq!(smallest_nonresidue(7), 3);
        assert_eq!(exact_order(2, 9, 6), Some(6));
        assert_eq!(exact_order(4, 9, 6), Some(3));
        assert_eq!(crt2(2, 3, 3, 4), 11);
    }
}
