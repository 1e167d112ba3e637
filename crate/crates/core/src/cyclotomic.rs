//! Exact arithmetic in Z[zeta_L], the Galois action zeta -> zeta^a, and
//! Gauss sums over the residue rings.
//!
//! Elements are stored in canonical form as integer polynomials in zeta_L
//! of degree < phi(L), reduced modulo the L-th cyclotomic polynomial; two
//! elements are equal iff their canonical vectors agree (after lifting to a
//! common level). Sums accumulate in the raw monomial basis of length L and
//! are reduced once.

use crate::arith::{euler_phi, factorize, gcd, inv_mod, lcm};
use crate::characters::CharacterVec;
use crate::error::{Error, Result};
use crate::residue::RingElt;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Coefficients of the L-th cyclotomic polynomial, cached.
fn cyclotomic_poly(l: u64) -> std::sync::Arc<Vec<i64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, std::sync::Arc<Vec<i64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&l) {
        return hit.clone();
    }
    let poly = std::sync::Arc::new(compute_cyclotomic_poly(l));
    cache.lock().unwrap().insert(l, poly.clone());
    poly
}

/// Phi_L(x) via Phi_L = prod_{d | L} (x^{L/d} - 1)^{mu(d)}.
fn compute_cyclotomic_poly(l: u64) -> Vec<i64> {
    let mut num: Vec<Vec<i64>> = Vec::new();
    let mut den: Vec<Vec<i64>> = Vec::new();
    let primes: Vec<u64> = factorize(l).into_iter().map(|(p, _)| p).collect();
    let k = primes.len();
    for mask in 0u32..(1 << k) {
        let mut d = 1u64;
        for (i, &p) in primes.iter().enumerate() {
            if mask >> i & 1 == 1 {
                d *= p;
            }
        }
        let mu_neg = mask.count_ones() % 2 == 1;
        // x^{L/d} - 1
        let mut f = vec![0i64; (l / d) as usize + 1];
        f[0] = -1;
        *f.last_mut().unwrap() = 1;
        if mu_neg {
            den.push(f);
        } else {
            num.push(f);
        }
    }
    let mut acc = vec![1i64];
    for f in num {
        acc = poly_mul(&acc, &f);
    }
    for f in den {
        acc = poly_div_exact(&acc, &f);
    }
    debug_assert_eq!(acc.len() as u64 - 1, euler_phi(l));
    acc
}

fn poly_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact division of integer polynomials (b monic up to sign of leading ±1).
fn poly_div_exact(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut rem = a.to_vec();
    let db = b.len() - 1;
    let lead = *b.last().unwrap();
    debug_assert!(lead == 1 || lead == -1);
    let mut q = vec![0i64; rem.len().saturating_sub(db)];
    for i in (db..rem.len()).rev() {
        let c = rem[i] / lead;
        if c != 0 {
            q[i - db] = c;
            for (j, &bj) in b.iter().enumerate() {
                rem[i - db + j] -= c * bj;
            }
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0), "division must be exact");
    q
}

/// An element of Z[zeta_L] in canonical form.
#[derive(Clone, PartialEq, Eq)]
pub struct CycElt {
    level: u64,
    coeffs: Vec<i64>, // length phi(level)
}

impl std::fmt::Debug for CycElt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Cyc(L={}; {:?})", self.level, self.coeffs)
    }
}

impl CycElt {
    /// Canonical form of a raw monomial-coefficient vector (length level).
    pub fn from_raw(level: u64, mut raw: Vec<i64>) -> CycElt {
        assert!(level >= 1);
        assert_eq!(raw.len(), level as usize);
        let phi = euler_phi(level) as usize;
        let modulus = cyclotomic_poly(level);
        // reduce x^i for i >= phi using x^phi = -(lower terms)
        for i in (phi..raw.len()).rev() {
            let c = raw[i];
            if c == 0 {
                continue;
            }
            raw[i] = 0;
            for j in 0..phi {
                raw[i - phi + j] -= c * modulus[j];
            }
        }
        raw.truncate(phi);
        CycElt {
            level,
            coeffs: raw,
        }
    }

    pub fn zero(level: u64) -> CycElt {
        CycElt {
            level,
            coeffs: vec![0; euler_phi(level) as usize],
        }
    }

    pub fn from_int(n: i64) -> CycElt {
        CycElt {
            level: 1,
            coeffs: vec![n],
        }
    }

    pub fn one() -> CycElt {
        Self::from_int(1)
    }

    /// zeta_level^k.
    pub fn root_of_unity(level: u64, k: i64) -> CycElt {
        let mut raw = vec![0i64; level as usize];
        raw[k.rem_euclid(level as i64) as usize] = 1;
        CycElt::from_raw(level, raw)
    }

    pub fn i() -> CycElt {
        Self::root_of_unity(4, 1)
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// The same element viewed in Z[zeta_M] for level | M.
    pub fn lift(&self, m: u64) -> CycElt {
        assert_eq!(m % self.level, 0, "lift target must be a multiple level");
        if m == self.level {
            return self.clone();
        }
        let stride = (m / self.level) as usize;
        let mut raw = vec![0i64; m as usize];
        for (i, &c) in self.coeffs.iter().enumerate() {
            raw[i * stride] = c;
        }
        CycElt::from_raw(m, raw)
    }

    fn common_level(a: &CycElt, b: &CycElt) -> (CycElt, CycElt, u64) {
        let l = lcm(a.level, b.level);
        (a.lift(l), b.lift(l), l)
    }

    pub fn add(&self, other: &CycElt) -> CycElt {
        let (mut a, b, l) = Self::common_level(self, other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x += y;
        }
        let _ = l;
        a
    }

    pub fn sub(&self, other: &CycElt) -> CycElt {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> CycElt {
        CycElt {
            level: self.level,
            coeffs: self.coeffs.iter().map(|&c| -c).collect(),
        }
    }

    pub fn mul(&self, other: &CycElt) -> CycElt {
        let (a, b, l) = Self::common_level(self, other);
        let mut raw = vec![0i64; l as usize];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                if y == 0 {
                    continue;
                }
                raw[(i + j) % l as usize] += x * y;
            }
        }
        CycElt::from_raw(l, raw)
    }

    pub fn scale(&self, k: i64) -> CycElt {
        CycElt {
            level: self.level,
            coeffs: self.coeffs.iter().map(|&c| c * k).collect(),
        }
    }

    /// The ring automorphism zeta_L -> zeta_L^a, gcd(a, L) = 1.
    pub fn galois_apply(&self, a: u64) -> Result<CycElt> {
        let l = self.level;
        if gcd(a % l, l) != 1 && l > 1 {
            return Err(Error::NotCoprime { a, l });
        }
        let mut raw = vec![0i64; l as usize];
        for (i, &c) in self.coeffs.iter().enumerate() {
            raw[(i as u128 * a as u128 % l as u128) as usize] += c;
        }
        Ok(CycElt::from_raw(l, raw))
    }

    /// Complex conjugation zeta -> zeta^{-1}.
    pub fn conj(&self) -> CycElt {
        self.galois_apply(self.level - 1 + u64::from(self.level == 1))
            .expect("L-1 is coprime to L")
    }

    pub fn eq_value(&self, other: &CycElt) -> bool {
        let (a, b, _) = Self::common_level(self, other);
        a.coeffs == b.coeffs
    }

    /// Some(n) when the element is the rational integer n.
    pub fn as_int(&self) -> Option<i64> {
        if self.coeffs.iter().skip(1).all(|&c| c == 0) {
            Some(self.coeffs[0])
        } else {
            let down = self.reduce_level();
            if down.level == 1 {
                Some(down.coeffs[0])
            } else {
                None
            }
        }
    }

    /// Rewrite at the smallest cyclotomic level that contains the element
    /// (enough for display and rationality checks: tries divisors of level).
    pub fn reduce_level(&self) -> CycElt {
        let mut best = self.clone();
        for d in divisors(self.level) {
            if d == self.level {
                continue;
            }
            // candidate: does self lie in Z[zeta_d]?
            let cand = try_descend(self, d);
            if let Some(c) = cand {
                if c.level < best.level {
                    best = c;
                }
            }
        }
        best
    }

    /// Some((level, k)) when the element equals zeta_level^k exactly.
    pub fn as_root_of_unity(&self) -> Option<(u64, u64)> {
        let l = self.level;
        for k in 0..l {
            if self.eq_value(&CycElt::root_of_unity(l, k as i64)) {
                let g = gcd(k, l);
                if k == 0 {
                    return Some((1, 0));
                }
                return Some((l / g, k / g));
            }
        }
        // also -1 at odd levels, handled by doubling
        if l % 2 == 1 {
            let lifted = self.lift(2 * l);
            for k in 0..2 * l {
                if lifted.eq_value(&CycElt::root_of_unity(2 * l, k as i64)) {
                    let g = gcd(k, 2 * l);
                    return Some(if k == 0 { (1, 0) } else { (2 * l / g, k / g) });
                }
            }
        }
        None
    }

    /// Deterministic short rendering: roots of unity as "zeta_L^k", other
    /// elements as polynomials in zeta_L.
    pub fn display(&self) -> String {
        let r = self.reduce_level();
        if let Some(n) = r.as_int() {
            return n.to_string();
        }
        if let Some((l, k)) = r.as_root_of_unity() {
            return match (l, k) {
                (4, 1) => "i".to_string(),
                (4, 3) => "-i".to_string(),
                _ => format!("zeta{}^{}", l, k),
            };
        }
        let terms: Vec<String> = r
            .coeffs
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != 0)
            .map(|(i, &c)| match (i, c) {
                (0, c) => c.to_string(),
                (i, 1) => format!("zeta{}^{}", r.level, i),
                (i, -1) => format!("-zeta{}^{}", r.level, i),
                (i, c) => format!("{}*zeta{}^{}", c, r.level, i),
            })
            .collect();
        terms.join("+").replace("+-", "-")
    }
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

/// Whether x lies in the subring Z[zeta_d]; if so return it there.
fn try_descend(x: &CycElt, d: u64) -> Option<CycElt> {
    // brute reconstruction: lift every monomial of a candidate via solving
    // is overkill; instead lift Z[zeta_d] basis into level L and match by
    // linear elimination is what from_raw already does. Cheap approach:
    // x is in Z[zeta_d] iff applying every Galois automorphism that fixes
    // zeta_d fixes x.
    let l = x.level;
    for a in 1..l {
        if gcd(a, l) != 1 {
            continue;
        }
        if a % d == 1 {
            let img = x.galois_apply(a).ok()?;
            if !img.eq_value(x) {
                return None;
            }
        }
    }
    // reconstruct coordinates in Z[zeta_d] by solving against the lifted basis
    let phi_d = euler_phi(d) as usize;
    let mut basis: Vec<CycElt> = Vec::with_capacity(phi_d);
    for i in 0..phi_d {
        basis.push(CycElt::root_of_unity(d, i as i64).lift(l));
    }
    // Gaussian elimination over the rationals would be needed in general;
    // here we exploit that the lifted basis vectors are monomial-supported
    // only when d | l with coprime cofactor. Fall back to a small integer
    // least-squares-free solve via linear algebra over Z.
    let phi_l = euler_phi(l) as usize;
    let mut mat: Vec<Vec<i128>> = vec![vec![0; phi_d]; phi_l];
    for (j, b) in basis.iter().enumerate() {
        for i in 0..phi_l {
            mat[i][j] = b.coeffs[i] as i128;
        }
    }
    let rhs: Vec<i128> = x.coeffs.iter().map(|&c| c as i128).collect();
    let sol = solve_integer_system(&mat, &rhs)?;
    Some(CycElt {
        level: d,
        coeffs: sol,
    })
}

/// Solve mat * y = rhs exactly over the integers (unique solution expected
/// when it exists; small systems only).
fn solve_integer_system(mat: &[Vec<i128>], rhs: &[i128]) -> Option<Vec<i64>> {
    let rows = mat.len();
    let cols = if rows == 0 { 0 } else { mat[0].len() };
    let mut a: Vec<Vec<i128>> = (0..rows)
        .map(|i| {
            let mut r = mat[i].clone();
            r.push(rhs[i]);
            r
        })
        .collect();
    let mut pivot_rows = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        // find a pivot with minimal absolute value to limit growth
        let Some(pr) = (r..rows)
            .filter(|&i| a[i][c] != 0)
            .min_by_key(|&i| a[i][c].abs()) else {
            return None; // basis vectors are independent, must pivot
        };
        a.swap(r, pr);
        // eliminate below and above by exact rational-free reduction
        for i in 0..rows {
            if i == r || a[i][c] == 0 {
                continue;
            }
            let g = gcd_i128(a[r][c].abs(), a[i][c].abs());
            let (fr, fi) = (a[i][c] / g, a[r][c] / g);
            for j in 0..=cols {
                a[i][j] = a[i][j] * fi - a[r][j] * fr;
            }
        }
        pivot_rows.push(r);
        r += 1;
        if r == rows {
            break;
        }
    }
    // back out solution
    let mut y = vec![0i64; cols];
    for (c, &pr) in pivot_rows.iter().enumerate() {
        let v = a[pr][cols];
        let p = a[pr][c];
        if v % p != 0 {
            return None;
        }
        y[c] = (v / p) as i64;
    }
    // consistency of remaining rows
    for i in r..rows {
        if a[i][cols] != 0 {
            return None;
        }
    }
    // verify
    for i in 0..rows {
        let mut acc = 0i128;
        for c in 0..cols {
            acc += mat[i][c] * y[c] as i128;
        }
        if acc != rhs[i] {
            return None;
        }
    }
    Some(y)
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Sign convention of the additive character psi of conductor 0: the value
/// at principal part r is e^{+-2 pi i r}. The symmetric/asymmetric
/// classification is invariant under flipping it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PsiSign {
    Plus,
    Minus,
}

impl PsiSign {
    fn apply(self, k: u64, modulus: u64) -> u64 {
        match self {
            PsiSign::Plus => k % modulus,
            PsiSign::Minus => (modulus - k % modulus) % modulus,
        }
    }
}

/// Conductor of psi_K = psi ∘ Tr for the host ring of theta: 1 for
/// ramified K, 0 otherwise.
pub fn psi_k_conductor(theta: &CharacterVec) -> u32 {
    match theta.host().ext() {
        Some(e) if e.ramified() => 1,
        _ => 0,
    }
}

/// The unnormalized Gauss sum
///
///     sum over x in (O_K / p^a)^*  of  theta^{-1}(x) psi_K(x / c),
///
/// with c = (unit) * pi^{a + n(psi_K)}, as an exact cyclotomic integer.
/// No primitivity requirement; `gauss_sum` is the checked entry point.
pub fn gauss_sum_raw(
    theta: &CharacterVec,
    sign: PsiSign,
    c_val: u32,
    c_unit: Option<&RingElt>,
) -> Result<CycElt> {
    let host = theta.host();
    let ring = host.ring();
    let p = ring.p;
    let a = ring.n;
    let expected = a + psi_k_conductor(theta);
    if c_val != expected {
        return Err(Error::BadValuation {
            expected,
            got: c_val,
        });
    }

    // additive character data: values live in Z/p^m
    enum Tr {
        Base,          // exponent = s mod p^a
        Unram,         // exponent = 2 s mod p^a
        RamEven(u64),  // exponent = 2 t * w mod p^m, m = a/2
        RamOdd(u64),   // exponent = 2 s * w mod p^m, m = (a+1)/2
    }
    let (tr, m_pow) = match ring.ext {
        None => (Tr::Base, a),
        Some(e) if !e.ramified() => (Tr::Unram, a),
        Some(e) => {
            // 1/d^k has unit part ((-1)^k u0^k)^{-1} mod p^k
            if a % 2 == 0 {
                let k = a / 2;
                let pm = p.pow(k);
                let unit = pow_i128(-(e.u0() as i128), k, pm);
                let w = inv_mod(unit, pm).expect("unit part invertible");
                (Tr::RamEven(w), k)
            } else {
                let k = (a + 1) / 2;
                let pm = p.pow(k);
                let unit = pow_i128(-(e.u0() as i128), k, pm);
                let w = inv_mod(unit, pm).expect("unit part invertible");
                (Tr::RamOdd(w), k)
            }
        }
    };
    let pm = p.pow(m_pow);

    let e_host = host.exponent();
    let ord_theta = theta.order();
    let level = lcm(ord_theta, pm);
    let mut raw = vec![0i64; level as usize];

    // theta^{-1}(c_unit) rotation, as a zeta_level exponent
    let shift = match c_unit {
        None => 0u64,
        Some(u) => {
            let v = theta.evaluate(u)?; // exponent mod e_host
            let v_ord = (v as u128 * ord_theta as u128 / e_host as u128) as u64;
            ((ord_theta - v_ord) % ord_theta) * (level / ord_theta)
        }
    };

    host.for_each_element(|exps, x| {
        let v = theta.eval_exps(exps); // mod e_host
        let v_ord = (v as u128 * ord_theta as u128 / e_host as u128) as u64;
        let theta_inv_exp = ((ord_theta - v_ord) % ord_theta) * (level / ord_theta);
        let k = match tr {
            Tr::Base => x.a % pm,
            Tr::Unram => 2 * x.a % pm,
            Tr::RamEven(w) => (2 * x.b as u128 * w as u128 % pm as u128) as u64,
            Tr::RamOdd(w) => (2 * x.a as u128 * w as u128 % pm as u128) as u64,
        };
        let psi_exp = sign.apply(k, pm) * (level / pm);
        let idx = ((theta_inv_exp + psi_exp + shift) % level) as usize;
        raw[idx] += 1;
    });
    Ok(CycElt::from_raw(level, raw))
}

fn pow_i128(base: i128, e: u32, m: u64) -> u64 {
    let mut acc = 1i128;
    let b = base.rem_euclid(m as i128);
    for _ in 0..e {
        acc = acc * b % m as i128;
    }
    acc.rem_euclid(m as i128) as u64
}

/// Checked Gauss sum: theta must be primitive at the level of its host
/// ring, c of the correct valuation.
pub fn gauss_sum(
    theta: &CharacterVec,
    sign: PsiSign,
    c_val: u32,
    c_unit: Option<&RingElt>,
) -> Result<CycElt> {
    let cond = theta.conductor();
    let level = theta.host().level();
    if cond != level {
        return Err(Error::NotPrimitive {
            conductor: cond,
            level,
        });
    }
    gauss_sum_raw(theta, sign, c_val, c_unit)
}

/// theta(-1) as +1 or -1.
pub fn theta_at_minus_one(theta: &CharacterVec) -> Result<i64> {
    let ring = theta.host().ring();
    let minus_one = ring.elt(ring.mod_a - 1, 0);
    let v = theta.evaluate(&minus_one)?;
    let e = theta.host().exponent();
    if v == 0 {
        Ok(1)
    } else if 2 * v == e {
        Ok(-1)
    } else {
        Err(Error::Mismatch(format!(
            "theta(-1) must be a sign, got exponent {v}/{e}"
        )))
    }
}

/// The modulus identity theta(-1) * g(theta) * g(theta^{-1}) as an exact
/// integer: equals q^{a(theta)} for primitive theta (orthogonality). The
/// companion identity g(theta) * conj(g(theta)) = q^{a(theta)}, with conj
/// the value conjugation zeta -> zeta^{-1}, is equivalent to it.
pub fn gauss_modulus_identity(theta: &CharacterVec, sign: PsiSign) -> Result<i64> {
    let c_val = theta.host().level() + psi_k_conductor(theta);
    let g = gauss_sum(theta, sign, c_val, None)?;
    let g_bar = gauss_sum(&theta.inverse(), sign, c_val, None)?;
    let prod = g.mul(&g_bar).scale(theta_at_minus_one(theta)?);
    prod.as_int()
        .ok_or_else(|| Error::Mismatch("theta(-1) g(theta) g(conj theta) is not rational".into()))
}

/// A unit-modulus cyclotomic value stored as num / den with den a positive
/// integer and num * conj(num) = den^2 exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitCyc {
    pub num: CycElt,
    pub den: u64,
}

impl UnitCyc {
    pub fn new(num: CycElt, den: u64) -> Result<UnitCyc> {
        let sq = num.mul(&num.conj());
        if sq.as_int() != Some((den * den) as i64) {
            return Err(Error::NotUnitModulus);
        }
        Ok(UnitCyc { num, den })
    }

    pub fn from_root_of_unity(level: u64, k: i64) -> UnitCyc {
        UnitCyc {
            num: CycElt::root_of_unity(level, k),
            den: 1,
        }
    }

    pub fn one() -> UnitCyc {
        Self::from_root_of_unity(1, 0)
    }

    pub fn neg(&self) -> UnitCyc {
        UnitCyc {
            num: self.num.neg(),
            den: self.den,
        }
    }

    pub fn mul(&self, other: &UnitCyc) -> UnitCyc {
        UnitCyc {
            num: self.num.mul(&other.num),
            den: self.den * other.den,
        }
    }

    pub fn level(&self) -> u64 {
        self.num.level()
    }

    /// Equality of the represented values: num1 * den2 = num2 * den1.
    pub fn eq_value(&self, other: &UnitCyc) -> bool {
        self.num
            .scale(other.den as i64)
            .eq_value(&other.num.scale(self.den as i64))
    }

    pub fn display(&self) -> String {
        if self.den == 1 {
            self.num.display()
        } else {
            format!("({})/{}", self.num.display(), self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::{legendre_character, CharacterVec};
    use crate::residue::unit_group;

    #[test]
    fn cyclotomic_polys() {
        assert_eq!(compute_cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(compute_cyclotomic_poly(2), vec![1, 1]);
        assert_eq!(compute_cyclotomic_poly(3), vec![1, 1, 1]);
        assert_eq!(compute_cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(compute_cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(compute_cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn ring_identities() {
        // zeta_3 + zeta_3^2 = -1
        let z3 = CycElt::root_of_unity(3, 1);
        let s = z3.add(&z3.mul(&z3));
        assert_eq!(s.as_int(), Some(-1));
        // zeta_4^2 = -1
        let i = CycElt::i();
        assert_eq!(i.mul(&i).as_int(), Some(-1));
        // 1 + zeta_5 + ... + zeta_5^4 = 0
        let mut acc = CycElt::zero(5);
        for k in 0..5 {
            acc = acc.add(&CycElt::root_of_unity(5, k));
        }
        assert!(acc.is_zero());
        // canonical uniqueness: x - x = 0
        let x = CycElt::from_raw(12, vec![3, -1, 4, 1, -5, 9, 2, -6, 5, 3, -5, 8]);
        assert!(x.sub(&x).is_zero());
    }

    #[test]
    fn galois_action() {
        let x = CycElt::root_of_unity(5, 1).add(&CycElt::root_of_unity(5, 4));
        assert!(x.galois_apply(1).unwrap().eq_value(&x));
        // a = 2 sends zeta_5 + zeta_5^4 to zeta_5^2 + zeta_5^3
        let y = CycElt::root_of_unity(5, 2).add(&CycElt::root_of_unity(5, 3));
        assert!(x.galois_apply(2).unwrap().eq_value(&y));
        // a = L - 1 is conjugation
        assert!(x.galois_apply(4).unwrap().eq_value(&x.conj()));
        // not coprime
        assert!(x.galois_apply(5).is_err());
        // ring homomorphism on deterministic samples
        let a = CycElt::from_raw(12, vec![1, 2, 0, -3, 1, 0, 4, 0, 0, -1, 2, 7]);
        let b = CycElt::from_raw(12, vec![0, 1, 1, 0, -2, 3, 0, 1, -4, 0, 0, 2]);
        for k in [5u64, 7, 11] {
            let lhs = a.add(&b).galois_apply(k).unwrap();
            let rhs = a.galois_apply(k).unwrap().add(&b.galois_apply(k).unwrap());
            assert!(lhs.eq_value(&rhs));
            let lhs = a.mul(&b).galois_apply(k).unwrap();
            let rhs = a.galois_apply(k).unwrap().mul(&b.galois_apply(k).unwrap());
            assert!(lhs.eq_value(&rhs));
        }
        // composition law
        let c = a.galois_apply(5).unwrap().galois_apply(7).unwrap();
        assert!(c.eq_value(&a.galois_apply(35 % 12).unwrap()));
    }

    #[test]
    fn legendre_gauss_sum_mod_three() {
        // rank-1 sanity case over the base field: Legendre mod 3, the sum
        // is zeta_3 - zeta_3^2, whose square is -3
        let g = unit_group(3, 1, None).unwrap();
        let chi = legendre_character(&g);
        let s = gauss_sum(&chi, PsiSign::Plus, 1, None).unwrap();
        let expect = CycElt::root_of_unity(3, 1).sub(&CycElt::root_of_unity(3, 2));
        assert!(s.eq_value(&expect));
        assert_eq!(s.mul(&s).as_int(), Some(-3));
        assert_eq!(gauss_modulus_identity(&chi, PsiSign::Plus).unwrap(), 3);
        // value-conjugation form of the same identity
        assert_eq!(s.mul(&s.conj()).as_int(), Some(3));
    }

    #[test]
    fn trivial_character_raw_sum() {
        // trivial multiplicative character on (Z/p)^* with nontrivial psi:
        // a pure geometric sum over the units, equal to -1
        for p in [3u64, 5, 7, 11] {
            let g = unit_group(p, 1, None).unwrap();
            let chi = CharacterVec::trivial(&g);
            let s = gauss_sum_raw(&chi, PsiSign::Plus, 1, None).unwrap();
            assert_eq!(s.as_int(), Some(-1));
            // and the strict entry point rejects it
            assert!(matches!(
                gauss_sum(&chi, PsiSign::Plus, 1, None),
                Err(Error::NotPrimitive { .. })
            ));
        }
    }

    #[test]
    fn wrong_valuation_rejected() {
        let g = unit_group(3, 1, None).unwrap();
        let chi = legendre_character(&g);
        assert!(matches!(
            gauss_sum(&chi, PsiSign::Plus, 2, None),
            Err(Error::BadValuation { .. })
        ));
    }

    #[test]
    fn unit_cyc_invariants() {
        let i = UnitCyc::from_root_of_unity(4, 1);
        assert!(i.mul(&i).eq_value(&UnitCyc::from_root_of_unity(2, 1)));
        assert!(UnitCyc::new(CycElt::from_int(2), 1).is_err());
        assert!(UnitCyc::new(CycElt::from_int(2), 2).is_ok());
    }

    #[test]
    fn display_and_roots() {
        assert_eq!(CycElt::i().display(), "i");
        assert_eq!(CycElt::i().neg().display(), "-i");
        assert_eq!(CycElt::from_int(-1).display(), "-1");
        assert_eq!(CycElt::root_of_unity(8, 1).display(), "zeta8^1");
        assert_eq!(
            CycElt::root_of_unity(12, 4).as_root_of_unity(),
            Some((3, 1))
        );
        // -zeta_3 has order 6
        let m = CycElt::root_of_unity(3, 1).neg();
        assert_eq!(m.as_root_of_unity(), Some((6, 5)));
    }
}
