//! Candidate minimal pseudo-eigenvalues per local type, the equivalence
//! relation z2 = Psi_p(chi_p(sigma)) sigma(z1) on unit-modulus values, and
//! the symmetric/asymmetric classification that turns type counts into
//! orbit-pair counts.
//!
//! Only the unit-modulus algebraic part of a pseudo-eigenvalue is stored:
//! powers of p and the Galois-fixed transcendental normalization carry no
//! orbit information. For a ramified-supercuspidal type the candidate pair
//! is {lambda, -lambda} with
//!
//! ```text
//!     lambda = (sign prefactor) * u^{a+1} * g(theta) / p^{a/2},
//! ```
//!
//! where g is the exact Gauss sum and u is a square root of the unit part
//! of theta(pi^2); both square roots appear, which is why only the
//! unordered pair is well-defined.

use crate::arith::{gcd, is_odd_prime, lcm, legendre, pow_mod, sigma0};
use crate::characters::{
    central_fiber, factors_through_norm, partition_coset, CharacterVec, LocalNebentypus,
};
use crate::cyclotomic::{gauss_sum, CycElt, PsiSign, UnitCyc};
use crate::error::{Error, Result};
use crate::local_types::{enumerate_orbits, LTCount, LocalTypeOrbit, OrbitData, TypeKind};
use crate::residue::{base_level_for, structure_maps, unit_group, QuadExt};
use std::sync::OnceLock;

/// The two readings of the character evaluation at the Weil element over
/// the uniformizer in the theta(pi^2) formula: through the norm of pi
/// (which carries the unit u0 with -d = p u0), or through the uniformizer
/// class p alone. The norm reading is the one consistent with the level-27
/// ground truth; see `validated_reading`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GPiReading {
    NormOfUniformizer,
    UniformizerClass,
}

/// An unordered pair {lambda, -lambda} of unit-modulus values together
/// with its verdict under the equivalence relation.
#[derive(Debug, Clone)]
pub struct LambdaPair {
    pub plus: UnitCyc,
    pub minus: UnitCyc,
    pub symmetric: bool,
}

impl LambdaPair {
    /// Deterministic description, e.g. "{1, -1}" or "{i, -i}".
    pub fn display(&self) -> String {
        let mut v = [self.plus.display(), self.minus.display()];
        v.sort();
        format!("{{{}, {}}}", v[0], v[1])
    }
}

/// Whether z1 ~ z2 under z2 = Psi_p(chi_p(sigma)) sigma(z1): scan the
/// Galois automorphisms of Q(zeta_L'), L' = lcm(L, p); the nebentypus
/// factor is the Legendre character of a mod p when Psi_p is ramified and
/// constantly 1 otherwise.
pub fn lambda_equiv(z1: &UnitCyc, z2: &UnitCyc, psi: &LocalNebentypus, p: u64) -> Result<bool> {
    if !is_odd_prime(p) {
        return Err(Error::NotOddPrime(p));
    }
    // unit modulus enforced
    for z in [z1, z2] {
        if !z
            .num
            .mul(&z.num.conj())
            .as_int()
            .is_some_and(|v| v == (z.den * z.den) as i64)
        {
            return Err(Error::NotUnitModulus);
        }
    }
    let l = lcm(lcm(z1.level(), z2.level()), 1);
    let lp = lcm(l, p);
    let n1 = z1.num.lift(lp);
    let n2 = z2.num.lift(lp);

    // cheap filter: compare images in F_q for a prime q = 1 mod L'
    let q = {
        let mut k = 1u64;
        loop {
            let cand = k * lp + 1;
            if cand > 2 && crate::arith::is_prime(cand) {
                break cand;
            }
            k += 1;
        }
    };
    let omega = {
        // a primitive L'-th root of unity in F_q
        let mut g = 2u64;
        loop {
            let w = pow_mod(g, (q - 1) / lp, q);
            if crate::arith::exact_order(w, q, lp) == Some(lp) || lp == 1 {
                break w;
            }
            g += 1;
        }
    };
    let eval_fq = |c: &CycElt, a: u64| -> u64 {
        // value of sigma_a(c) in F_q
        let mut acc = 0u128;
        for (i, &co) in c.coeffs().iter().enumerate() {
            if co == 0 {
                continue;
            }
            let w = pow_mod(omega, (i as u64 * a) % lp, q);
            let term = (co.rem_euclid(q as i64) as u128) * w as u128 % q as u128;
            acc = (acc + term) % q as u128;
        }
        acc as u64
    };
    let rhs_fq = eval_fq(&n2, 1) as u128 * (z1.den % q) as u128 % q as u128;

    for a in 1..=lp {
        if gcd(a, lp) != 1 {
            continue;
        }
        let psi_factor: i64 = if psi.ramified { legendre(a as i64, p) } else { 1 };
        // filter in F_q first
        let mut lhs = eval_fq(&n1, a) as u128 * (z2.den % q) as u128 % q as u128;
        if psi_factor == -1 {
            lhs = (q as u128 - lhs) % q as u128;
        }
        if lhs != rhs_fq {
            continue;
        }
        // exact confirmation
        let cand = n1.galois_apply(a)?.scale(psi_factor * z2.den as i64);
        if cand.eq_value(&n2.scale(z1.den as i64)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Pseudo-eigenvalues of the unramified Steinberg twists (level p^1,
/// unramified nebentypus): lambda = -1/psi(p) with psi(p)^2 the inverse
/// nebentypus value at p. Value +1 gives the rational pair {1, -1}
/// (asymmetric); value -1 gives {i, -i} (symmetric).
pub fn steinberg_lambda(psi: &LocalNebentypus, p: u64) -> Result<LambdaPair> {
    if psi.ramified {
        return Err(Error::SteinbergRamified);
    }
    let (plus, minus) = if psi.value_at_p == 1 {
        (UnitCyc::one(), UnitCyc::one().neg())
    } else {
        (
            UnitCyc::from_root_of_unity(4, 1),
            UnitCyc::from_root_of_unity(4, 3),
        )
    };
    let symmetric = lambda_equiv(&plus, &minus, psi, p)?;
    Ok(LambdaPair {
        plus,
        minus,
        symmetric,
    })
}

/// Local nebentypus value Psi_p(-1/p^{N_p}) (a sign): value_at_p^{N_p}
/// times the Dirichlet p-part at -1. Flips the whole pair {l, -l}, so the
/// verdict never depends on it; kept for fidelity of the representative.
fn sign_prefactor(psi: &LocalNebentypus, p: u64, n: u32) -> i64 {
    let v = if n % 2 == 0 { 1 } else { psi.value_at_p as i64 };
    let dirichlet_minus_one = if psi.ramified { legendre(-1, p as u64) } else { 1 };
    v * dirichlet_minus_one
}

/// The unit part of theta(pi^2) = (-1/p) p^{k-1} Psi_p(-g_pi), as a sign:
/// the weight enters only through p^{k-1}, whose unit part is trivial.
fn theta_pi_sq_unit(ext: &QuadExt, psi: &LocalNebentypus, reading: GPiReading) -> i64 {
    let p = ext.p;
    let psi_dir = |u: i64| -> i64 {
        if psi.ramified {
            legendre(u, p)
        } else {
            1
        }
    };
    let psi_at_minus_g_pi = match reading {
        // -g_pi evaluated through the norm N(pi) = p * u0
        GPiReading::NormOfUniformizer => psi.value_at_p as i64 * psi_dir(-(ext.u0() as i64)),
        // through the uniformizer class p alone
        GPiReading::UniformizerClass => psi.value_at_p as i64 * psi_dir(-1),
    };
    legendre(-1, p) * psi_at_minus_g_pi
}

/// Candidate pair {lambda, -lambda} for one ramified supercuspidal orbit,
/// from the exact Gauss sum of theta and the square roots of the unit part
/// of theta(pi^2).
pub fn scr_lambda_pair(
    ext: &QuadExt,
    theta: &CharacterVec,
    psi: &LocalNebentypus,
    reading: GPiReading,
    sign: PsiSign,
) -> Result<LambdaPair> {
    let a = theta.host().level();
    if a % 2 != 0 {
        return Err(Error::OddConductor(a));
    }
    let p = ext.p;
    let gq = unit_group(p, base_level_for(ext, a), None)?;
    let maps = structure_maps(theta.host(), &gq)?;
    if factors_through_norm(theta, &maps.norm) {
        return Err(Error::NormFactoring);
    }

    let g = gauss_sum(theta, sign, a + 1, None)?;
    let den = p.pow(a / 2);
    // u^2 in {1, -1}; u^{a+1} = u up to sign since a+1 is odd, so the pair
    // picks up a factor 1 or i
    let u_sq = theta_pi_sq_unit(ext, psi, reading);
    let w = if u_sq == 1 {
        CycElt::one()
    } else {
        CycElt::i()
    };
    let pref = sign_prefactor(psi, p, a + 1);
    let lam_num = g.mul(&w).scale(pref);
    let plus = UnitCyc::new(lam_num, den)?;
    let minus = plus.neg();
    let symmetric = lambda_equiv(&plus, &minus, psi, p)?;
    Ok(LambdaPair {
        plus,
        minus,
        symmetric,
    })
}

/// Validation of the uniformizer-evaluation reading against the level-27
/// ground truth: at (p=3, n=3, tame) the two candidate pairs must be
/// {1, -1} and {i, -i}, both symmetric.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ReadingValidation {
    pub selected: GPiReading,
    pub anchor_pairs: Vec<String>,
    pub anchor_symmetric: bool,
}

fn reading_anchor_pairs(reading: GPiReading) -> Result<Vec<LambdaPair>> {
    let psi = LocalNebentypus::tame();
    let (orbits, _) = enumerate_orbits(3, 3, &psi)?;
    let mut out = Vec::new();
    for o in orbits {
        if let OrbitData::Sc { ext, theta, .. } = &o.data {
            if o.kind == TypeKind::ScRamified {
                out.push(scr_lambda_pair(ext, theta, &psi, reading, PsiSign::Plus)?);
            }
        }
    }
    Ok(out)
}

/// Select the reading that reproduces pairs {1,-1} and {i,-i} at the
/// anchor cell, computing both and caching the outcome.
pub fn validated_reading() -> &'static ReadingValidation {
    static CACHE: OnceLock<ReadingValidation> = OnceLock::new();
    CACHE.get_or_init(|| {
        for reading in [GPiReading::NormOfUniformizer, GPiReading::UniformizerClass] {
            let Ok(pairs) = reading_anchor_pairs(reading) else {
                continue;
            };
            let mut descs: Vec<String> = pairs.iter().map(|p| p.display()).collect();
            descs.sort();
            let expected = ["{-1, 1}".to_string(), "{-i, i}".to_string()];
            if descs == expected && pairs.iter().all(|p| p.symmetric) {
                return ReadingValidation {
                    selected: reading,
                    anchor_pairs: descs,
                    anchor_symmetric: true,
                };
            }
        }
        // surfaced rather than silently fixed: fall back to the norm
        // reading and record what the anchor produced
        let pairs = reading_anchor_pairs(GPiReading::NormOfUniformizer)
            .expect("anchor cell must enumerate");
        ReadingValidation {
            selected: GPiReading::NormOfUniformizer,
            anchor_pairs: pairs.iter().map(|p| p.display()).collect(),
            anchor_symmetric: pairs.iter().all(|p| p.symmetric),
        }
    })
}

/// How |S_asym| is to be determined for an LO count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AsymPolicy {
    /// classify every two-valued type by exact computation
    Computed,
    /// closed-form table rows, |S_asym| left symbolic where the tables do
    Table,
    /// substitute a given value for |S_asym|
    Parameter(u64),
}

/// LO counts at one (p, n, Psi) cell: the type count plus the asymmetric
/// contribution. `s_sym`/`s_asym`/`lo_total` are None when the policy
/// leaves |S_asym| symbolic.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LOCount {
    pub p: u64,
    pub n: u32,
    pub psi: LocalNebentypus,
    pub lt: LTCount,
    pub lt_total: u64,
    pub two_valued: u64,
    pub s_sym: Option<u64>,
    pub s_asym: Option<u64>,
    pub lo_total: Option<u64>,
    pub policy: AsymPolicy,
    /// per-orbit candidate pairs (computed policy only), deterministic order
    pub pairs: Vec<String>,
}

/// The closed-form LO table value: (base count, whether |S_asym| is left
/// symbolic in that row). For n = 1 with unramified nebentypus the split
/// is resolved by the value at p, so nothing is symbolic there.
pub fn lo_closed_form(p: u64, n: u32, psi: &LocalNebentypus) -> Result<(u64, bool)> {
    if !is_odd_prime(p) {
        return Err(Error::NotOddPrime(p));
    }
    if n == 0 {
        return Err(Error::BadLevel(0));
    }
    let m = crate::arith::largest_odd_divisor(p + 1);
    Ok(if psi.ramified {
        match n {
            1 => (1, false),
            2 => {
                if p == 3 {
                    (1, false)
                } else {
                    (sigma0((p - 1) / 2) + sigma0(m) - 1, false)
                }
            }
            _ if n % 2 == 1 => {
                if p == 3 && n >= 5 {
                    (4, true)
                } else {
                    (2, true)
                }
            }
            _ => {
                if p == 3 {
                    (2, false)
                } else {
                    (sigma0((p - 1) / 2) + sigma0(m), false)
                }
            }
        }
    } else {
        match n {
            1 => (if psi.value_at_p == 1 { 2 } else { 1 }, false),
            2 => {
                if p == 3 {
                    (3, false)
                } else {
                    (sigma0(p - 1) + sigma0(p + 1) - 2, false)
                }
            }
            _ if n % 2 == 1 => {
                if p == 3 && n >= 5 {
                    (4, true)
                } else {
                    (2, true)
                }
            }
            _ => {
                if p == 3 {
                    (5, false)
                } else {
                    (sigma0(p - 1) + sigma0(p + 1), false)
                }
            }
        }
    })
}

/// Count (type orbit, pseudo-eigenvalue class) pairs at (p, n, Psi).
pub fn lo_count(p: u64, n: u32, psi: &LocalNebentypus, policy: AsymPolicy) -> Result<LOCount> {
    let (orbits, lt) = enumerate_orbits(p, n, psi)?;
    let two_valued_orbits: Vec<&LocalTypeOrbit> = orbits
        .iter()
        .filter(|o| match (&o.kind, &o.data) {
            (TypeKind::Steinberg, OrbitData::StUnramifiedTwist) => true,
            (
                TypeKind::ScRamified,
                OrbitData::Sc {
                    merged_into_scu, ..
                },
            ) => !merged_into_scu,
            _ => false,
        })
        .collect();
    let two_valued = two_valued_orbits.len() as u64;
    let lt_total = lt.total();

    let (s_sym, s_asym, pairs) = match policy {
        AsymPolicy::Computed => {
            let reading = validated_reading().selected;
            let mut sym = 0u64;
            let mut asym = 0u64;
            let mut pairs = Vec::new();
            for orbit in &two_valued_orbits {
                let pair = match &orbit.data {
                    OrbitData::StUnramifiedTwist => steinberg_lambda(psi, p)?,
                    OrbitData::Sc { ext, theta, .. } => {
                        scr_lambda_pair(ext, theta, psi, reading, PsiSign::Plus)?
                    }
                    _ => unreachable!("filtered above"),
                };
                if pair.symmetric {
                    sym += 1;
                } else {
                    asym += 1;
                }
                pairs.push(format!(
                    "{} {}",
                    pair.display(),
                    if pair.symmetric { "sym" } else { "asym" }
                ));
            }
            (Some(sym), Some(asym), pairs)
        }
        AsymPolicy::Parameter(v) => {
            if v > two_valued {
                return Err(Error::Incompatible(format!(
                    "|S_asym| = {v} exceeds the {two_valued} two-valued types"
                )));
            }
            (Some(two_valued - v), Some(v), vec![])
        }
        AsymPolicy::Table => {
            let (_, symbolic) = lo_closed_form(p, n, psi)?;
            if symbolic {
                (None, None, vec![])
            } else {
                // the table resolves the split: at n = 1 unramified via the
                // value at p, elsewhere there are no two-valued types
                let asym = if n == 1 && !psi.ramified && psi.value_at_p == 1 {
                    1
                } else {
                    0
                };
                (Some(two_valued - asym), Some(asym), vec![])
            }
        }
    };
    let lo_total = s_asym.map(|a| lt_total + a);

    // consistency with the closed form whenever the table row is explicit
    if let (Some(total), Ok((table, false))) = (lo_total, lo_closed_form(p, n, psi)) {
        if matches!(policy, AsymPolicy::Computed | AsymPolicy::Table) && total != table {
            return Err(Error::Mismatch(format!(
                "LO({p}^{n}) computed {total} but table says {table}"
            )));
        }
    }

    Ok(LOCount {
        p,
        n,
        psi: *psi,
        lt,
        lt_total,
        two_valued,
        s_sym,
        s_asym,
        lo_total,
        policy,
        pairs,
    })
}

/// The product lower bound over the primes dividing N. Under the strict
/// hypothesis N must be a prime power or have odd p-adic valuation >= 3 at
/// every prime; otherwise the bound is only heuristic and `relaxed` must
/// be set.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LowerBound {
    pub level: u64,
    pub factors: Vec<LOCount>,
    pub product: u64,
    pub strict_hypothesis_holds: bool,
}

pub fn lo_lower_bound(
    level: u64,
    psi_for: &dyn Fn(u64) -> LocalNebentypus,
    policy: AsymPolicy,
    relaxed: bool,
) -> Result<LowerBound> {
    if level < 2 {
        return Err(Error::BadLevel(level as i64));
    }
    let fac = crate::arith::factorize(level);
    for (p, _) in &fac {
        if *p == 2 {
            return Err(Error::NotOddPrime(2));
        }
    }
    let strict_ok = fac.len() == 1 || fac.iter().all(|&(_, e)| e >= 3 && e % 2 == 1);
    if !strict_ok && !relaxed {
        return Err(Error::StrictHypothesis(format!(
            "N = {level} is neither a prime power nor has every valuation odd and >= 3"
        )));
    }
    let mut factors = Vec::new();
    let mut product = 1u64;
    for &(p, e) in &fac {
        let psi = psi_for(p);
        let c = lo_count(p, e, &psi, policy)?;
        let total = c.lo_total.ok_or_else(|| {
            Error::SymbolicCount(format!("LO({p}^{e}) under the table policy"))
        })?;
        product *= total;
        factors.push(c);
    }
    Ok(LowerBound {
        level,
        factors,
        product,
        strict_hypothesis_holds: strict_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> UnitCyc {
        UnitCyc::one()
    }
    fn minus_one() -> UnitCyc {
        UnitCyc::one().neg()
    }
    fn i_unit() -> UnitCyc {
        UnitCyc::from_root_of_unity(4, 1)
    }

    #[test]
    fn equiv_examples() {
        let tame3 = LocalNebentypus::tame();
        let unram = LocalNebentypus::unramified(1);
        // 1 ~ -1 with tame nebentypus at p = 3 (take a = 2 mod 3)
        assert!(lambda_equiv(&one(), &minus_one(), &tame3, 3).unwrap());
        // 1 !~ -1 with unramified nebentypus: the values are rational
        assert!(!lambda_equiv(&one(), &minus_one(), &unram, 3).unwrap());
        // i ~ -i with unramified nebentypus: complex conjugation
        assert!(lambda_equiv(&i_unit(), &i_unit().neg(), &unram, 5).unwrap());
        // non-unit-modulus input rejected
        let two = UnitCyc {
            num: CycElt::from_int(2),
            den: 1,
        };
        assert!(matches!(
            lambda_equiv(&two, &one(), &unram, 3),
            Err(Error::NotUnitModulus)
        ));
    }

    #[test]
    fn steinberg_splitting() {
        let p = 5;
        let plus = steinberg_lambda(&LocalNebentypus::unramified(1), p).unwrap();
        assert!(!plus.symmetric, "{{1,-1}} stays split");
        assert_eq!(plus.display(), "{-1, 1}");
        let minus = steinberg_lambda(&LocalNebentypus::unramified(-1), p).unwrap();
        assert!(minus.symmetric, "{{i,-i}} collapses");
        assert_eq!(minus.display(), "{-i, i}");
        assert!(matches!(
            steinberg_lambda(&LocalNebentypus::tame(), p),
            Err(Error::SteinbergRamified)
        ));
    }

    #[test]
    fn anchor_reading_is_norm() {
        let v = validated_reading();
        assert_eq!(v.selected, GPiReading::NormOfUniformizer);
        assert!(v.anchor_symmetric);
        assert_eq!(v.anchor_pairs, vec!["{-1, 1}", "{-i, i}"]);
    }

    #[test]
    fn lo_examples() {
        let tame = LocalNebentypus::tame();
        // (3, 3, tame, computed) -> 2 + 0 = 2
        let c = lo_count(3, 3, &tame, AsymPolicy::Computed).unwrap();
        assert_eq!(c.lo_total, Some(2));
        assert_eq!(c.s_asym, Some(0));
        // (5, 2, unramified, table) -> 5
        let c = lo_count(5, 2, &LocalNebentypus::unramified(1), AsymPolicy::Table).unwrap();
        assert_eq!(c.lo_total, Some(5));
        // (3, 2, tame, table) -> 1
        let c = lo_count(3, 2, &tame, AsymPolicy::Table).unwrap();
        assert_eq!(c.lo_total, Some(1));
        // (7, 5, tame, parameter 0) -> 2
        let c = lo_count(7, 5, &tame, AsymPolicy::Parameter(0)).unwrap();
        assert_eq!(c.lo_total, Some(2));
        // table policy leaves odd n >= 3 symbolic
        let c = lo_count(7, 5, &tame, AsymPolicy::Table).unwrap();
        assert_eq!(c.lo_total, None);
    }

    #[test]
    fn lower_bound_examples() {
        let tame = |_p: u64| LocalNebentypus::tame();
        let b = lo_lower_bound(27, &tame, AsymPolicy::Computed, false).unwrap();
        assert_eq!(b.product, 2);
        let b = lo_lower_bound(125, &tame, AsymPolicy::Computed, false).unwrap();
        assert_eq!(b.product, 2);
        // 3375 = 27 * 125 passes the strict hypothesis (both valuations 3)
        let b = lo_lower_bound(3375, &tame, AsymPolicy::Computed, false).unwrap();
        assert_eq!(b.product, 4);
        // N = 15 fails it
        assert!(matches!(
            lo_lower_bound(15, &tame, AsymPolicy::Computed, false),
            Err(Error::StrictHypothesis(_))
        ));
        // even prime rejected
        assert!(matches!(
            lo_lower_bound(8, &tame, AsymPolicy::Computed, false),
            Err(Error::NotOddPrime(2))
        ));
    }
}
