//! Character algebra on presented unit groups: evaluation, conductors,
//! restriction along structure maps, central-character fibers, norm
//! factorization, and Galois orbit partitions.
//!
//! A character is an exponent tuple against the dual basis: if the group is
//! prod <g_i> with orders m_i and e = lcm(m_i), then
//!
//! ```text
//!     chi(x) = zeta_e ^ ( sum_i c_i * e_i * (e / m_i) ),   (e_i) = dlog(x).
//! ```
//!
//! Values are carried as exponents in Z/e, never as floating point, so all
//! equality tests are exact. The Galois action is exponent scaling by k
//! coprime to the order.

use crate::arith::{gcd, lcm};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, ModSolver};
use crate::residue::{
    base_level_for, structure_maps, unit_group, ExpVec, GroupPresentation, HomMatrix, RingElt,
};

/// The local data of a quadratic nebentypus at p: whether its p-part is
/// ramified (conductor 1, the Legendre character) or unramified (conductor
/// 0), and the value of the adelized character at the uniformizer p, which
/// is the prime-to-p part evaluated at p. For prime-power levels the value
/// at p is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct LocalNebentypus {
    pub ramified: bool,
    pub value_at_p: i8,
}

impl LocalNebentypus {
    pub fn tame() -> Self {
        LocalNebentypus {
            ramified: true,
            value_at_p: 1,
        }
    }

    pub fn unramified(value_at_p: i8) -> Self {
        assert!(value_at_p == 1 || value_at_p == -1);
        LocalNebentypus {
            ramified: false,
            value_at_p,
        }
    }

    pub fn label(&self) -> String {
        if self.ramified {
            "tame".to_string()
        } else {
            format!("unramified({:+})", self.value_at_p)
        }
    }
}

/// A character of a presented group, as exponents against the dual basis.
#[derive(Clone)]
pub struct CharacterVec {
    host: GroupPresentation,
    exps: Vec<i64>,
}

impl std::fmt::Debug for CharacterVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "chi{:?}", self.exps)
    }
}

impl CharacterVec {
    pub fn new(host: &GroupPresentation, exps: Vec<i64>) -> Self {
        let mut c = CharacterVec {
            host: host.clone(),
            exps,
        };
        c.reduce();
        c
    }

    pub fn trivial(host: &GroupPresentation) -> Self {
        CharacterVec {
            host: host.clone(),
            exps: vec![0; host.rank()],
        }
    }

    fn reduce(&mut self) {
        for (x, &m) in self.exps.iter_mut().zip(self.host.orders()) {
            *x = x.rem_euclid(m as i64);
        }
    }

    pub fn host(&self) -> &GroupPresentation {
        &self.host
    }

    pub fn exps(&self) -> &[i64] {
        &self.exps
    }

    pub fn is_trivial(&self) -> bool {
        self.exps.iter().all(|&c| c == 0)
    }

    /// Order of the character: lcm_i of m_i / gcd(c_i, m_i).
    pub fn order(&self) -> u64 {
        self.exps
            .iter()
            .zip(self.host.orders())
            .fold(1, |acc, (&c, &m)| {
                lcm(acc, m / gcd(c.rem_euclid(m as i64) as u64, m))
            })
    }

    /// Value exponent mod e = lcm(m_i) at an element given by exponents.
    pub fn eval_exps(&self, e: &[i64]) -> u64 {
        let ex = self.host.exponent();
        let mut acc = 0i128;
        for ((&c, &v), &m) in self.exps.iter().zip(e).zip(self.host.orders()) {
            acc += c as i128 * v as i128 * (ex / m) as i128;
        }
        acc.rem_euclid(ex as i128) as u64
    }

    /// Value exponent k with chi(x) = zeta_e^k; errors on non-units.
    pub fn evaluate(&self, x: &RingElt) -> Result<u64> {
        let dl = self.host.dlog(x)?;
        Ok(self.eval_exps(&dl.0))
    }

    /// Galois action: chi -> k * chi (componentwise exponent scaling).
    pub fn scale(&self, k: u64) -> CharacterVec {
        CharacterVec::new(
            &self.host,
            self.exps
                .iter()
                .zip(self.host.orders())
                .map(|(&c, &m)| ((c as i128 * k as i128).rem_euclid(m as i128)) as i64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &CharacterVec) -> CharacterVec {
        assert!(self.host.same_group(&other.host));
        CharacterVec::new(
            &self.host,
            self.exps
                .iter()
                .zip(&other.exps)
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }

    pub fn inverse(&self) -> CharacterVec {
        CharacterVec::new(&self.host, self.exps.iter().map(|&a| -a).collect())
    }

    /// Pullback chi ∘ M along a homomorphism into this character's host.
    pub fn restrict(&self, map: &HomMatrix, src: &GroupPresentation) -> Result<CharacterVec> {
        if map.dst_orders != self.host.orders() || map.src_orders != src.orders() {
            return Err(Error::Incompatible(
                "map endpoints do not match the character host".into(),
            ));
        }
        let e_dst = self.host.exponent() as i128;
        let mut out = Vec::with_capacity(src.rank());
        for (j, &mj) in src.orders().iter().enumerate() {
            // value exponent of chi at the image of source generator j
            let col: Vec<i64> = (0..self.host.rank()).map(|i| map.mat[i][j]).collect();
            let v = self.eval_exps(&col) as i128;
            // the pullback value at g_j is an m_j-th root of unity because
            // the map respects the order relation m_j * col_j = 0; convert
            // zeta_{e_dst}^v into zeta_{m_j}^{c'}
            let num = v * mj as i128;
            assert_eq!(num % e_dst, 0, "pullback value must be an m_j-th root");
            out.push((num / e_dst) as i64);
        }
        Ok(CharacterVec::new(src, out))
    }

    /// Smallest j with chi trivial on the filtration subgroup U^j.
    pub fn conductor(&self) -> u32 {
        let n = self.host.level();
        for j in 0..=n {
            let fil = self.host.filtration(j).expect("j in range");
            if fil.gens.iter().all(|g| self.eval_exps(&g.0) == 0) {
                return j;
            }
        }
        unreachable!("chi is trivial on the trivial subgroup U^n")
    }

    pub fn is_primitive(&self) -> bool {
        let n = self.host.level();
        if n == 0 {
            return false;
        }
        let fil = self.host.filtration(n - 1).expect("n-1 in range");
        fil.gens.iter().any(|g| self.eval_exps(&g.0) != 0)
    }
}

impl PartialEq for CharacterVec {
    fn eq(&self, other: &Self) -> bool {
        self.host.same_group(&other.host) && self.exps == other.exps
    }
}
impl Eq for CharacterVec {}

/// The Legendre character of a rational unit group (Z/p^c)^*: -1 on the
/// torsion generator, trivial on principal units.
pub fn legendre_character(host: &GroupPresentation) -> CharacterVec {
    assert!(host.ext().is_none(), "Legendre lives on the rational units");
    let mut exps = vec![0i64; host.rank()];
    exps[0] = (host.orders()[0] / 2) as i64;
    CharacterVec::new(host, exps)
}

/// The character of the rational units prescribed by the central character
/// condition: Psi_p^{-1} * omega_{K/Q_p} restricted to Z_p^*. Both factors
/// are the Legendre character or trivial, so the product is trivial when
/// the ramification states agree and Legendre when they differ.
pub fn prescribed_central_character(
    host_q: &GroupPresentation,
    psi: &LocalNebentypus,
    ext_ramified: bool,
) -> CharacterVec {
    if psi.ramified != ext_ramified {
        legendre_character(host_q)
    } else {
        CharacterVec::trivial(host_q)
    }
}

/// The fiber of characters of G_K restricting to a prescribed character on
/// the embedded rational units: a coset of the annihilator subgroup,
/// addressable by index without materializing the whole list.
pub struct CharCoset {
    host: GroupPresentation,
    base: Vec<i64>,
    gens: Vec<Vec<i64>>,
    orders: Vec<u64>,
    solver: Option<ModSolver>,
    len: u64,
}

impl CharCoset {
    /// Coset coordinates of a member character (solves G t = chi - base).
    fn coords(&self, chi: &CharacterVec) -> Option<Vec<i64>> {
        if self.len == 0 {
            return None;
        }
        let Some(solver) = self.solver.as_ref() else {
            return (chi.exps() == &self.base[..]).then_some(vec![]);
        };
        let b: Vec<i128> = chi
            .exps()
            .iter()
            .zip(&self.base)
            .map(|(&c, &b)| (c - b) as i128)
            .collect();
        solver.solve(&b)
    }

    fn decode(&self, idx: u64) -> Vec<i64> {
        let mut rem = idx;
        self.orders
            .iter()
            .map(|&d| {
                let t = (rem % d) as i64;
                rem /= d;
                t
            })
            .collect()
    }

    fn encode(&self, t: &[i64]) -> u64 {
        let mut idx = 0u64;
        let mut factor = 1u64;
        for (j, &d) in self.orders.iter().enumerate() {
            idx += t[j].rem_euclid(d as i64) as u64 * factor;
            factor *= d;
        }
        idx
    }

    /// Exponent vector of the member with coset coordinates t.
    fn exps_at(&self, t: &[i64]) -> Vec<i64> {
        let mut exps = self.base.clone();
        for (j, &tj) in t.iter().enumerate() {
            for (x, &g) in exps.iter_mut().zip(&self.gens[j]) {
                *x += tj * g;
            }
        }
        exps.iter_mut()
            .zip(self.host.orders())
            .for_each(|(x, &m)| *x = x.rem_euclid(m as i64));
        exps
    }
}

impl CharCoset {
    pub fn empty(host: &GroupPresentation) -> Self {
        CharCoset {
            host: host.clone(),
            base: vec![],
            gens: vec![],
            orders: vec![],
            solver: None,
            len: 0,
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn host(&self) -> &GroupPresentation {
        &self.host
    }

    pub fn at(&self, idx: u64) -> CharacterVec {
        assert!(idx < self.len);
        let t = self.decode(idx);
        CharacterVec {
            host: self.host.clone(),
            exps: self.exps_at(&t),
        }
    }

    /// Index of a character in the coset, or None when it lies outside.
    pub fn index_of(&self, chi: &CharacterVec) -> Option<u64> {
        self.coords(chi).map(|t| self.encode(&t))
    }

    /// Visit every member in index order.
    pub fn for_each<F: FnMut(u64, &CharacterVec)>(&self, mut f: F) {
        for idx in 0..self.len {
            let chi = self.at(idx);
            f(idx, &chi);
        }
    }

    pub fn to_vec(&self) -> Vec<CharacterVec> {
        (0..self.len).map(|i| self.at(i)).collect()
    }
}

/// The characters theta of G_K whose restriction along the embedding equals
/// the character prescribed by the central condition for the nebentypus.
/// The empty fiber is not an error.
pub fn central_fiber(gk: &GroupPresentation, psi: &LocalNebentypus) -> Result<CharCoset> {
    let ext = *gk
        .ext()
        .ok_or_else(|| Error::Incompatible("central fiber needs an extension group".into()))?;
    let gq = unit_group(gk.p(), base_level_for(&ext, gk.level()), None)?;
    let maps = structure_maps(gk, &gq)?;
    let psi0 = prescribed_central_character(&gq, psi, ext.ramified());

    let ek = gk.exponent();
    let eq = gq.exponent();
    assert_eq!(ek % eq, 0, "rational exponent divides extension exponent");

    // chi(embed(g_j)) = psi0(g_j) for every rational generator:
    // sum_i c_i (ek/m_i) E[i][j] = psi0_j * (ek/eq)  (mod ek)
    let rows = gq.rank();
    let cols = gk.rank();
    let mut a: Mat = vec![vec![0i128; cols]; rows];
    let mut b = vec![0i128; rows];
    for j in 0..rows {
        for i in 0..cols {
            a[j][i] = (ek / gk.orders()[i]) as i128 * maps.embed.mat[i][j] as i128;
        }
        let unit = ExpVec::unit(rows, j);
        b[j] = psi0.eval_exps(&unit.0) as i128 * (ek / eq) as i128;
    }
    let row_mods = vec![ek; rows];
    match linalg::solve_mod_system(&a, &b, &row_mods, gk.orders()) {
        None => Ok(CharCoset::empty(gk)),
        Some((base, hom)) => {
            let len = hom.order();
            let solver = if hom.gens.is_empty() {
                None
            } else {
                let gmat: Mat = (0..gk.rank())
                    .map(|i| hom.gens.iter().map(|g| g[i] as i128).collect())
                    .collect();
                Some(ModSolver::new(&gmat, gk.orders(), &hom.orders))
            };
            Ok(CharCoset {
                host: gk.clone(),
                base,
                gens: hom.gens,
                orders: hom.orders,
                solver,
                len,
            })
        }
    }
}

/// Whether theta kills the kernel of the norm map, i.e. factors through the
/// norm (making the induced representation reducible).
pub fn factors_through_norm(theta: &CharacterVec, norm: &HomMatrix) -> bool {
    norm.kernel()
        .gens
        .iter()
        .all(|g| theta.eval_exps(&g.0) == 0)
}

/// A Galois orbit, reported by its lexicographically minimal member.
#[derive(Debug, Clone)]
pub struct OrbitRep {
    pub rep: CharacterVec,
    pub size: u64,
}

/// Partition an explicit list of characters under exponent scaling (and
/// optionally the conjugation action). The list must be closed under the
/// actions applied; a scaled character falling outside signals an upstream
/// fiber bug and is reported as an error.
pub fn orbit_partition(
    s: &[CharacterVec],
    use_iota: bool,
    conj: Option<&HomMatrix>,
) -> Result<Vec<Vec<CharacterVec>>> {
    let mut index: std::collections::BTreeMap<Vec<i64>, usize> = std::collections::BTreeMap::new();
    for (i, chi) in s.iter().enumerate() {
        index.insert(chi.exps().to_vec(), i);
    }
    let mut seen = vec![false; s.len()];
    let mut orbits = Vec::new();
    for start in 0..s.len() {
        if seen[start] {
            continue;
        }
        let mut members = Vec::new();
        for chi in orbit_members(&s[start], use_iota, conj)? {
            let Some(&i) = index.get(chi.exps()) else {
                return Err(Error::NotClosed(format!(
                    "{:?} escapes the candidate set",
                    chi
                )));
            };
            if !seen[i] {
                seen[i] = true;
                members.push(s[i].clone());
            }
        }
        orbits.push(members);
    }
    Ok(orbits)
}

/// All members of the Galois (and optional iota) orbit of chi.
pub fn orbit_members(
    chi: &CharacterVec,
    use_iota: bool,
    conj: Option<&HomMatrix>,
) -> Result<Vec<CharacterVec>> {
    let mut bases = vec![chi.clone()];
    if use_iota {
        let conj = conj.ok_or_else(|| {
            Error::Incompatible("iota identification requires the conjugation map".into())
        })?;
        bases.push(chi.restrict(conj, chi.host())?);
    }
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for base in bases {
        let ord = base.order();
        for k in 1..=ord {
            if gcd(k, ord) != 1 {
                continue;
            }
            let m = base.scale(k);
            if seen.insert(m.exps().to_vec()) {
                out.push(m);
            }
        }
    }
    Ok(out)
}

/// Precomputed linear data for the Galois and iota actions in coset
/// coordinates. With F the coordinate map of the annihilator subgroup,
/// scaling a member chi (coords t) by k satisfies
///
/// ```text
///     coords(k chi) = k t + ((k-1)/2) F(2 base)        (k odd)
///     coords(k chi) = k t + (k-1) F(base)              (k even)
/// ```
///
/// 2*base always annihilates the embedded units (the prescribed character
/// is quadratic); base itself does only when that character is trivial,
/// which is exactly when even k can be coprime to the character order.
/// The iota action is affine as well: coords(chi ∘ conj) = c0 + C t.
struct CosetActions {
    w2: Vec<i64>,
    w1: Option<Vec<i64>>,
    iota: Option<(Vec<i64>, Vec<Vec<i64>>)>,
}

impl CosetActions {
    fn new(coset: &CharCoset, conj: Option<&HomMatrix>) -> Result<CosetActions> {
        let solve = |v: &[i64]| -> Option<Vec<i64>> {
            match coset.solver.as_ref() {
                Some(solver) => {
                    let b: Vec<i128> = v.iter().map(|&x| x as i128).collect();
                    solver.solve(&b)
                }
                None => {
                    // trivial annihilator: only the zero vector has coords
                    let host = coset.host();
                    v.iter()
                        .zip(host.orders())
                        .all(|(&x, &m)| x.rem_euclid(m as i64) == 0)
                        .then_some(vec![])
                }
            }
        };
        let two_base: Vec<i64> = coset.base.iter().map(|&b| 2 * b).collect();
        let w2 = solve(&two_base).ok_or_else(|| {
            Error::NotClosed("2*base does not annihilate the embedded units".into())
        })?;
        let w1 = solve(&coset.base);
        let iota = match conj {
            None => None,
            Some(conj) => {
                let host = coset.host();
                let base_chi = CharacterVec::new(host, coset.base.clone());
                let base_conj = base_chi.restrict(conj, host)?;
                let diff: Vec<i64> = base_conj
                    .exps()
                    .iter()
                    .zip(&coset.base)
                    .map(|(&a, &b)| a - b)
                    .collect();
                let c0 = solve(&diff).ok_or_else(|| {
                    Error::NotClosed("base ∘ conj escapes the fiber".into())
                })?;
                let mut cols = Vec::with_capacity(coset.gens.len());
                for g in &coset.gens {
                    let g_chi = CharacterVec::new(host, g.clone());
                    let g_conj = g_chi.restrict(conj, host)?;
                    let col = solve(g_conj.exps()).ok_or_else(|| {
                        Error::NotClosed("annihilator ∘ conj escapes the fiber".into())
                    })?;
                    cols.push(col);
                }
                Some((c0, cols))
            }
        };
        Ok(CosetActions { w2, w1, iota })
    }

    fn scaled(&self, coset: &CharCoset, t: &[i64], k: u64) -> Result<Vec<i64>> {
        let s = coset.orders.len();
        let mut out = vec![0i64; s];
        for j in 0..s {
            let shift = if k % 2 == 1 {
                ((k - 1) / 2) as i128 * self.w2[j] as i128
            } else {
                let w1 = self.w1.as_ref().ok_or_else(|| {
                    Error::NotClosed(
                        "even Galois exponent on a fiber with nontrivial restriction".into(),
                    )
                })?;
                (k - 1) as i128 * w1[j] as i128
            };
            out[j] = (k as i128 * t[j] as i128 + shift).rem_euclid(coset.orders[j] as i128) as i64;
        }
        Ok(out)
    }

    fn iota(&self, coset: &CharCoset, t: &[i64]) -> Option<Vec<i64>> {
        let (c0, cols) = self.iota.as_ref()?;
        let s = coset.orders.len();
        let mut out = vec![0i64; s];
        for j in 0..s {
            let mut acc = c0[j] as i128;
            for (l, col) in cols.iter().enumerate() {
                acc += t[l] as i128 * col[j] as i128;
            }
            out[j] = acc.rem_euclid(coset.orders[j] as i128) as i64;
        }
        Some(out)
    }
}

/// Partition the (optionally primitive-only) members of a fiber coset into
/// Galois orbits, walking each orbit by exponent scaling. Scales to fibers
/// of millions of characters: the actions are affine in coset coordinates,
/// so the walk needs no solver calls and no hashing of members.
pub fn partition_coset(
    coset: &CharCoset,
    primitive_only: bool,
    use_iota: bool,
    conj: Option<&HomMatrix>,
) -> Result<Vec<OrbitRep>> {
    if coset.is_empty() {
        return Ok(vec![]);
    }
    if use_iota && conj.is_none() {
        return Err(Error::Incompatible(
            "iota identification requires the conjugation map".into(),
        ));
    }
    let actions = CosetActions::new(coset, if use_iota { conj } else { None })?;
    let host = coset.host().clone();
    let mut visited = vec![false; coset.len() as usize];
    let mut orbits = Vec::new();
    for start in 0..coset.len() {
        if visited[start as usize] {
            continue;
        }
        let t0 = coset.decode(start);
        let chi = CharacterVec::new(&host, coset.exps_at(&t0));
        if primitive_only && !chi.is_primitive() {
            visited[start as usize] = true;
            continue;
        }
        let ord = chi.order();
        let mut starts = vec![t0.clone()];
        if use_iota {
            if let Some(ti) = actions.iota(coset, &t0) {
                starts.push(ti);
            }
        }
        let mut size = 0u64;
        let mut min_exps: Option<Vec<i64>> = None;
        let mut checked = 0u8;
        for tb in &starts {
            for k in 1..=ord {
                if gcd(k, ord) != 1 {
                    continue;
                }
                let tk = actions.scaled(coset, tb, k)?;
                let idx = coset.encode(&tk) as usize;
                if !visited[idx] {
                    visited[idx] = true;
                    size += 1;
                    let exps = coset.exps_at(&tk);
                    // spot-verify the affine walk against direct scaling
                    if checked < 2 {
                        checked += 1;
                        let base_chi = CharacterVec::new(&host, coset.exps_at(tb));
                        if base_chi.scale(k).exps() != &exps[..] {
                            return Err(Error::NotClosed(format!(
                                "affine walk disagrees with scaling at k={k}"
                            )));
                        }
                    }
                    if min_exps.as_ref().is_none_or(|cur| exps < *cur) {
                        min_exps = Some(exps);
                    }
                }
            }
        }
        orbits.push(OrbitRep {
            rep: CharacterVec::new(&host, min_exps.expect("orbit nonempty")),
            size,
        });
    }
    Ok(orbits)
}
