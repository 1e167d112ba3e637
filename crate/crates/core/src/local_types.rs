//! Enumeration of local inertial type Galois orbits at level p^n under the
//! quadratic nebentypus constraints, by kind: principal series, Steinberg
//! twists, and supercuspidals induced from the quadratic extensions. The
//! brute-force enumeration is cross-checked against the closed-form count
//! tables.
//!
//! Identifications: principal series use unordered pairs {chi1, chi2}
//! (swap action); supercuspidals are identified by the extension K and the
//! iota-orbit of theta restricted to units, since inducing theta and
//! theta∘iota gives isomorphic representations. Character data at the
//! uniformizer is deliberately excluded: inertial types only see unit
//! restrictions.

use crate::arith::{gcd, largest_odd_divisor, sigma0};
use crate::characters::{
    central_fiber, factors_through_norm, legendre_character, partition_coset, CharacterVec,
    LocalNebentypus,
};
use crate::error::{Error, Result};
use crate::residue::{structure_maps, unit_group, ExtKind, QuadExt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TypeKind {
    PrincipalSeries,
    Steinberg,
    ScUnramified,
    ScRamified,
}

impl TypeKind {
    pub fn label(self) -> &'static str {
        match self {
            TypeKind::PrincipalSeries => "principal-series",
            TypeKind::Steinberg => "steinberg",
            TypeKind::ScUnramified => "sc-unramified",
            TypeKind::ScRamified => "sc-ramified",
        }
    }
}

/// One Galois orbit of local inertial types.
#[derive(Debug, Clone)]
pub struct LocalTypeOrbit {
    pub kind: TypeKind,
    pub p: u64,
    pub n: u32,
    pub psi: LocalNebentypus,
    pub data: OrbitData,
}

#[derive(Debug, Clone)]
pub enum OrbitData {
    /// n = 1, tame nebentypus: the unique pair {Psi_p^{-1}, 1}.
    PsLevelOne,
    /// Even n: the orbit of unordered pairs {chi1, psi* - chi1} on
    /// (Z/p^{n/2})^*, keyed by a representative chi1.
    PsPair {
        chi1: CharacterVec,
        orbit_size: u64,
    },
    /// n = 1: the unramified twist of Steinberg.
    StUnramifiedTwist,
    /// n = 2: a ramified twist mu with mu^2 = Psi_p^{-1} on units.
    StRamifiedTwist { mu: CharacterVec },
    /// A supercuspidal orbit: extension K and the iota-orbit of theta on
    /// units. `merged_into_scu` marks the level-2 ramified inductions that
    /// coincide with unramified supercuspidal types and are therefore not
    /// counted in the S.C.R. column.
    Sc {
        ext: QuadExt,
        theta: CharacterVec,
        orbit_size: u64,
        merged_into_scu: bool,
    },
}

/// A machine-readable description of an orbit (for JSON output).
#[derive(Debug, Clone, serde::Serialize)]
pub struct OrbitSummary {
    pub kind: TypeKind,
    pub p: u64,
    pub n: u32,
    pub psi_ramified: bool,
    pub ext: Option<&'static str>,
    pub character: Option<Vec<i64>>,
    pub orbit_size: Option<u64>,
    pub merged_into_scu: bool,
}

impl LocalTypeOrbit {
    pub fn summary(&self) -> OrbitSummary {
        let (ext, character, orbit_size, merged) = match &self.data {
            OrbitData::PsLevelOne | OrbitData::StUnramifiedTwist => (None, None, None, false),
            OrbitData::PsPair { chi1, orbit_size } => {
                (None, Some(chi1.exps().to_vec()), Some(*orbit_size), false)
            }
            OrbitData::StRamifiedTwist { mu } => (None, Some(mu.exps().to_vec()), None, false),
            OrbitData::Sc {
                ext,
                theta,
                orbit_size,
                merged_into_scu,
            } => (
                Some(ext.kind.label()),
                Some(theta.exps().to_vec()),
                Some(*orbit_size),
                *merged_into_scu,
            ),
        };
        OrbitSummary {
            kind: self.kind,
            p: self.p,
            n: self.n,
            psi_ramified: self.psi.ramified,
            ext,
            character,
            orbit_size,
            merged_into_scu: merged,
        }
    }
}

/// Orbit counts per kind at one (p, n, Psi) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LTCount {
    pub ps: u64,
    pub st: u64,
    pub scu: u64,
    pub scr: u64,
}

impl LTCount {
    pub fn total(&self) -> u64 {
        self.ps + self.st + self.scu + self.scr
    }
}

fn require_odd_prime(p: u64) -> Result<()> {
    if !crate::arith::is_odd_prime(p) {
        return Err(Error::NotOddPrime(p));
    }
    Ok(())
}

/// Number of Galois orbits of primitive characters of conductor n on
/// (O_K/p^n)^* satisfying the central character condition, by brute force:
/// build the fiber, filter primitives, partition under exponent scaling
/// and iota.
pub fn char_orbit_count_brute(
    p: u64,
    n: u32,
    kind: ExtKind,
    psi: &LocalNebentypus,
) -> Result<u64> {
    char_orbit_count_brute_with(p, n, kind, psi, false)
}

/// Same count with the alternate representative d of the extension class
/// (the counts are isomorphism invariants, so both must agree).
pub fn char_orbit_count_brute_with(
    p: u64,
    n: u32,
    kind: ExtKind,
    psi: &LocalNebentypus,
    alternate_d: bool,
) -> Result<u64> {
    require_odd_prime(p)?;
    let ext = if alternate_d {
        QuadExt::alternate(p, kind)?
    } else {
        QuadExt::new(p, kind)?
    };
    let gk = unit_group(p, n, Some(ext))?;
    let gq = unit_group(p, crate::residue::base_level_for(&ext, n), None)?;
    let maps = structure_maps(&gk, &gq)?;
    let fiber = central_fiber(&gk, psi)?;
    let orbits = partition_coset(&fiber, true, true, Some(&maps.conj))?;
    Ok(orbits.len() as u64)
}

/// Closed-form cell of the primitive-character orbit count tables.
/// m denotes the largest odd divisor of p + 1.
pub fn char_orbit_closed_form(p: u64, n: u32, kind: ExtKind, psi: &LocalNebentypus) -> u64 {
    let m = largest_odd_divisor(p + 1);
    let anomalous = p == 3 && kind == ExtKind::RamifiedA;
    match (psi.ramified, kind) {
        (true, ExtKind::Unramified) => sigma0(m),
        (false, ExtKind::Unramified) => {
            if n == 1 {
                sigma0(p + 1) - 1
            } else {
                sigma0(p + 1)
            }
        }
        (psi_ram, _) => {
            // ramified K
            if anomalous {
                match (n, n % 2) {
                    (1, _) => u64::from(!psi_ram),
                    (2, _) => 1,
                    (_, 0) => 3,
                    _ => 0,
                }
            } else {
                match (n, n % 2) {
                    (1, _) => u64::from(!psi_ram),
                    (_, 0) => 1,
                    _ => 0,
                }
            }
        }
    }
}

/// Enumerate principal series orbits: unordered pairs {chi1, chi2} with
/// a(chi1) + a(chi2) = n and chi1 chi2 = Psi_p^{-1} on units, partitioned
/// under simultaneous exponent scaling plus the swap.
fn enumerate_ps(p: u64, n: u32, psi: &LocalNebentypus) -> Result<Vec<LocalTypeOrbit>> {
    if n == 1 {
        // {a(chi1), a(chi2)} = {1, 0}; with unramified Psi_p this forces
        // a(chi1) = 0, a contradiction; with tame Psi_p the pair is exactly
        // {Psi_p^{-1}, 1}
        return Ok(if psi.ramified {
            vec![LocalTypeOrbit {
                kind: TypeKind::PrincipalSeries,
                p,
                n,
                psi: *psi,
                data: OrbitData::PsLevelOne,
            }]
        } else {
            vec![]
        });
    }
    if n % 2 != 0 {
        // a(chi1 chi2) <= 1 forces a(chi1) = a(chi2), so n = 2 a(chi1)
        return Ok(vec![]);
    }
    let d = n / 2;
    let host = unit_group(p, d, None)?;
    let psi_star = if psi.ramified {
        legendre_character(&host)
    } else {
        CharacterVec::trivial(&host)
    };

    // all chi1 with conductor d on both members of the pair
    let mut candidates: Vec<CharacterVec> = Vec::new();
    let mut index = std::collections::BTreeMap::new();
    let orders = host.orders().to_vec();
    let mut exps = vec![0i64; orders.len()];
    loop {
        let chi1 = CharacterVec::new(&host, exps.clone());
        let chi2 = psi_star.mul(&chi1.inverse());
        if chi1.conductor() == d && chi2.conductor() == d {
            index.insert(chi1.exps().to_vec(), candidates.len());
            candidates.push(chi1);
        }
        // odometer
        let mut k = 0;
        loop {
            if k == exps.len() {
                break;
            }
            exps[k] += 1;
            if (exps[k] as u64) < orders[k] {
                break;
            }
            exps[k] = 0;
            k += 1;
        }
        if exps.iter().all(|&e| e == 0) {
            break;
        }
    }

    // partition under k-scaling and the swap chi1 -> psi* - chi1
    let mut seen = vec![false; candidates.len()];
    let mut orbits = Vec::new();
    for start in 0..candidates.len() {
        if seen[start] {
            continue;
        }
        let chi = &candidates[start];
        let swap = psi_star.mul(&chi.inverse());
        let mut size = 0u64;
        let mut min_rep: Option<Vec<i64>> = None;
        for base in [chi.clone(), swap] {
            let ord = base.order();
            for k in 1..=ord {
                if gcd(k, ord) != 1 {
                    continue;
                }
                let m = base.scale(k);
                let Some(&i) = index.get(m.exps()) else {
                    return Err(Error::NotClosed(format!(
                        "{m:?} escapes the principal-series candidate set"
                    )));
                };
                if !seen[i] {
                    seen[i] = true;
                    size += 1;
                    if min_rep.as_ref().is_none_or(|cur| m.exps() < &cur[..]) {
                        min_rep = Some(m.exps().to_vec());
                    }
                }
            }
        }
        orbits.push(LocalTypeOrbit {
            kind: TypeKind::PrincipalSeries,
            p,
            n,
            psi: *psi,
            data: OrbitData::PsPair {
                chi1: CharacterVec::new(&host, min_rep.expect("orbit nonempty")),
                orbit_size: size,
            },
        });
    }
    Ok(orbits)
}

/// Enumerate Steinberg twist orbits: mu with mu^2 = Psi_p^{-1} on units.
/// Unramified twists sit at n = 1, ramified twists at n = 2 a(mu) = 2.
fn enumerate_st(p: u64, n: u32, psi: &LocalNebentypus) -> Result<Vec<LocalTypeOrbit>> {
    match n {
        1 => Ok(if psi.ramified {
            // mu unramified would need mu^2 = Legendre on units: impossible
            vec![]
        } else {
            vec![LocalTypeOrbit {
                kind: TypeKind::Steinberg,
                p,
                n,
                psi: *psi,
                data: OrbitData::StUnramifiedTwist,
            }]
        }),
        2 => {
            let host = unit_group(p, 1, None)?;
            let psi_star = if psi.ramified {
                legendre_character(&host)
            } else {
                CharacterVec::trivial(&host)
            };
            let ord0 = host.orders()[0] as i64;
            let target = psi_star.exps()[0];
            let mut sols: Vec<CharacterVec> = Vec::new();
            for c in 1..ord0 {
                if (2 * c - target).rem_euclid(ord0) == 0 {
                    sols.push(CharacterVec::new(&host, vec![c]));
                }
            }
            let orbits = crate::characters::orbit_partition(&sols, false, None)?;
            Ok(orbits
                .into_iter()
                .map(|members| {
                    let mu = members
                        .iter()
                        .min_by_key(|c| c.exps().to_vec())
                        .expect("orbit nonempty")
                        .clone();
                    LocalTypeOrbit {
                        kind: TypeKind::Steinberg,
                        p,
                        n,
                        psi: *psi,
                        data: OrbitData::StRamifiedTwist { mu },
                    }
                })
                .collect())
        }
        _ => Ok(vec![]), // squaring preserves conductor for p odd, so a(mu) <= 1
    }
}

/// Enumerate supercuspidal orbits induced from one extension class:
/// central fiber, primitivity, norm-factoring filter, iota identification.
fn enumerate_sc_from(
    p: u64,
    n: u32,
    rep_conductor: u32,
    kind: ExtKind,
    psi: &LocalNebentypus,
) -> Result<Vec<(CharacterVec, u64, QuadExt)>> {
    let ext = QuadExt::new(p, kind)?;
    let gk = unit_group(p, rep_conductor, Some(ext))?;
    let gq = unit_group(p, crate::residue::base_level_for(&ext, rep_conductor), None)?;
    let maps = structure_maps(&gk, &gq)?;
    let fiber = central_fiber(&gk, psi)?;
    let orbits = partition_coset(&fiber, true, true, Some(&maps.conj))?;
    let mut out = Vec::new();
    for orbit in orbits {
        if factors_through_norm(&orbit.rep, &maps.norm) {
            continue; // reducible induction
        }
        out.push((orbit.rep, orbit.size, ext));
    }
    Ok(out)
}

/// Brute-force enumeration of all local inertial type Galois orbits at
/// level p^n with the given nebentypus, plus the per-kind counts. The
/// level-2 ramified inductions that survive the norm filter are reported
/// with `merged_into_scu` set and excluded from the S.C.R. count, since
/// those types coincide with unramified supercuspidal ones.
pub fn enumerate_orbits(
    p: u64,
    n: u32,
    psi: &LocalNebentypus,
) -> Result<(Vec<LocalTypeOrbit>, LTCount)> {
    require_odd_prime(p)?;
    if n == 0 {
        return Err(Error::BadLevel(0));
    }
    let mut orbits = enumerate_ps(p, n, psi)?;
    let ps = orbits.len() as u64;
    let st_orbits = enumerate_st(p, n, psi)?;
    let st = st_orbits.len() as u64;
    orbits.extend(st_orbits);

    // unramified supercuspidal: representation conductor n = 2 a(theta)
    let mut scu = 0u64;
    if n % 2 == 0 {
        for (theta, size, ext) in enumerate_sc_from(p, n, n / 2, ExtKind::Unramified, psi)? {
            scu += 1;
            orbits.push(LocalTypeOrbit {
                kind: TypeKind::ScUnramified,
                p,
                n,
                psi: *psi,
                data: OrbitData::Sc {
                    ext,
                    theta,
                    orbit_size: size,
                    merged_into_scu: false,
                },
            });
        }
    }

    // ramified supercuspidal: representation conductor n = 1 + a(theta)
    let mut scr = 0u64;
    if n >= 2 {
        for kind in [ExtKind::RamifiedA, ExtKind::RamifiedB] {
            for (theta, size, ext) in enumerate_sc_from(p, n, n - 1, kind, psi)? {
                let merged = n == 2;
                if !merged {
                    scr += 1;
                }
                orbits.push(LocalTypeOrbit {
                    kind: TypeKind::ScRamified,
                    p,
                    n,
                    psi: *psi,
                    data: OrbitData::Sc {
                        ext,
                        theta,
                        orbit_size: size,
                        merged_into_scu: merged,
                    },
                });
            }
        }
    }

    let count = LTCount { ps, st, scu, scr };
    Ok((orbits, count))
}

/// Closed-form count table for local type orbits; m denotes the largest
/// odd divisor of p + 1.
pub fn lt_closed_form(p: u64, n: u32, psi: &LocalNebentypus) -> Result<LTCount> {
    require_odd_prime(p)?;
    if n == 0 {
        return Err(Error::BadLevel(0));
    }
    let m = largest_odd_divisor(p + 1);
    let c = if psi.ramified {
        match n {
            1 => LTCount {
                ps: 1,
                st: 0,
                scu: 0,
                scr: 0,
            },
            2 => LTCount {
                ps: sigma0((p - 1) / 2) - 1,
                st: u64::from(p % 4 == 1),
                scu: sigma0(m) - u64::from(p % 4 == 1),
                scr: 0,
            },
            _ if n % 2 == 1 => LTCount {
                ps: 0,
                st: 0,
                scu: 0,
                scr: if p == 3 && n >= 5 { 4 } else { 2 },
            },
            _ => LTCount {
                ps: sigma0((p - 1) / 2),
                st: 0,
                scu: sigma0(m),
                scr: 0,
            },
        }
    } else {
        match n {
            1 => LTCount {
                ps: 0,
                st: 1,
                scu: 0,
                scr: 0,
            },
            2 => LTCount {
                ps: sigma0(p - 1) - 1,
                st: 1,
                scu: sigma0(p + 1) - 2,
                scr: 0,
            },
            _ if n % 2 == 1 => LTCount {
                ps: 0,
                st: 0,
                scu: 0,
                scr: if p == 3 && n >= 5 { 4 } else { 2 },
            },
            _ => LTCount {
                ps: sigma0(p - 1),
                st: 0,
                scu: sigma0(p + 1),
                scr: 0,
            },
        }
    };
    Ok(c)
}

/// One cell of the brute-force vs closed-form comparison.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LtCell {
    pub p: u64,
    pub n: u32,
    pub psi: LocalNebentypus,
    pub brute: LTCount,
    pub closed: LTCount,
    pub matches: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CrossCheckReport {
    pub cells: Vec<LtCell>,
    pub mismatches: u64,
}

/// Assert enumerate_orbits equals lt_closed_form on a grid; discrepancies
/// are reported, not panicked on.
pub fn cross_check(p_range: &[u64], n_range: &[u32]) -> Result<CrossCheckReport> {
    use rayon::prelude::*;
    let mut cells_in = Vec::new();
    for &p in p_range {
        for &n in n_range {
            for psi in [LocalNebentypus::tame(), LocalNebentypus::unramified(1)] {
                cells_in.push((p, n, psi));
            }
        }
    }
    let cells: Vec<LtCell> = cells_in
        .into_par_iter()
        .map(|(p, n, psi)| -> Result<LtCell> {
            let (_, brute) = enumerate_orbits(p, n, &psi)?;
            let closed = lt_closed_form(p, n, &psi)?;
            Ok(LtCell {
                p,
                n,
                psi,
                matches: brute == closed,
                brute,
                closed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mismatches = cells.iter().filter(|c| !c.matches).count() as u64;
    Ok(CrossCheckReport { cells, mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tame() -> LocalNebentypus {
        LocalNebentypus::tame()
    }
    fn unram() -> LocalNebentypus {
        LocalNebentypus::unramified(1)
    }

    #[test]
    fn closed_form_examples() {
        // sigma_0(3) + sigma_0(1) = 3 at (7, 4, tame)
        let c = lt_closed_form(7, 4, &tame()).unwrap();
        assert_eq!((c.ps, c.scu, c.total()), (2, 1, 3));
        // (5, 2, unramified): sigma_0(4)-1 + 1 + sigma_0(6)-2 = 5
        let c = lt_closed_form(5, 2, &unram()).unwrap();
        assert_eq!(c.total(), 5);
        // (any p, n = 1, unramified): Steinberg only
        for p in [3, 5, 7, 11, 13] {
            let c = lt_closed_form(p, 1, &unram()).unwrap();
            assert_eq!((c.st, c.total()), (1, 1));
        }
        // (p=3, n=5, tame): S.C.R. 4
        assert_eq!(lt_closed_form(3, 5, &tame()).unwrap().scr, 4);
        // (13, 5, tame): S.C.R. 2
        assert_eq!(lt_closed_form(13, 5, &tame()).unwrap().scr, 2);
    }

    #[test]
    fn enumeration_examples() {
        // (5, 2, tame): PS 1, St 1, SCU 1, total 3
        let (_, c) = enumerate_orbits(5, 2, &tame()).unwrap();
        assert_eq!((c.ps, c.st, c.scu, c.scr), (1, 1, 1, 0));
        // (3, 2, tame): total 1 (PS 0, St 0, SCU 1)
        let (_, c) = enumerate_orbits(3, 2, &tame()).unwrap();
        assert_eq!((c.ps, c.st, c.scu, c.scr, c.total()), (0, 0, 1, 0, 1));
        // (3, 3, either): SCR 2
        let (_, c) = enumerate_orbits(3, 3, &tame()).unwrap();
        assert_eq!(c.scr, 2);
        let (_, c) = enumerate_orbits(3, 3, &unram()).unwrap();
        assert_eq!(c.scr, 2);
        // p = 2 rejected
        assert!(matches!(
            enumerate_orbits(2, 1, &tame()),
            Err(Error::NotOddPrime(2))
        ));
    }

    #[test]
    fn gerardin_kutzko_merge() {
        // at n = 2 with unramified nebentypus and p = 3 mod 4, the level-2
        // ramified inductions survive the norm filter but coincide with
        // unramified supercuspidal types: marked merged, SCR count 0
        let (orbits, c) = enumerate_orbits(7, 2, &unram()).unwrap();
        assert_eq!(c.scr, 0);
        let merged: Vec<_> = orbits
            .iter()
            .filter(|o| matches!(&o.data, OrbitData::Sc { merged_into_scu: true, .. }))
            .collect();
        assert_eq!(merged.len(), 2, "one merged orbit per ramified extension");
        // p = 1 mod 4: the inductions factor through the norm instead
        let (orbits, c) = enumerate_orbits(5, 2, &unram()).unwrap();
        assert_eq!(c.scr, 0);
        assert!(orbits
            .iter()
            .all(|o| !matches!(&o.data, OrbitData::Sc { merged_into_scu: true, .. })));
    }

    #[test]
    fn ps_pairs_have_equal_conductors() {
        for (p, n) in [(5u64, 4u32), (7, 2), (13, 2)] {
            for psi in [tame(), unram()] {
                let (orbits, _) = enumerate_orbits(p, n, &psi).unwrap();
                for o in orbits {
                    if let OrbitData::PsPair { chi1, .. } = &o.data {
                        assert_eq!(chi1.conductor(), n / 2);
                    }
                }
            }
        }
    }

    #[test]
    fn char_orbit_tables_small() {
        // unramified K over Q_5, tame: sigma_0(3) = 2 orbits at any n
        for n in 1..=3 {
            assert_eq!(
                char_orbit_count_brute(5, n, ExtKind::Unramified, &tame()).unwrap(),
                2
            );
        }
        // anomalous K = Q_3(sqrt(-3)), tame, n = 4: 3 orbits
        assert_eq!(
            char_orbit_count_brute(3, 4, ExtKind::RamifiedA, &tame()).unwrap(),
            3
        );
        assert_eq!(char_orbit_closed_form(3, 4, ExtKind::RamifiedA, &tame()), 3);
        // tame, ramified non-anomalous: no primitive fiber at n = 1
        assert_eq!(
            char_orbit_count_brute(7, 1, ExtKind::RamifiedA, &tame()).unwrap(),
            0
        );
    }

    #[test]
    fn cross_check_small_grid() {
        let report = cross_check(&[3, 5], &[1, 2, 3, 4]).unwrap();
        assert_eq!(report.mismatches, 0, "cells: {:?}", report.cells);
    }

    #[test]
    #[ignore = "full acceptance grid; run explicitly"]
    fn cross_check_full_grid() {
        let report = cross_check(&[3, 5, 7, 11, 13], &[1, 2, 3, 4, 5, 6]).unwrap();
        for c in &report.cells {
            assert!(
                c.matches,
                "mismatch at p={} n={} {:?}: brute {:?} closed {:?}",
                c.p, c.n, c.psi, c.brute, c.closed
            );
        }
    }

    #[test]
    fn alternate_d_same_counts() {
        for kind in ExtKind::ALL {
            for n in [1u32, 2, 3, 4] {
                for psi in [tame(), unram()] {
                    let a = char_orbit_count_brute_with(5, n, kind, &psi, false).unwrap();
                    let b = char_orbit_count_brute_with(5, n, kind, &psi, true).unwrap();
                    assert_eq!(a, b, "d-independence at n={n} {kind:?} {psi:?}");
                }
            }
        }
    }
}
