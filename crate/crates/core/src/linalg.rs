//! Integer linear algebra over Z: Smith normal form, linear congruence
//! systems, and presentations of subgroups of products of cyclic groups.
//!
//! Groups of units are handled throughout the crate as products of cyclic
//! factors Z/m_1 x ... x Z/m_r, with elements and characters stored as
//! exponent vectors. Subgroups, kernels of homomorphisms and character
//! fibers are then solution sets of systems
//!
//! ```text
//!     sum_i a[j][i] x_i = b[j]  (mod n[j]),    x in prod Z/m_i,
//! ```
//!
//! which reduce to Smith normal form computations of small integer
//! matrices. Intermediate entries in a Smith reduction can grow far past
//! machine range even for tiny matrices, so the elimination runs on
//! BigInt; all of these computations happen once per group or fiber, never
//! in inner loops.

use num_bigint::BigInt;
use num_traits::{Euclid, Signed, Zero};

/// Input matrices are machine integers; entries always fit easily.
pub type Mat = Vec<Vec<i128>>;

type BMat = Vec<Vec<BigInt>>;

fn to_big(a: &Mat) -> BMat {
    a.iter()
        .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

fn big_identity(n: usize) -> BMat {
    (0..n)
        .map(|i| (0..n).map(|j| BigInt::from(i64::from(i == j))).collect())
        .collect()
}

fn big_mat_vec(a: &BMat, x: &[BigInt]) -> Vec<BigInt> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

/// Smith normal form u * a * v = d with u, v unimodular; u_inv = u^{-1}.
struct Snf {
    u: BMat,
    u_inv: BMat,
    v: BMat,
    d: BMat,
    rank: usize,
}

fn smith_normal_form(a: &BMat) -> Snf {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut d = a.clone();
    let mut u = big_identity(rows);
    let mut u_inv = big_identity(rows);
    let mut v = big_identity(cols);

    fn row_sub(d: &mut BMat, u: &mut BMat, u_inv: &mut BMat, i: usize, t: usize, q: &BigInt) {
        for x in 0..d[0].len() {
            let s = q * &d[t][x];
            d[i][x] -= s;
        }
        for x in 0..u[0].len() {
            let s = q * &u[t][x];
            u[i][x] -= s;
        }
        for r in 0..u_inv.len() {
            let s = q * &u_inv[r][i];
            u_inv[r][t] += s;
        }
    }
    fn col_sub(d: &mut BMat, v: &mut BMat, j: usize, t: usize, q: &BigInt) {
        for x in 0..d.len() {
            let s = q * &d[x][t];
            d[x][j] -= s;
        }
        for x in 0..v.len() {
            let s = q * &v[x][t];
            v[x][j] -= s;
        }
    }
    fn swap_rows(d: &mut BMat, u: &mut BMat, u_inv: &mut BMat, i: usize, t: usize) {
        d.swap(i, t);
        u.swap(i, t);
        for r in u_inv.iter_mut() {
            r.swap(i, t);
        }
    }
    fn swap_cols(d: &mut BMat, v: &mut BMat, j: usize, t: usize) {
        for r in d.iter_mut() {
            r.swap(j, t);
        }
        for r in v.iter_mut() {
            r.swap(j, t);
        }
    }

    let mut t = 0;
    while t < rows.min(cols) {
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !d[i][j].is_zero()
                    && pivot.is_none_or(|(pi, pj)| d[i][j].abs() < d[pi][pj].abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        if pi != t {
            swap_rows(&mut d, &mut u, &mut u_inv, pi, t);
        }
        if pj != t {
            swap_cols(&mut d, &mut v, pj, t);
        }

        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if !d[i][t].is_zero() {
                    let q = Euclid::div_euclid(&d[i][t], &d[t][t]);
                    if !q.is_zero() {
                        row_sub(&mut d, &mut u, &mut u_inv, i, t, &q);
                    }
                    if !d[i][t].is_zero() {
                        swap_rows(&mut d, &mut u, &mut u_inv, i, t);
                        clean = false;
                    }
                }
            }
            for j in t + 1..cols {
                if !d[t][j].is_zero() {
                    let q = Euclid::div_euclid(&d[t][j], &d[t][t]);
                    if !q.is_zero() {
                        col_sub(&mut d, &mut v, j, t, &q);
                    }
                    if !d[t][j].is_zero() {
                        swap_cols(&mut d, &mut v, j, t);
                        clean = false;
                    }
                }
            }
            if !clean {
                continue;
            }
            let mut fixed = true;
            'scan: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(&d[i][j] % &d[t][t]).is_zero() {
                        let minus_one = BigInt::from(-1);
                        row_sub(&mut d, &mut u, &mut u_inv, t, i, &minus_one);
                        fixed = false;
                        break 'scan;
                    }
                }
            }
            if fixed {
                break;
            }
        }
        if d[t][t].is_negative() {
            for x in 0..cols {
                d[t][x] = -d[t][x].clone();
            }
            for x in 0..u[0].len() {
                u[t][x] = -u[t][x].clone();
            }
            for r in u_inv.iter_mut() {
                r[t] = -r[t].clone();
            }
        }
        t += 1;
    }
    Snf {
        u,
        u_inv,
        v,
        d,
        rank: t,
    }
}

fn reduce_to_i64(x: &BigInt, m: u64) -> i64 {
    use num_traits::ToPrimitive;
    let r = x % BigInt::from(m);
    let r = if r.is_negative() { r + BigInt::from(m) } else { r };
    r.to_i64().expect("residue fits i64")
}

/// A subgroup of Z/m_1 x ... x Z/m_r presented by independent generators:
/// the map (t_1, ..., t_s) -> sum t_j * gens[j] is a bijection from
/// prod Z/orders[j] onto the subgroup. Trivial factors are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupGens {
    pub orders: Vec<u64>,
    pub gens: Vec<Vec<i64>>,
}

impl SubgroupGens {
    pub fn order(&self) -> u64 {
        self.orders.iter().product()
    }

    pub fn trivial() -> Self {
        SubgroupGens {
            orders: vec![],
            gens: vec![],
        }
    }
}

/// Cyclic decomposition of the subgroup of prod Z/var_mods generated by
/// `gens` (given as vectors of length var_mods.len()).
pub fn subgroup_from_gens(gens: &[Vec<i64>], var_mods: &[u64]) -> SubgroupGens {
    let r = var_mods.len();
    let t = gens.len() + r;
    // lattice L = span(gens) + diag(var_mods) Z^r, as columns
    let mut g = vec![vec![BigInt::zero(); t]; r];
    for (j, gen) in gens.iter().enumerate() {
        assert_eq!(gen.len(), r);
        for i in 0..r {
            g[i][j] = BigInt::from(gen[i]);
        }
    }
    for i in 0..r {
        g[i][gens.len() + i] = BigInt::from(var_mods[i]);
    }
    let snf = smith_normal_form(&g);
    assert_eq!(snf.rank, r, "lattice containing diag(m) has full rank");

    // basis of L: columns of u_inv * diag(d); relation matrix of diag(m):
    // c[k][j] = u[k][j] * var_mods[j] / d[k][k]
    let mut c = vec![vec![BigInt::zero(); r]; r];
    for k in 0..r {
        for j in 0..r {
            let num = &snf.u[k][j] * BigInt::from(var_mods[j]);
            let (q, rem) = num_integer::Integer::div_rem(&num, &snf.d[k][k]);
            assert!(rem.is_zero(), "diag(m) lies in the lattice");
            c[k][j] = q;
        }
    }
    let inner = smith_normal_form(&c);
    assert_eq!(inner.rank, r, "quotient L/M is finite");

    // generators of L/M: columns of (u_inv * diag(d)) * inner.u_inv
    let mut orders = Vec::new();
    let mut out_gens = Vec::new();
    for k in 0..r {
        use num_traits::ToPrimitive;
        let ord = inner.d[k][k].to_u64().expect("component order fits u64");
        assert!(ord > 0);
        if ord == 1 {
            continue;
        }
        let mut col = vec![0i64; r];
        for (i, slot) in col.iter_mut().enumerate() {
            let mut acc = BigInt::zero();
            for l in 0..r {
                acc += &snf.u_inv[i][l] * &snf.d[l][l] * &inner.u_inv[l][k];
            }
            *slot = reduce_to_i64(&acc, var_mods[i]);
        }
        orders.push(ord);
        out_gens.push(col);
    }
    SubgroupGens {
        orders,
        gens: out_gens,
    }
}

/// Solver for A x = b (mod row_mods) with x in prod Z/var_mods, reusable
/// across right-hand sides (the Smith reduction is computed once).
pub struct ModSolver {
    rows: usize,
    cols: usize,
    var_mods: Vec<u64>,
    snf: Snf,
}

impl ModSolver {
    pub fn new(a: &Mat, row_mods: &[u64], var_mods: &[u64]) -> Self {
        let rows = a.len();
        let cols = if rows == 0 { 0 } else { a[0].len() };
        assert_eq!(row_mods.len(), rows);
        assert_eq!(var_mods.len(), cols);
        let mut b = vec![vec![BigInt::zero(); cols + rows]; rows];
        for i in 0..rows {
            for j in 0..cols {
                // entries matter only mod the row modulus
                b[i][j] = BigInt::from(a[i][j].rem_euclid(row_mods[i] as i128));
            }
            b[i][cols + i] = BigInt::from(row_mods[i]);
        }
        ModSolver {
            rows,
            cols,
            var_mods: var_mods.to_vec(),
            snf: smith_normal_form(&b),
        }
    }

    /// A solution x reduced into prod Z/var_mods, or None.
    pub fn solve(&self, b: &[i128]) -> Option<Vec<i64>> {
        assert_eq!(b.len(), self.rows);
        let bb: Vec<BigInt> = b.iter().map(|&x| BigInt::from(x)).collect();
        let y = big_mat_vec(&self.snf.u, &bb);
        let n = self.cols + self.rows;
        let mut t = vec![BigInt::zero(); n];
        for i in 0..self.rows {
            if i < self.snf.rank && !self.snf.d[i][i].is_zero() {
                let (q, rem) = num_integer::Integer::div_rem(&y[i], &self.snf.d[i][i]);
                if !rem.is_zero() {
                    return None;
                }
                t[i] = q;
            } else if !y[i].is_zero() {
                return None;
            }
        }
        let z = big_mat_vec(&self.snf.v, &t);
        Some(
            z[..self.cols]
                .iter()
                .zip(&self.var_mods)
                .map(|(x, &m)| reduce_to_i64(x, m))
                .collect(),
        )
    }

    /// Generators (x-parts) of the homogeneous solutions, reduced.
    pub fn kernel_gens(&self) -> Vec<Vec<i64>> {
        let n = self.cols + self.rows;
        let mut out = Vec::new();
        for j in self.snf.rank..n {
            out.push(
                (0..self.cols)
                    .map(|i| reduce_to_i64(&self.snf.v[i][j], self.var_mods[i]))
                    .collect(),
            );
        }
        out
    }
}

/// Full solution of A x = b (mod row_mods), x in prod Z/var_mods:
/// a particular solution plus the homogeneous subgroup.
pub fn solve_mod_system(
    a: &Mat,
    b: &[i128],
    row_mods: &[u64],
    var_mods: &[u64],
) -> Option<(Vec<i64>, SubgroupGens)> {
    let solver = ModSolver::new(a, row_mods, var_mods);
    let particular = solver.solve(b)?;
    let hom = solver.kernel_gens();
    Some((particular, subgroup_from_gens(&hom, var_mods)))
}

/// Kernel of the homomorphism prod Z/var_mods -> prod Z/row_mods given by
/// the matrix a (rows indexed by the target).
pub fn kernel_mod(a: &Mat, row_mods: &[u64], var_mods: &[u64]) -> SubgroupGens {
    solve_mod_system(a, &vec![0; row_mods.len()], row_mods, var_mods)
        .expect("homogeneous system is always solvable")
        .1
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force subgroup of prod Z/m generated by vectors.
    fn brute_subgroup(gens: &[Vec<i64>], mods: &[u64]) -> std::collections::BTreeSet<Vec<i64>> {
        let mut set = std::collections::BTreeSet::new();
        set.insert(vec![0i64; mods.len()]);
        loop {
            let mut grew = false;
            let snapshot: Vec<_> = set.iter().cloned().collect();
            for x in &snapshot {
                for g in gens {
                    let y: Vec<i64> = x
                        .iter()
                        .zip(g)
                        .zip(mods)
                        .map(|((&a, &b), &m)| (a + b).rem_euclid(m as i64))
                        .collect();
                    grew |= set.insert(y);
                }
            }
            if !grew {
                break;
            }
        }
        set
    }

    #[test]
    fn snf_reconstruction() {
        for a in [
            vec![vec![2i128, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]],
            vec![vec![0, 0], vec![0, 0]],
            vec![vec![6, 10], vec![15, 4], vec![9, 0]],
            vec![vec![2, 3, 5, 7]],
        ] {
            let big = to_big(&a);
            let snf = smith_normal_form(&big);
            // u * a * v = d
            let rows = a.len();
            let cols = a[0].len();
            let mut ua = vec![vec![BigInt::zero(); cols]; rows];
            for i in 0..rows {
                for j in 0..cols {
                    for k in 0..rows {
                        ua[i][j] += &snf.u[i][k] * &big[k][j];
                    }
                }
            }
            let mut uav = vec![vec![BigInt::zero(); cols]; rows];
            for i in 0..rows {
                for j in 0..cols {
                    for k in 0..cols {
                        uav[i][j] += &ua[i][k] * &snf.v[k][j];
                    }
                }
            }
            assert_eq!(uav, snf.d);
            // diagonal, nonnegative, divisibility chain
            for i in 0..rows {
                for j in 0..cols {
                    if i != j {
                        assert!(snf.d[i][j].is_zero());
                    }
                }
            }
            for i in 1..snf.rank {
                assert!((&snf.d[i][i] % &snf.d[i - 1][i - 1]).is_zero());
            }
            // u * u_inv = I
            let mut prod = vec![vec![BigInt::zero(); rows]; rows];
            for i in 0..rows {
                for j in 0..rows {
                    for k in 0..rows {
                        prod[i][j] += &snf.u[i][k] * &snf.u_inv[k][j];
                    }
                }
            }
            assert_eq!(prod, big_identity(rows));
        }
    }

    #[test]
    fn subgroup_presentation_matches_brute_force() {
        let cases: Vec<(Vec<Vec<i64>>, Vec<u64>)> = vec![
            (vec![vec![2, 0], vec![0, 3]], vec![8, 9]),
            (vec![vec![1, 1]], vec![4, 6]),
            (vec![vec![2, 2], vec![0, 4]], vec![4, 8]),
            (vec![vec![3, 5, 0]], vec![6, 10, 4]),
            (vec![], vec![5, 7]),
            (vec![vec![2, 3]], vec![4, 9]),
        ];
        for (gens, mods) in cases {
            let sub = subgroup_from_gens(&gens, &mods);
            let brute = brute_subgroup(&gens, &mods);
            assert_eq!(sub.order(), brute.len() as u64, "order for {gens:?} {mods:?}");
            let regen = brute_subgroup(&sub.gens, &mods);
            assert_eq!(regen, brute);
            // coordinates are unique: enumerate tuples, count distinct
            let mut seen = std::collections::BTreeSet::new();
            let mut idx = vec![0u64; sub.orders.len()];
            loop {
                let mut v = vec![0i64; mods.len()];
                for (j, &t) in idx.iter().enumerate() {
                    for i in 0..mods.len() {
                        v[i] = (v[i] + t as i64 * sub.gens[j][i]).rem_euclid(mods[i] as i64);
                    }
                }
                assert!(seen.insert(v), "coordinates collide");
                let mut k = 0;
                loop {
                    if k == idx.len() {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] < sub.orders[k] {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
            assert_eq!(seen.len() as u64, sub.order());
        }
    }

    #[test]
    fn solve_mod_system_brute_force() {
        // x1 + 2 x2 = 3 (mod 6), 2 x1 = 2 (mod 4), vars mod (6, 6)
        let a: Mat = vec![vec![1, 2], vec![2, 0]];
        let b = vec![3, 2];
        let (x0, hom) = solve_mod_system(&a, &b, &[6, 4], &[6, 6]).expect("solvable");
        let mut brute = std::collections::BTreeSet::new();
        for x1 in 0..6i64 {
            for x2 in 0..6i64 {
                if (x1 + 2 * x2).rem_euclid(6) == 3 && (2 * x1).rem_euclid(4) == 2 {
                    brute.insert(vec![x1, x2]);
                }
            }
        }
        assert!(brute.contains(&x0));
        assert_eq!(hom.order(), brute.len() as u64);
        let shifted: std::collections::BTreeSet<Vec<i64>> = brute
            .iter()
            .map(|v| {
                vec![
                    (v[0] - x0[0]).rem_euclid(6),
                    (v[1] - x0[1]).rem_euclid(6),
                ]
            })
            .collect();
        let regen = brute_subgroup(&hom.gens, &[6, 6]);
        assert_eq!(regen, shifted);

        assert!(solve_mod_system(&vec![vec![2]], &[1], &[4], &[4]).is_none());
    }

    #[test]
    fn kernel_mod_agrees_with_enumeration() {
        // map Z/6 x Z/4 -> Z/12, (x, y) -> 2x + 3y
        let a: Mat = vec![vec![2, 3]];
        let ker = kernel_mod(&a, &[12], &[6, 4]);
        let mut count = 0;
        for x in 0..6i64 {
            for y in 0..4i64 {
                if (2 * x + 3 * y).rem_euclid(12) == 0 {
                    count += 1;
                }
            }
        }
        assert_eq!(ker.order(), count);
    }

    #[test]
    fn large_entry_system() {
        // the kind of system a big character fiber produces: moduli around
        // 6e7 with several unknowns; must not overflow
        let e: i128 = 62_177_236_176; // a large lcm-like modulus
        let a: Mat = vec![
            vec![e / 168, e / 371_293, 0],
            vec![0, e / 371_293 * 5, e / 371_293],
        ];
        let b = vec![e / 2, 0];
        let row_mods = [e as u64, e as u64];
        let var_mods = [168u64, 371_293, 371_293];
        if let Some((x0, hom)) = solve_mod_system(&a, &b, &row_mods, &var_mods) {
            // verify the particular solution satisfies the system
            for (row, &bv) in a.iter().zip(&b) {
                let s: i128 = row.iter().zip(&x0).map(|(&c, &x)| c * x as i128).sum();
                assert_eq!((s - bv).rem_euclid(e), 0);
            }
            // verify each generator is homogeneous
            for g in &hom.gens {
                for row in &a {
                    let s: i128 = row.iter().zip(g).map(|(&c, &x)| c * x as i128).sum();
                    assert_eq!(s.rem_euclid(e), 0);
                }
            }
        }
    }
}
