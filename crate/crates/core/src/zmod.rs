//! Exact linear algebra over `ℤ/m`: diagonalization by unimodular row and
//! column operations, linear solving, kernels and subquotients.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qz::gcd;

/// Dense matrix over `ℤ/m`, entries stored reduced in `[0, m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZMat {
    rows: usize,
    cols: usize,
    m: u64,
    data: Vec<u64>,
}

impl ZMat {
    pub fn zeros(rows: usize, cols: usize, m: u64) -> ZMat {
        assert!(m >= 1);
        ZMat {
            rows,
            cols,
            m,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize, m: u64) -> ZMat {
        let mut a = ZMat::zeros(n, n, m);
        for i in 0..n {
            a.set(i, i, 1);
        }
        a
    }

    pub fn from_columns(rows: usize, m: u64, cols: &[Vec<u64>]) -> ZMat {
        let mut a = ZMat::zeros(rows, cols.len(), m);
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, &v) in c.iter().enumerate() {
                a.set(i, j, v);
            }
        }
        a
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u64 {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.m;
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.cols);
        let m = self.m as u128;
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                (row.iter()
                    .zip(x)
                    .map(|(&a, &b)| a as u128 * b as u128 % m)
                    .sum::<u128>()
                    % m) as u64
            })
            .collect()
    }

    pub fn mul(&self, o: &ZMat) -> ZMat {
        assert_eq!(self.cols, o.rows);
        assert_eq!(self.m, o.m);
        let m = self.m as u128;
        let mut r = ZMat::zeros(self.rows, o.cols, self.m);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k) as u128;
                if a == 0 {
                    continue;
                }
                for j in 0..o.cols {
                    let idx = i * o.cols + j;
                    r.data[idx] = ((r.data[idx] as u128 + a * o.get(k, j) as u128) % m) as u64;
                }
            }
        }
        r
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    // [row_a, row_b] ← [[p, q], [r, s]] · [row_a, row_b]
    fn row_op(&mut self, a: usize, b: usize, c: [i128; 4]) {
        let m = self.m as i128;
        for j in 0..self.cols {
            let x = self.get(a, j) as i128;
            let y = self.get(b, j) as i128;
            self.data[a * self.cols + j] = (c[0] * x + c[1] * y).rem_euclid(m) as u64;
            self.data[b * self.cols + j] = (c[2] * x + c[3] * y).rem_euclid(m) as u64;
        }
    }

    // [col_a, col_b] ← [col_a, col_b] · [[p, q], [r, s]]
    fn col_op(&mut self, a: usize, b: usize, c: [i128; 4]) {
        let m = self.m as i128;
        for i in 0..self.rows {
            let x = self.get(i, a) as i128;
            let y = self.get(i, b) as i128;
            self.data[i * self.cols + a] = (c[0] * x + c[2] * y).rem_euclid(m) as u64;
            self.data[i * self.cols + b] = (c[1] * x + c[3] * y).rem_euclid(m) as u64;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }
}

/// `(g, s, t)` with `s·a + t·b = g = gcd(a, b)`; `(a, 1, 0)` whenever `a | b`.
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if a != 0 && b % a == 0 {
        return (a, 1, 0);
    }
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, s, t) = ext_gcd(b, a.rem_euclid(b));
        (g, t, s - (a.div_euclid(b)) * t)
    }
}

/// Inverse of `a` modulo `n`, if it exists.
pub fn inv_mod(a: u64, n: u64) -> Option<u64> {
    if n == 1 {
        return Some(0);
    }
    let (g, s, _) = ext_gcd(a as i128 % n as i128, n as i128);
    (g == 1).then(|| s.rem_euclid(n as i128) as u64)
}

/// `U · A · V = D` with `D` diagonal and `U`, `V` invertible over `ℤ/m`.
#[derive(Clone, Debug)]
pub struct Diagonalization {
    pub diag: Vec<u64>,
    pub u: Option<ZMat>,
    pub u_inv: Option<ZMat>,
    pub v: ZMat,
    pub v_inv: ZMat,
    pub m: u64,
    pub rows: usize,
    pub cols: usize,
}

/// Diagonalizes `a`. The row transform is only tracked when `track_rows` is set.
pub fn diagonalize(a: &ZMat, track_rows: bool) -> Diagonalization {
    let m = a.m;
    let (r, c) = (a.rows, a.cols);
    let mut d = a.clone();
    let mut u = track_rows.then(|| ZMat::identity(r, m));
    let mut u_inv = track_rows.then(|| ZMat::identity(r, m));
    let mut v = ZMat::identity(c, m);
    let mut v_inv = ZMat::identity(c, m);
    let mut diag = Vec::new();
    for t in 0..r.min(c) {
        // Pivot: entry with the smallest gcd with m, to keep the loop short.
        let mut best: Option<(u64, usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                let x = d.get(i, j);
                if x != 0 {
                    let g = gcd(x, m);
                    if best.is_none_or(|(bg, _, _)| g < bg) {
                        best = Some((g, i, j));
                    }
                }
            }
        }
        let Some((_, pi, pj)) = best else { break };
        d.swap_rows(t, pi);
        if let (Some(u), Some(ui)) = (u.as_mut(), u_inv.as_mut()) {
            u.swap_rows(t, pi);
            ui.swap_cols(t, pi);
        }
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);
        v_inv.swap_rows(t, pj);
        loop {
            let mut changed = false;
            for i in t + 1..r {
                let b = d.get(i, t) as i128;
                if b == 0 {
                    continue;
                }
                let a0 = d.get(t, t) as i128;
                let (g, s, w) = ext_gcd(a0, b);
                let e = [s, w, -b / g, a0 / g];
                let e_inv = [a0 / g, -w, b / g, s];
                d.row_op(t, i, e);
                if let (Some(u), Some(ui)) = (u.as_mut(), u_inv.as_mut()) {
                    u.row_op(t, i, e);
                    ui.col_op(t, i, e_inv);
                }
                changed = true;
            }
            for j in t + 1..c {
                let b = d.get(t, j) as i128;
                if b == 0 {
                    continue;
                }
                let a0 = d.get(t, t) as i128;
                let (g, s, w) = ext_gcd(a0, b);
                let f = [s, -b / g, w, a0 / g];
                let f_inv = [a0 / g, b / g, -w, s];
                d.col_op(t, j, f);
                v.col_op(t, j, f);
                v_inv.row_op(t, j, f_inv);
                changed = true;
            }
            let clean = (t + 1..r).all(|i| d.get(i, t) == 0) && (t + 1..c).all(|j| d.get(t, j) == 0);
            if clean || !changed {
                break;
            }
        }
        diag.push(d.get(t, t));
    }
    while diag.len() < r.min(c) {
        diag.push(0);
    }
    Diagonalization {
        diag,
        u,
        u_inv,
        v,
        v_inv,
        m,
        rows: r,
        cols: c,
    }
}

/// Solves `A x = b` over `ℤ/m`; `Ok(None)` when there is no solution.
pub fn solve(a: &ZMat, b: &[u64]) -> Result<Option<Vec<u64>>> {
    if b.len() != a.rows {
        return Err(Error::Shape(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            a.rows
        )));
    }
    let m = a.m;
    let dz = diagonalize(a, true);
    let cvec = dz.u.as_ref().expect("tracked").mul_vec(b);
    let mut y = vec![0u64; a.cols];
    for (i, &ci) in cvec.iter().enumerate() {
        let di = dz.diag.get(i).copied().unwrap_or(0);
        let g = gcd(di, m);
        if ci % g != 0 {
            return Ok(None);
        }
        if i < a.cols && g != m {
            let mg = m / g;
            let inv = inv_mod((di / g) % mg, mg).expect("coprime after dividing by gcd");
            y[i] = ((ci / g) as u128 * inv as u128 % mg as u128) as u64;
        }
    }
    Ok(Some(dz.v.mul_vec(&y)))
}

/// Generators of `ker A` with their additive orders (orders > 1 only).
pub fn kernel(a: &ZMat) -> Vec<(Vec<u64>, u64)> {
    let dz = diagonalize(a, false);
    kernel_from(&dz)
}

fn kernel_from(dz: &Diagonalization) -> Vec<(Vec<u64>, u64)> {
    let m = dz.m;
    let mut out = Vec::new();
    for j in 0..dz.cols {
        let dj = dz.diag.get(j).copied().unwrap_or(0);
        let g = gcd(dj, m);
        if g == 1 {
            continue;
        }
        let scale = m / g;
        let col: Vec<u64> = dz
            .v
            .column(j)
            .iter()
            .map(|&x| (x as u128 * scale as u128 % m as u128) as u64)
            .collect();
        out.push((col, g));
    }
    out
}

/// A finite abelian group given as a subquotient, with explicit generators.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct AbelianGroup {
    /// Invariant factors `d_1 | d_2 | …`, all `> 1`.
    pub invariant_factors: Vec<u64>,
    /// Generators of a cyclic decomposition, as vectors in the ambient `(ℤ/m)^n`.
    pub generators: Vec<Vec<u64>>,
    /// Order of each generator.
    pub orders: Vec<u64>,
}

impl AbelianGroup {
    pub fn order(&self) -> u128 {
        self.orders.iter().map(|&o| o as u128).product()
    }

    pub fn is_trivial(&self) -> bool {
        self.invariant_factors.is_empty()
    }
}

/// `ker(next) / im(prev)` for a composable pair `prev: ℤ/m^a → ℤ/m^n`,
/// `next: ℤ/m^n → ℤ/m^b`. Fails if `next ∘ prev ≠ 0`.
pub fn subquotient(prev: &ZMat, next: &ZMat) -> Result<AbelianGroup> {
    let m = next.m;
    if prev.m != m || prev.rows != next.cols {
        return Err(Error::Shape("maps are not composable".into()));
    }
    let dz = diagonalize(next, false);
    let kgens = kernel_from(&dz);
    let r = kgens.len();
    // Kernel coordinates: y = V⁻¹ x, kernel generator i lives in coordinate j_i.
    let mut coord_index = Vec::with_capacity(r);
    for j in 0..dz.cols {
        let g = gcd(dz.diag.get(j).copied().unwrap_or(0), m);
        if g != 1 {
            coord_index.push((j, g));
        }
    }
    let mut rel = ZMat::zeros(r, prev.cols + r, m);
    for k in 0..prev.cols {
        let y = dz.v_inv.mul_vec(&prev.column(k));
        for j in 0..dz.cols {
            let g = gcd(dz.diag.get(j).copied().unwrap_or(0), m);
            if !y[j].is_multiple_of(m / g) {
                return Err(Error::Invalid("image is not contained in the kernel".into()));
            }
        }
        for (i, &(j, g)) in coord_index.iter().enumerate() {
            rel.set(i, k, y[j] / (m / g));
        }
    }
    for (i, &(_, g)) in coord_index.iter().enumerate() {
        rel.set(i, prev.cols + i, g % m);
    }
    let dr = diagonalize(&rel, true);
    let u_inv = dr.u_inv.as_ref().expect("tracked");
    let mut generators = Vec::new();
    let mut orders = Vec::new();
    for i in 0..r {
        let o = gcd(dr.diag.get(i).copied().unwrap_or(0), m);
        if o == 1 {
            continue;
        }
        let coeffs = u_inv.column(i);
        let mut v = vec![0u64; next.cols];
        for (c, (kv, _)) in coeffs.iter().zip(&kgens) {
            for (t, &x) in kv.iter().enumerate() {
                v[t] = ((v[t] as u128 + *c as u128 * x as u128) % m as u128) as u64;
            }
        }
        generators.push(v);
        orders.push(o);
    }
    Ok(AbelianGroup {
        invariant_factors: invariant_factors(&orders),
        generators,
        orders,
    })
}

/// Invariant factors of `⊕ ℤ/o_i`.
pub fn invariant_factors(orders: &[u64]) -> Vec<u64> {
    use std::collections::BTreeMap;
    let mut primes: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for &o in orders {
        let mut n = o;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                let mut q = 1;
                while n % p == 0 {
                    n /= p;
                    q *= p;
                }
                primes.entry(p).or_default().push(q);
            }
            p += 1;
        }
        if n > 1 {
            primes.entry(n).or_default().push(n);
        }
    }
    let len = primes.values().map(Vec::len).max().unwrap_or(0);
    let mut out = vec![1u64; len];
    for powers in primes.values_mut() {
        powers.sort_unstable_by(|a, b| b.cmp(a));
        for (i, &q) in powers.iter().enumerate() {
            out[i] *= q;
        }
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: usize, cols: usize, m: u64, v: &[u64]) -> ZMat {
        let mut a = ZMat::zeros(rows, cols, m);
        for i in 0..rows {
            for j in 0..cols {
                a.set(i, j, v[i * cols + j]);
            }
        }
        a
    }

    #[test]
    fn invariant_factor_normal_form() {
        assert_eq!(invariant_factors(&[2, 3]), vec![6]);
        assert_eq!(invariant_factors(&[2, 4, 3]), vec![2, 12]);
        assert_eq!(invariant_factors(&[1, 1]), Vec::<u64>::new());
        assert_eq!(invariant_factors(&[6, 6]), vec![6, 6]);
    }

    #[test]
    fn inverse_mod() {
        assert_eq!(inv_mod(5, 6), Some(5));
        assert_eq!(inv_mod(2, 6), None);
        assert_eq!(inv_mod(3, 1), Some(0));
    }

    #[test]
    fn circle_incidence_cohomology() {
        // δ0 on the circle nerve with coefficients ℤ/4.
        let m = 4;
        let d0 = mat(3, 3, m, &[3, 1, 0, 3, 0, 1, 0, 3, 1]);
        let d1 = ZMat::zeros(0, 3, m);
        let h1 = subquotient(&d0, &d1).unwrap();
        assert_eq!(h1.invariant_factors, vec![4]);
        let zero = ZMat::zeros(3, 0, m);
        let h0 = subquotient(&zero, &d0).unwrap();
        assert_eq!(h0.invariant_factors, vec![4]);
    }

    #[test]
    fn solve_unsolvable() {
        let a = mat(1, 1, 6, &[2]);
        assert_eq!(solve(&a, &[1]).unwrap(), None);
        let x = solve(&a, &[4]).unwrap().unwrap();
        assert_eq!(a.mul_vec(&x), vec![4]);
    }

    fn arb_mat() -> impl Strategy<Value = ZMat> {
        (1usize..6, 1usize..6, prop::sample::select(vec![2u64, 4, 6, 8, 9, 12]))
            .prop_flat_map(|(r, c, m)| {
                prop::collection::vec(0..m, r * c).prop_map(move |v| mat(r, c, m, &v))
            })
    }

    proptest! {
        #[test]
        fn diagonalization_is_valid(a in arb_mat()) {
            let dz = diagonalize(&a, true);
            let u = dz.u.clone().unwrap();
            let ui = dz.u_inv.clone().unwrap();
            let d = u.mul(&a).mul(&dz.v);
            for i in 0..a.rows() {
                for j in 0..a.cols() {
                    let want = if i == j { dz.diag[i] } else { 0 };
                    prop_assert_eq!(d.get(i, j), want);
                }
            }
            prop_assert_eq!(u.mul(&ui), ZMat::identity(a.rows(), a.modulus()));
            prop_assert_eq!(dz.v.mul(&dz.v_inv), ZMat::identity(a.cols(), a.modulus()));
        }

        #[test]
        fn solve_finds_constructed_solutions(a in arb_mat(), seed in 0u64..1000) {
            let x0: Vec<u64> = (0..a.cols()).map(|i| (seed * 7 + i as u64 * 13) % a.modulus()).collect();
            let b = a.mul_vec(&x0);
            let x = solve(&a, &b).unwrap().expect("solvable by construction");
            prop_assert_eq!(a.mul_vec(&x), b);
        }

        #[test]
        fn kernel_generators_are_killed(a in arb_mat()) {
            for (v, o) in kernel(&a) {
                prop_assert!(a.mul_vec(&v).iter().all(|&x| x == 0));
                let ov: Vec<u64> = v.iter().map(|&x| x * o % a.modulus()).collect();
                prop_assert!(ov.iter().all(|&x| x == 0));
            }
        }
    }
}
