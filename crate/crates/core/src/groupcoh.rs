//! Group cochains `C^l(G, Fun(G/N, ℤ/m))` and the Čech × group total complex.
//!
//! A group cochain of arity `l` is stored flat with index `tuple · |G/N| + z`,
//! where `tuple` encodes `(g_1, …, g_l)` in base `|G|` with `g_1` most
//! significant. `G` acts on the coefficients by `(g·F)(z) = F(z + gN)`.

use crate::cech::{self, Nerve, ShiftModule, Twist};
use crate::error::Result;
use crate::lca::Pair;
use crate::zmod::{self, AbelianGroup, ZMat};

pub fn arity_size(pair: &Pair, l: usize) -> usize {
    pair.g.order().pow(l as u32) * pair.q()
}

/// Group differential, applied independently to `blocks` consecutive cochains of arity `l`.
///
/// `d f(g_1…g_{l+1}) = (−1)^{l+1} f(g_1…g_l) + Σ_{i=1}^{l} (−1)^i f(…, g_i+g_{i+1}, …) + g_1·f(g_2…g_{l+1})`.
pub fn d_group(pair: &Pair, m: u64, l: usize, blocks: usize, f: &[u64]) -> Vec<u64> {
    let g = &pair.g;
    let n = g.order();
    let q = pair.q();
    let src = arity_size(pair, l);
    let dst = arity_size(pair, l + 1);
    assert_eq!(f.len(), blocks * src, "group cochain length");
    let mut out = vec![0u64; blocks * dst];
    let tuples = n.pow(l as u32 + 1);
    let mut digits = vec![0usize; l + 1];
    let encode = |d: &[usize]| d.iter().fold(0usize, |a, &x| a * n + x);
    let add = |acc: &mut u64, v: u64, neg: bool| {
        *acc = if neg { (*acc + m - v) % m } else { (*acc + v) % m };
    };
    let mut merged = vec![0usize; l];
    for t in 0..tuples {
        let mut r = t;
        for i in (0..=l).rev() {
            digits[i] = r % n;
            r /= n;
        }
        let head = encode(&digits[..l]);
        let tail = encode(&digits[1..]);
        let merged_idx: Vec<usize> = (1..=l)
            .map(|i| {
                merged.clear();
                merged.extend_from_slice(&digits[..i - 1]);
                merged.push(g.add(digits[i - 1], digits[i]));
                merged.extend_from_slice(&digits[i + 1..]);
                encode(&merged)
            })
            .collect();
        let g1 = digits[0];
        for b in 0..blocks {
            for z in 0..q {
                let mut acc = 0u64;
                add(&mut acc, f[b * src + head * q + z], (l + 1) % 2 == 1);
                for (i, &mi) in merged_idx.iter().enumerate() {
                    add(&mut acc, f[b * src + mi * q + z], (i + 1) % 2 == 1);
                }
                add(&mut acc, f[b * src + tail * q + pair.shift(z, g1)], false);
                out[b * dst + t * q + z] = acc;
            }
        }
    }
    out
}

/// `H^k(G, Fun(G/N, ℤ/m))`; with `N = G` this is `H^k(G, ℤ/m)` with trivial action.
pub fn group_cohomology(pair: &Pair, m: u64, k: usize, cap: usize) -> Result<AbelianGroup> {
    let prev = if k == 0 {
        ZMat::zeros(arity_size(pair, 0), 0, m)
    } else {
        cech::matrix_of(arity_size(pair, k), arity_size(pair, k - 1), m, cap, |f| {
            d_group(pair, m, k - 1, 1, f)
        })?
    };
    let next = cech::matrix_of(arity_size(pair, k + 1), arity_size(pair, k), m, cap, |f| {
        d_group(pair, m, k, 1, f)
    })?;
    zmod::subquotient(&prev, &next)
}

/// Block layout of `C^p_tot = ⊕_{k+l=p} C^k(nerve, C^l(G, Fun(G/N, ℤ/m)))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TotalLayout {
    pub p: usize,
    /// `(k, offset, size)` for `k = 0..=p`; `l = p − k`.
    pub blocks: Vec<(usize, usize, usize)>,
    pub len: usize,
}

impl TotalLayout {
    pub fn new(nerve: &Nerve, pair: &Pair, p: usize) -> TotalLayout {
        let mut blocks = Vec::with_capacity(p + 1);
        let mut off = 0;
        for k in 0..=p {
            let size = nerve.count(k) * arity_size(pair, p - k);
            blocks.push((k, off, size));
            off += size;
        }
        TotalLayout { p, blocks, len: off }
    }

    /// Range of the bidegree `(k, p − k)` block.
    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        let (_, off, size) = self.blocks[k];
        off..off + size
    }

    /// Flat index of the value at simplex `s`, group tuple `tuple`, coset `z` in block `k`.
    pub fn index(&self, pair: &Pair, k: usize, s: usize, tuple: usize, z: usize) -> usize {
        let l = self.p - k;
        self.blocks[k].1 + s * arity_size(pair, l) + tuple * pair.q() + z
    }
}

/// The total complex of a nerve, a pair `(G, N)`, a twist and a modulus.
#[derive(Clone, Debug)]
pub struct TotalComplex<'a> {
    pub nerve: &'a Nerve,
    pub pair: &'a Pair,
    pub twist: &'a Twist,
    pub m: u64,
}

impl<'a> TotalComplex<'a> {
    pub fn new(nerve: &'a Nerve, pair: &'a Pair, twist: &'a Twist, m: u64) -> Self {
        TotalComplex { nerve, pair, twist, m }
    }

    pub fn layout(&self, p: usize) -> TotalLayout {
        TotalLayout::new(self.nerve, self.pair, p)
    }

    /// `∂_g = δ_g − (−1)^p d_*` on `C^p_tot`.
    pub fn differential(&self, p: usize, x: &[u64]) -> Vec<u64> {
        let m = self.m;
        let src = self.layout(p);
        let dst = self.layout(p + 1);
        assert_eq!(x.len(), src.len, "total cochain length");
        let mut y = vec![0u64; dst.len];
        let d_neg = p.is_multiple_of(2);
        for k in 0..=p {
            let l = p - k;
            let part = &x[src.range(k)];
            let module = ShiftModule::functions(self.pair, self.pair.g.order().pow(l as u32), m);
            let dv = cech::delta_g(self.nerve, &module, self.twist, k, part);
            for (o, v) in y[dst.range(k + 1)].iter_mut().zip(dv) {
                *o = (*o + v) % m;
            }
            let dg = d_group(self.pair, m, l, self.nerve.count(k), part);
            for (o, v) in y[dst.range(k)].iter_mut().zip(dg) {
                *o = if d_neg { (*o + m - v) % m } else { (*o + v) % m };
            }
        }
        y
    }

    pub fn matrix(&self, p: usize, cap: usize) -> Result<ZMat> {
        let rows = self.layout(p + 1).len;
        let cols = self.layout(p).len;
        cech::matrix_of(rows, cols, self.m, cap, |x| self.differential(p, x))
    }

    /// `H^p_tot`.
    pub fn cohomology(&self, p: usize, cap: usize) -> Result<AbelianGroup> {
        let prev = if p == 0 {
            ZMat::zeros(self.layout(0).len, 0, self.m)
        } else {
            self.matrix(p - 1, cap)?
        };
        let next = self.matrix(p, cap)?;
        zmod::subquotient(&prev, &next)
    }

    /// Some `x ∈ C^{p−1}_tot` with `∂_g x = target`, if one exists.
    pub fn solve_coboundary(&self, p: usize, target: &[u64], cap: usize) -> Result<Option<Vec<u64>>> {
        if p == 0 {
            return Ok(target.iter().all(|&v| v == 0).then(Vec::new));
        }
        let a = self.matrix(p - 1, cap)?;
        zmod::solve(&a, target)
    }
}
