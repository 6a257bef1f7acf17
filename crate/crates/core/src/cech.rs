//! Nerves of finite covers and the twisted Čech complex.
//!
//! Simplices are strictly increasing vertex tuples. A cochain of degree `k`
//! with coefficients in `Fun(T × Q, ℤ/m)` is stored flat with index
//! `(simplex · |T| + t) · |Q| + z`, where `Q` is a finite abelian group acting
//! on the last argument by translation, `(F·x)(t, z) = F(t, x + z)`, and `T` is
//! a passive index set. Trivial coefficients are the case `|Q| = |T| = 1`.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lca::Pair;
use crate::zmod::{self, AbelianGroup, ZMat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nerve {
    vertex_count: usize,
    simplices: Vec<Vec<Vec<usize>>>,
    index: HashMap<Vec<usize>, usize>,
    faces: Vec<Vec<Vec<usize>>>,
}

impl Nerve {
    /// Builds the nerve generated by `simplices`; faces and all vertices are added.
    pub fn new(vertex_count: usize, simplices: &[Vec<usize>]) -> Result<Nerve> {
        let mut all: BTreeSet<Vec<usize>> = (0..vertex_count).map(|v| vec![v]).collect();
        for s in simplices {
            let mut t = s.clone();
            t.sort_unstable();
            if t.is_empty() {
                return Err(Error::Invalid("empty simplex".into()));
            }
            if t.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Invalid(format!("simplex {s:?} repeats a vertex")));
            }
            if let Some(&v) = t.iter().find(|&&v| v >= vertex_count) {
                return Err(Error::Invalid(format!(
                    "simplex {s:?} uses vertex {v} but there are {vertex_count} vertices"
                )));
            }
            if t.len() > 12 {
                return Err(Error::Invalid(format!("simplex {s:?} has dimension above 11")));
            }
            // all nonempty subsets
            let n = t.len();
            for mask in 1u32..(1 << n) {
                all.insert((0..n).filter(|i| mask >> i & 1 == 1).map(|i| t[i]).collect());
            }
        }
        let dim = all.iter().map(Vec::len).max().unwrap_or(0);
        let mut by_dim: Vec<Vec<Vec<usize>>> = vec![Vec::new(); dim];
        for s in all {
            by_dim[s.len() - 1].push(s);
        }
        let mut index = HashMap::new();
        for layer in &by_dim {
            for (i, s) in layer.iter().enumerate() {
                index.insert(s.clone(), i);
            }
        }
        let mut nerve = Nerve {
            vertex_count,
            simplices: by_dim,
            index,
            faces: Vec::new(),
        };
        nerve.faces = (0..nerve.simplices.len()).map(|k| nerve.compute_faces(k)).collect();
        Ok(nerve)
    }

    /// Three vertices, three edges, no 2-simplex.
    pub fn circle() -> Nerve {
        Nerve::new(3, &[vec![0, 1], vec![0, 2], vec![1, 2]]).expect("circle")
    }

    /// Boundary of the tetrahedron.
    pub fn sphere() -> Nerve {
        Nerve::new(
            4,
            &[vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
        )
        .expect("sphere")
    }

    pub fn point() -> Nerve {
        Nerve::new(1, &[]).expect("point")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Highest dimension with a simplex, or `None` for the empty nerve.
    pub fn dimension(&self) -> Option<usize> {
        self.simplices.len().checked_sub(1)
    }

    pub fn simplices(&self, k: usize) -> &[Vec<usize>] {
        self.simplices.get(k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count(&self, k: usize) -> usize {
        self.simplices(k).len()
    }

    pub fn position(&self, s: &[usize]) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<usize> {
        self.position(&[a, b])
    }

    /// Edges that lie in no 2-simplex.
    pub fn free_edges(&self) -> Vec<usize> {
        let mut used = vec![false; self.count(1)];
        for t in self.simplices(2) {
            for (a, b) in [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])] {
                used[self.edge(a, b).expect("face")] = true;
            }
        }
        (0..self.count(1)).filter(|&e| !used[e]).collect()
    }

    /// Positions of the faces of each `k`-simplex obtained by deleting vertex `j`, `j = 0..=k`.
    pub fn faces(&self, k: usize) -> &[Vec<usize>] {
        self.faces.get(k).map(Vec::as_slice).unwrap_or(&[])
    }

    fn compute_faces(&self, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![Vec::new(); self.count(0)];
        }
        self.simplices(k)
            .iter()
            .map(|s| {
                (0..s.len())
                    .map(|j| {
                        let mut f = s.clone();
                        f.remove(j);
                        self.position(&f).expect("faces are closed")
                    })
                    .collect()
            })
            .collect()
    }
}

/// A `G/N`-valued Čech 1-cocycle: one coset label per edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Twist {
    pub labels: Vec<usize>,
}

impl Twist {
    pub fn trivial(nerve: &Nerve) -> Twist {
        Twist {
            labels: vec![0; nerve.count(1)],
        }
    }

    /// Twist label of the (increasing) edge `(a, b)`.
    pub fn get(&self, nerve: &Nerve, a: usize, b: usize) -> usize {
        self.labels[nerve.edge(a, b).expect("edge in nerve")]
    }

    /// The 2-simplices where `g_ab + g_bc ≠ g_ac`.
    pub fn violations(&self, nerve: &Nerve, qadd: &dyn Fn(usize, usize) -> usize) -> Vec<Vec<usize>> {
        nerve
            .simplices(2)
            .iter()
            .filter(|t| {
                qadd(self.get(nerve, t[0], t[1]), self.get(nerve, t[1], t[2]))
                    != self.get(nerve, t[0], t[2])
            })
            .cloned()
            .collect()
    }

    /// `g′_ab = r_a + g_ab − r_b`.
    pub fn transform(&self, nerve: &Nerve, pair: &Pair, r: &[usize]) -> Twist {
        Twist {
            labels: nerve
                .simplices(1)
                .iter()
                .zip(&self.labels)
                .map(|(e, &g)| pair.qsub(pair.qadd(r[e[0]], g), r[e[1]]))
                .collect(),
        }
    }
}

/// Coefficient module `Fun(T × Q, ℤ/m)` with `Q` acting by translation.
#[derive(Clone, Debug)]
pub struct ShiftModule {
    pub m: u64,
    /// Size of the passive index set `T`.
    pub passive: usize,
    q: usize,
    qadd: Vec<usize>,
}

impl ShiftModule {
    /// `Fun(T × G/N, ℤ/m)` for the quotient of `pair`.
    pub fn functions(pair: &Pair, passive: usize, m: u64) -> ShiftModule {
        let q = pair.q();
        let mut qadd = vec![0; q * q];
        for x in 0..q {
            for y in 0..q {
                qadd[x * q + y] = pair.qadd(x, y);
            }
        }
        ShiftModule { m, passive, q, qadd }
    }

    /// `ℤ/m` with trivial action.
    pub fn trivial(m: u64) -> ShiftModule {
        ShiftModule {
            m,
            passive: 1,
            q: 1,
            qadd: vec![0],
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of `ℤ/m` coordinates of one module element.
    pub fn width(&self) -> usize {
        self.passive * self.q
    }

    pub fn qadd(&self, x: usize, y: usize) -> usize {
        self.qadd[x * self.q + y]
    }
}

/// Twisted differential `δ_g: C^k → C^{k+1}`.
///
/// `(δ_g φ)_{i_0…i_n} = Σ_{j<n} (−1)^j φ_{…î_j…} + (−1)^n φ_{i_0…i_{n−1}}·g_{i_{n−1} i_n}`.
pub fn delta_g(nerve: &Nerve, module: &ShiftModule, twist: &Twist, k: usize, c: &[u64]) -> Vec<u64> {
    let w = module.width();
    let q = module.q();
    let m = module.m;
    assert_eq!(c.len(), nerve.count(k) * w, "cochain length");
    let n = k + 1;
    let mut out = vec![0u64; nerve.count(n) * w];
    let faces = nerve.faces(n);
    for (si, s) in nerve.simplices(n).iter().enumerate() {
        let g = twist.get(nerve, s[n - 1], s[n]);
        let base = si * w;
        for j in 0..n {
            let f = faces[si][j] * w;
            let neg = j % 2 == 1;
            for x in 0..w {
                let v = c[f + x];
                let o = &mut out[base + x];
                *o = if neg { (*o + m - v) % m } else { (*o + v) % m };
            }
        }
        let f = faces[si][n] * w;
        let neg = n % 2 == 1;
        for t in 0..module.passive {
            for z in 0..q {
                let v = c[f + t * q + module.qadd(g, z)];
                let o = &mut out[base + t * q + z];
                *o = if neg { (*o + m - v) % m } else { (*o + v) % m };
            }
        }
    }
    out
}

/// `(r^# φ)_{k_0…k_n}(t, z) = φ_{k_0…k_n}(t, r_{k_n} + z)`.
pub fn r_sharp(nerve: &Nerve, module: &ShiftModule, r: &[usize], k: usize, c: &[u64]) -> Vec<u64> {
    let w = module.width();
    let q = module.q();
    let mut out = vec![0u64; c.len()];
    for (si, s) in nerve.simplices(k).iter().enumerate() {
        let rv = r[*s.last().expect("nonempty simplex")];
        for t in 0..module.passive {
            for z in 0..q {
                out[si * w + t * q + z] = c[si * w + t * q + module.qadd(rv, z)];
            }
        }
    }
    out
}

/// Matrix of a linear map given by its action on basis vectors.
pub fn matrix_of(
    rows: usize,
    cols: usize,
    m: u64,
    cap: usize,
    f: impl Fn(&[u64]) -> Vec<u64>,
) -> Result<ZMat> {
    let dim = rows.max(cols);
    if dim > cap {
        return Err(Error::ResourceCap { dim, cap });
    }
    let mut a = ZMat::zeros(rows, cols, m);
    let mut e = vec![0u64; cols];
    for j in 0..cols {
        e[j] = 1;
        let col = f(&e);
        for (i, &v) in col.iter().enumerate() {
            if v != 0 {
                a.set(i, j, v);
            }
        }
        e[j] = 0;
    }
    Ok(a)
}

/// Matrix dimension cap, from `TDUAL_MAX_DIM` (default 512).
pub fn max_dim() -> usize {
    std::env::var("TDUAL_MAX_DIM")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(512)
}

pub fn delta_matrix(nerve: &Nerve, module: &ShiftModule, twist: &Twist, k: usize, cap: usize) -> Result<ZMat> {
    let w = module.width();
    matrix_of(nerve.count(k + 1) * w, nerve.count(k) * w, module.m, cap, |c| {
        delta_g(nerve, module, twist, k, c)
    })
}

/// `Ȟ^k(nerve, M, g)`.
pub fn cohomology(nerve: &Nerve, module: &ShiftModule, twist: &Twist, k: usize, cap: usize) -> Result<AbelianGroup> {
    let w = module.width();
    let prev = if k == 0 {
        ZMat::zeros(nerve.count(0) * w, 0, module.m)
    } else {
        delta_matrix(nerve, module, twist, k - 1, cap)?
    };
    let next = delta_matrix(nerve, module, twist, k, cap)?;
    zmod::subquotient(&prev, &next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lca::Pair;

    #[test]
    fn faces_are_completed() {
        let n = Nerve::new(3, &[vec![2, 0, 1]]).unwrap();
        assert_eq!(n.count(0), 3);
        assert_eq!(n.count(1), 3);
        assert_eq!(n.count(2), 1);
        assert!(n.free_edges().is_empty());
        assert_eq!(Nerve::circle().free_edges().len(), 3);
    }

    #[test]
    fn rejects_bad_simplices() {
        assert!(Nerve::new(2, &[vec![0, 2]]).is_err());
        assert!(Nerve::new(2, &[vec![1, 1]]).is_err());
    }

    #[test]
    fn circle_delta_example() {
        let nerve = Nerve::circle();
        let module = ShiftModule::trivial(4);
        let tw = Twist::trivial(&nerve);
        assert_eq!(delta_g(&nerve, &module, &tw, 0, &[1, 0, 0]), vec![3, 3, 0]);
    }

    #[test]
    fn constant_cochain_is_closed() {
        let nerve = Nerve::sphere();
        let module = ShiftModule::trivial(6);
        let tw = Twist::trivial(&nerve);
        assert!(delta_g(&nerve, &module, &tw, 0, &[5; 4]).iter().all(|&v| v == 0));
    }

    #[test]
    fn circle_cohomology() {
        let nerve = Nerve::circle();
        for m in [2, 4, 6] {
            let module = ShiftModule::trivial(m);
            let tw = Twist::trivial(&nerve);
            assert_eq!(cohomology(&nerve, &module, &tw, 0, 512).unwrap().invariant_factors, vec![m]);
            assert_eq!(cohomology(&nerve, &module, &tw, 1, 512).unwrap().invariant_factors, vec![m]);
        }
    }

    #[test]
    fn point_cohomology_is_invariants() {
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
        let module = ShiftModule::functions(&pair, 1, 4);
        let nerve = Nerve::point();
        let tw = Twist::trivial(&nerve);
        let h0 = cohomology(&nerve, &module, &tw, 0, 512).unwrap();
        assert_eq!(h0.invariant_factors, vec![4, 4]);
        assert!(cohomology(&nerve, &module, &tw, 1, 512).unwrap().is_trivial());
    }

    #[test]
    fn twisted_circle_h0() {
        // Nontrivial twist on Fun(ℤ/2, ℤ/2) along the circle: invariants are constants.
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
        let module = ShiftModule::functions(&pair, 1, 2);
        let nerve = Nerve::circle();
        let tw = Twist { labels: vec![1, 0, 0] };
        let h0 = cohomology(&nerve, &module, &tw, 0, 512).unwrap();
        assert_eq!(h0.invariant_factors, vec![2]);
    }

    #[test]
    fn cap_is_enforced() {
        let nerve = Nerve::sphere();
        let module = ShiftModule::trivial(2);
        let tw = Twist::trivial(&nerve);
        assert!(matches!(
            cohomology(&nerve, &module, &tw, 1, 3),
            Err(Error::ResourceCap { .. })
        ));
    }
}
