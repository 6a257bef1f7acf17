//! Seeded generator of valid triples.
//!
//! The fibre is `ℂ^k ⊗ ℂ^r`. Transition functions are Heisenberg words
//! `S^e C^f ⊗ I` with `ℤ/k`-valued Čech cocycles `e, f`, and the decker is a
//! homomorphism `g ↦ C^{t(g)} ⊗ P(g)` times scalar phases. Everything is then
//! conjugated by random chart unitaries `V_a(z)` and multiplied by random
//! `m`-th roots of unity, so the laws hold projectively by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TripleLocalData;
use crate::cech::{Nerve, Twist};
use crate::error::{Error, Result};
use crate::lca::Pair;
use crate::linalg::{self, root, CMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FixtureKind {
    Trivial,
    #[default]
    Generic,
}

/// The hidden structure a generated triple was built from.
#[derive(Clone, Debug)]
pub struct Witness {
    /// Heisenberg leg dimension.
    pub k: usize,
    /// Spectator leg dimension.
    pub r: usize,
    /// `v[vertex][z]`.
    pub v: Vec<Vec<CMat>>,
    /// Characters of the spectator leg, one per basis vector of `ℂ^r`.
    pub spectators: Vec<usize>,
}

/// Smallest divisor `k ≥ 2` of `d` that divides `m`, or 1.
pub fn heisenberg_dim(d: usize, m: u64) -> usize {
    (2..=d).find(|&k| d.is_multiple_of(k) && m.is_multiple_of(k as u64)).unwrap_or(1)
}

/// A random twist: a coboundary plus random labels on edges in no 2-simplex.
pub fn random_twist<R: Rng + ?Sized>(nerve: &Nerve, pair: &Pair, rng: &mut R) -> Twist {
    let q = pair.q();
    let r: Vec<usize> = (0..nerve.count(0)).map(|_| rng.random_range(0..q)).collect();
    let mut labels: Vec<usize> = nerve
        .simplices(1)
        .iter()
        .map(|e| pair.qsub(r[e[0]], r[e[1]]))
        .collect();
    for e in nerve.free_edges() {
        labels[e] = rng.random_range(0..q);
    }
    Twist { labels }
}

fn ints_cocycle<R: Rng + ?Sized>(nerve: &Nerve, k: usize, rng: &mut R) -> Vec<usize> {
    let u: Vec<usize> = (0..nerve.count(0)).map(|_| rng.random_range(0..k)).collect();
    let mut out: Vec<usize> = nerve
        .simplices(1)
        .iter()
        .map(|e| (u[e[0]] + k - u[e[1]]) % k)
        .collect();
    for e in nerve.free_edges() {
        out[e] = rng.random_range(0..k);
    }
    out
}

/// Shift `S e_i = e_{i+1}` and clock `C e_i = ω^i e_i` on `ℂ^k`.
pub fn shift_clock(k: usize) -> (CMat, CMat) {
    let mut s = CMat::zeros(k, k);
    for i in 0..k {
        s[((i + 1) % k, i)] = linalg::ONE;
    }
    let c = linalg::diag(&(0..k).map(|i| root(i as u64, k as u64)).collect::<Vec<_>>());
    (s, c)
}

/// Builds a triple over `nerve` with fibre dimension `d`; `twist` is drawn at random when absent.
pub fn build_random_triple(
    nerve: &Nerve,
    pair: &Pair,
    d: usize,
    m: u64,
    seed: u64,
    kind: FixtureKind,
    twist: Option<Twist>,
) -> Result<(TripleLocalData, Witness)> {
    if d == 0 {
        return Err(Error::Invalid("fibre dimension must be at least 1".into()));
    }
    if m == 0 || !m.is_multiple_of(pair.g.exponent()) {
        return Err(Error::Invalid(format!(
            "modulus {m} is not a multiple of the group exponent {}",
            pair.g.exponent()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = pair.q();
    let grp = &pair.g;
    let n = grp.order();
    let nv = nerve.count(0);
    let twist = match twist {
        Some(t) => t,
        None if kind == FixtureKind::Trivial => Twist::trivial(nerve),
        None => random_twist(nerve, pair, &mut rng),
    };
    let mut t = TripleLocalData::trivial(nerve.clone(), pair.clone(), m, d);
    t.twist = twist;
    t.validate(1e-9)?;
    let id = linalg::identity(d);
    if kind == FixtureKind::Trivial {
        return Ok((
            t,
            Witness {
                k: 1,
                r: d,
                v: vec![vec![id; q]; nv],
                spectators: vec![0; d],
            },
        ));
    }

    let k = heisenberg_dim(d, m);
    let r = d / k;
    let (s_op, c_op) = shift_clock(k);
    let id_r = linalg::identity(r);
    let e = ints_cocycle(nerve, k, &mut rng);
    let f = ints_cocycle(nerve, k, &mut rng);

    // χ* with k·χ* = 0, so t(g) = k⟨χ*, g⟩ is a homomorphism G → ℤ/k.
    let torsion: Vec<usize> = (0..n).filter(|&x| grp.scale(k as i64, x) == 0).collect();
    let chi_star = torsion[rng.random_range(0..torsion.len())];
    let e_g = grp.exponent();
    let t_of = |g: usize| -> usize { (grp.pairing_num(chi_star, g) * k as u64 / e_g) as usize % k };
    let spectators: Vec<usize> = (0..r).map(|_| rng.random_range(0..n)).collect();
    let theta: Vec<usize> = (0..nv).map(|_| rng.random_range(0..n)).collect();
    let alpha: Vec<usize> = (0..nv).map(|_| rng.random_range(0..n)).collect();
    let v: Vec<Vec<CMat>> = (0..nv)
        .map(|_| (0..q).map(|_| linalg::random_unitary(d, &mut rng)).collect())
        .collect();

    let mut c_pow = vec![linalg::identity(k)];
    for i in 1..k {
        c_pow.push(&c_pow[i - 1] * &c_op);
    }
    let mut s_pow = vec![linalg::identity(k)];
    for i in 1..k {
        s_pow.push(&s_pow[i - 1] * &s_op);
    }
    let d_of = |g: usize| -> CMat {
        let p = linalg::diag(&spectators.iter().map(|&x| root(grp.pairing_zm(x, g, m), m)).collect::<Vec<_>>());
        linalg::kron(&c_pow[t_of(g)], &p)
    };
    let d_table: Vec<CMat> = (0..n).map(d_of).collect();

    for (ei, edge) in nerve.simplices(1).iter().enumerate() {
        let (a, b) = (edge[0], edge[1]);
        let gab = t.twist.labels[ei];
        let w = linalg::kron(&(&s_pow[e[ei]] * &c_pow[f[ei]]), &id_r);
        for z in 0..q {
            let lam = root(rng.random_range(0..m), m);
            t.zeta[ei][z] = &v[a][pair.qadd(gab, z)] * &w * v[b][z].adjoint() * lam;
        }
    }
    for a in 0..nv {
        for g in 0..n {
            let base = root(grp.pairing_zm(theta[a], g, m), m);
            for z in 0..q {
                let zg = pair.shift(z, g);
                let defect = grp.sub(grp.add(pair.sigma(z), g), pair.sigma(zg));
                let c = root(grp.pairing_zm(alpha[a], defect, m), m);
                let nu = if g == 0 { linalg::ONE } else { root(rng.random_range(0..m), m) };
                t.mu[a][g * q + z] = &v[a][zg] * &d_table[g] * v[a][z].adjoint() * (base * c * nu);
            }
        }
    }
    Ok((t, Witness { k, r, v, spectators }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Tolerances;
    use crate::triples::extract_total_cocycle;

    #[test]
    fn deterministic_per_seed() {
        let pair = Pair::from_coords(&[6], &[vec![3]]).unwrap();
        let (a, _) = build_random_triple(&Nerve::circle(), &pair, 2, 6, 7, FixtureKind::Generic, None).unwrap();
        let (b, _) = build_random_triple(&Nerve::circle(), &pair, 2, 6, 7, FixtureKind::Generic, None).unwrap();
        assert_eq!(a.twist, b.twist);
        for (x, y) in a.mu.iter().flatten().zip(b.mu.iter().flatten()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn generated_triples_extract() {
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
        for seed in 0..5 {
            for nerve in [Nerve::circle(), Nerve::sphere()] {
                let (t, _) = build_random_triple(&nerve, &pair, 2, 4, seed, FixtureKind::Generic, None).unwrap();
                t.validate(1e-9).unwrap();
                let c = extract_total_cocycle(&t, &Tolerances::default()).unwrap().cocycle;
                let tc = t.total_complex();
                assert!(tc.differential(2, &c.values).iter().all(|&v| v == 0));
            }
        }
    }

    #[test]
    fn trivial_kind_is_trivial() {
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
        let (t, _) = build_random_triple(&Nerve::circle(), &pair, 1, 4, 3, FixtureKind::Trivial, None).unwrap();
        let c = extract_total_cocycle(&t, &Tolerances::default()).unwrap().cocycle;
        assert!(c.values.iter().all(|&v| v == 0));
    }

    #[test]
    fn heisenberg_dimension() {
        assert_eq!(heisenberg_dim(2, 6), 2);
        assert_eq!(heisenberg_dim(3, 4), 1);
        assert_eq!(heisenberg_dim(6, 6), 2);
        assert_eq!(heisenberg_dim(1, 6), 1);
    }
}
