//! Poincaré-class phases and the local isomorphism `κ^top`.

use serde::Serialize;

use super::dual::{lambda, Dual};
use super::{inv, Check, TripleLocalData};
use crate::error::Result;
use crate::lca::{Pair, SectionPolicy};
use crate::linalg::{self, root, CMat, Tolerances};

/// `κ̄^σ(z, ẑ)(x) = ⟨σ̂(ẑ), σ(x − z) − σ(x)⟩` as exponents over `ℤ/m`, indexed by `x`.
pub fn kappa_sigma(pair: &Pair, dual: &Pair, z: usize, zh: usize, m: u64) -> Vec<u64> {
    let g = &pair.g;
    let s = dual.sigma(zh);
    (0..pair.q())
        .map(|x| g.pairing_zm(s, g.sub(pair.sigma(pair.qsub(x, z)), pair.sigma(x)), m))
        .collect()
}

/// `κ̂^σ̂(z, ẑ)(ŷ) = ⟨σ̂(ŷ − ẑ) − σ̂(ŷ), σ(z)⟩`, indexed by `ŷ`.
pub fn kappa_hat_sigma(pair: &Pair, dual: &Pair, z: usize, zh: usize, m: u64) -> Vec<u64> {
    let g = &pair.g;
    (0..dual.q())
        .map(|y| g.pairing_zm(g.sub(dual.sigma(dual.qsub(y, zh)), dual.sigma(y)), pair.sigma(z), m))
        .collect()
}

fn phases(v: &[u64], m: u64, d: usize) -> CMat {
    let mut out = Vec::with_capacity(v.len() * d);
    for &k in v {
        out.extend(std::iter::repeat_n(root(k, m), d));
    }
    linalg::diag(&out)
}

/// `κ̄^top_a(z, ẑ) = (κ̄^σ(z, ẑ) ⊗ I) μ̄_a(−σ(_), z)⁻¹ (λ(z) ⊗ I)`.
pub fn kappa_top(t: &TripleLocalData, dual: &Pair, a: usize, z: usize, zh: usize) -> CMat {
    let pair = &t.pair;
    let k = phases(&kappa_sigma(pair, dual, z, zh, t.m), t.m, t.dim);
    let blocks: Vec<CMat> = (0..pair.q())
        .map(|x| inv(t.mu(a, pair.g.neg(pair.sigma(x)), z)))
        .collect();
    k * linalg::block_diag(&blocks) * lambda(pair, z, t.dim)
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaReport {
    pub gluing: Check,
    pub factorization: Check,
}

/// Checks `κ̄^top_a(g_ab+z, ĝ_ab+ẑ) ζ̂_ab(ẑ) κ̄^top_b(z, ẑ)⁻¹ = s·(I ⊗ ζ̄_ab(z))` and that
/// `α = 1/s` divided by `⟨σ̂(ĝ_ab+ẑ) − σ̂(ẑ), σ(z)⟩` does not depend on `ẑ`.
pub fn verify_kappa_top(t: &TripleLocalData, d: &Dual, tol: &Tolerances) -> KappaReport {
    let pair = &t.pair;
    let dual = &d.triple.pair;
    let m = t.m;
    let g = &pair.g;
    let mut glue: f64 = 0.0;
    let mut fact: f64 = 0.0;
    for (ei, e) in t.nerve.simplices(1).iter().enumerate() {
        let (a, b) = (e[0], e[1]);
        let gab = t.g(a, b);
        let gh = d.triple.twist.labels[ei];
        for z in 0..pair.q() {
            let target = linalg::kron(&linalg::identity(pair.q()), t.zeta(a, b, z));
            let mut reference = None;
            for zh in 0..dual.q() {
                let lhs = kappa_top(t, dual, a, pair.qadd(gab, z), dual.qadd(gh, zh))
                    * &d.triple.zeta[ei][zh]
                    * inv(&kappa_top(t, dual, b, z, zh));
                let (s, res) = linalg::projective_ratio(&lhs, &target);
                glue = glue.max(res);
                let known = g.pairing_zm(g.sub(dual.sigma(dual.qadd(gh, zh)), dual.sigma(zh)), pair.sigma(z), m);
                let rest = s.inv() / root(known, m);
                match reference {
                    None => reference = Some(rest),
                    Some(r) => fact = fact.max((rest - r).norm()),
                }
            }
        }
    }
    KappaReport {
        gluing: Check::residual("kappa_top_gluing", glue, tol.unitary),
        factorization: Check::residual("alpha_factorization", fact, tol.unitary),
    }
}

/// The three Poincaré-class checks for `(G, N)` with sections `σ` (from `pair`) and `σ̂`.
pub fn poincare_check(pair: &Pair, dual: &Pair, m: u64, tol: &Tolerances) -> Result<Vec<Check>> {
    let g = &pair.g;
    let q = pair.q();
    let qh = dual.q();

    // (a) another σ̂ changes κ̄^σ(z, ẑ) by the constant ⟨n⊥, σ(−z)⟩ on each fibre.
    let mut independent = true;
    for policy in [SectionPolicy::Seeded(11), SectionPolicy::Seeded(12)] {
        let other = dual.with_section(policy)?;
        for z in 0..q {
            for zh in 0..qh {
                let k1 = kappa_sigma(pair, dual, z, zh, m);
                let k2 = kappa_sigma(pair, &other, z, zh, m);
                let n_perp = g.sub(other.sigma(zh), dual.sigma(zh));
                let want = g.pairing_zm(n_perp, pair.sigma(pair.qneg(z)), m);
                independent &= k1.iter().zip(&k2).all(|(a, b)| (b + m - a) % m == want);
            }
        }
    }

    // (b) κ^σ ⊗ κ̂^σ̂ is implemented by a word in translations and ⟨σ̂(ŷ), ±σ(x)⟩.
    let id_q = linalg::identity(q);
    let id_qh = linalg::identity(qh);
    let p = linalg::diag(
        &(0..q)
            .flat_map(|x| (0..qh).map(move |y| (x, y)))
            .map(|(x, y)| root(g.pairing_zm(dual.sigma(y), pair.sigma(x), m), m))
            .collect::<Vec<_>>(),
    );
    let p_inv = p.adjoint();
    let mut word_res: f64 = 0.0;
    for z in 0..q {
        for zh in 0..qh {
            let lz = linalg::kron(&lambda(pair, z, 1), &id_qh);
            let lmz = linalg::kron(&lambda(pair, pair.qneg(z), 1), &id_qh);
            let lh = linalg::kron(&id_q, &lambda(dual, zh, 1));
            let lmh = linalg::kron(&id_q, &lambda(dual, dual.qneg(zh), 1));
            let word = &lh * &lz * &p_inv * &lmh * &p * &lmz * &lh * &p * &lmh * &p_inv;
            let kk = linalg::kron(
                &phases(&kappa_sigma(pair, dual, z, zh, m), m, 1),
                &phases(&kappa_hat_sigma(pair, dual, z, zh, m), m, 1),
            );
            let s = root(g.pairing_zm(dual.sigma(zh), pair.sigma(z), m), m);
            word_res = word_res.max(linalg::max_diff(&word, &(kk * s)));
        }
    }

    // (c) ⟨ẑ, s_d − s_c⟩ + ⟨ŝ_b − ŝ_a, z⟩ = ⟨ŝ_b, s_d⟩ − ⟨ŝ_a, s_c⟩, both well-defined
    // pairings evaluated through the reference lifts σ̂ and σ.
    let policies = [
        SectionPolicy::LeastRepresentative,
        SectionPolicy::Seeded(21),
        SectionPolicy::Seeded(22),
    ];
    let s: Vec<Pair> = policies.iter().map(|p| pair.with_section(p.clone())).collect::<Result<_>>()?;
    let sh: Vec<Pair> = policies.iter().map(|p| dual.with_section(p.clone())).collect::<Result<_>>()?;
    let mut coboundary = true;
    for z in 0..q {
        for zh in 0..qh {
            for c in &s {
                for dd in &s {
                    let n_cd = g.sub(dd.sigma(z), c.sigma(z));
                    for a in &sh {
                        for b in &sh {
                            let np_ab = g.sub(b.sigma(zh), a.sigma(zh));
                            let lhs = (g.pairing_zm(dual.sigma(zh), n_cd, m) + g.pairing_zm(np_ab, pair.sigma(z), m)) % m;
                            let rhs = (g.pairing_zm(b.sigma(zh), dd.sigma(z), m) + m
                                - g.pairing_zm(a.sigma(zh), c.sigma(z), m))
                                % m;
                            coboundary &= lhs == rhs;
                        }
                    }
                }
            }
        }
    }
    Ok(vec![
        Check::exact("poincare_sigma_hat_independence", independent, None),
        Check::residual("poincare_unitary_word", word_res, tol.unitary),
        Check::exact("poincare_q_plus_r", coboundary, None),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cech::Nerve;
    use crate::triples::fixture::{build_random_triple, FixtureKind};
    use crate::triples::{dualize, normalized};

    fn pairs() -> Vec<Pair> {
        vec![
            Pair::from_coords(&[4], &[vec![2]]).unwrap(),
            Pair::from_coords(&[6], &[vec![3]]).unwrap(),
            Pair::from_coords(&[2, 2], &[vec![1, 1]]).unwrap(),
        ]
    }

    #[test]
    fn poincare_lemmas() {
        for pair in pairs() {
            let dual = pair.dual(SectionPolicy::Seeded(4)).unwrap();
            for c in poincare_check(&pair, &dual, pair.g.exponent(), &Tolerances::default()).unwrap() {
                assert!(c.pass, "{c}");
            }
        }
    }

    #[test]
    fn poincare_trivial_quotient() {
        let pair = Pair::from_coords(&[3], &[vec![1]]).unwrap();
        let dual = pair.dual(SectionPolicy::LeastRepresentative).unwrap();
        let checks = poincare_check(&pair, &dual, 3, &Tolerances::default()).unwrap();
        assert!(checks.iter().all(|c| c.pass));
    }

    #[test]
    fn z4_section_pairing_table() {
        // Least-representative sections on both sides: every term vanishes or cancels.
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
        let dual = pair.dual(SectionPolicy::LeastRepresentative).unwrap();
        let g = &pair.g;
        for z in 0..2 {
            for zh in 0..2 {
                assert_eq!(g.pairing_zm(dual.sigma(zh), pair.sigma(z), 4), [[0, 0], [0, 1]][z][zh]);
            }
        }
    }

    #[test]
    fn kappa_top_on_fixtures() {
        let tol = Tolerances::default();
        for pair in pairs() {
            for seed in 0..3 {
                let (t, _) = build_random_triple(&Nerve::circle(), &pair, 2, pair.g.exponent(), seed, FixtureKind::Generic, None).unwrap();
                let (tn, _) = normalized(&t, &tol, 512).unwrap();
                let d = dualize(&tn, SectionPolicy::Seeded(seed), &tol).unwrap();
                let r = verify_kappa_top(&tn, &d, &tol);
                assert!(r.gluing.pass, "{}", r.gluing);
                assert!(r.factorization.pass, "{}", r.factorization);
            }
        }
    }

    #[test]
    fn kappa_top_trivial_is_translation() {
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
        let t = TripleLocalData::trivial(Nerve::circle(), pair.clone(), 4, 1);
        let dual = pair.dual(SectionPolicy::LeastRepresentative).unwrap();
        let k = kappa_top(&t, &dual, 0, 1, 0);
        assert!(linalg::max_diff(&k, &lambda(&pair, 1, 1)) < 1e-12);
    }
}
