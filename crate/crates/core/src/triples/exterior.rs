//! Exterior-equivalent deckers: `μ̄′ = ν′ · μ̄ · c` for a family `c` satisfying
//!
//! - `c_a(g, g_ab + z) = ζ̄_ab(z) c_b(g, z) ζ̄_ab(z)⁻¹`,
//! - `c(h + g, z) = μ̄(g, z)⁻¹ c(h, z + gN) μ̄(g, z) c(g, z)`,
//!
//! and arbitrary `m`-th root phases `ν′`. The extracted classes must agree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fixture::Witness;
use super::{extract_total_cocycle, inv, Check, TripleLocalData};
use crate::error::{Error, Result};
use crate::linalg::{self, root, CMat, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `c_a(g, z) = μ̄_a(g, z)⁻¹ v_a(z + gN) μ̄_a(g, z) v_a(z)⁻¹` with `v_a(z) = V_a(z)(I ⊗ U)V_a(z)⁻¹`.
    Coboundary,
    /// `c_a(g, z) = V_a(z)(I ⊗ K(g))V_a(z)⁻¹` for a diagonal representation `K` of `G`.
    Character,
}

/// `c[vertex][g · |G/N| + z]`.
pub fn exterior_family(t: &TripleLocalData, w: &Witness, family: Family, seed: u64) -> Result<Vec<Vec<CMat>>> {
    if w.v.len() != t.nerve.count(0) || w.k * w.r != t.dim {
        return Err(Error::Shape("witness does not match the triple".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pair = &t.pair;
    let q = pair.q();
    let n = pair.g.order();
    let id_k = linalg::identity(w.k);
    let mut out = Vec::with_capacity(t.nerve.count(0));
    match family {
        Family::Coboundary => {
            let u = linalg::kron(&id_k, &linalg::random_unitary(w.r, &mut rng));
            for a in 0..t.nerve.count(0) {
                let v: Vec<CMat> = (0..q).map(|z| &w.v[a][z] * &u * w.v[a][z].adjoint()).collect();
                let mut c = Vec::with_capacity(n * q);
                for g in 0..n {
                    for z in 0..q {
                        let mu = t.mu(a, g, z);
                        c.push(inv(mu) * &v[pair.shift(z, g)] * mu * inv(&v[z]));
                    }
                }
                out.push(c);
            }
        }
        Family::Character => {
            let chars: Vec<usize> = (0..w.r).map(|_| rng.random_range(0..n)).collect();
            let m = t.m;
            for a in 0..t.nerve.count(0) {
                let mut c = Vec::with_capacity(n * q);
                for g in 0..n {
                    let kg = linalg::diag(&chars.iter().map(|&x| root(pair.g.pairing_zm(x, g, m), m)).collect::<Vec<_>>());
                    let kk = linalg::kron(&id_k, &kg);
                    for z in 0..q {
                        c.push(&w.v[a][z] * &kk * w.v[a][z].adjoint());
                    }
                }
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Largest violation of the two conditions on `c`.
pub fn family_residuals(t: &TripleLocalData, c: &[Vec<CMat>]) -> (f64, f64) {
    let pair = &t.pair;
    let q = pair.q();
    let n = pair.g.order();
    let mut e1: f64 = 0.0;
    for e in t.nerve.simplices(1) {
        let (a, b) = (e[0], e[1]);
        let gab = t.g(a, b);
        for g in 0..n {
            for z in 0..q {
                let zeta = t.zeta(a, b, z);
                let rhs = zeta * &c[b][g * q + z] * inv(zeta);
                e1 = e1.max(linalg::max_diff(&c[a][g * q + pair.qadd(gab, z)], &rhs));
            }
        }
    }
    let mut e2: f64 = 0.0;
    for (a, ca) in c.iter().enumerate() {
        for h in 0..n {
            for g in 0..n {
                for z in 0..q {
                    let mu = t.mu(a, g, z);
                    let rhs = inv(mu) * &ca[h * q + pair.shift(z, g)] * mu * &ca[g * q + z];
                    e2 = e2.max(linalg::max_diff(&ca[pair.g.add(h, g) * q + z], &rhs));
                }
            }
        }
    }
    (e1, e2)
}

/// `μ̄′_a(g, z) = ν′_a(g, z) μ̄_a(g, z) c_a(g, z)` with random phases `ν′`.
pub fn perturb(t: &TripleLocalData, c: &[Vec<CMat>], seed: u64) -> TripleLocalData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut out = t.clone();
    for (a, ca) in c.iter().enumerate() {
        for (i, ci) in ca.iter().enumerate() {
            let nu = root(rng.random_range(0..t.m), t.m);
            out.mu[a][i] = &t.mu[a][i] * ci * nu;
        }
    }
    out
}

/// Perturbs `t` by an exterior-equivalent family and compares extracted classes.
pub fn verify_exterior(t: &TripleLocalData, w: &Witness, family: Family, seed: u64, tol: &Tolerances, cap: usize) -> Result<(Vec<Check>, Option<Vec<u64>>)> {
    let c = exterior_family(t, w, family, seed)?;
    let (e1, e2) = family_residuals(t, &c);
    let t2 = perturb(t, &c, seed);
    let a = extract_total_cocycle(t, tol)?.cocycle;
    let b = extract_total_cocycle(&t2, tol)?.cocycle;
    let cert = t.total_complex().solve_coboundary(2, &b.difference(&a)?, cap)?;
    let checks = vec![
        Check::residual("exterior_e1", e1, tol.unitary),
        Check::residual("exterior_e2", e2, tol.unitary),
        Check::exact(
            "exterior_same_class",
            cert.is_some(),
            cert.is_none().then(|| "no coboundary certificate".to_string()),
        ),
    ];
    Ok((checks, cert))
}
