//! Local data of dynamical triples and the duality transform.
//!
//! A triple over a nerve is given by a `G/N`-valued twist `g_ab`, unitary lifts
//! `ζ̄_ab(z)` of the transition functions and unitary lifts `μ̄_a(g, z)` of the
//! decker cocycles. For an edge `(a, b)` with `a < b` the data glue chart `b` to
//! chart `a`:
//!
//! `ζ_ac(z) = ζ_ab(g_bc + z) ζ_bc(z)` and
//! `μ_b(g, z) = ζ_ab(z + gN)⁻¹ μ_a(g, g_ab + z) ζ_ab(z)`, both projectively.

use std::fmt;

use serde::Serialize;

use crate::cech::{self, Nerve, Twist};
use crate::error::{Error, Result};
use crate::groupcoh::{self, TotalComplex, TotalLayout};
use crate::lca::Pair;
use crate::linalg::{self, CMat, Tolerances};
use crate::qz::Qz;
use crate::zmod;

pub mod dual;
pub mod exterior;
pub mod fixture;
pub mod kappa;

pub use dual::{dualize, verify_involution, Dual, InvolutionReport};
pub use fixture::{build_random_triple, FixtureKind, Witness};

#[derive(Clone, Debug)]
pub struct TripleLocalData {
    pub nerve: Nerve,
    pub pair: Pair,
    /// Coefficient modulus; every extracted phase is an `m`-th root of unity.
    pub m: u64,
    pub dim: usize,
    pub twist: Twist,
    /// `zeta[edge][z]`.
    pub zeta: Vec<Vec<CMat>>,
    /// `mu[vertex][g · |G/N| + z]`.
    pub mu: Vec<Vec<CMat>>,
}

impl TripleLocalData {
    /// The trivial triple: trivial twist, `ζ̄ ≡ I`, `μ̄ ≡ I`.
    pub fn trivial(nerve: Nerve, pair: Pair, m: u64, dim: usize) -> TripleLocalData {
        let q = pair.q();
        let n = pair.g.order();
        let id = linalg::identity(dim);
        TripleLocalData {
            twist: Twist::trivial(&nerve),
            zeta: vec![vec![id.clone(); q]; nerve.count(1)],
            mu: vec![vec![id; n * q]; nerve.count(0)],
            nerve,
            pair,
            m,
            dim,
        }
    }

    pub fn q(&self) -> usize {
        self.pair.q()
    }

    pub fn zeta(&self, a: usize, b: usize, z: usize) -> &CMat {
        &self.zeta[self.nerve.edge(a, b).expect("edge")][z]
    }

    pub fn mu(&self, a: usize, g: usize, z: usize) -> &CMat {
        &self.mu[a][g * self.q() + z]
    }

    pub fn g(&self, a: usize, b: usize) -> usize {
        self.twist.get(&self.nerve, a, b)
    }

    /// Checks shapes, the twist cocycle law and unitarity of every value.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let q = self.q();
        let n = self.pair.g.order();
        if self.pair.g.exponent() == 0 || !self.m.is_multiple_of(self.pair.g.exponent()) {
            return Err(Error::Invalid(format!(
                "modulus {} is not a multiple of the group exponent {}",
                self.m,
                self.pair.g.exponent()
            )));
        }
        if self.twist.labels.len() != self.nerve.count(1) {
            return Err(Error::Shape("one twist label per edge".into()));
        }
        if self.twist.labels.iter().any(|&l| l >= q) {
            return Err(Error::Invalid("twist label outside G/N".into()));
        }
        let bad = self.twist.violations(&self.nerve, &|x, y| self.pair.qadd(x, y));
        if let Some(t) = bad.first() {
            return Err(Error::Invalid(format!("twist violates the cocycle law on {t:?}")));
        }
        if self.zeta.len() != self.nerve.count(1) || self.zeta.iter().any(|v| v.len() != q) {
            return Err(Error::Shape("zeta must have one matrix per edge and coset".into()));
        }
        if self.mu.len() != self.nerve.count(0) || self.mu.iter().any(|v| v.len() != n * q) {
            return Err(Error::Shape("mu must have one matrix per vertex, group element and coset".into()));
        }
        for (what, all) in [("zeta", &self.zeta), ("mu", &self.mu)] {
            for (i, vals) in all.iter().enumerate() {
                for (j, u) in vals.iter().enumerate() {
                    if u.shape() != (self.dim, self.dim) {
                        return Err(Error::Shape(format!("{what}[{i}][{j}] is not {0}x{0}", self.dim)));
                    }
                    let defect = linalg::unitarity_defect(u);
                    if defect > tol {
                        return Err(Error::Invalid(format!(
                            "{what}[{i}][{j}] is not unitary (defect {defect:e})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn total_complex(&self) -> TotalComplex<'_> {
        TotalComplex::new(&self.nerve, &self.pair, &self.twist, self.m)
    }
}

/// A total 2-cocycle `(ψ, φ, ω)`, stored in the degree-2 total layout over `ℤ/m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TotalTwoCocycle {
    pub layout: TotalLayout,
    pub m: u64,
    pub values: Vec<u64>,
    /// `|G|` and `|G/N|`, for indexing.
    pub group_order: usize,
    pub q: usize,
}

impl TotalTwoCocycle {
    fn zero(nerve: &Nerve, pair: &Pair, m: u64) -> TotalTwoCocycle {
        let layout = TotalLayout::new(nerve, pair, 2);
        let len = layout.len;
        TotalTwoCocycle {
            layout,
            m,
            values: vec![0; len],
            group_order: pair.g.order(),
            q: pair.q(),
        }
    }

    fn at(&self, k: usize, s: usize, tuple: usize, z: usize) -> usize {
        let l = 2 - k;
        self.layout.blocks[k].1 + s * self.group_order.pow(l as u32) * self.q + tuple * self.q + z
    }

    /// `ψ` on the 2-simplex with position `t`.
    pub fn psi(&self, t: usize, z: usize) -> u64 {
        self.values[self.at(2, t, 0, z)]
    }

    pub fn phi(&self, e: usize, g: usize, z: usize) -> u64 {
        self.values[self.at(1, e, g, z)]
    }

    pub fn omega(&self, v: usize, g1: usize, g2: usize, z: usize) -> u64 {
        self.values[self.at(0, v, g1 * self.group_order + g2, z)]
    }

    pub fn omega_block(&self) -> &[u64] {
        &self.values[self.layout.range(0)]
    }

    pub fn omega_is_zero(&self) -> bool {
        self.omega_block().iter().all(|&v| v == 0)
    }

    /// `self − other`.
    pub fn difference(&self, other: &TotalTwoCocycle) -> Result<Vec<u64>> {
        if self.layout != other.layout || self.m != other.m {
            return Err(Error::Shape("cocycles live in different total complexes".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a + self.m - b) % self.m)
            .collect())
    }

    /// Values as reduced fractions, grouped by component.
    pub fn fractions(&self) -> CocycleFractions {
        let conv = |r: std::ops::Range<usize>| {
            self.values[r].iter().map(|&v| Qz::from_zm(v, self.m)).collect()
        };
        CocycleFractions {
            psi: conv(self.layout.range(2)),
            phi: conv(self.layout.range(1)),
            omega: conv(self.layout.range(0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CocycleFractions {
    pub psi: Vec<Qz>,
    pub phi: Vec<Qz>,
    pub omega: Vec<Qz>,
}

/// Result of [`extract_total_cocycle`].
#[derive(Clone, Debug)]
pub struct Extraction {
    pub cocycle: TotalTwoCocycle,
    /// Largest non-scalar residual met while extracting.
    pub max_residual: f64,
}

/// Extracts `(ψ, φ, ω)`; every composite must be scalar within `tol.snap`.
pub fn extract_total_cocycle(t: &TripleLocalData, tol: &Tolerances) -> Result<Extraction> {
    let mut c = TotalTwoCocycle::zero(&t.nerve, &t.pair, t.m);
    let q = t.q();
    let grp = &t.pair.g;
    let n = grp.order();
    let m = t.m;
    let mut worst: f64 = 0.0;
    let mut put = |c: &mut TotalTwoCocycle, idx: usize, mat: CMat, loc: &dyn Fn() -> String| -> Result<()> {
        let (k, r) = linalg::snap_scalar(&mat, m, tol.snap, loc)?;
        worst = worst.max(r);
        c.values[idx] = k;
        Ok(())
    };

    // ψ_abc(z) = ζ_ac(z)⁻¹ ζ_ab(g_bc + z) ζ_bc(z)
    for (ti, s) in t.nerve.simplices(2).iter().enumerate() {
        let (a, b, cc) = (s[0], s[1], s[2]);
        let gbc = t.g(b, cc);
        for z in 0..q {
            let mat = inv(t.zeta(a, cc, z)) * t.zeta(a, b, t.pair.qadd(gbc, z)) * t.zeta(b, cc, z);
            let idx = c.at(2, ti, 0, z);
            put(&mut c, idx, mat, &|| format!("psi{s:?}(z={z})"))?;
        }
    }
    // φ_ab(g, z) = μ_b(g, z) ζ_ab(z)⁻¹ μ_a(g, g_ab + z)⁻¹ ζ_ab(z + gN)
    for (ei, e) in t.nerve.simplices(1).iter().enumerate() {
        let (a, b) = (e[0], e[1]);
        let gab = t.g(a, b);
        for g in 0..n {
            for z in 0..q {
                let mat = t.mu(b, g, z)
                    * inv(t.zeta(a, b, z))
                    * inv(t.mu(a, g, t.pair.qadd(gab, z)))
                    * t.zeta(a, b, t.pair.shift(z, g));
                let idx = c.at(1, ei, g, z);
                put(&mut c, idx, mat, &|| format!("phi{e:?}(g={g}, z={z})"))?;
            }
        }
    }
    // ω_a(g1, g2)(z) = μ_a(g2, z + g1N) μ_a(g1, z) μ_a(g1 + g2, z)⁻¹
    for a in 0..t.nerve.count(0) {
        for g1 in 0..n {
            for g2 in 0..n {
                for z in 0..q {
                    let mat = t.mu(a, g2, t.pair.shift(z, g1))
                        * t.mu(a, g1, z)
                        * inv(t.mu(a, grp.add(g1, g2), z));
                    let idx = c.at(0, a, g1 * n + g2, z);
                    put(&mut c, idx, mat, &|| format!("omega[{a}](g1={g1}, g2={g2}, z={z})"))?;
                }
            }
        }
    }
    Ok(Extraction {
        cocycle: c,
        max_residual: worst,
    })
}

/// Inverse of a unitary.
pub(crate) fn inv(u: &CMat) -> CMat {
    u.adjoint()
}

/// Per-vertex `ν ∈ C¹(G, Fun(G/N, ℤ/m))`, stored as `nu[vertex][g · |G/N| + z]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Nu(pub Vec<Vec<u64>>);

/// Solves `d ν_a = ω_a` for every vertex; `None` if some vertex has no solution.
pub fn is_dualisable(t: &TripleLocalData, c: &TotalTwoCocycle, cap: usize) -> Result<Option<Nu>> {
    let pair = &t.pair;
    let m = t.m;
    if c.omega_is_zero() {
        let w = groupcoh::arity_size(pair, 1);
        return Ok(Some(Nu(vec![vec![0; w]; t.nerve.count(0)])));
    }
    let d1 = cech::matrix_of(
        groupcoh::arity_size(pair, 2),
        groupcoh::arity_size(pair, 1),
        m,
        cap,
        |f| groupcoh::d_group(pair, m, 1, 1, f),
    )?;
    let w2 = groupcoh::arity_size(pair, 2);
    let omega = c.omega_block();
    let mut out = Vec::with_capacity(t.nerve.count(0));
    for a in 0..t.nerve.count(0) {
        match zmod::solve(&d1, &omega[a * w2..(a + 1) * w2])? {
            Some(nu) => out.push(nu),
            None => return Ok(None),
        }
    }
    Ok(Some(Nu(out)))
}

/// Replaces `μ̄_a(g, z)` by `μ̄_a(g, z)·ν_a(g, z)⁻¹`.
pub fn normalize(t: &TripleLocalData, nu: &Nu) -> Result<TripleLocalData> {
    let w = groupcoh::arity_size(&t.pair, 1);
    if nu.0.len() != t.nerve.count(0) || nu.0.iter().any(|v| v.len() != w) {
        return Err(Error::Shape("ν must have one value per vertex, group element and coset".into()));
    }
    let mut out = t.clone();
    for (a, vals) in nu.0.iter().enumerate() {
        for (i, &v) in vals.iter().enumerate() {
            let s = linalg::root((t.m - v % t.m) % t.m, t.m);
            out.mu[a][i] *= s;
        }
    }
    Ok(out)
}

/// Extracts, solves for `ν` and normalizes; fails if the triple is not dualisable.
pub fn normalized(t: &TripleLocalData, tol: &Tolerances, cap: usize) -> Result<(TripleLocalData, TotalTwoCocycle)> {
    let ex = extract_total_cocycle(t, tol)?;
    if ex.cocycle.omega_is_zero() {
        return Ok((t.clone(), ex.cocycle));
    }
    let nu = is_dualisable(t, &ex.cocycle, cap)?
        .ok_or_else(|| Error::NotNormalized("ω is not a group coboundary; triple is not dualisable".into()))?;
    let tn = normalize(t, &nu)?;
    let c = extract_total_cocycle(&tn, tol)?.cocycle;
    debug_assert!(c.omega_is_zero());
    Ok((tn, c))
}

/// A named check with a residual and a verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn residual(name: impl Into<String>, residual: f64, threshold: f64) -> Check {
        Check {
            name: name.into(),
            residual,
            threshold,
            pass: residual.is_finite() && residual < threshold,
            detail: None,
        }
    }

    pub fn exact(name: impl Into<String>, ok: bool, detail: Option<String>) -> Check {
        Check {
            name: name.into(),
            residual: if ok { 0.0 } else { 1.0 },
            threshold: 0.5,
            pass: ok,
            detail,
        }
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Check {
        self.detail = Some(d.into());
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} (residual {:.3e}, threshold {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.residual,
            self.threshold
        )?;
        if let Some(d) = &self.detail {
            write!(f, ": {d}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lca::{Group, SectionPolicy, Subgroup};
    use crate::linalg::root;

    fn z6() -> Pair {
        Pair::from_coords(&[6], &[vec![3]]).unwrap()
    }

    #[test]
    fn trivial_triple_has_zero_cocycle() {
        let t = TripleLocalData::trivial(Nerve::circle(), z6(), 6, 2);
        t.validate(1e-9).unwrap();
        let ex = extract_total_cocycle(&t, &Tolerances::default()).unwrap();
        assert!(ex.cocycle.values.iter().all(|&v| v == 0));
    }

    #[test]
    fn character_decker_gives_zero_phi_and_omega() {
        // μ̄_a(g, z) = ⟨χ₀, g⟩·I with ζ̄ ≡ I and trivial twist.
        let pair = z6();
        let mut t = TripleLocalData::trivial(Nerve::circle(), pair.clone(), 6, 1);
        let chi0 = 1;
        for a in 0..3 {
            for g in 0..6 {
                for z in 0..3 {
                    t.mu[a][g * 3 + z] = linalg::scalar(1, root(pair.g.pairing_zm(chi0, g, 6), 6));
                }
            }
        }
        let c = extract_total_cocycle(&t, &Tolerances::default()).unwrap().cocycle;
        assert!(c.values.iter().all(|&v| v == 0));
    }

    #[test]
    fn non_scalar_composite_is_rejected() {
        let mut t = TripleLocalData::trivial(Nerve::circle(), z6(), 6, 2);
        t.zeta[0][1] = CMat::from_row_slice(2, 2, &[linalg::ZERO, linalg::ONE, linalg::ONE, linalg::ZERO]);
        assert!(matches!(
            extract_total_cocycle(&t, &Tolerances::default()),
            Err(Error::NotScalar { .. })
        ));
    }

    #[test]
    fn coboundary_omega_is_dualisable() {
        let pair = z6();
        let mut t = TripleLocalData::trivial(Nerve::point(), pair.clone(), 6, 1);
        // μ̄(g, z) = e(ν₀(g, z)) has ω = dν₀.
        let nu0: Vec<u64> = (0..18).map(|i| (i * 5 + 1) % 6).collect();
        for (i, &v) in nu0.iter().enumerate() {
            t.mu[0][i] = linalg::scalar(1, root(v, 6));
        }
        let c = extract_total_cocycle(&t, &Tolerances::default()).unwrap().cocycle;
        let want = groupcoh::d_group(&pair, 6, 1, 1, &nu0);
        assert_eq!(c.omega_block(), &want[..]);
        let nu = is_dualisable(&t, &c, 512).unwrap().expect("coboundary");
        assert_eq!(groupcoh::d_group(&pair, 6, 1, 1, &nu.0[0]), want);
        let tn = normalize(&t, &nu).unwrap();
        let cn = extract_total_cocycle(&tn, &Tolerances::default()).unwrap().cocycle;
        assert!(cn.omega_is_zero());
        // Normalizing again with ν = 0 changes nothing.
        let zero = Nu(vec![vec![0; 18]]);
        let tn2 = normalize(&tn, &zero).unwrap();
        assert_eq!(extract_total_cocycle(&tn2, &Tolerances::default()).unwrap().cocycle, cn);
    }

    #[test]
    fn nontrivial_class_is_not_dualisable() {
        // H²(ℤ/2, ℤ/2) ≠ 0: ω(1, 1) = 1 is not a coboundary.
        let g = Group::cyclic(2);
        let pair = Pair::new(g.clone(), Subgroup::whole(&g), SectionPolicy::LeastRepresentative).unwrap();
        let t = TripleLocalData::trivial(Nerve::point(), pair.clone(), 2, 1);
        let mut c = extract_total_cocycle(&t, &Tolerances::default()).unwrap().cocycle;
        let idx = c.at(0, 0, 3, 0);
        c.values[idx] = 1;
        assert!(groupcoh::d_group(&pair, 2, 2, 1, c.omega_block()).iter().all(|&v| v == 0));
        assert!(is_dualisable(&t, &c, 512).unwrap().is_none());
    }
}
