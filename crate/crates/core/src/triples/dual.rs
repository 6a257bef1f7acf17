//! The dual triple `(ĝ, ζ̂, μ̂)` over `(Ĝ, N⊥)` and the involution check.
//!
//! The dual fibre is `L²(G/N) ⊗ ℂ^d` with basis index `x · d + i`.

use serde::Serialize;

use super::{extract_total_cocycle, normalized, Check, TotalTwoCocycle, TripleLocalData};
use crate::cech::Twist;
use crate::error::{Error, Result};
use crate::lca::{solve_character, Pair, SectionPolicy};
use crate::linalg::{self, root, CMat, Tolerances};
use crate::qz::Qz;

/// Exponent of the `φ_ab(−σ(x), 0)` phase in `ζ̂_ab`.
const PHI_EXPONENT: i64 = -1;

/// A dualized triple together with the original (normalized) cocycle it came from.
#[derive(Clone, Debug)]
pub struct Dual {
    pub triple: TripleLocalData,
    pub source_cocycle: TotalTwoCocycle,
}

/// `ĝ_ab ∈ Ĝ/N⊥` with `⟨ĝ_ab, n⟩ = −φ_ab(n, z)` for all `n ∈ N`.
pub fn dual_base_cocycle(t: &TripleLocalData, c: &TotalTwoCocycle, dual: &Pair) -> Result<Twist> {
    let pair = &t.pair;
    let m = t.m;
    let mut labels = Vec::with_capacity(t.nerve.count(1));
    for (ei, e) in t.nerve.simplices(1).iter().enumerate() {
        for &n in pair.n.elements() {
            let v0 = c.phi(ei, n, 0);
            if let Some(z) = (1..pair.q()).find(|&z| c.phi(ei, n, z) != v0) {
                return Err(Error::NotNormalized(format!(
                    "φ{e:?}({n}, z) depends on z (z = 0 vs z = {z})"
                )));
            }
        }
        let chi = solve_character(&pair.n, |n| Qz::from_zm((m - c.phi(ei, n, 0)) % m, m))?;
        labels.push(dual.quotient(chi));
    }
    Ok(Twist { labels })
}

fn translation(pair: &Pair, g: usize, d: usize) -> CMat {
    // (λ(g)F)(x) = F(x − g), i.e. e_x ↦ e_{x+g}
    let perm: Vec<usize> = (0..pair.q()).map(|x| pair.qadd(x, g)).collect();
    linalg::permutation(&perm, d)
}

/// `λ_{G/N}(g) ⊗ I_d`.
pub fn lambda(pair: &Pair, g: usize, d: usize) -> CMat {
    translation(pair, g, d)
}

fn phase_diag(values: impl Iterator<Item = u64>, m: u64, d: usize) -> CMat {
    let mut v = Vec::new();
    for k in values {
        let p = root(k % m, m);
        v.extend(std::iter::repeat_n(p, d));
    }
    linalg::diag(&v)
}

fn zeta_hat_with(
    t: &TripleLocalData,
    c: &TotalTwoCocycle,
    dual: &Pair,
    ghat: &Twist,
    phi_exp: i64,
) -> Vec<Vec<CMat>> {
    let pair = &t.pair;
    let grp = &pair.g;
    let m = t.m;
    let q = pair.q();
    let d = t.dim;
    let mut out = Vec::with_capacity(t.nerve.count(1));
    for (ei, e) in t.nerve.simplices(1).iter().enumerate() {
        let (a, b) = (e[0], e[1]);
        let gab = t.g(a, b);
        let gh = ghat.labels[ei];
        let lam = translation(pair, pair.qneg(gab), d);
        let zblocks: Vec<CMat> = (0..q).map(|x| t.zeta(a, b, pair.qneg(x)).clone()).collect();
        let zmat = linalg::block_diag(&zblocks);
        let phi = phase_diag(
            (0..q).map(|x| {
                let v = c.phi(ei, grp.neg(pair.sigma(x)), 0);
                (phi_exp.rem_euclid(m as i64) as u64 * v) % m
            }),
            m,
            d,
        );
        let tail = &lam * &zmat * &phi;
        let mut per = Vec::with_capacity(dual.q());
        for zh in 0..dual.q() {
            let s = dual.sigma(dual.qadd(gh, zh));
            let k = phase_diag(
                (0..q).map(|x| {
                    let diff = grp.sub(pair.sigma(pair.qadd(x, gab)), pair.sigma(x));
                    grp.pairing_zm(s, diff, m)
                }),
                m,
                d,
            );
            per.push(&k * &tail);
        }
        out.push(per);
    }
    out
}

/// `ζ̂_ab(ẑ) = (κ̄^σ(−g_ab, ĝ_ab + ẑ) ⊗ I) (λ(−g_ab) ⊗ I) ζ̄_ab(−_) (φ_ab(−σ(_), 0)⁻¹ ⊗ I)`.
pub fn dual_transitions(t: &TripleLocalData, c: &TotalTwoCocycle, dual: &Pair, ghat: &Twist) -> Vec<Vec<CMat>> {
    zeta_hat_with(t, c, dual, ghat, PHI_EXPONENT)
}

/// `μ̂_a(χ, ẑ) = ⟨χ, −σ(_)⟩ ⊗ I`, the same for every vertex.
pub fn dual_decker(t: &TripleLocalData, dual: &Pair) -> Vec<Vec<CMat>> {
    let pair = &t.pair;
    let grp = &pair.g;
    let m = t.m;
    let per: Vec<CMat> = (0..grp.order())
        .flat_map(|chi| {
            let mat = phase_diag(
                (0..pair.q()).map(|x| grp.pairing_zm(chi, grp.neg(pair.sigma(x)), m)),
                m,
                t.dim,
            );
            std::iter::repeat_n(mat, dual.q())
        })
        .collect();
    vec![per; t.nerve.count(0)]
}

/// Closed form of the dual decker defect,
/// `φ̂_ab(χ, ẑ) = ⟨σ̂(ẑ + ĝ_ab + χN⊥) − χ − σ̂(ẑ + ĝ_ab), σ(g_ab)⟩`.
pub fn dual_phi_closed_form(t: &TripleLocalData, dual: &Pair, ghat: &Twist, edge: usize, chi: usize, zh: usize) -> u64 {
    let pair = &t.pair;
    let grp = &pair.g;
    let e = &t.nerve.simplices(1)[edge];
    let gab = t.g(e[0], e[1]);
    let base = dual.qadd(zh, ghat.labels[edge]);
    let n_perp = grp.sub(grp.sub(dual.sigma(dual.shift(base, chi)), chi), dual.sigma(base));
    grp.pairing_zm(n_perp, pair.sigma(gab), t.m)
}

fn dualize_with(t: &TripleLocalData, c: &TotalTwoCocycle, policy: SectionPolicy, phi_exp: i64) -> Result<Dual> {
    if !c.omega_is_zero() {
        return Err(Error::NotNormalized("ω ≠ 0; normalize before dualizing".into()));
    }
    let dual = t.pair.dual(policy)?;
    let ghat = dual_base_cocycle(t, c, &dual)?;
    let zeta = zeta_hat_with(t, c, &dual, &ghat, phi_exp);
    let mu = dual_decker(t, &dual);
    Ok(Dual {
        triple: TripleLocalData {
            nerve: t.nerve.clone(),
            pair: dual,
            m: t.m,
            dim: t.q() * t.dim,
            twist: ghat,
            zeta,
            mu,
        },
        source_cocycle: c.clone(),
    })
}

/// Dualizes a normalized triple, choosing `σ̂` by `policy`.
pub fn dualize(t: &TripleLocalData, policy: SectionPolicy, tol: &Tolerances) -> Result<Dual> {
    let c = extract_total_cocycle(t, tol)?.cocycle;
    dualize_with(t, &c, policy, PHI_EXPONENT)
}

/// `max ‖ζ_ac(z)⁻¹ ζ_ab(g_bc + z) ζ_bc(z) − s·I‖` over 2-simplices.
pub fn projective_cech_residual(t: &TripleLocalData) -> f64 {
    let mut worst: f64 = 0.0;
    for s in t.nerve.simplices(2) {
        let (a, b, c) = (s[0], s[1], s[2]);
        let gbc = t.g(b, c);
        for z in 0..t.q() {
            let mat = t.zeta(a, c, z).adjoint() * t.zeta(a, b, t.pair.qadd(gbc, z)) * t.zeta(b, c, z);
            worst = worst.max(linalg::scalar_part(&mat).1);
        }
    }
    worst
}

/// `max ‖μ_b(g, z)⁻¹ ζ_ab(z+gN)⁻¹ μ_a(g, g_ab+z) ζ_ab(z) − s·I‖` over edges.
pub fn projective_decker_residual(t: &TripleLocalData) -> f64 {
    let mut worst: f64 = 0.0;
    for e in t.nerve.simplices(1) {
        let (a, b) = (e[0], e[1]);
        let gab = t.g(a, b);
        for g in 0..t.pair.g.order() {
            for z in 0..t.q() {
                let mat = t.mu(b, g, z).adjoint()
                    * t.zeta(a, b, t.pair.shift(z, g)).adjoint()
                    * t.mu(a, g, t.pair.qadd(gab, z))
                    * t.zeta(a, b, z);
                worst = worst.max(linalg::scalar_part(&mat).1);
            }
        }
    }
    worst
}

/// Checks on a single dualization.
pub fn dual_checks(t: &TripleLocalData, d: &Dual, tol: &Tolerances) -> Vec<Check> {
    let mut checks = Vec::new();
    let pair = &t.pair;
    let dual = &d.triple.pair;
    let ghat = &d.triple.twist;
    let m = t.m;
    let bad = ghat.violations(&t.nerve, &|x, y| dual.qadd(x, y));
    checks.push(Check::exact(
        "dual_base_cocycle_law",
        bad.is_empty(),
        (!bad.is_empty()).then(|| format!("violated on {bad:?}")),
    ));
    let mut consistent = true;
    for ei in 0..t.nerve.count(1) {
        let chi = dual.sigma(ghat.labels[ei]);
        for &n in pair.n.elements() {
            for z in 0..pair.q() {
                if !(pair.g.pairing_zm(chi, n, m) + d.source_cocycle.phi(ei, n, z)).is_multiple_of(m) {
                    consistent = false;
                }
            }
        }
    }
    checks.push(Check::exact("dual_base_character", consistent, None));
    checks.push(Check::residual(
        "dual_cech_projective",
        projective_cech_residual(&d.triple),
        tol.unitary,
    ));
    checks.push(Check::residual(
        "dual_decker_projective",
        projective_decker_residual(&d.triple),
        tol.unitary,
    ));
    match extract_total_cocycle(&d.triple, tol) {
        Ok(ex) => {
            let mut mismatches = 0usize;
            for ei in 0..t.nerve.count(1) {
                for chi in 0..dual.g.order() {
                    for zh in 0..dual.q() {
                        if ex.cocycle.phi(ei, chi, zh) != dual_phi_closed_form(t, dual, ghat, ei, chi, zh) {
                            mismatches += 1;
                        }
                    }
                }
            }
            checks.push(Check::exact(
                "dual_phi_closed_form",
                mismatches == 0,
                (mismatches > 0).then(|| format!("{mismatches} values differ")),
            ));
            checks.push(Check::exact("dual_omega_zero", ex.cocycle.omega_is_zero(), None));
        }
        Err(e) => checks.push(Check::exact("dual_extraction", false, Some(e.to_string()))),
    }
    checks
}

#[derive(Clone, Debug, Serialize)]
pub struct InvolutionReport {
    pub checks: Vec<Check>,
    /// `x ∈ C¹_tot` with `∂x = (double-dual cocycle) − (original cocycle)`.
    pub certificate: Option<Vec<u64>>,
}

impl InvolutionReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Dualizes twice and compares with the original.
pub fn verify_involution(t: &TripleLocalData, dual_policy: SectionPolicy, tol: &Tolerances, cap: usize) -> Result<InvolutionReport> {
    let (tn, c) = normalized(t, tol, cap)?;
    let d1 = dualize_with(&tn, &c, dual_policy, PHI_EXPONENT)?;
    let mut checks = dual_checks(&tn, &d1, tol);
    let back = SectionPolicy::Table(t.pair.section_table().to_vec());
    let c1 = extract_total_cocycle(&d1.triple, tol)?.cocycle;
    let d2 = dualize_with(&d1.triple, &c1, back, PHI_EXPONENT)?;
    let same_base = d2.triple.twist == tn.twist;
    checks.push(Check::exact(
        "double_dual_base",
        same_base,
        (!same_base).then(|| format!("{:?} vs {:?}", d2.triple.twist.labels, tn.twist.labels)),
    ));
    let mut certificate = None;
    if same_base {
        let c2 = extract_total_cocycle(&d2.triple, tol)?.cocycle;
        let diff = c2.difference(&c)?;
        certificate = tn.total_complex().solve_coboundary(2, &diff, cap)?;
        checks.push(Check::exact(
            "double_dual_cohomologous",
            certificate.is_some(),
            certificate.is_none().then(|| "no coboundary certificate exists".to_string()),
        ));
    }
    Ok(InvolutionReport { checks, certificate })
}

/// Dual cocycles for two choices of `σ` are cohomologous.
pub fn section_independence(t: &TripleLocalData, other: SectionPolicy, tol: &Tolerances, cap: usize) -> Result<Check> {
    let (tn, c) = normalized(t, tol, cap)?;
    let alt_pair = tn.pair.with_section(other)?;
    let mut alt = tn.clone();
    alt.pair = alt_pair;
    let c_alt = extract_total_cocycle(&alt, tol)?.cocycle;
    let d1 = dualize_with(&tn, &c, SectionPolicy::LeastRepresentative, PHI_EXPONENT)?;
    let d2 = dualize_with(&alt, &c_alt, SectionPolicy::LeastRepresentative, PHI_EXPONENT)?;
    if d1.triple.twist != d2.triple.twist {
        return Ok(Check::exact("dual_section_independence", false, Some("ĝ changed".into())));
    }
    let a = extract_total_cocycle(&d1.triple, tol)?.cocycle;
    let b = extract_total_cocycle(&d2.triple, tol)?.cocycle;
    let diff = a.difference(&b)?;
    let cert = d1.triple.total_complex().solve_coboundary(2, &diff, cap)?;
    Ok(Check::exact("dual_section_independence", cert.is_some(), None))
}
