//! Executing scenario sections and assembling reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use tdual_core::cech::{self, ShiftModule};
use tdual_core::crossed::{verify_gluing, verify_point_theorem, CrossedProduct};
use tdual_core::groupcoh::TotalComplex;
use tdual_core::lca::{annihilator, Group, SectionPolicy, Subgroup};
use tdual_core::linalg::Tolerances;
use tdual_core::triples::dual::{dual_checks, section_independence};
use tdual_core::triples::kappa::{poincare_check, verify_kappa_top};
use tdual_core::triples::{build_random_triple, dualize, normalized, verify_involution, Check, Dual, TripleLocalData};
use tdual_core::Error;

use crate::scenario::{Command, Prepared, Scenario};

/// Sizes shared by `explain` and the report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Dimensions {
    pub group_order: usize,
    pub n_order: usize,
    pub quotient_order: usize,
    pub n_perp_order: usize,
    pub dual_quotient_order: usize,
    /// Simplex counts by dimension.
    pub simplices: Vec<usize>,
    /// Length of `C^k` of the Čech complex with coefficients in functions on `G/N`.
    pub cech_cochains: Vec<usize>,
    /// Length of `C^p_tot` for `p = 0, 1, 2`.
    pub total_cochains: Vec<usize>,
    /// Side of the regular representation of the crossed product.
    pub crossed_representation: usize,
    /// Rows of the matrix of `T` at a point.
    pub transform_rows: usize,
    pub cap: usize,
}

pub fn dimensions(p: &Prepared, cap: usize) -> Dimensions {
    let q = p.pair.q();
    let top = p.nerve.dimension().map_or(0, |d| d + 1);
    let simplices: Vec<usize> = (0..top).map(|k| p.nerve.count(k)).collect();
    let tc = TotalComplex::new(&p.nerve, &p.pair, &p.twist, p.m);
    let d = p.scenario.fiber_dim;
    let len = p.pair.g.order() * q;
    Dimensions {
        group_order: p.pair.g.order(),
        n_order: p.pair.n.order(),
        quotient_order: q,
        n_perp_order: annihilator(&p.pair.n).order(),
        dual_quotient_order: p.dual.q(),
        cech_cochains: simplices.iter().map(|c| c * q).collect(),
        simplices,
        total_cochains: (0..=2).map(|k| tc.layout(k).len).collect(),
        crossed_representation: len * d,
        transform_rows: p.dual.q() * (q * d) * (q * d),
        cap,
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SectionOutput {
    pub checks: Vec<Check>,
    pub invariants: BTreeMap<String, Vec<u64>>,
    pub certificates: BTreeMap<String, Vec<u64>>,
    pub notes: Vec<String>,
}

impl SectionOutput {
    fn push(&mut self, section: Command, mut c: Check) {
        c.name = format!("{}/{}", section.name(), c.name);
        self.checks.push(c);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: Scenario,
    pub tolerances: Tolerances,
    pub dimensions: Dimensions,
    pub checks: Vec<Check>,
    pub invariants: BTreeMap<String, Vec<u64>>,
    pub certificates: BTreeMap<String, Vec<u64>>,
    /// Computations left out because they exceed the cap.
    pub notes: Vec<String>,
    pub pass: bool,
    /// Wall-clock seconds per section; the only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
}

/// Outcome of a run before it is written anywhere.
#[derive(Debug)]
pub enum RunOutcome {
    Done(Box<Report>),
    /// The scenario exceeds the matrix-dimension cap.
    Cap(String),
}

fn basis_vector(n: usize, j: usize) -> Vec<u64> {
    let mut v = vec![0; n];
    v[j] = 1;
    v
}

fn triple(p: &Prepared) -> Result<TripleLocalData, Error> {
    let s = &p.scenario;
    let (t, _) = build_random_triple(
        &p.nerve,
        &p.pair,
        s.fiber_dim,
        p.m,
        s.seed,
        s.triple.into(),
        Some(p.twist.clone()),
    )?;
    Ok(t)
}

fn dualized(p: &Prepared, cap: usize) -> Result<(TripleLocalData, Dual), Error> {
    let (tn, _) = normalized(&triple(p)?, &p.tol, cap)?;
    let d = dualize(&tn, SectionPolicy::LeastRepresentative, &p.tol)?;
    Ok((tn, d))
}

fn crossed_guard(p: &Prepared, cap: usize) -> Result<(), Error> {
    let dim = p.pair.g.order() * p.pair.q() * p.scenario.fiber_dim;
    if dim > cap {
        return Err(Error::ResourceCap { dim, cap });
    }
    Ok(())
}

fn run_section(p: &Prepared, section: Command, cap: usize) -> Result<SectionOutput, Error> {
    let mut out = SectionOutput::default();
    let tol = &p.tol;
    let seed = p.scenario.seed;
    match section {
        Command::Cohomology => {
            let module = ShiftModule::functions(&p.pair, 1, p.m);
            let top = p.nerve.dimension();
            for k in 0..=top.unwrap_or(0) {
                if top.is_none() {
                    break;
                }
                let h = cech::cohomology(&p.nerve, &module, &p.twist, k, cap)?;
                out.invariants.insert(format!("cech_H{k}"), h.invariant_factors);
            }
            let mut ok = true;
            for k in 0..top.unwrap_or(0).saturating_sub(1) {
                let len = p.nerve.count(k) * module.width();
                for j in 0..len {
                    let once = cech::delta_g(&p.nerve, &module, &p.twist, k, &basis_vector(len, j));
                    ok &= cech::delta_g(&p.nerve, &module, &p.twist, k + 1, &once).iter().all(|&v| v == 0);
                }
            }
            out.push(section, Check::exact("delta_squared", ok, None));
        }
        Command::TotalCohomology => {
            let tc = TotalComplex::new(&p.nerve, &p.pair, &p.twist, p.m);
            for k in 0..=2 {
                let next = tc.layout(k + 1).len;
                if k == 2 && next > cap {
                    out.notes.push(format!("total_H2 skipped: C^3_tot has length {next} > cap {cap}"));
                    continue;
                }
                let h = tc.cohomology(k, cap)?;
                out.invariants.insert(format!("total_H{k}"), h.invariant_factors);
            }
            let mut ok = true;
            for k in 0..=1 {
                let len = tc.layout(k).len;
                for j in 0..len {
                    ok &= tc
                        .differential(k + 1, &tc.differential(k, &basis_vector(len, j)))
                        .iter()
                        .all(|&v| v == 0);
                }
            }
            out.push(section, Check::exact("total_differential_squared", ok, None));
        }
        Command::Dualize => {
            let (tn, d) = dualized(p, cap)?;
            for c in dual_checks(&tn, &d, tol) {
                out.push(section, c);
            }
            let k = verify_kappa_top(&tn, &d, tol);
            out.push(section, k.gluing);
            out.push(section, k.factorization);
            out.push(section, section_independence(&tn, SectionPolicy::Seeded(seed ^ 0x5a5a), tol, cap)?);
            out.invariants.insert("dual_twist".into(), d.triple.twist.labels.iter().map(|&x| x as u64).collect());
        }
        Command::Involution => {
            let r = verify_involution(&triple(p)?, SectionPolicy::Seeded(seed ^ 0xa5a5), tol, cap)?;
            for c in r.checks {
                out.push(section, c);
            }
            if let Some(x) = r.certificate {
                out.certificates.insert("involution".into(), x);
            }
        }
        Command::Poincare => {
            for c in poincare_check(&p.pair, &p.dual, p.m, tol)? {
                out.push(section, c);
            }
        }
        Command::CrossedPoint => {
            crossed_guard(p, cap)?;
            let (tn, d) = dualized(p, cap)?;
            for a in 0..tn.nerve.count(0) {
                let cp = CrossedProduct::at_vertex(&tn, &d.triple.pair, a)?;
                let r = verify_point_theorem(&cp, 3, seed.wrapping_add(a as u64), tol);
                for mut c in r.checks {
                    c.name = format!("vertex{a}/{}", c.name);
                    out.push(section, c);
                }
            }
        }
        Command::CrossedGlue => {
            crossed_guard(p, cap)?;
            let (tn, d) = dualized(p, cap)?;
            if tn.nerve.count(0) > 0 {
                for c in verify_gluing(&tn, &d, 3, seed, tol)?.checks {
                    out.push(section, c);
                }
            }
        }
        Command::All => unreachable!("expanded by Command::sections"),
    }
    Ok(out)
}

type Slot = Option<(Result<SectionOutput, Error>, f64)>;

/// Runs every section of the scenario's command on up to `jobs` threads.
///
/// Sections are merged in their fixed order, so the report does not depend on `jobs`.
pub fn run(p: &Prepared, jobs: usize, cap: usize) -> RunOutcome {
    let sections = p.scenario.command.sections();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Slot>> = Mutex::new(vec![None; sections.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, sections.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&section) = sections.get(i) else { break };
                let start = Instant::now();
                let r = run_section(p, section, cap);
                let secs = start.elapsed().as_secs_f64();
                slots.lock().unwrap()[i] = Some((r, secs));
            });
        }
    });
    let mut checks = Vec::new();
    let mut invariants = BTreeMap::new();
    let mut certificates = BTreeMap::new();
    let mut notes = Vec::new();
    let mut timings = BTreeMap::new();
    for (section, slot) in sections.iter().zip(slots.into_inner().unwrap()) {
        let (r, secs) = slot.expect("every section ran");
        timings.insert(section.name().to_string(), secs);
        match r {
            Ok(o) => {
                checks.extend(o.checks);
                invariants.extend(o.invariants);
                certificates.extend(o.certificates);
                notes.extend(o.notes);
            }
            Err(e @ Error::ResourceCap { .. }) => return RunOutcome::Cap(format!("{}: {e}", section.name())),
            Err(e) => checks.push(Check::exact(format!("{}/error", section.name()), false, Some(e.to_string()))),
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    RunOutcome::Done(Box::new(Report {
        scenario: p.scenario.clone(),
        tolerances: p.tol,
        dimensions: dimensions(p, cap),
        checks,
        invariants,
        certificates,
        notes,
        pass,
        timings,
    }))
}

/// Keeps only the checks named `name`, with or without the section prefix.
pub fn retain_check(r: &mut Report, name: &str) -> bool {
    r.checks.retain(|c| c.name == name || c.name.split_once('/').is_some_and(|(_, rest)| rest == name));
    r.pass = r.checks.iter().all(|c| c.pass);
    !r.checks.is_empty()
}

pub fn render_text(r: &Report) -> String {
    let mut s = String::new();
    for c in &r.checks {
        writeln!(s, "{c}").unwrap();
    }
    for (k, v) in &r.invariants {
        writeln!(s, "{k}: {v:?}").unwrap();
    }
    for (k, v) in &r.certificates {
        writeln!(s, "certificate {k}: {} entries", v.len()).unwrap();
    }
    for n in &r.notes {
        writeln!(s, "note: {n}").unwrap();
    }
    let failed = r.checks.iter().filter(|c| !c.pass).count();
    writeln!(s, "{} checks, {failed} failed: {}", r.checks.len(), if r.pass { "PASS" } else { "FAIL" }).unwrap();
    for (k, t) in &r.timings {
        writeln!(s, "time {k}: {t:.3}s").unwrap();
    }
    s
}

fn coords(g: &Group, a: usize) -> String {
    let c = g.coords(a);
    if c.len() == 1 {
        c[0].to_string()
    } else {
        format!("{c:?}")
    }
}

fn span(s: &Subgroup) -> String {
    let g = s.parent();
    let gens = Subgroup::spanned_by(g, s.elements());
    let list: Vec<String> = gens.generators().iter().map(|&a| coords(g, a)).collect();
    format!("⟨{}⟩", list.join(", "))
}

fn describes(section: Command) -> &'static str {
    match section {
        Command::Cohomology => "twisted Čech cohomology of the nerve with coefficients in functions on G/N",
        Command::TotalCohomology => "cohomology of the Čech × group-cochain total complex",
        Command::Dualize => "dual base cocycle, dual transition functions, the dual triple and its kappa gluing",
        Command::Involution => "dualizing twice recovers the original class, with a coboundary certificate",
        Command::Poincare => "the Poincaré bundle identities relating the section, dual section and pairing",
        Command::CrossedPoint => "the Fourier map T on the crossed product at each vertex: homomorphism, *, norm, equivariance",
        Command::CrossedGlue => "T applied to global sections respects the dual gluing",
        Command::All => "",
    }
}

/// Describes the derived objects without running any check.
pub fn explain(p: &Prepared, cap: usize) -> String {
    let d = dimensions(p, cap);
    let g = &p.pair.g;
    let perp = annihilator(&p.pair.n);
    let mut s = String::new();
    let factors: Vec<String> = g.factors().iter().map(|f| format!("ℤ/{f}")).collect();
    writeln!(s, "G = {} (order {})", factors.join(" × "), d.group_order).unwrap();
    writeln!(s, "N = {} (order {})", span(&p.pair.n), d.n_order).unwrap();
    writeln!(s, "|G/N| = {}", d.quotient_order).unwrap();
    writeln!(s, "N⊥ = {} (order {})", span(&perp), d.n_perp_order).unwrap();
    writeln!(s, "Ĝ/N⊥ order {}", d.dual_quotient_order).unwrap();
    writeln!(s, "modulus m = {}, fiber dimension {}", p.m, p.scenario.fiber_dim).unwrap();
    writeln!(s, "nerve: {} vertices, simplex counts {:?}", p.nerve.vertex_count(), d.simplices).unwrap();
    if p.nerve.vertex_count() == 0 {
        writeln!(s, "warning: the nerve is empty, so all Čech groups are zero").unwrap();
    }
    writeln!(s, "twist labels in G/N: {:?}", p.twist.labels).unwrap();
    writeln!(s, "Čech cochain lengths: {:?}", d.cech_cochains).unwrap();
    writeln!(s, "total cochain lengths (p = 0, 1, 2): {:?}", d.total_cochains).unwrap();
    writeln!(s, "crossed product representation: {}", d.crossed_representation).unwrap();
    writeln!(s, "Fourier map rows: {}", d.transform_rows).unwrap();
    writeln!(s, "matrix dimension cap: {}", d.cap).unwrap();
    for section in p.scenario.command.sections() {
        writeln!(s, "check {}: {}", section.name(), describes(section)).unwrap();
    }
    s
}
