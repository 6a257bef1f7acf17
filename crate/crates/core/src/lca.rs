//! Finite abelian groups in invariant-factor form, subgroups, annihilators,
//! quotients and sections.
//!
//! Elements are addressed by a mixed-radix index whose first coordinate is the
//! most significant digit, so index order is lexicographic order. The dual
//! group is identified with the group itself through the pairing
//! `⟨χ, g⟩ = Σ χ_i g_i / n_i mod 1`.

use std::collections::VecDeque;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qz::{lcm, Qz};
use crate::zmod::{self, ZMat};

pub const MAX_GROUP_ORDER: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Group {
    factors: Vec<u64>,
    strides: Vec<usize>,
    order: usize,
    exponent: u64,
}

impl Group {
    pub fn new(factors: Vec<u64>) -> Result<Group> {
        if let Some(f) = factors.iter().find(|&&f| f < 2) {
            return Err(Error::Invalid(format!("invariant factor {f} < 2")));
        }
        let mut order: usize = 1;
        for &f in &factors {
            order = order
                .checked_mul(f as usize)
                .filter(|&o| o <= MAX_GROUP_ORDER)
                .ok_or_else(|| {
                    Error::Invalid(format!("group order exceeds {MAX_GROUP_ORDER}"))
                })?;
        }
        let mut strides = vec![1usize; factors.len()];
        for i in (0..factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * factors[i + 1] as usize;
        }
        let exponent = factors.iter().fold(1, |a, &f| lcm(a, f));
        Ok(Group {
            factors,
            strides,
            order,
            exponent,
        })
    }

    pub fn cyclic(n: u64) -> Group {
        Group::new(vec![n]).expect("valid cyclic group")
    }

    pub fn trivial() -> Group {
        Group::new(vec![]).expect("trivial group")
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Least common multiple of the invariant factors.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn coords(&self, a: usize) -> Vec<u64> {
        self.factors
            .iter()
            .zip(&self.strides)
            .map(|(&f, &s)| ((a / s) as u64) % f)
            .collect()
    }

    /// Index of the element with the given coordinates, reduced modulo the factors.
    pub fn index(&self, coords: &[i64]) -> Result<usize> {
        if coords.len() != self.rank() {
            return Err(Error::Shape(format!(
                "element has {} coordinates, group has rank {}",
                coords.len(),
                self.rank()
            )));
        }
        Ok(coords
            .iter()
            .zip(&self.factors)
            .zip(&self.strides)
            .map(|((&c, &f), &s)| c.rem_euclid(f as i64) as usize * s)
            .sum())
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let mut r = 0;
        for (&f, &s) in self.factors.iter().zip(&self.strides) {
            let f = f as usize;
            r += ((a / s) % f + (b / s) % f) % f * s;
        }
        r
    }

    pub fn neg(&self, a: usize) -> usize {
        let mut r = 0;
        for (&f, &s) in self.factors.iter().zip(&self.strides) {
            let f = f as usize;
            r += (f - (a / s) % f) % f * s;
        }
        r
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    pub fn scale(&self, k: i64, a: usize) -> usize {
        let mut r = 0;
        for (&f, &s) in self.factors.iter().zip(&self.strides) {
            let c = ((a / s) as u64 % f) as i128 * k as i128;
            r += c.rem_euclid(f as i128) as usize * s;
        }
        r
    }

    /// `⟨χ, g⟩` as a numerator over [`Group::exponent`].
    pub fn pairing_num(&self, chi: usize, g: usize) -> u64 {
        let e = self.exponent;
        let mut acc: u64 = 0;
        for (&f, &s) in self.factors.iter().zip(&self.strides) {
            let a = (chi / s) as u64 % f;
            let b = (g / s) as u64 % f;
            acc = (acc + (a * b % f) * (e / f)) % e;
        }
        acc
    }

    pub fn pairing(&self, chi: usize, g: usize) -> Qz {
        Qz::from_zm(self.pairing_num(chi, g), self.exponent)
    }

    /// `⟨χ, g⟩` as an element of `ℤ/m`; `m` must be a multiple of the exponent.
    pub fn pairing_zm(&self, chi: usize, g: usize, m: u64) -> u64 {
        debug_assert_eq!(m % self.exponent, 0);
        self.pairing_num(chi, g) * (m / self.exponent)
    }
}

/// An element given by coordinates, used at API boundaries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupElement {
    pub factors: Vec<u64>,
    pub coords: Vec<u64>,
}

impl GroupElement {
    pub fn of(g: &Group, a: usize) -> GroupElement {
        GroupElement {
            factors: g.factors.clone(),
            coords: g.coords(a),
        }
    }
}

/// Pairing on coordinate vectors; both must be elements of the same group shape.
pub fn pairing(chi: &GroupElement, g: &GroupElement) -> Result<Qz> {
    if chi.factors != g.factors {
        return Err(Error::Shape(format!(
            "pairing between groups {:?} and {:?}",
            chi.factors, g.factors
        )));
    }
    let grp = Group::new(chi.factors.clone())?;
    let c: Vec<i64> = chi.coords.iter().map(|&x| x as i64).collect();
    let h: Vec<i64> = g.coords.iter().map(|&x| x as i64).collect();
    Ok(grp.pairing(grp.index(&c)?, grp.index(&h)?))
}

#[derive(Clone, Debug)]
pub struct Subgroup {
    parent: Group,
    generators: Vec<usize>,
    elements: Vec<usize>,
    member: Vec<bool>,
}

impl Subgroup {
    pub fn generated(parent: &Group, generators: &[usize]) -> Subgroup {
        let mut member = vec![false; parent.order()];
        let mut queue = VecDeque::from([0usize]);
        member[0] = true;
        while let Some(a) = queue.pop_front() {
            for &g in generators {
                let b = parent.add(a, g);
                if !member[b] {
                    member[b] = true;
                    queue.push_back(b);
                }
            }
        }
        let elements = (0..parent.order()).filter(|&a| member[a]).collect();
        Subgroup {
            parent: parent.clone(),
            generators: generators.to_vec(),
            elements,
            member,
        }
    }

    /// Subgroup generated by `elements`, keeping only a greedy subset of generators.
    pub fn spanned_by(parent: &Group, elements: &[usize]) -> Subgroup {
        let mut s = Subgroup::generated(parent, &[]);
        for &a in elements {
            if !s.contains(a) {
                let mut gens = s.generators.clone();
                gens.push(a);
                s = Subgroup::generated(parent, &gens);
            }
        }
        s
    }

    pub fn from_coords(parent: &Group, generators: &[Vec<i64>]) -> Result<Subgroup> {
        let gens = generators
            .iter()
            .map(|c| parent.index(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Subgroup::generated(parent, &gens))
    }

    pub fn whole(parent: &Group) -> Subgroup {
        let gens: Vec<usize> = (0..parent.rank())
            .map(|i| {
                let mut c = vec![0i64; parent.rank()];
                c[i] = 1;
                parent.index(&c).expect("unit vector")
            })
            .collect();
        Subgroup::generated(parent, &gens)
    }

    pub fn zero(parent: &Group) -> Subgroup {
        Subgroup::generated(parent, &[])
    }

    pub fn parent(&self) -> &Group {
        &self.parent
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    /// Elements in increasing index order.
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, a: usize) -> bool {
        self.member[a]
    }

    /// Position of `a` in [`Subgroup::elements`].
    pub fn position(&self, a: usize) -> Option<usize> {
        self.elements.binary_search(&a).ok()
    }
}

impl PartialEq for Subgroup {
    fn eq(&self, o: &Subgroup) -> bool {
        self.parent == o.parent && self.elements == o.elements
    }
}

impl Eq for Subgroup {}

/// `N⊥ = {χ ∈ Ĝ : ⟨χ, n⟩ = 0 for all n ∈ N}`, as a subgroup of `Ĝ ≅ G`.
pub fn annihilator(n: &Subgroup) -> Subgroup {
    let g = n.parent();
    let test: &[usize] = if n.generators().is_empty() && n.order() > 1 {
        n.elements()
    } else {
        n.generators()
    };
    let elems: Vec<usize> = (0..g.order())
        .filter(|&chi| test.iter().all(|&x| g.pairing_num(chi, x) == 0))
        .collect();
    Subgroup::spanned_by(g, &elems)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SectionPolicy {
    /// Least element of each coset in lexicographic order.
    LeastRepresentative,
    /// A seeded random representative per coset, with `σ(0) = 0`.
    Seeded(u64),
    /// Explicit representative per coset label.
    Table(Vec<usize>),
}

/// A subgroup `N ≤ G` together with the quotient `G/N` and a section `σ`.
///
/// Cosets are labelled `0..q` in order of their least element, so the label
/// of a coset does not depend on the section.
#[derive(Clone, Debug)]
pub struct Pair {
    pub g: Group,
    pub n: Subgroup,
    coset_of: Vec<usize>,
    least: Vec<usize>,
    section: Vec<usize>,
    qadd: Vec<usize>,
    qneg: Vec<usize>,
}

impl Pair {
    pub fn new(g: Group, n: Subgroup, policy: SectionPolicy) -> Result<Pair> {
        if n.parent() != &g {
            return Err(Error::Shape("subgroup of a different group".into()));
        }
        let mut coset_of = vec![usize::MAX; g.order()];
        let mut least = Vec::new();
        for a in 0..g.order() {
            if coset_of[a] == usize::MAX {
                let label = least.len();
                least.push(a);
                for &x in n.elements() {
                    coset_of[g.add(a, x)] = label;
                }
            }
        }
        let q = least.len();
        let section = match policy {
            SectionPolicy::LeastRepresentative => least.clone(),
            SectionPolicy::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut s = Vec::with_capacity(q);
                for (label, &a) in least.iter().enumerate() {
                    if label == 0 {
                        s.push(0);
                    } else {
                        let choices: Vec<usize> =
                            n.elements().iter().map(|&x| g.add(a, x)).collect();
                        s.push(*choices.choose(&mut rng).expect("nonempty coset"));
                    }
                }
                s
            }
            SectionPolicy::Table(t) => {
                if t.len() != q {
                    return Err(Error::Invalid(format!(
                        "section table has {} entries, quotient has {q}",
                        t.len()
                    )));
                }
                for (label, &a) in t.iter().enumerate() {
                    if a >= g.order() || coset_of[a] != label {
                        return Err(Error::Invalid(format!(
                            "section value {a} does not lie in coset {label}"
                        )));
                    }
                }
                if t[0] != 0 {
                    return Err(Error::Invalid("section must satisfy σ(0) = 0".into()));
                }
                t
            }
        };
        let mut qadd = vec![0; q * q];
        for x in 0..q {
            for y in 0..q {
                qadd[x * q + y] = coset_of[g.add(least[x], least[y])];
            }
        }
        let qneg = (0..q).map(|x| coset_of[g.neg(least[x])]).collect();
        Ok(Pair {
            g,
            n,
            coset_of,
            least,
            section,
            qadd,
            qneg,
        })
    }

    pub fn from_coords(factors: &[u64], n_gens: &[Vec<i64>]) -> Result<Pair> {
        let g = Group::new(factors.to_vec())?;
        let n = Subgroup::from_coords(&g, n_gens)?;
        Pair::new(g, n, SectionPolicy::LeastRepresentative)
    }

    /// `|G/N|`.
    pub fn q(&self) -> usize {
        self.least.len()
    }

    pub fn quotient(&self, a: usize) -> usize {
        self.coset_of[a]
    }

    pub fn sigma(&self, x: usize) -> usize {
        self.section[x]
    }

    pub fn section_table(&self) -> &[usize] {
        &self.section
    }

    pub fn qadd(&self, x: usize, y: usize) -> usize {
        self.qadd[x * self.q() + y]
    }

    pub fn qneg(&self, x: usize) -> usize {
        self.qneg[x]
    }

    pub fn qsub(&self, x: usize, y: usize) -> usize {
        self.qadd(x, self.qneg[y])
    }

    /// The coset `z + gN` for `z ∈ G/N`, `g ∈ G`.
    pub fn shift(&self, z: usize, g: usize) -> usize {
        self.qadd(z, self.coset_of[g])
    }

    /// `σ(x+y) − σ(x) − σ(y)`, an element of `N`.
    pub fn defect(&self, x: usize, y: usize) -> usize {
        let s = self.sigma(self.qadd(x, y));
        self.g.sub(self.g.sub(s, self.sigma(x)), self.sigma(y))
    }

    /// Same pair with a different section.
    pub fn with_section(&self, policy: SectionPolicy) -> Result<Pair> {
        Pair::new(self.g.clone(), self.n.clone(), policy)
    }

    /// The dual pair `(Ĝ, N⊥)` with a section of `Ĝ → Ĝ/N⊥`.
    pub fn dual(&self, policy: SectionPolicy) -> Result<Pair> {
        Pair::new(self.g.clone(), annihilator(&self.n), policy)
    }

    /// `⟨χ, z⟩` for `χ ∈ N⊥` and `z ∈ G/N`, as an element of `ℤ/m`.
    pub fn perp_pairing_zm(&self, chi: usize, z: usize, m: u64) -> u64 {
        self.g.pairing_zm(chi, self.sigma(z), m)
    }
}

/// The tables of `Ĝ/N⊥ ≅ N̂` and `\widehat{G/N} ≅ N⊥`.
#[derive(Clone, Debug)]
pub struct CanonicalIsos {
    /// For each coset `ẑ ∈ Ĝ/N⊥`, the character `n ↦ ⟨σ̂(ẑ), n⟩` on `N` (in element order).
    pub dual_quotient_to_hat_n: Vec<Vec<Qz>>,
    /// For each `β ∈ N⊥` (in element order), the character `x ↦ ⟨β, σ(x)⟩` on `G/N`.
    pub perp_to_hat_quotient: Vec<Vec<Qz>>,
}

pub fn canonical_isos(pair: &Pair, dual: &Pair) -> CanonicalIsos {
    let g = &pair.g;
    let dual_quotient_to_hat_n = (0..dual.q())
        .map(|zh| {
            pair.n
                .elements()
                .iter()
                .map(|&n| g.pairing(dual.sigma(zh), n))
                .collect()
        })
        .collect();
    let perp_to_hat_quotient = dual
        .n
        .elements()
        .iter()
        .map(|&b| (0..pair.q()).map(|x| g.pairing(b, pair.sigma(x))).collect())
        .collect();
    CanonicalIsos {
        dual_quotient_to_hat_n,
        perp_to_hat_quotient,
    }
}

impl CanonicalIsos {
    /// Checks that both tables are bijective homomorphisms onto character groups
    /// of the right order. Returns a list of violations (empty when valid).
    pub fn violations(&self, pair: &Pair, dual: &Pair) -> Vec<String> {
        let mut out = Vec::new();
        let g = &pair.g;
        let n = &pair.n;
        let a = &self.dual_quotient_to_hat_n;
        if a.len() != n.order() {
            out.push(format!("|Ĝ/N⊥| = {} but |N| = {}", a.len(), n.order()));
        }
        for x in 0..dual.q() {
            for y in 0..dual.q() {
                let s = dual.qadd(x, y);
                for k in 0..n.order() {
                    if a[s][k] != a[x][k] + a[y][k] {
                        out.push(format!("Ĝ/N⊥ → N̂ not additive at ({x},{y})"));
                    }
                }
            }
            for (k, &nk) in n.elements().iter().enumerate() {
                for (l, &nl) in n.elements().iter().enumerate() {
                    let kl = n.position(g.add(nk, nl)).expect("closed");
                    if a[x][kl] != a[x][k] + a[x][l] {
                        out.push(format!("image of {x} is not a character of N"));
                    }
                }
            }
        }
        if !all_distinct(a) {
            out.push("Ĝ/N⊥ → N̂ not injective".into());
        }
        let b = &self.perp_to_hat_quotient;
        if b.len() != pair.q() {
            out.push(format!("|N⊥| = {} but |G/N| = {}", b.len(), pair.q()));
        }
        for (i, row) in b.iter().enumerate() {
            for x in 0..pair.q() {
                for y in 0..pair.q() {
                    if row[pair.qadd(x, y)] != row[x] + row[y] {
                        out.push(format!("image of N⊥ element {i} is not a character"));
                    }
                }
            }
        }
        if !all_distinct(b) {
            out.push("N⊥ → \\widehat{G/N} not injective".into());
        }
        out
    }
}

fn all_distinct(rows: &[Vec<Qz>]) -> bool {
    let mut v: Vec<&Vec<Qz>> = rows.iter().collect();
    v.sort();
    v.windows(2).all(|w| w[0] != w[1])
}

/// Finds `χ ∈ Ĝ`, unique modulo `N⊥`, with `⟨χ, n⟩ = values(n)` on `N`.
pub fn solve_character(n: &Subgroup, values: impl Fn(usize) -> Qz) -> Result<usize> {
    let g = n.parent();
    let gens: Vec<usize> = if n.generators().is_empty() {
        n.elements().to_vec()
    } else {
        n.generators().to_vec()
    };
    for &a in n.elements() {
        for &x in &gens {
            if values(g.add(a, x)) != values(a) + values(x) {
                return Err(Error::NotHomomorphism(format!(
                    "values({}) ≠ values({}) + values({})",
                    g.add(a, x),
                    a,
                    x
                )));
            }
        }
    }
    let e = g.exponent();
    let mut a = ZMat::zeros(gens.len(), g.rank(), e);
    let mut b = vec![0u64; gens.len()];
    for (r, &x) in gens.iter().enumerate() {
        let c = g.coords(x);
        for (i, &f) in g.factors().iter().enumerate() {
            a.set(r, i, c[i] * (e / f) % e);
        }
        b[r] = values(x).to_zm(e).ok_or_else(|| {
            Error::NotHomomorphism(format!("value at {x} has order not dividing {e}"))
        })?;
    }
    let x = zmod::solve(&a, &b)?
        .ok_or_else(|| Error::NotHomomorphism("no character restricts to the given values".into()))?;
    let coords: Vec<i64> = x.iter().map(|&v| v as i64).collect();
    g.index(&coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_examples() {
        let z4 = Group::cyclic(4);
        assert_eq!(z4.pairing(1, 1), Qz::new(1, 4));
        assert_eq!(z4.pairing(0, 3), Qz::ZERO);
        let z6 = Group::cyclic(6);
        assert_eq!(z6.pairing(2, 3), Qz::ZERO);
    }

    #[test]
    fn pairing_shape_mismatch() {
        let a = GroupElement { factors: vec![4], coords: vec![1] };
        let b = GroupElement { factors: vec![2, 2], coords: vec![1, 0] };
        assert!(pairing(&a, &b).is_err());
        assert_eq!(pairing(&a, &a).unwrap(), Qz::new(1, 4));
    }

    #[test]
    fn index_is_lexicographic() {
        let g = Group::new(vec![2, 3]).unwrap();
        let mut prev = None;
        for a in 0..g.order() {
            let c = g.coords(a);
            if let Some(p) = prev {
                assert!(p < c);
            }
            prev = Some(c);
        }
    }

    #[test]
    fn annihilator_z6() {
        let g = Group::cyclic(6);
        let n = Subgroup::generated(&g, &[3]);
        assert_eq!(annihilator(&n).elements(), &[0, 2, 4]);
        assert_eq!(annihilator(&Subgroup::zero(&g)).order(), 6);
        assert_eq!(annihilator(&Subgroup::whole(&g)).order(), 1);
    }

    #[test]
    fn section_z4() {
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
        assert_eq!(pair.q(), 2);
        assert_eq!(pair.sigma(0), 0);
        assert_eq!(pair.sigma(1), 1);
        // σ(1+1) − σ(1) − σ(1) = 0 − 2 = −2 ≡ 2
        assert_eq!(pair.defect(1, 1), 2);
        assert!(pair.n.contains(pair.defect(1, 1)));
    }

    #[test]
    fn seeded_section_is_a_section() {
        let pair = Pair::from_coords(&[2, 4], &[vec![1, 2]]).unwrap();
        let s = pair.with_section(SectionPolicy::Seeded(9)).unwrap();
        assert_eq!(s.sigma(0), 0);
        for x in 0..s.q() {
            assert_eq!(s.quotient(s.sigma(x)), x);
        }
    }

    #[test]
    fn bad_section_table_rejected() {
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
        assert!(pair.with_section(SectionPolicy::Table(vec![2, 1])).is_err());
        assert!(pair.with_section(SectionPolicy::Table(vec![0, 2])).is_err());
        assert!(pair.with_section(SectionPolicy::Table(vec![0, 3])).is_ok());
    }

    #[test]
    fn solve_character_z6() {
        let g = Group::cyclic(6);
        let n = Subgroup::generated(&g, &[3]);
        let chi = solve_character(&n, |x| if x == 3 { Qz::new(1, 2) } else { Qz::ZERO }).unwrap();
        assert!([1, 3, 5].contains(&chi));
        assert!(solve_character(&n, |x| if x == 3 { Qz::new(1, 3) } else { Qz::ZERO }).is_err());
    }

    #[test]
    fn canonical_isos_z6() {
        let pair = Pair::from_coords(&[6], &[vec![3]]).unwrap();
        let dual = pair.dual(SectionPolicy::LeastRepresentative).unwrap();
        assert_eq!(dual.q(), 2);
        let isos = canonical_isos(&pair, &dual);
        assert!(isos.violations(&pair, &dual).is_empty());
    }

    #[test]
    fn rejects_oversized_group() {
        assert!(Group::new(vec![64, 64, 2]).is_err());
        assert!(Group::new(vec![1]).is_err());
    }
}
