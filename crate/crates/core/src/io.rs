//! JSON descriptors for groups, nerves, twists and triple fixtures.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cech::{Nerve, Twist};
use crate::error::{Error, Result};
use crate::lca::{Group, Pair, SectionPolicy, Subgroup};
use crate::linalg::CMat;
use crate::triples::TripleLocalData;

/// `{"factors": [6], "N": [[3]]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub factors: Vec<u64>,
    #[serde(rename = "N", default)]
    pub n: Vec<Vec<i64>>,
}

impl GroupSpec {
    pub fn build(&self, policy: SectionPolicy) -> Result<Pair> {
        let g = Group::new(self.factors.clone())?;
        for (i, c) in self.n.iter().enumerate() {
            if c.len() != g.rank() {
                return Err(Error::Shape(format!(
                    "N generator {i} has {} coordinates, G has rank {}",
                    c.len(),
                    g.rank()
                )));
            }
        }
        let n = Subgroup::from_coords(&g, &self.n)?;
        Pair::new(g, n, policy)
    }
}

/// `{"vertices": 3, "simplices": [[0,1],[0,2],[1,2]]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NerveSpec {
    pub vertices: usize,
    #[serde(default)]
    pub simplices: Vec<Vec<usize>>,
}

pub const MAX_VERTICES: usize = 64;

impl NerveSpec {
    pub fn build(&self) -> Result<Nerve> {
        if self.vertices > MAX_VERTICES {
            return Err(Error::Invalid(format!("more than {MAX_VERTICES} vertices")));
        }
        if let Some(s) = self.simplices.iter().find(|s| s.len() > 4) {
            return Err(Error::Invalid(format!("simplex {s:?} has dimension above 3")));
        }
        Nerve::new(self.vertices, &self.simplices)
    }

    pub fn of(nerve: &Nerve) -> NerveSpec {
        let top: Vec<Vec<usize>> = (1..=nerve.dimension().unwrap_or(0))
            .flat_map(|k| nerve.simplices(k).iter().cloned())
            .collect();
        NerveSpec {
            vertices: nerve.vertex_count(),
            simplices: top,
        }
    }
}

/// A twist: `"trivial"`, `"random"`, or a map from `"a,b"` to coordinates of a representative in `G`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TwistSpec {
    Keyword(TwistKeyword),
    Labels(BTreeMap<String, Vec<i64>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwistKeyword {
    Trivial,
    Random,
}

/// Parses an edge key `"a,b"`.
pub fn parse_edge(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("edge key {key:?} is not of the form \"a,b\""));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

impl TwistSpec {
    /// `None` for `"random"`. Unlisted edges get label 0; `"b,a"` stands for `−g_ab`.
    pub fn build(&self, nerve: &Nerve, pair: &Pair) -> Result<Option<Twist>> {
        match self {
            TwistSpec::Keyword(TwistKeyword::Random) => Ok(None),
            TwistSpec::Keyword(TwistKeyword::Trivial) => Ok(Some(Twist::trivial(nerve))),
            TwistSpec::Labels(map) => {
                let mut t = Twist::trivial(nerve);
                for (key, coords) in map {
                    let (a, b) = parse_edge(key)?;
                    let (lo, hi) = (a.min(b), a.max(b));
                    let e = nerve
                        .edge(lo, hi)
                        .ok_or_else(|| Error::Invalid(format!("twist references edge {key:?} which is not in the nerve")))?;
                    let x = pair.quotient(pair.g.index(coords)?);
                    t.labels[e] = if a < b { x } else { pair.qneg(x) };
                }
                let bad = t.violations(nerve, &|x, y| pair.qadd(x, y));
                if let Some(s) = bad.first() {
                    return Err(Error::Invalid(format!("twist violates the cocycle law on {s:?}")));
                }
                Ok(Some(t))
            }
        }
    }

    pub fn of(twist: &Twist, nerve: &Nerve, pair: &Pair) -> TwistSpec {
        let mut map = BTreeMap::new();
        for (e, &l) in nerve.simplices(1).iter().zip(&twist.labels) {
            let rep = pair.g.coords(pair.sigma(l)).iter().map(|&c| c as i64).collect();
            map.insert(format!("{},{}", e[0], e[1]), rep);
        }
        TwistSpec::Labels(map)
    }
}

/// Row-major complex matrix as `[[[re, im], …], …]`.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(a: &CMat) -> MatrixJson {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMat> {
    let r = rows.len();
    let c = rows.first().map(|x| x.len()).unwrap_or(0);
    if rows.iter().any(|x| x.len() != c) {
        return Err(Error::Shape("ragged matrix".into()));
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite matrix entry".into()));
    }
    Ok(CMat::from_fn(r, c, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

/// Serialized triple.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleJson {
    pub groups: GroupSpec,
    /// Coordinates of `σ(x)` for each coset label `x`.
    pub section: Vec<Vec<i64>>,
    pub nerve: NerveSpec,
    pub twist: BTreeMap<String, Vec<i64>>,
    pub modulus: u64,
    pub fiber_dim: usize,
    /// `zeta[edge][z]`, edges in the nerve's sorted order.
    pub zeta: Vec<Vec<MatrixJson>>,
    /// `mu[vertex][g · |G/N| + z]`.
    pub mu: Vec<Vec<MatrixJson>>,
}

/// Largest fibre dimension accepted from JSON.
pub const MAX_FIBER_DIM: usize = 256;

impl TripleJson {
    pub fn of(t: &TripleLocalData, groups: &GroupSpec) -> TripleJson {
        let g = &t.pair.g;
        let conv = |v: &Vec<Vec<CMat>>| v.iter().map(|x| x.iter().map(matrix_to_json).collect()).collect();
        let TwistSpec::Labels(twist) = TwistSpec::of(&t.twist, &t.nerve, &t.pair) else {
            unreachable!()
        };
        TripleJson {
            groups: groups.clone(),
            section: t
                .pair
                .section_table()
                .iter()
                .map(|&s| g.coords(s).iter().map(|&c| c as i64).collect())
                .collect(),
            nerve: NerveSpec::of(&t.nerve),
            twist,
            modulus: t.m,
            fiber_dim: t.dim,
            zeta: conv(&t.zeta),
            mu: conv(&t.mu),
        }
    }

    pub fn build(&self) -> Result<TripleLocalData> {
        if self.fiber_dim == 0 || self.fiber_dim > MAX_FIBER_DIM {
            return Err(Error::Invalid(format!("fiber_dim must lie in 1..={MAX_FIBER_DIM}")));
        }
        let base = self.groups.build(SectionPolicy::LeastRepresentative)?;
        let table = self
            .section
            .iter()
            .map(|c| base.g.index(c))
            .collect::<Result<Vec<_>>>()?;
        let pair = base.with_section(SectionPolicy::Table(table))?;
        let nerve = self.nerve.build()?;
        let twist = TwistSpec::Labels(self.twist.clone())
            .build(&nerve, &pair)?
            .expect("explicit labels");
        let conv = |v: &Vec<Vec<MatrixJson>>| -> Result<Vec<Vec<CMat>>> {
            v.iter().map(|x| x.iter().map(matrix_from_json).collect()).collect()
        };
        let t = TripleLocalData {
            m: self.modulus,
            dim: self.fiber_dim,
            twist,
            zeta: conv(&self.zeta)?,
            mu: conv(&self.mu)?,
            nerve,
            pair,
        };
        t.validate(1e-6)?;
        Ok(t)
    }
}

pub fn triple_from_json(s: &str) -> Result<TripleLocalData> {
    let j: TripleJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    j.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, Tolerances};
    use crate::triples::{build_random_triple, extract_total_cocycle, FixtureKind};

    #[test]
    fn group_spec_parses() {
        let g: GroupSpec = serde_json::from_str(r#"{"factors":[6],"N":[[3]]}"#).unwrap();
        let pair = g.build(SectionPolicy::LeastRepresentative).unwrap();
        assert_eq!(pair.n.order(), 2);
        assert!(serde_json::from_str::<GroupSpec>(r#"{"factors":[6],"M":[]}"#).is_err());
        let bad = GroupSpec { factors: vec![6], n: vec![vec![1, 1]] };
        assert!(bad.build(SectionPolicy::LeastRepresentative).is_err());
    }

    #[test]
    fn twist_map_and_reversed_edges() {
        let pair = Pair::from_coords(&[4], &[vec![2]]).unwrap();
        let nerve = Nerve::circle();
        let spec: TwistSpec = serde_json::from_str(r#"{"1,0":[1]}"#).unwrap();
        let t = spec.build(&nerve, &pair).unwrap().unwrap();
        assert_eq!(t.labels, vec![pair.qneg(1), 0, 0]);
        let missing: TwistSpec = serde_json::from_str(r#"{"0,5":[1]}"#).unwrap();
        assert!(missing.build(&nerve, &pair).is_err());
        let kw: TwistSpec = serde_json::from_str(r#""random""#).unwrap();
        assert_eq!(kw.build(&nerve, &pair).unwrap(), None);
    }

    #[test]
    fn triple_round_trip() {
        let spec = GroupSpec { factors: vec![4], n: vec![vec![2]] };
        let pair = spec.build(SectionPolicy::Seeded(2)).unwrap();
        let (t, _) = build_random_triple(&Nerve::circle(), &pair, 2, 4, 1, FixtureKind::Generic, None).unwrap();
        let s = serde_json::to_string(&TripleJson::of(&t, &spec)).unwrap();
        let back = triple_from_json(&s).unwrap();
        assert_eq!(back.twist, t.twist);
        assert_eq!(back.pair.section_table(), t.pair.section_table());
        for (x, y) in back.mu.iter().flatten().zip(t.mu.iter().flatten()) {
            assert!(linalg::max_diff(x, y) < 1e-15);
        }
        let tol = Tolerances::default();
        assert_eq!(
            extract_total_cocycle(&back, &tol).unwrap().cocycle,
            extract_total_cocycle(&t, &tol).unwrap().cocycle
        );
    }
}
