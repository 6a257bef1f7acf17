//! Scenario files: parsing with field paths, then semantic validation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tdual_core::cech::{Nerve, Twist};
use tdual_core::io::{parse_edge, GroupSpec, NerveSpec, TwistKeyword, TwistSpec, MAX_FIBER_DIM};
use tdual_core::lca::{Group, Pair, SectionPolicy, Subgroup};
use tdual_core::linalg::Tolerances;
use tdual_core::triples::fixture::random_twist;
use tdual_core::triples::FixtureKind;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Cohomology,
    TotalCohomology,
    Dualize,
    Involution,
    Poincare,
    CrossedPoint,
    CrossedGlue,
    All,
}

impl Command {
    pub const SECTIONS: [Command; 7] = [
        Command::Cohomology,
        Command::TotalCohomology,
        Command::Dualize,
        Command::Involution,
        Command::Poincare,
        Command::CrossedPoint,
        Command::CrossedGlue,
    ];

    pub fn sections(self) -> Vec<Command> {
        match self {
            Command::All => Self::SECTIONS.to_vec(),
            c => vec![c],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Cohomology => "cohomology",
            Command::TotalCohomology => "total-cohomology",
            Command::Dualize => "dualize",
            Command::Involution => "involution",
            Command::Poincare => "poincare",
            Command::CrossedPoint => "crossed-point",
            Command::CrossedGlue => "crossed-glue",
            Command::All => "all",
        }
    }
}

/// Which local data to generate over the nerve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleKind {
    #[default]
    Generic,
    Trivial,
}

impl From<TripleKind> for FixtureKind {
    fn from(k: TripleKind) -> FixtureKind {
        match k {
            TripleKind::Generic => FixtureKind::Generic,
            TripleKind::Trivial => FixtureKind::Trivial,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_trip: Option<f64>,
}

fn default_twist() -> TwistSpec {
    TwistSpec::Keyword(TwistKeyword::Trivial)
}

fn default_fiber_dim() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub groups: GroupSpec,
    pub nerve: NerveSpec,
    #[serde(default = "default_twist")]
    pub twist: TwistSpec,
    #[serde(default = "default_fiber_dim")]
    pub fiber_dim: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the exponent of `G`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<u64>,
    pub command: Command,
    #[serde(default)]
    pub triple: TripleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
}

/// Parses scenario JSON, reporting the line, column and field path of the first problem.
pub fn parse(text: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Malformed {
            path,
            message: format!("line {}, column {}: {inner}", inner.line(), inner.column()),
        }
    })
}

/// A validated scenario with its derived objects.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub scenario: Scenario,
    pub pair: Pair,
    pub dual: Pair,
    pub nerve: Nerve,
    pub twist: Twist,
    pub m: u64,
    pub tol: Tolerances,
}

fn malformed(path: impl Into<String>, message: impl ToString) -> CliError {
    CliError::Malformed {
        path: path.into(),
        message: message.to_string(),
    }
}

/// Checks every cross-field invariant and builds the group pair, nerve and twist.
pub fn prepare(scenario: Scenario, tolerance_scale: f64) -> Result<Prepared, CliError> {
    let s = &scenario;
    let g = Group::new(s.groups.factors.clone()).map_err(|e| malformed("groups.factors", e))?;
    for (i, c) in s.groups.n.iter().enumerate() {
        let bad = c.len() != g.rank() || g.index(c).is_err();
        if bad {
            return Err(malformed(
                format!("groups.N[{i}]"),
                format!("{c:?} is not an element of a group with factors {:?}", g.factors()),
            ));
        }
    }
    let n = Subgroup::from_coords(&g, &s.groups.n).map_err(|e| malformed("groups.N", e))?;
    let pair = Pair::new(g, n, SectionPolicy::LeastRepresentative).map_err(|e| malformed("groups", e))?;
    let dual = pair
        .dual(SectionPolicy::LeastRepresentative)
        .map_err(|e| malformed("groups", e))?;

    let nerve = s.nerve.build().map_err(|e| malformed("nerve.simplices", e))?;

    if s.fiber_dim == 0 || s.fiber_dim > MAX_FIBER_DIM {
        return Err(malformed("fiber_dim", format!("must lie in 1..={MAX_FIBER_DIM}")));
    }
    let exp = pair.g.exponent();
    let m = s.modulus.unwrap_or(exp);
    if m < 2 || !m.is_multiple_of(exp) {
        return Err(malformed("modulus", format!("must be a multiple of the exponent {exp} of G")));
    }

    if let TwistSpec::Labels(map) = &s.twist {
        for (key, coords) in map {
            let path = format!("twist.{key:?}");
            let (a, b) = parse_edge(key).map_err(|e| malformed(&path, e))?;
            if nerve.edge(a.min(b), a.max(b)).is_none() || a == b {
                return Err(malformed(&path, format!("edge {{{a}, {b}}} is not in the nerve")));
            }
            if coords.len() != pair.g.rank() || pair.g.index(coords).is_err() {
                return Err(malformed(&path, format!("{coords:?} is not an element of G")));
            }
        }
    }
    let twist = match s.twist.build(&nerve, &pair).map_err(|e| malformed("twist", e))? {
        Some(t) => t,
        None => random_twist(&nerve, &pair, &mut ChaCha8Rng::seed_from_u64(s.seed)),
    };
    if s.triple == TripleKind::Trivial && twist != Twist::trivial(&nerve) {
        return Err(malformed("twist", "a trivial triple requires the trivial twist"));
    }

    let mut tol = Tolerances::default();
    if let Some(o) = &s.tolerances {
        for (name, slot, v) in [
            ("unitary", &mut tol.unitary, o.unitary),
            ("snap", &mut tol.snap, o.snap),
            ("pipeline", &mut tol.pipeline, o.pipeline),
            ("round_trip", &mut tol.round_trip, o.round_trip),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(malformed(format!("tolerances.{name}"), "must be a positive number"));
                }
                *slot = v;
            }
        }
    }
    if !(tolerance_scale.is_finite() && tolerance_scale > 0.0) {
        return Err(malformed("--tolerance-scale", "must be a positive number"));
    }
    let tol = tol.scaled(tolerance_scale);

    Ok(Prepared {
        pair,
        dual,
        nerve,
        twist,
        m,
        tol,
        scenario,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z6: &str = r#"{"groups":{"factors":[6],"N":[[3]]},"nerve":{"vertices":3,"simplices":[[0,1],[0,2],[1,2]]},
        "twist":"random","fiber_dim":2,"seed":1,"command":"all"}"#;

    #[test]
    fn parses_and_prepares() {
        let p = prepare(parse(Z6).unwrap(), 1.0).unwrap();
        assert_eq!(p.pair.q(), 3);
        assert_eq!(p.dual.q(), 2);
        assert_eq!(p.m, 6);
        assert_eq!(p.scenario.command.sections().len(), 7);
    }

    #[test]
    fn field_paths() {
        let e = parse(&Z6.replace("\"fiber_dim\":2", "\"fiber_dim\":\"two\"")).unwrap_err();
        assert!(matches!(&e, CliError::Malformed { path, .. } if path == "fiber_dim"), "{e}");
        let e = parse(&Z6.replace("\"all\"", "\"everything\"")).unwrap_err();
        assert!(matches!(&e, CliError::Malformed { path, .. } if path == "command"), "{e}");
        let s = parse(&Z6.replace("\"random\"", r#"{"0,7":[1]}"#)).unwrap();
        let e = prepare(s, 1.0).unwrap_err();
        assert!(matches!(&e, CliError::Malformed { path, .. } if path == "twist.\"0,7\""), "{e}");
        let s = parse(&Z6.replace("[[3]]", "[[3,1]]")).unwrap();
        let e = prepare(s, 1.0).unwrap_err();
        assert!(matches!(&e, CliError::Malformed { path, .. } if path == "groups.N[0]"), "{e}");
    }

    #[test]
    fn modulus_must_absorb_pairings() {
        let s = parse(&Z6.replace("\"seed\":1", "\"seed\":1,\"modulus\":4")).unwrap();
        assert!(prepare(s, 1.0).is_err());
        let s = parse(&Z6.replace("\"seed\":1", "\"seed\":1,\"modulus\":12")).unwrap();
        assert_eq!(prepare(s, 1.0).unwrap().m, 12);
    }
}
