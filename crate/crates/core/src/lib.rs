//! Finite, machine-checkable models of topological T-duality.
//!
//! Finite abelian groups stand in for `G ⊇ N`, finite nerves for covers of the
//! base, and `ℂ^d` for the Hilbert space. Exact cohomological statements are
//! decided over `ℤ/m`; unitary identities are checked in double precision.

pub mod cech;
pub mod crossed;
pub mod error;
pub mod groupcoh;
pub mod io;
pub mod lca;
pub mod linalg;
pub mod qz;
pub mod triples;
pub mod zmod;

pub use error::{Error, Result};
