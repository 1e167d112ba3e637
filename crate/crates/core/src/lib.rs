//! Exact counting of Galois orbits of GL(2) local inertial types and
//! Atkin-Li pseudo-eigenvalue classes for newforms with quadratic
//! nebentypus, with brute-force enumeration cross-checked against closed
//! forms and against newform orbit data fetched from the LMFDB.
//!
//! Everything is exact: group elements are residues, characters are
//! exponent vectors, pseudo-eigenvalues are cyclotomic integers divided by
//! explicit powers of p. No floating point enters any counted quantity.

pub mod arith;
pub mod characters;
pub mod cyclotomic;
pub mod error;
pub mod local_types;
pub mod linalg;
pub mod residue;

pub use characters::{CharacterVec, LocalNebentypus};
pub use cyclotomic::{CycElt, PsiSign, UnitCyc};
pub use error::{Error, Result};
pub use residue::{unit_group, ExpVec, ExtKind, GroupPresentation, QuadExt, RingElt};
