//! Precubical sets, their subdivisions, local grid structures and combinatorial
//! blowups.
//!
//! The crate is organised bottom-up:
//!
//! - [`pcs`]: precubical sets, validation, tensor products, spans, builders and
//!   the JSON interchange format.
//! - [`iso`]: symmetric morphism search (isomorphisms and monomorphisms).
//! - [`subdivision`]: the `s`-subdivision with exact rational coordinates.
//! - [`local_euclid`]: neighbourhoods, corner positions, simplicity and the
//!   enumeration of grid-shaped germs at a vertex.
//! - [`blowup`]: fibers of germs over every cube, restriction maps and the
//!   assembled blowup complex.
//! - [`dipath`]: cube paths and their lifts through the blowup.
//! - [`hda`]: a toy concurrent language interpreted as labelled precubical sets.
//! - [`export`]: JSON, DOT and OFF renderings of a blowup.
//! - [`corpus`]: seeded generators of small test complexes.

pub mod blowup;
pub mod corpus;
pub mod dipath;
pub mod export;
pub mod hda;
pub mod iso;
pub mod local_euclid;
pub mod pcs;
pub mod subdivision;

pub use blowup::{build_blowup, fiber, BlowupComplex, BlowupError, GermPoint};
pub use dipath::{lift_path, validate_path, CubePath, GermPath, Move, MoveKind};
pub use iso::{symmetric_iso, SymmetricIso, SymmetricMap};
pub use local_euclid::{Lps, SignTuple};
pub use pcs::{Cell, CubeId, PcsError, PrecubicalSet, Sign, ValidationReport};
pub use subdivision::{local_star, subdivide, SubdividedCube, Subdivider, Subdivision};
