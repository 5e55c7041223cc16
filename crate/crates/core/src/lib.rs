//! Combinatorial Conley theory for Forman vector fields on simplicial
//! complexes, together with an explicit piecewise-smooth semiflow on the
//! standard geometric realization whose Conley theory matches it.
//!
//! The crate is organised bottom-up:
//!
//! * [`complex`]: abstract simplicial complexes.
//! * [`cvf`]: combinatorial vector fields and the multivalued map Π_V.
//! * [`homology`]: exact relative simplicial homology.
//! * [`conley`]: isolated invariant sets, Conley indices, Morse decompositions.
//! * [`geometry`]: ε-cells, the exact cell algebra, index pairs and ψ_ε.
//! * [`field`]: the tile vector fields f^ω.
//! * [`semiflow`]: integration of the glued semiflow and admissibility checks.

pub mod catalog;
pub mod complex;
pub mod conley;
pub mod cvf;
pub mod field;
pub mod geometry;
pub mod homology;
pub mod io;
pub mod semiflow;

pub use complex::{Simplex, SimplexId, SimplicialComplex, VertexId};
pub use cvf::{Cell, CombinatorialVectorField};
