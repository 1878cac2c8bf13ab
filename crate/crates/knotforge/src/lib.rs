//! Link-diagram construction and verification toolkit.
//!
//! The crate turns 3-SAT formulas and small graphs into link diagrams whose
//! topology encodes the source instance, and provides the machinery needed to
//! check such encodings: combinatorial diagrams with validation, linking
//! numbers and writhe, free-group word oracles, a Reidemeister move engine
//! with bounded search, and brute-force oracles for the source problems.

pub mod cli;
pub mod diagram;
pub mod formulas;
pub mod freegroup;
pub mod gadgets;
pub mod geom;
pub mod moves;
pub mod reductions;
pub mod render;

pub use diagram::{ArcId, Crossing, CrossingId, Diagram, DiagramError};
pub use formulas::{parse_dimacs, parse_graph, CnfFormula, Graph};
pub use freegroup::FreeWord;
