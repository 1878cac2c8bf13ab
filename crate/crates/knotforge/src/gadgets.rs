//! Geometric building blocks shared by the hardness reductions: variable
//! rows with clause word loops, satellite operations (doubling, cabling),
//! and vertex-edge diagrams of graphs.

use thiserror::Error;

pub mod doubling;
pub mod graphs;
pub mod rows;

pub use doubling::{cable_longitude, double_components, whitehead_double_component};
pub use graphs::{chain_diagram, graph_to_vertex_edge_diagram};
pub use rows::RowPlan;

#[derive(Debug, Error)]
pub enum GadgetError {
    #[error("diagram carries no drawing to operate on")]
    NoLayout,
    #[error("component {0} is not in the diagram")]
    UnknownComponent(u32),
    #[error("component {0} has no clear straight stretch to host the tangle")]
    NoSite(u32),
    #[error("component {0} crosses itself; cable the companion before it acquires kinks")]
    SelfCrossings(u32),
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
}
