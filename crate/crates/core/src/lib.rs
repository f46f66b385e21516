//! Persistent homology of sampled maps.

pub mod complexes;
pub mod diagram_io;
pub mod ffield;
pub mod geometry;
pub mod homology;
pub mod linalg;
pub mod pipeline;
pub mod quiver;
