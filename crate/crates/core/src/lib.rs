//! Facial structure of Gram spectrahedra of positive semidefinite ternary
//! quartics: bitangents, Steiner complexes, rank-3 Gram tensors, the Steiner
//! graph, face dimensions and extreme-point sampling.

pub mod bitangent;
pub mod error;
pub mod forms;
pub mod gram;
pub mod linalg;
pub mod pipeline;
pub mod report;
pub mod spectra;
pub mod steiner;
pub mod union_find;

pub use error::{Error, Result};
