//! Assignment flows on the probability simplex and on density matrices.
//!
//! The crate provides the BKM geometry of positive definite density matrices
//! ([`hermitian`], [`manifold`]), the classical simplex assignment flow
//! ([`simplex`]), the coupled density-matrix flow on a weighted graph with its
//! coordinate integrator ([`flow`]), and data encoders for the experiments
//! ([`encodings`]).

pub mod encodings;
pub mod error;
pub mod flow;
pub mod graph;
pub mod hermitian;
pub mod manifold;
pub mod simplex;

pub use error::{QsafError, Result};
pub use flow::{FlowConfig, ProductState};
pub use graph::WeightedGraph;
pub use hermitian::{CMatrix, DensityMatrix, HermitianMatrix, TangentMatrix};
