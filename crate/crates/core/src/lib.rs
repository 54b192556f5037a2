//! Loop O(2), six-vertex and random-cluster models on planar lattices.
//!
//! The crate provides exact enumeration oracles, Markov chain samplers, the black and
//! white percolation representations, the BKW torus observables and the estimators
//! used to study height-function delocalisation.

pub mod boundary;
pub mod error;
pub mod lattice_core;
pub mod loop_o2;
pub mod observables;
pub mod random_cluster;
pub mod samplers;
pub mod six_vertex;
pub mod verify;

pub use boundary::Boundary;
pub use error::{Error, Result};
