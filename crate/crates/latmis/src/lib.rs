//! Compile maximum independent set instances onto fixed-coupling Ising lattices
//! and certify every stage with exact solvers.

pub mod drawing;
pub mod elim;
pub mod annealer;
pub mod defects;
pub mod embedder;
pub mod error;
pub mod gadget;
pub mod graph;
pub mod hardware;
pub mod io;
pub mod ising;
pub mod oracle;
pub mod order;
pub mod planar;
pub mod reduction;
pub(crate) mod route;
pub mod verify;

pub use error::{Error, Result};
pub use graph::Graph;
pub use ising::{IsingInstance, SpinConfig};
