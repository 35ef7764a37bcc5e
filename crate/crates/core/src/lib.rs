//! Weakly-hard real-time constraints, their automata, and emulation-based
//! stability certificates for sampled nonlinear loops.

pub mod certify;
pub mod constraints;
pub mod emulation;
pub mod error;
pub mod graph;
pub mod sim;
pub mod system;
pub mod walks;

pub use constraints::{BinarySeq, Constraint, ConstraintKind};
pub use emulation::EmulationParams;
pub use error::{Error, Result};
pub use graph::{Edge, WhrtGraph};
pub use system::{GridSpec, Poly, ScalarPolySystem};
pub use walks::Walk;
