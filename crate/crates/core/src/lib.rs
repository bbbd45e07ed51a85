//! Single-cell gene regulatory network inference with an exactly simulated
//! parameterized quantum circuit.
//!
//! One qubit stands for one gene. An encoder layer of Ry rotations loads each
//! gene's activation ratio, and layers of controlled Ry gates model how every
//! gene regulates the others. The rotation angles are fitted so the circuit's
//! output distribution matches the distribution of binarized expression
//! patterns, and the fitted angles are read back as a signed, directed,
//! weighted network.
//!
//! Pipeline: [`ingest`] → [`train::init_theta`] → [`train::optimize`] →
//! [`grn::prune`] → [`grn::to_network`].

pub mod distribution;
pub mod error;
pub mod grn;
pub mod ingest;
pub mod io;
pub mod model;
pub mod statevec;
pub mod train;

pub use distribution::Distribution;
pub use error::{Error, Result};
pub use model::{Objective, ThetaMatrix};
pub use statevec::{Gate, StateVector};
