//! Simulation engines for two photonic neural-network models.
//!
//! * [`gaussian`] and [`qrc`]: a loop-based continuous-variable reservoir
//!   computer built from zero-mean Gaussian states, with squeezed-light phase
//!   encoding, a squeezing crystal inside the loop and a ridge readout.
//! * [`fock`] and [`qam`]: a driven-dissipative Kerr-free resonator with
//!   `n`-photon drive and `m`-photon loss in a truncated Fock basis, used as
//!   an associative memory whose stored patterns are metastable lobes.
//! * [`io`]: series loading, normalization, configuration and result files.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod io;
pub mod linalg;
pub mod qam;
pub mod qrc;

pub use error::{Error, ErrorKind, Result};
