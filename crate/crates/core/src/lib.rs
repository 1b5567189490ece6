//! Maximal solutions of the Liouville equation −Δu + 4e^{2u} = 0 on smooth
//! planar domains, the hyperbolic radius v = e^{−u}, and the Fuchsian
//! boundary analysis of the renormalized unknown w = (v − 2d)/d².

pub mod analysis;
pub mod cutoff;
pub mod domain_file;
pub mod error;
pub mod field;
pub mod fuchsian;
pub mod geometry;
pub mod linalg;
pub mod oracles;
pub mod quadrature;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
