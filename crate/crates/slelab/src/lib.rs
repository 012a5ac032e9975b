//! Numerical laboratory for Loewner chains, SLE driving processes, Bessel
//! diffusions, Gaussian free fields, LQG measures and Whitney geometry.
//!
//! Every sampler is a pure function of its parameters and a 64-bit seed.
//! Replicate loops derive independent streams from `(seed, replicate)` so
//! results do not depend on how many worker threads run them.

pub mod conformal;
pub mod error;
pub mod gff;
pub mod io;
pub mod lab;
pub mod loewner;
pub mod lqg;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
