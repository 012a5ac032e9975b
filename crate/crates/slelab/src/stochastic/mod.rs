//! Brownian motion, Bessel and radial Bessel simulators, closed-form
//! first-passage and transition densities.

mod bessel;
mod density;
mod path;

pub use bessel::{
    bes3_laplace, bes3_step_from_zero, sample_bessel, sample_bessel_with, sample_radial_bessel,
    sample_radial_bessel_with, BesselScheme, LaplaceEstimate, DELTA0,
};
pub use density::{bes3_cdf, density, DensitySpec};
pub use path::{interp_uniform as interp, sample_brownian, sample_brownian_with, ProcessKind, SamplePath};
