//! Loewner chains: chordal, reverse, radial and whole-plane solvers, SLE
//! driving processes, trace extraction and half-plane capacity.

mod capacity;
mod chordal;
mod driving;
mod flow;
mod radial;
mod reverse;
mod zipper;

pub use capacity::{hull_capacity, hull_capacity_of_trace, sup_im};
pub use chordal::{evolve_point, extract_trace, extract_trace_direct, slit_inverse, trace_on_grid, PointEvolution};
pub use driving::{generate_driving, DrivingFunction, DrivingOptions, ForcePoint, Scheme, Side, Truncation};
pub use radial::{
    evolve_radial, evolve_whole_plane, inverse_whole_plane, whole_plane_boundary_image, whole_plane_trace,
};
pub use reverse::{evolve_reverse, sample_reverse_theta};
pub use zipper::SlitComposer;

use serde::{Deserialize, Serialize};

use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// Chordal capacity time: hcap(K_t) = 2t.
    Capacity,
    /// Radial time: log conformal radius.
    RadialCapacity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub points: Vec<C64>,
    pub times: Vec<f64>,
    pub parameterization: Parameterization,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest jump between consecutive samples.
    pub fn max_step(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max)
    }
}
