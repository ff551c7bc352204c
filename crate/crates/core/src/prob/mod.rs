//! Randomness, elementary distributions and special functions.

mod dist;
mod rng;
pub mod special;

pub use dist::{DistributionSpec, ProbError};
pub(crate) use dist::ln_normal_mass;
pub use rng::{RngState, StreamId};
pub use special::std_normal_cdf;

/// Draw from `dist`, advancing `rng` by one uniform.
pub fn draw(dist: &DistributionSpec, rng: &mut RngState) -> Result<f64, ProbError> {
    dist.draw(rng)
}

/// Log density/mass; `-inf` outside the support.
pub fn log_prob(dist: &DistributionSpec, x: f64) -> f64 {
    dist.log_prob(x)
}
