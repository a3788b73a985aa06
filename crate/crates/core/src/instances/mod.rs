//! Hard-instance families: plateau lower-bound distributions, the stitched
//! Gaussian, and cosine-bump optimization instances.

mod lower_bound;
mod opt;
mod packing;
mod stitched;

pub use lower_bound::{
    build_base, build_perturbed, perturbation_integral, solve_gamma, BaseInstance, LowerBoundParams,
    PerturbedInstance,
};
pub use opt::{build_opt_instance, bump_radius, OptInstance};
pub use packing::{pack_caps, pack_opt_centers};
pub use stitched::{build_stitched, StitchedGaussian};
