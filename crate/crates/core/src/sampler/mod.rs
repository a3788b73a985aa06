//! The upper-bound sampler: grid estimation, truncation, averaged LMC.

mod grid;
mod lmc;
mod pipeline;
mod truncated;

pub use grid::{estimate_grid, GridEstimates, GridSpec};
pub use lmc::{lmc_run, lmc_sample_range, LmcConfig, LmcOutput};
pub use pipeline::{estimate_k0, estimate_smoothness, sample_nonlogconcave, theorem_steps, SamplerOverrides, SamplerReport};
pub use truncated::{build_truncated, TruncatedPotential, TruncationConstants};
