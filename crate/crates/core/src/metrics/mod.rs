//! Desk-scale ground truth: total variation, moments, smoothness probes and
//! Poincaré comparison bounds.

mod moments;
mod poincare;
mod probe;
mod tv;

pub use moments::{second_moment, MomentEstimate, MomentMethod, Proposal};
pub use poincare::{poincare_comparison_bound, PoincareBound};
pub use probe::{probe_points, smoothness_probe, ProbeRegion};
pub use tv::{log_normalizer_quadrature, tv_histogram, tv_quadrature, HistogramSpec, QuadratureGrid, TvMethod, TvResult};
