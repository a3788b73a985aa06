use serde::Serialize;

use crate::error::{NlcsError, Result};
use crate::oracle::Potential;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PoincareBound {
    pub value: f64,
    pub log_value: f64,
    /// Spread `max log r − min log r` of the density ratio over the probes.
    pub log_ratio_spread: f64,
}

/// Lower bound on the Poincaré constant of `e^{−f_π}/Z_π` by comparison with
/// the Gaussian `e^{−f_γ}` (normalized), using the density ratio over probes.
pub fn poincare_comparison_bound<P, Q>(
    f_pi: &P,
    f_gamma: &Q,
    log_z_pi: f64,
    m: f64,
    eps: f64,
    probes: &[Vec<f64>],
) -> Result<PoincareBound>
where
    P: Potential + ?Sized,
    Q: Potential + ?Sized,
{
    let d = f_pi.dim();
    if f_gamma.dim() != d || probes.is_empty() || probes.iter().any(|p| p.len() != d) {
        return Err(NlcsError::domain("poincare bound needs matching dims and at least one probe"));
    }
    if !(m > 0.0 && eps > 0.0) {
        return Err(NlcsError::domain("poincare bound needs M > 0 and eps > 0"));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in probes {
        let lr = f_gamma.value(x) - f_pi.value(x) - log_z_pi;
        if !lr.is_finite() {
            return Err(NlcsError::Evaluation { location: x.clone() });
        }
        lo = lo.min(lr);
        hi = hi.max(lr);
    }
    let log_value = (2.0 * d as f64 * eps / m).ln() + lo - 2.0 * hi;
    Ok(PoincareBound { value: log_value.exp(), log_value, log_ratio_spread: hi - lo })
}
