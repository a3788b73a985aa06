use statrs::function::gamma::ln_gamma;

use crate::error::{NlcsError, Result};

/// Log-volume of the Euclidean ball of radius `r` in dimension `d`.
pub fn log_ball_volume(d: usize, r: f64) -> Result<f64> {
    if d == 0 || !(r > 0.0) || !r.is_finite() {
        return Err(NlcsError::domain(format!("ball volume needs d >= 1, r > 0 (got d={d}, r={r})")));
    }
    let h = d as f64 / 2.0;
    Ok(h * std::f64::consts::PI.ln() + d as f64 * r.ln() - ln_gamma(h + 1.0))
}

/// Log of the surface area of the sphere of radius `r`: d·vol(B_r)/r.
pub fn log_sphere_area(d: usize, r: f64) -> Result<f64> {
    Ok((d as f64).ln() + log_ball_volume(d, r)? - r.ln())
}

/// Overflow-safe `log Σ exp(v_i)`.
pub fn log_sum_exp(vals: &[f64]) -> Result<f64> {
    if vals.is_empty() {
        return Err(NlcsError::domain("log_sum_exp of an empty sequence"));
    }
    let mut acc = LogSumExp::new();
    for &v in vals {
        acc.push(v);
    }
    Ok(acc.value())
}

/// Streaming, mergeable log-sum-exp accumulator.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if self.max == f64::NEG_INFINITY {
            *self = *other;
            return;
        }
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}
