//! Black-box potential access with exact query accounting.

mod gaussian;
mod hs;
mod mixture;
mod scaled;

use std::ops::{Add, AddAssign};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{NlcsError, Result};
use crate::numkit::SymMatrix;

pub use gaussian::{make_gaussian, GaussianPotential};
pub use hs::{make_hs_mixture, HsMixture};
pub use mixture::{make_mixture, MixturePotential, MixtureSpec};
pub use scaled::{scale_potential, Scaled};

/// A potential `f` whose density is proportional to `e^{−f}`.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Returns `f(x)` and writes `∇f(x)` into `grad`.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.value_grad(x, &mut g);
        g
    }

    fn hessian(&self, _x: &[f64]) -> Result<SymMatrix> {
        Err(NlcsError::Capability("hessian"))
    }

    fn has_hessian(&self) -> bool {
        false
    }
}

impl<P: Potential + ?Sized> Potential for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (**self).value_grad(x, grad)
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        (**self).grad(x)
    }
    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        (**self).hessian(x)
    }
    fn has_hessian(&self) -> bool {
        (**self).has_hessian()
    }
}

impl<P: Potential + ?Sized> Potential for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (**self).value_grad(x, grad)
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        (**self).grad(x)
    }
    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        (**self).hessian(x)
    }
    fn has_hessian(&self) -> bool {
        (**self).has_hessian()
    }
}

/// Counts of value and gradient queries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    #[serde(rename = "value")]
    pub value_queries: u64,
    #[serde(rename = "grad")]
    pub grad_queries: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn merge(&self, other: &QueryLedger) -> QueryLedger {
        *self + *other
    }

    pub fn total(&self) -> u64 {
        self.value_queries + self.grad_queries
    }
}

impl Add for QueryLedger {
    type Output = QueryLedger;
    fn add(self, o: QueryLedger) -> QueryLedger {
        QueryLedger {
            value_queries: self.value_queries + o.value_queries,
            grad_queries: self.grad_queries + o.grad_queries,
        }
    }
}

impl AddAssign for QueryLedger {
    fn add_assign(&mut self, o: QueryLedger) {
        *self = *self + o;
    }
}

/// Wrapper that records every value and gradient query; Hessians are refused.
pub struct Counted<P> {
    inner: P,
    values: AtomicU64,
    grads: AtomicU64,
}

impl<P: Potential> Counted<P> {
    pub fn new(inner: P) -> Self {
        Self { inner, values: AtomicU64::new(0), grads: AtomicU64::new(0) }
    }

    pub fn ledger(&self) -> QueryLedger {
        QueryLedger {
            value_queries: self.values.load(Ordering::Relaxed),
            grad_queries: self.grads.load(Ordering::Relaxed),
        }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

pub fn counted<P: Potential>(oracle: P) -> Counted<P> {
    Counted::new(oracle)
}

impl<P: Potential> Potential for Counted<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.values.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.values.fetch_add(1, Ordering::Relaxed);
        self.grads.fetch_add(1, Ordering::Relaxed);
        self.inner.value_grad(x, grad)
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.grads.fetch_add(1, Ordering::Relaxed);
        self.inner.grad(x)
    }
    fn hessian(&self, _x: &[f64]) -> Result<SymMatrix> {
        Err(NlcsError::Capability("hessian is not exposed through the query model"))
    }
}

/// A potential given by closures, handy for tests and one-off targets.
pub struct FnPotential<F, G> {
    pub dim: usize,
    pub f: F,
    pub g: G,
}

impl<F, G> Potential for FnPotential<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (self.g)(x, grad);
        (self.f)(x)
    }
}
