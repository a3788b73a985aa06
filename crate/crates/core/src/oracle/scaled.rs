use super::Potential;
use crate::error::{NlcsError, Result};
use crate::numkit::SymMatrix;

/// `x ↦ f(x/√L)`.
pub struct Scaled<P> {
    inner: P,
    s: f64,
}

pub fn scale_potential<P: Potential>(inner: P, l: f64) -> Result<Scaled<P>> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(NlcsError::domain(format!("scale factor must be positive, got {l}")));
    }
    Ok(Scaled { inner, s: 1.0 / l.sqrt() })
}

impl<P: Potential> Potential for Scaled<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().map(|v| v * self.s).collect();
        self.inner.value(&y)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let y: Vec<f64> = x.iter().map(|v| v * self.s).collect();
        let v = self.inner.value_grad(&y, grad);
        grad.iter_mut().for_each(|g| *g *= self.s);
        v
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let y: Vec<f64> = x.iter().map(|v| v * self.s).collect();
        Ok(self.inner.hessian(&y)? * (self.s * self.s))
    }

    fn has_hessian(&self) -> bool {
        self.inner.has_hessian()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::integrate;
    use crate::oracle::make_gaussian;
    use nalgebra::DMatrix;

    #[test]
    fn unit_scale_is_identity() {
        let g = make_gaussian(vec![0.5, 0.0], DMatrix::identity(2, 2)).unwrap();
        let s = scale_potential(&g, 1.0).unwrap();
        assert_eq!(s.value(&[0.3, 0.1]), g.value(&[0.3, 0.1]));
        assert_eq!(s.grad(&[0.3, 0.1]), g.grad(&[0.3, 0.1]));
    }

    #[test]
    fn moment_scales_by_l() {
        let g = make_gaussian(vec![0.0], DMatrix::identity(1, 1)).unwrap();
        let s = scale_potential(&g, 4.0).unwrap();
        let z = integrate(|x| (-s.value(&[x])).exp(), -40.0, 40.0, 1e-12, 1e-12).unwrap().value;
        let m2 = integrate(|x| x * x * (-s.value(&[x])).exp(), -40.0, 40.0, 1e-12, 1e-12).unwrap().value;
        assert!((m2 / z - 4.0).abs() < 1e-9);
    }

    #[test]
    fn scaling_by_own_l_gives_unit_smoothness() {
        let g = make_gaussian(vec![0.0, 0.0], DMatrix::from_diagonal_element(2, 2, 0.25)).unwrap();
        let s = scale_potential(&g, 4.0).unwrap();
        let h = s.hessian(&[1.0, 2.0]).unwrap();
        assert!((h - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn rejects_non_positive() {
        let g = make_gaussian(vec![0.0], DMatrix::identity(1, 1)).unwrap();
        assert!(scale_potential(&g, 0.0).is_err());
        assert!(scale_potential(&g, -2.0).is_err());
    }
}
