//! Central finite differences, used as test oracles for analytic derivatives.

use super::linalg::{norm, SymMatrix};
use crate::error::{NlcsError, Result};

fn default_step(x: &[f64], step: Option<f64>) -> f64 {
    step.unwrap_or(1e-4 * (1.0 + norm(x)))
}

fn eval(f: &impl Fn(&[f64]) -> f64, y: &[f64]) -> Result<f64> {
    let v = f(y);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NlcsError::Evaluation { location: y.to_vec() })
    }
}

pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], step: Option<f64>) -> Result<Vec<f64>> {
    let h = default_step(x, step);
    let mut y = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let fp = eval(&f, &y)?;
        y[i] = x[i] - h;
        let fm = eval(&f, &y)?;
        y[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], step: Option<f64>) -> Result<SymMatrix> {
    let h = default_step(x, step);
    let d = x.len();
    let f0 = eval(&f, x)?;
    let mut y = x.to_vec();
    let mut m = SymMatrix::zeros(d, d);
    for i in 0..d {
        y[i] = x[i] + h;
        let fp = eval(&f, &y)?;
        y[i] = x[i] - h;
        let fm = eval(&f, &y)?;
        y[i] = x[i];
        m[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                y[i] = x[i] + si * h;
                y[j] = x[j] + sj * h;
                let v = eval(&f, &y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Symmetrized central-difference Jacobian of a gradient field.
pub fn fd_jacobian_sym(g: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], step: Option<f64>) -> Result<SymMatrix> {
    let h = default_step(x, step);
    let d = x.len();
    let mut y = x.to_vec();
    let mut m = SymMatrix::zeros(d, d);
    for i in 0..d {
        y[i] = x[i] + h;
        let gp = g(&y);
        y[i] = x[i] - h;
        let gm = g(&y);
        y[i] = x[i];
        for j in 0..d {
            let v = (gp[j] - gm[j]) / (2.0 * h);
            if !v.is_finite() {
                return Err(NlcsError::Evaluation { location: x.to_vec() });
            }
            m[(j, i)] = v;
        }
    }
    Ok((&m + m.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let f = |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>();
        let x = [0.3, -1.2, 2.0];
        let g = fd_gradient(f, &x, None).unwrap();
        for i in 0..3 {
            assert!((g[i] - x[i]).abs() < 1e-8);
        }
        let h = fd_hessian(f, &x, None).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((h[(i, j)] - e).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn constant_and_bilinear() {
        let g = fd_gradient(|_| 4.0, &[1.0, 2.0], None).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        let h = fd_hessian(|x| x[0] * x[1], &[0.7, -0.2], None).unwrap();
        assert!((h[(0, 1)] - 1.0).abs() < 1e-6);
        assert!((h[(1, 0)] - 1.0).abs() < 1e-6);
        assert!(h[(0, 0)].abs() < 1e-6);
    }

    #[test]
    fn non_finite_propagates() {
        let r = fd_gradient(|x| if x[0] > 0.0 { f64::NAN } else { 0.0 }, &[0.0], None);
        assert!(matches!(r, Err(NlcsError::Evaluation { .. })));
        let r = fd_hessian(|x| 1.0 / x[0].abs().min(0.0), &[0.0], None);
        assert!(r.is_err());
    }

    #[test]
    fn jacobian_of_gradient() {
        let g = |x: &[f64]| vec![2.0 * x[0] + x[1], x[0] - 3.0 * x[1]];
        let h = fd_jacobian_sym(g, &[0.1, 0.2], None).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-8);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-8);
        assert!((h[(1, 1)] + 3.0).abs() < 1e-8);
    }
}
