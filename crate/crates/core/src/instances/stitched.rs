use crate::error::{NlcsError, Result};
use crate::numkit::{norm2, RadialShell, ShellMode, SymMatrix};
use crate::oracle::Potential;

/// `𝔤_u‖x‖²/2 + (1−𝔤_u)‖x−u‖²/2` with `𝔤_u(x) = q_mol(10(‖x−u‖/‖u‖ − 0.4))`.
#[derive(Clone, Debug)]
pub struct StitchedGaussian {
    u: Vec<f64>,
    shell: RadialShell,
}

pub fn build_stitched(u: Vec<f64>) -> Result<StitchedGaussian> {
    let d = u.len();
    let s = norm2(&u);
    if d == 0 || s < 100.0 * d as f64 {
        return Err(NlcsError::domain(format!("stitched Gaussian needs |u|^2 >= 100 d (got {s} with d={d})")));
    }
    let n = s.sqrt();
    let shell = RadialShell::new(u.clone(), 0.4 * n, 0.5 * n, ShellMode::Linear)?;
    Ok(StitchedGaussian { u, shell })
}

impl StitchedGaussian {
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn weight(&self, x: &[f64]) -> f64 {
        self.shell.value(x)
    }
}

impl Potential for StitchedGaussian {
    fn dim(&self) -> usize {
        self.u.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let g = self.shell.value(x);
        let a = norm2(x);
        let b: f64 = x.iter().zip(&self.u).map(|(p, q)| (p - q) * (p - q)).sum();
        0.5 * (g * a + (1.0 - g) * b)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let mut dg = vec![0.0; x.len()];
        let g = self.shell.value_grad(x, &mut dg).expect("shell has positive inner radius");
        let a = norm2(x);
        let b: f64 = x.iter().zip(&self.u).map(|(p, q)| (p - q) * (p - q)).sum();
        for i in 0..x.len() {
            grad[i] = 0.5 * dg[i] * (a - b) + x[i] - (1.0 - g) * self.u[i];
        }
        0.5 * (g * a + (1.0 - g) * b)
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let d = x.len();
        let dg = self.shell.grad(x)?;
        let hg = self.shell.hess(x)?;
        let delta = norm2(x) - x.iter().zip(&self.u).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
        Ok(SymMatrix::from_fn(d, d, |i, j| {
            0.5 * hg[(i, j)] * delta + dg[i] * self.u[j] + self.u[i] * dg[j] + if i == j { 1.0 } else { 0.0 }
        }))
    }

    fn has_hessian(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{fd_gradient, fd_hessian, norm};

    #[test]
    fn anchor_values() {
        let s = build_stitched(vec![20.0, 0.0]).unwrap();
        assert_eq!(s.value(&[20.0, 0.0]), 0.0);
        assert_eq!(s.value(&[0.0, 0.0]), 0.0);
        assert!(build_stitched(vec![5.0, 5.0]).is_err());
        assert!(norm(s.u()) > 0.0);
    }

    #[test]
    fn derivatives_in_transition() {
        let s = build_stitched(vec![20.0, 0.0]).unwrap();
        for k in 0..40 {
            let t = k as f64 * 0.157;
            let rad = 8.05 + 1.9 * (k as f64 / 40.0);
            let x = [20.0 + rad * t.cos(), rad * t.sin()];
            let g = s.grad(&x);
            let gf = fd_gradient(|y| s.value(y), &x, Some(1e-5)).unwrap();
            let h = s.hessian(&x).unwrap();
            let hf = fd_hessian(|y| s.value(y), &x, Some(1e-3)).unwrap();
            for i in 0..2 {
                assert!((g[i] - gf[i]).abs() < 1e-5 * (1.0 + g[i].abs()));
                for j in 0..2 {
                    assert!((h[(i, j)] - hf[(i, j)]).abs() < 1e-3 * (1.0 + h[(i, j)].abs()), "{x:?} {h} {hf}");
                }
            }
        }
    }
}
