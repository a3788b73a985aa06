use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{NlcsError, Result};

/// Dense symmetric matrix; symmetry is maintained by the constructors that produce it.
pub type SymMatrix = DMatrix<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm2(a).sqrt()
}

/// Builds a symmetric matrix from its upper triangle.
pub fn sym_from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> SymMatrix {
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = f(i, j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub fn cholesky(m: &SymMatrix) -> Result<Cholesky<f64, Dyn>> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(NlcsError::Factorization(format!("shape {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(NlcsError::Factorization("non-finite entry".into()));
    }
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-10 * (1.0 + m.abs().max()) {
        return Err(NlcsError::Factorization(format!("asymmetry {asym:.2e}")));
    }
    Cholesky::new(m.clone()).ok_or_else(|| NlcsError::Factorization("Cholesky failed".into()))
}

fn rayleigh_power(a: &SymMatrix, start: &[f64], tol: f64, max_iter: usize) -> (f64, bool) {
    let d = a.nrows();
    let mut v = nalgebra::DVector::from_column_slice(start);
    let n0 = v.norm();
    if n0 == 0.0 {
        return (0.0, true);
    }
    v /= n0;
    let mut lambda = f64::NEG_INFINITY;
    let mut calm = 0;
    for _ in 0..max_iter {
        let w = a * &v;
        let next = v.dot(&w);
        let nw = w.norm();
        if nw == 0.0 {
            return (0.0, true);
        }
        if (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            calm += 1;
            if calm >= 3 {
                return (next, true);
            }
        } else {
            calm = 0;
        }
        lambda = next;
        v = w / nw;
        debug_assert_eq!(v.len(), d);
    }
    (lambda, false)
}

/// Largest absolute eigenvalue of a symmetric matrix by shifted power iteration.
pub fn opnorm_sym(h: &SymMatrix, tol: f64) -> Result<f64> {
    let d = h.nrows();
    if d == 0 || h.ncols() != d {
        return Err(NlcsError::domain("opnorm of a non-square or empty matrix"));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(NlcsError::domain("opnorm of a matrix with non-finite entries"));
    }
    let gersh = (0..d)
        .map(|i| (0..d).map(|j| h[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if gersh == 0.0 {
        return Ok(0.0);
    }
    let ident = DMatrix::<f64>::identity(d, d) * gersh;
    let upper = h + &ident;
    let lower = &ident - h;
    let ones = vec![1.0; d];
    // Orthogonal to the all-ones start, nonzero for d >= 2.
    let mut alt: Vec<f64> = (0..d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    if d % 2 == 1 {
        alt[d - 1] = 0.0;
        if d == 1 {
            alt[0] = 1.0;
        }
    }
    let max_iter = 20_000 + 200 * d;
    let tol = tol.max(1e-15);
    let mut best = 0.0f64;
    let mut ok = true;
    for (a, sign) in [(&upper, 1.0), (&lower, -1.0)] {
        let mut top = f64::NEG_INFINITY;
        for s in [&ones, &alt] {
            let (lam, conv) = rayleigh_power(a, s, tol * 1e-2, max_iter);
            ok &= conv;
            top = top.max(lam);
        }
        // upper gives λ_max = top − G, lower gives λ_min = G − top
        let eig = sign * (top - gersh);
        best = best.max(eig.abs());
    }
    if ok {
        Ok(best)
    } else {
        Err(NlcsError::Convergence { best, iterations: max_iter })
    }
}

/// (min, max) eigenvalue of a symmetric matrix.
pub fn spectral_range(h: &SymMatrix) -> (f64, f64) {
    let e = SymmetricEigen::new(h.clone());
    let lo = e.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = e.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opnorm_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((opnorm_sym(&id, 1e-10).unwrap() - 1.0).abs() < 1e-9);
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -5.0]));
        assert!((opnorm_sym(&m, 1e-10).unwrap() - 5.0).abs() < 1e-8);
        let v = [1.0, 2.0, -1.0, 1.0];
        let r1 = sym_from_fn(4, |i, j| v[i] * v[j]);
        assert!((opnorm_sym(&r1, 1e-10).unwrap() - 7.0).abs() < 1e-8);
        assert_eq!(opnorm_sym(&DMatrix::zeros(2, 2), 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn opnorm_start_orthogonal_to_top() {
        // top eigenvector (1,-1)/√2 is orthogonal to the all-ones start
        let m = sym_from_fn(2, |i, j| if i == j { 0.0 } else { -3.0 });
        assert!((opnorm_sym(&m, 1e-10).unwrap() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn opnorm_rejects_bad_input() {
        let m = sym_from_fn(2, |_, _| f64::NAN);
        assert!(opnorm_sym(&m, 1e-10).is_err());
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = sym_from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(matches!(cholesky(&m), Err(NlcsError::Factorization(_))));
    }
}
