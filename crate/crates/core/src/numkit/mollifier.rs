//! The quintic C² ramp `q(z) = 6z⁵ − 15z⁴ + 10z³`, clamped to [0, 1].

use crate::error::{NlcsError, Result};

#[inline]
pub fn q_mol(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        z * z * z * (z * (6.0 * z - 15.0) + 10.0)
    }
}

#[inline]
pub fn q_mol_d1(z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        0.0
    } else {
        let w = z * (1.0 - z);
        30.0 * w * w
    }
}

#[inline]
pub fn q_mol_d2(z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        0.0
    } else {
        60.0 * z * (1.0 - z) * (1.0 - 2.0 * z)
    }
}

fn check(z: f64) -> Result<f64> {
    if z.is_finite() {
        Ok(z)
    } else {
        Err(NlcsError::domain(format!("mollifier argument {z} is not finite")))
    }
}

pub fn mollify(z: f64) -> Result<f64> {
    check(z).map(q_mol)
}

pub fn mollify_d1(z: f64) -> Result<f64> {
    check(z).map(q_mol_d1)
}

pub fn mollify_d2(z: f64) -> Result<f64> {
    check(z).map(q_mol_d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(mollify(0.0).unwrap(), 0.0);
        assert_eq!(mollify(1.0).unwrap(), 1.0);
        assert_eq!(mollify(0.5).unwrap(), 0.5);
        assert_eq!(mollify(0.25).unwrap(), 0.103515625);
        assert_eq!(mollify(-3.0).unwrap(), 0.0);
        assert_eq!(mollify(7.0).unwrap(), 1.0);
        assert_eq!(mollify_d1(0.0).unwrap(), 0.0);
        assert_eq!(mollify_d1(1.0).unwrap(), 0.0);
        assert_eq!(mollify_d1(0.5).unwrap(), 1.875);
        assert_eq!(mollify_d2(0.0).unwrap(), 0.0);
        assert_eq!(mollify_d2(1.0).unwrap(), 0.0);
        assert_eq!(mollify_d2(0.5).unwrap(), 0.0);
    }

    #[test]
    fn expanded_polynomials_match() {
        for i in 1..100 {
            let z = i as f64 / 100.0;
            let d1 = 30.0 * z.powi(4) - 60.0 * z.powi(3) + 30.0 * z * z;
            let d2 = 120.0 * z.powi(3) - 180.0 * z * z + 60.0 * z;
            assert!((q_mol_d1(z) - d1).abs() < 1e-12);
            assert!((q_mol_d2(z) - d2).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_rejected() {
        assert!(mollify(f64::NAN).is_err());
        assert!(mollify_d1(f64::INFINITY).is_err());
        assert!(mollify_d2(f64::NEG_INFINITY).is_err());
    }
}
