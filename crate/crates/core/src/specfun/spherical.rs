//! Orthonormal spherical harmonics with the Condon-Shortley phase.

use crate::error::{Error, Result};
use num_complex::Complex64;

const Y00: f64 = 0.28209479177387814; // 1/sqrt(4π)

/// Y^{l,m}(θ, φ) in the orthonormal convention ∫|Y|² dΩ = 1.
pub fn spherical_harmonic(l: u32, m: i32, theta: f64, phi: f64) -> Result<Complex64> {
    if m.unsigned_abs() > l {
        return Err(Error::InvalidOrder(format!("|m| = {} > l = {l}", m.abs())));
    }
    if !(-1e-12..=std::f64::consts::PI + 1e-12).contains(&theta) {
        return Err(Error::InvalidInput(format!("theta = {theta} outside [0, pi]")));
    }
    let ma = m.unsigned_abs();
    let p = normalized_assoc_legendre(l, ma, theta.cos(), theta.sin());
    let phase = Complex64::from_polar(1.0, ma as f64 * phi);
    let y_pos = p * phase;
    if m >= 0 {
        Ok(y_pos)
    } else {
        // Y^{l,-m} = (-1)^m conj(Y^{l,m})
        let sign = if ma % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sign * y_pos.conj())
    }
}

/// Fully normalized associated Legendre column P̄_l^m (m >= 0), i.e. the
/// θ-part of Y^{l,m} including the Condon-Shortley phase. Stable to high l.
fn normalized_assoc_legendre(l: u32, m: u32, cos_t: f64, sin_t: f64) -> f64 {
    // diagonal climb to P̄_m^m
    let mut pmm = Y00;
    for k in 1..=m {
        let kf = k as f64;
        pmm *= -((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * sin_t;
    }
    if l == m {
        return pmm;
    }
    let mut p_prev = pmm; // P̄_m^m
    let mut p_curr = ((2 * m + 3) as f64).sqrt() * cos_t * pmm; // P̄_{m+1}^m
    if l == m + 1 {
        return p_curr;
    }
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
            .sqrt();
        let p_next = a * (cos_t * p_curr - b * p_prev);
        p_prev = p_curr;
        p_curr = p_next;
    }
    p_curr
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::quadrature::gauss_legendre;
    use crate::util::Sampler;
    use std::f64::consts::PI;

    #[test]
    fn y00_is_constant() {
        for &(t, p) in &[(0.1, 0.3), (1.2, -2.0), (3.0, 5.5)] {
            let y = spherical_harmonic(0, 0, t, p).unwrap();
            assert!((y.re - Y00).abs() < 1e-15 && y.im.abs() < 1e-15);
        }
    }

    #[test]
    fn low_order_closed_forms() {
        let (t, p) = (0.7, 1.9);
        let y10 = spherical_harmonic(1, 0, t, p).unwrap();
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt() * t.cos()).abs() < 1e-14);
        let y11 = spherical_harmonic(1, 1, t, p).unwrap();
        let expect = -(3.0 / (8.0 * PI)).sqrt() * t.sin();
        assert!((y11 - expect * Complex64::from_polar(1.0, p)).norm() < 1e-14);
    }

    #[test]
    fn conjugation_symmetry() {
        let mut rng = Sampler::new(3);
        for _ in 0..50 {
            let l = (rng.uniform() * 9.0) as u32;
            let m = (rng.uniform() * (l as f64 + 1.0)) as i32;
            let t = rng.range(0.0, PI);
            let p = rng.range(-PI, PI);
            let ym = spherical_harmonic(l, -m, t, p).unwrap();
            let yp = spherical_harmonic(l, m, t, p).unwrap();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert!((ym - sign * yp.conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn addition_theorem() {
        // Σ_m |Y^{l,m}|² = (2l+1)/4π
        let mut rng = Sampler::new(5);
        for l in 0..=8u32 {
            let t = rng.range(0.0, PI);
            let p = rng.range(-PI, PI);
            let mut s = 0.0;
            for m in -(l as i32)..=(l as i32) {
                s += spherical_harmonic(l, m, t, p).unwrap().norm_sqr();
            }
            let expect = (2.0 * l as f64 + 1.0) / (4.0 * PI);
            assert!((s - expect).abs() < 1e-12, "l = {l}: {s} vs {expect}");
        }
    }

    #[test]
    fn quadrature_orthonormality() {
        // Gauss-Legendre in cosθ × uniform in φ integrates Y Y* exactly
        let lmax = 5u32;
        let (xs, ws) = gauss_legendre(2 * lmax as usize + 2);
        let nphi = 4 * lmax as usize + 4;
        let dphi = 2.0 * PI / nphi as f64;
        let pairs = [(0u32, 0i32), (1, 0), (1, 1), (2, -1), (3, 2), (5, -4)];
        for &(l1, m1) in &pairs {
            for &(l2, m2) in &pairs {
                let mut acc = Complex64::new(0.0, 0.0);
                for (&x, &w) in xs.iter().zip(&ws) {
                    let theta = x.acos();
                    for q in 0..nphi {
                        let phi = q as f64 * dphi;
                        let a = spherical_harmonic(l1, m1, theta, phi).unwrap();
                        let b = spherical_harmonic(l2, m2, theta, phi).unwrap();
                        acc += a.conj() * b * w * dphi;
                    }
                }
                let expect = if l1 == l2 && m1 == m2 { 1.0 } else { 0.0 };
                assert!(
                    (acc - expect).norm() < 1e-12,
                    "({l1},{m1}) vs ({l2},{m2}): {acc}"
                );
            }
        }
    }

    #[test]
    fn invalid_order_rejected() {
        assert!(spherical_harmonic(2, 3, 0.5, 0.0).is_err());
        assert!(spherical_harmonic(0, -1, 0.5, 0.0).is_err());
    }
}
