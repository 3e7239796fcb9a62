//! Radial-harmonic representation of momentum states.
//!
//! States are expanded as ψ(π) = Σ_{l,m} ψ_{lm}(r) Y^{l,m}(Ω) on a
//! logarithmic radial grid. Radial integrals are trapezoid sums in ln r,
//! which is spectrally accurate for smooth integrands decaying at both ends
//! and keeps the detection-time kernel phases well resolved (they oscillate
//! in ln r).

use crate::error::{Error, Result};
use crate::grid::CartesianGrid;
use crate::specfun::quadrature::gauss_legendre;
use crate::specfun::spherical_harmonic;
use crate::state::MomentumState;
use crate::util::{pairwise_sum, pairwise_sum_c};
use crate::EnergySign;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

/// Logarithmically spaced radial grid with trapezoid-in-ln r weights.
#[derive(Clone, Debug)]
pub struct RadialGrid {
    pub r: Vec<f64>,
    /// Quadrature weights w_i such that ∫ f dr ≈ Σ w_i f(r_i).
    pub w: Vec<f64>,
    pub mass: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl RadialGrid {
    pub fn new(n: usize, r_min: f64, r_max: f64, mass: f64) -> Result<Self> {
        if !(r_min > 0.0) || !(r_max > r_min) {
            return Err(Error::InvalidInput(format!(
                "radial range must satisfy 0 < r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if n < 8 {
            return Err(Error::InvalidInput("radial grid needs at least 8 nodes".into()));
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidInput("mass must be positive".into()));
        }
        let step = (r_max / r_min).ln() / (n - 1) as f64;
        let r: Vec<f64> = (0..n).map(|i| r_min * (i as f64 * step).exp()).collect();
        let w: Vec<f64> = (0..n)
            .map(|i| {
                let end = i == 0 || i == n - 1;
                r[i] * step * if end { 0.5 } else { 1.0 }
            })
            .collect();
        Ok(RadialGrid { r, w, mass, r_min, r_max })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn energy(&self, i: usize) -> f64 {
        (self.mass * self.mass + self.r[i] * self.r[i]).sqrt()
    }

    /// ln-spacing of the nodes.
    pub fn log_step(&self) -> f64 {
        (self.r_max / self.r_min).ln() / (self.len() - 1) as f64
    }

    /// v(r) = ln(r / (E_r + m)); dv = (m / rE) dr. The detection-time kernel
    /// phase is linear in this coordinate.
    pub fn v_coordinate(&self, i: usize) -> f64 {
        (self.r[i] / (self.energy(i) + self.mass)).ln()
    }
}

/// Packed (l, m) channel index.
pub fn lm_index(l: u32, m: i32) -> usize {
    (l * l) as usize + (l as i32 + m) as usize
}

/// Inverse of `lm_index`.
pub fn lm_unindex(idx: usize) -> (u32, i32) {
    let l = (idx as f64).sqrt() as u32;
    let m = idx as i32 - (l * l) as i32 - l as i32;
    (l, m)
}

/// Radial-harmonic coefficients ψ_{lm}(r_i).
#[derive(Clone)]
pub struct RadialState {
    pub grid: Arc<RadialGrid>,
    pub l_max: u32,
    /// coeffs[lm_index(l, m)][i] = ψ_{lm}(r_i)
    pub coeffs: Vec<Vec<Complex64>>,
    pub xi: EnergySign,
}

/// Diagnostics of an angular decomposition.
#[derive(Clone, Copy, Debug)]
pub struct DecompositionReport {
    /// Relative L²(dμ) mass not captured by channels l <= l_max.
    pub truncation_error: f64,
    pub norm_sqr: f64,
}

impl RadialState {
    /// Decompose a momentum-space closure by Gauss-Legendre × uniform-φ
    /// angular quadrature at every radial node.
    pub fn from_closure(
        grid: Arc<RadialGrid>,
        xi: EnergySign,
        l_max: u32,
        f: impl Fn([f64; 3]) -> Complex64 + Sync,
    ) -> (Self, DecompositionReport) {
        let n_theta = (2 * l_max as usize + 4).max(12);
        let n_phi = (2 * l_max as usize + 3).max(8);
        let (ct_nodes, ct_weights) = gauss_legendre(n_theta);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let n_ch = ((l_max + 1) * (l_max + 1)) as usize;

        // per radial node: channel overlaps and the full angular L² mass
        let per_node: Vec<(Vec<Complex64>, f64)> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let r = grid.r[i];
                let mut ch = vec![Complex64::new(0.0, 0.0); n_ch];
                let mut l2 = 0.0;
                for (q, (&ct, &wt)) in ct_nodes.iter().zip(&ct_weights).enumerate() {
                    let _ = q;
                    let theta = ct.acos();
                    let st = theta.sin();
                    for iphi in 0..n_phi {
                        let phi = iphi as f64 * dphi;
                        let p = [r * st * phi.cos(), r * st * phi.sin(), r * ct];
                        let val = f(p);
                        let w = wt * dphi;
                        l2 += w * val.norm_sqr();
                        for l in 0..=l_max {
                            for m in -(l as i32)..=(l as i32) {
                                let y = spherical_harmonic(l, m, theta, phi).unwrap();
                                ch[lm_index(l, m)] += y.conj() * val * w;
                            }
                        }
                    }
                }
                (ch, l2)
            })
            .collect();

        let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; n_ch];
        for (i, (ch, _)) in per_node.iter().enumerate() {
            for (c, v) in ch.iter().enumerate() {
                coeffs[c][i] = *v;
            }
        }
        let state = RadialState { grid: grid.clone(), l_max, coeffs, xi };

        let captured = state.norm_sqr();
        let total: f64 = pairwise_sum(
            &(0..grid.len())
                .map(|i| {
                    grid.w[i] * grid.mass / grid.energy(i) * grid.r[i] * grid.r[i]
                        * per_node[i].1
                })
                .collect::<Vec<_>>(),
        );
        let report = DecompositionReport {
            truncation_error: ((total - captured).max(0.0) / total.max(1e-300)).sqrt(),
            norm_sqr: captured,
        };
        (state, report)
    }

    /// ‖ψ‖² = Σ_{lm} ∫ (m/E) r² |ψ_{lm}|² dr.
    pub fn norm_sqr(&self) -> f64 {
        let g = &self.grid;
        let vals: Vec<f64> = self
            .coeffs
            .iter()
            .flat_map(|c| {
                (0..g.len()).map(move |i| {
                    g.w[i] * g.mass / g.energy(i) * g.r[i] * g.r[i] * c[i].norm_sqr()
                })
            })
            .collect();
        pairwise_sum(&vals)
    }

    /// Channel overlap ⟨ρ(r) Y^{lm} | ψ⟩ against a radial profile ρ.
    pub fn channel_overlap(&self, l: u32, m: i32, rho: impl Fn(usize) -> Complex64) -> Complex64 {
        let g = &self.grid;
        let c = &self.coeffs[lm_index(l, m)];
        let vals: Vec<Complex64> = (0..g.len())
            .map(|i| {
                rho(i).conj() * c[i] * (g.w[i] * g.mass / g.energy(i) * g.r[i] * g.r[i])
            })
            .collect();
        pairwise_sum_c(&vals)
    }

    /// L² mass per l-channel, summed over m.
    pub fn channel_mass(&self, l: u32) -> f64 {
        let g = &self.grid;
        let mut acc = 0.0;
        for m in -(l as i32)..=(l as i32) {
            let c = &self.coeffs[lm_index(l, m)];
            acc += pairwise_sum(
                &(0..g.len())
                    .map(|i| g.w[i] * g.mass / g.energy(i) * g.r[i] * g.r[i] * c[i].norm_sqr())
                    .collect::<Vec<_>>(),
            );
        }
        acc
    }
}

/// Decompose a grid state into radial harmonics.
///
/// Uses the state's analytic source when available (exact), otherwise cubic
/// interpolation of the grid samples. Fails when the reported truncation
/// error exceeds `max_truncation`.
pub fn to_radial(
    state: &MomentumState,
    grid: Arc<RadialGrid>,
    l_max: u32,
    max_truncation: f64,
) -> Result<(RadialState, DecompositionReport)> {
    if (grid.mass - state.grid.mass).abs() > 1e-12 {
        return Err(Error::IncompatibleState("radial grid mass differs from state".into()));
    }
    let xi = state.xi;
    let (rad, report) = RadialState::from_closure(grid, xi, l_max, |p| state.eval(p));
    if report.truncation_error > max_truncation {
        return Err(Error::Truncation(format!(
            "radial reconstruction error {:.3e} exceeds bound {max_truncation:.3e}",
            report.truncation_error
        )));
    }
    Ok((rad, report))
}

/// Convenience radial grid matched to a Cartesian grid's momentum range.
pub fn radial_grid_for(cart: &CartesianGrid, n: usize) -> Result<RadialGrid> {
    let pi_max = cart.axes.iter().map(|a| a.pi_max).fold(f64::MAX, f64::min);
    RadialGrid::new(n, 1e-3 * cart.mass, pi_max, cart.mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::EnergySign::Positive;

    fn rgrid(n: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(n, 1e-3, 12.0, 1.0).unwrap())
    }

    #[test]
    fn log_trapezoid_integrates_decaying_function() {
        // ∫_0^∞ r² e^{-r²} dr = √π/4; r_min small enough that the truncated
        // head ∫_0^{r_min} ~ r_min³/3 sits below the tolerance
        let g = Arc::new(RadialGrid::new(512, 1e-4, 12.0, 1.0).unwrap());
        let vals: Vec<f64> = (0..g.len())
            .map(|i| g.w[i] * g.r[i] * g.r[i] * (-g.r[i] * g.r[i]).exp())
            .collect();
        let got = pairwise_sum(&vals);
        let expect = std::f64::consts::PI.sqrt() / 4.0;
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn radially_symmetric_state_populates_only_s_channel() {
        let g = rgrid(256);
        let (rad, report) = RadialState::from_closure(g, Positive, 4, |p| {
            let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            Complex64::new((-(r2 - 2.0 * r2.sqrt() + 1.0)).exp(), 0.0) // e^{-(r-1)²}
        });
        assert!(report.truncation_error < 1e-10);
        let total = rad.norm_sqr();
        for l in 1..=4 {
            assert!(rad.channel_mass(l) / total < 1e-16, "l = {l}");
        }
        assert!(rad.channel_mass(0) / total > 1.0 - 1e-12);
    }

    #[test]
    fn y10_profile_populates_only_that_channel() {
        let g = rgrid(256);
        let (rad, _) = RadialState::from_closure(g, Positive, 3, |p| {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if r == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let theta = (p[2] / r).acos();
            let y10 = spherical_harmonic(1, 0, theta, 0.0).unwrap();
            y10 * (-(r - 1.5) * (r - 1.5) * 4.0).exp()
        });
        let total = rad.norm_sqr();
        assert!(rad.channel_mass(1) / total > 1.0 - 1e-12);
        for l in [0u32, 2, 3] {
            assert!(rad.channel_mass(l) / total < 1e-14, "l = {l}");
        }
        // and within l=1, only m=0
        let m1 = rad.coeffs[lm_index(1, 1)].iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(m1 < 1e-14);
    }

    #[test]
    fn norm_matches_cartesian_quadrature() {
        let cart = Arc::new(CartesianGrid::cubic(48, 8.0, 1.0, false).unwrap());
        let s = MomentumState::gaussian(cart.clone(), Positive, [0.4, -0.3, 0.6], 0.7).unwrap();
        let rg = Arc::new(radial_grid_for(&cart, 1024).unwrap());
        let (rad, report) = to_radial(&s, rg, 10, 1e-4).unwrap();
        let cart_norm = s.norm_sqr();
        let rad_norm = rad.norm_sqr();
        assert!(
            (cart_norm - rad_norm).abs() < 1e-6,
            "cartesian {cart_norm} vs radial {rad_norm} (trunc {:.3e})",
            report.truncation_error
        );
    }

    #[test]
    fn truncation_bound_enforced() {
        let cart = Arc::new(CartesianGrid::cubic(32, 8.0, 1.0, false).unwrap());
        // strongly non-radial state: l_max = 0 cannot capture it
        let s = MomentumState::gaussian(cart, Positive, [1.5, 0.0, 0.0], 0.5).unwrap();
        let rg = Arc::new(RadialGrid::new(256, 1e-3, 8.0, 1.0).unwrap());
        assert!(matches!(
            to_radial(&s, rg, 0, 1e-4),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn lm_index_roundtrip() {
        for l in 0..6u32 {
            for m in -(l as i32)..=(l as i32) {
                let (l2, m2) = lm_unindex(lm_index(l, m));
                assert_eq!((l, m), (l2, m2));
            }
        }
    }
}
