//! The Newton-Wigner position-space transform and its inverse.
//!
//! The amplitude at observer time t and position x is
//!     (2π)^{-3/2} ∫ d³π √(m/E_π) e^{-iξE_π t} e^{iπ·x} ψ(π),
//! i.e. the overlap of ψ with the generalized eigenfunction
//! (2π)^{-3/2} √(E/m) e^{i(ξEt - π·x)} under the invariant measure; the
//! measure and kernel weights combine into the single √(m/E) factor.

use crate::error::{Error, Result};
use crate::fft::fft3;
use crate::grid::CartesianGrid;
use crate::state::MomentumState;
use crate::util::{pairwise_sum, pairwise_sum_c};
use crate::EnergySign;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

/// Amplitudes on the position-space grid dual to a momentum grid.
#[derive(Clone)]
pub struct PositionField {
    pub grid: Arc<CartesianGrid>,
    pub amp: Vec<Complex64>,
    pub t: f64,
    pub xi: EnergySign,
}

impl PositionField {
    pub fn dual_node(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.grid.unindex(idx);
        [
            self.grid.axes[0].dual_node(i),
            self.grid.axes[1].dual_node(j),
            self.grid.axes[2].dual_node(k),
        ]
    }

    /// Σ_x |amp|² Δ³x.
    pub fn total_probability(&self) -> f64 {
        let dv = self.grid.dual_cell_volume();
        let vals: Vec<f64> = self.amp.par_iter().map(|a| a.norm_sqr() * dv).collect();
        pairwise_sum(&vals)
    }

    /// First moment of the position density along axis j.
    pub fn centroid(&self, j: usize) -> f64 {
        let dv = self.grid.dual_cell_volume();
        let vals: Vec<f64> = (0..self.amp.len())
            .into_par_iter()
            .map(|idx| self.amp[idx].norm_sqr() * dv * self.dual_node(idx)[j])
            .collect();
        pairwise_sum(&vals) / self.total_probability()
    }
}

/// Per-axis post-FFT phase A_k = exp(-i 2π (k - n/2)(n/2 - δ) / n).
fn axis_phase(n: usize, offset_half: bool, k: usize) -> Complex64 {
    let delta = if offset_half { 0.5 } else { 0.0 };
    let angle = -2.0 * std::f64::consts::PI * (k as f64 - n as f64 / 2.0)
        * (n as f64 / 2.0 - delta)
        / n as f64;
    Complex64::from_polar(1.0, angle)
}

fn alternating_sign(i: usize, j: usize, k: usize) -> f64 {
    if (i + j + k) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Newton-Wigner transform of a state: amplitudes at every dual-grid
/// position, evaluated with one 3D FFT.
pub fn nw_transform(state: &MomentumState, t: f64) -> PositionField {
    let g = &state.grid;
    let dims = g.dims();
    let xi_f = state.xi.factor();
    let mut data: Vec<Complex64> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let p = g.node(idx);
            let e = g.energy_at(p);
            let (i, j, k) = g.unindex(idx);
            let w = (g.mass / e).sqrt() * alternating_sign(i, j, k);
            state.amp[idx] * Complex64::from_polar(w, -xi_f * e * t)
        })
        .collect();
    fft3(&mut data, dims, true);
    let scale = g.cell_volume() / (2.0 * std::f64::consts::PI).powf(1.5);
    data.par_iter_mut().enumerate().for_each(|(idx, v)| {
        let (i, j, k) = g.unindex(idx);
        let phase = axis_phase(dims[0], g.axes[0].offset_half, i)
            * axis_phase(dims[1], g.axes[1].offset_half, j)
            * axis_phase(dims[2], g.axes[2].offset_half, k);
        *v *= phase * scale;
    });
    PositionField { grid: state.grid.clone(), amp: data, t, xi: state.xi }
}

/// Newton-Wigner amplitude at a single (not necessarily grid-aligned)
/// position, by direct quadrature.
pub fn nw_amplitude(state: &MomentumState, x: [f64; 3], t: f64) -> Complex64 {
    let g = &state.grid;
    let xi_f = state.xi.factor();
    let vals: Vec<Complex64> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let p = g.node(idx);
            let e = g.energy_at(p);
            let phase = -xi_f * e * t + p[0] * x[0] + p[1] * x[1] + p[2] * x[2];
            state.amp[idx] * Complex64::from_polar((g.mass / e).sqrt(), phase)
        })
        .collect();
    pairwise_sum_c(&vals) * g.cell_volume() / (2.0 * std::f64::consts::PI).powf(1.5)
}

/// Build a momentum state from a position-space profile φ:
///     ψ(π) = (2π)^{-3/2} √(E/m) e^{iξEt} ∫ d³x e^{-iπ·x} φ(x).
///
/// Fails if the resulting spectrum leaves more than 1e-6 of its mass within
/// three cells of the grid edge (aliasing).
pub fn nw_state_from_profile(
    grid: Arc<CartesianGrid>,
    profile: impl Fn([f64; 3]) -> Complex64 + Sync,
    t: f64,
    xi: EnergySign,
) -> Result<MomentumState> {
    let dims = grid.dims();
    let mut data: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = grid.unindex(idx);
            let x = [
                grid.axes[0].dual_node(i),
                grid.axes[1].dual_node(j),
                grid.axes[2].dual_node(k),
            ];
            let phase = (axis_phase(dims[0], grid.axes[0].offset_half, i)
                * axis_phase(dims[1], grid.axes[1].offset_half, j)
                * axis_phase(dims[2], grid.axes[2].offset_half, k))
            .conj();
            profile(x) * phase
        })
        .collect();
    fft3(&mut data, dims, false);
    let xi_f = xi.factor();
    let scale = grid.dual_cell_volume() / (2.0 * std::f64::consts::PI).powf(1.5);
    let amp: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = grid.unindex(idx);
            let p = grid.node(idx);
            let e = grid.energy_at(p);
            let w = (e / grid.mass).sqrt() * alternating_sign(i, j, k) * scale;
            data[idx] * Complex64::from_polar(w, xi_f * e * t)
        })
        .collect();
    let state = MomentumState::from_amplitudes(grid, xi, amp)?;
    let total = state.norm_sqr();
    let shell = state.boundary_shell_mass(3);
    if shell > 1e-6 * total {
        return Err(Error::Resolution(format!(
            "profile spectrum reaches the grid edge: shell mass {shell:.3e} of {total:.3e}"
        )));
    }
    Ok(state)
}
