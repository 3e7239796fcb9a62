//! Cartesian momentum grids with the invariant measure m d³π / E_π.

use crate::error::{Error, Result};

/// One grid axis: n points covering [-pi_max, pi_max) with spacing
/// h = 2 pi_max / n; `offset_half` shifts all nodes by h/2, which keeps the
/// grid symmetric and excludes the zero plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub n: usize,
    pub pi_max: f64,
    pub offset_half: bool,
}

impl Axis {
    pub fn spacing(&self) -> f64 {
        2.0 * self.pi_max / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        let off = if self.offset_half { 0.5 } else { 0.0 };
        -self.pi_max + (i as f64 + off) * self.spacing()
    }

    /// Conjugate (position-space) spacing 2π / (n h) = π / pi_max.
    pub fn dual_spacing(&self) -> f64 {
        std::f64::consts::PI / self.pi_max
    }

    /// Conjugate node x_k = (k - n/2) Δx.
    pub fn dual_node(&self, k: usize) -> f64 {
        (k as f64 - self.n as f64 / 2.0) * self.dual_spacing()
    }
}

/// Three-axis momentum grid. Axis order is (π¹, π², π³) with row-major
/// storage, axis 0 slowest. The `kijowski_safe` flag half-offsets the π³
/// axis so the π³ = 0 plane carries no node.
#[derive(Clone, Debug, PartialEq)]
pub struct CartesianGrid {
    pub axes: [Axis; 3],
    pub mass: f64,
    pub kijowski_safe: bool,
}

impl CartesianGrid {
    pub fn new(n: [usize; 3], pi_max: [f64; 3], mass: f64, kijowski_safe: bool) -> Result<Self> {
        for a in 0..3 {
            if n[a] < 8 {
                return Err(Error::InvalidInput(format!(
                    "grid axis {a} needs at least 8 points, got {}",
                    n[a]
                )));
            }
            if !(pi_max[a] > 0.0) {
                return Err(Error::InvalidInput(format!("pi_max[{a}] must be positive")));
            }
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
        }
        let mk_axis = |a: usize| Axis {
            n: n[a],
            pi_max: pi_max[a],
            offset_half: kijowski_safe && a == 2,
        };
        Ok(CartesianGrid {
            axes: [mk_axis(0), mk_axis(1), mk_axis(2)],
            mass,
            kijowski_safe,
        })
    }

    /// Isotropic convenience constructor.
    pub fn cubic(n: usize, pi_max: f64, mass: f64, kijowski_safe: bool) -> Result<Self> {
        Self::new([n; 3], [pi_max; 3], mass, kijowski_safe)
    }

    /// Grid with all three axes half-offset: no node sits on any coordinate
    /// plane, and each axis node set is exactly symmetric under negation.
    /// Azimuthal quadratures then cancel m_z channels to machine precision.
    pub fn offset_cubic(n: usize, pi_max: f64, mass: f64) -> Result<Self> {
        let mut g = Self::cubic(n, pi_max, mass, true)?;
        g.axes[0].offset_half = true;
        g.axes[1].offset_half = true;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.axes[0].n * self.axes[1].n * self.axes[2].n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.axes[0].n, self.axes[1].n, self.axes[2].n]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.axes[1].n + j) * self.axes[2].n + k
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let n2 = self.axes[1].n;
        let n3 = self.axes[2].n;
        let k = idx % n3;
        let j = (idx / n3) % n2;
        let i = idx / (n2 * n3);
        (i, j, k)
    }

    #[inline]
    pub fn node(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unindex(idx);
        [self.axes[0].node(i), self.axes[1].node(j), self.axes[2].node(k)]
    }

    #[inline]
    pub fn energy_at(&self, p: [f64; 3]) -> f64 {
        (self.mass * self.mass + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
    }

    /// Cell volume h₁h₂h₃.
    pub fn cell_volume(&self) -> f64 {
        self.axes[0].spacing() * self.axes[1].spacing() * self.axes[2].spacing()
    }

    /// Invariant-measure weight at a node: (m / E_π) h₁h₂h₃.
    #[inline]
    pub fn measure_weight(&self, p: [f64; 3]) -> f64 {
        self.mass / self.energy_at(p) * self.cell_volume()
    }

    /// Position-space cell volume of the dual grid.
    pub fn dual_cell_volume(&self) -> f64 {
        self.axes[0].dual_spacing() * self.axes[1].dual_spacing() * self.axes[2].dual_spacing()
    }

    pub fn same_layout(&self, other: &CartesianGrid) -> bool {
        self.axes == other.axes && self.mass == other.mass
    }
}
