//! Momentum-space single-particle states on Cartesian grids.
//!
//! States are immutable after construction. Norms and inner products use the
//! invariant measure m d³π / E_π; that choice is forced by requiring the
//! Newton-Wigner kernels √(E/m) e^{i(ξEt - π·x)} / (2π)^{3/2} to be
//! orthonormal (see the measure test in `nwmap`).

use crate::error::{Error, Result};
use crate::grid::CartesianGrid;
use crate::util::{pairwise_sum, pairwise_sum_c};
use crate::EnergySign;
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

/// Closure evaluating the state at an arbitrary momentum; retained by
/// constructors that know it so downstream resamplings (radial
/// decomposition, s-chart) stay exact.
pub type MomentumFn = Arc<dyn Fn([f64; 3]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub struct MomentumState {
    pub grid: Arc<CartesianGrid>,
    pub amp: Vec<Complex64>,
    pub xi: EnergySign,
    /// Analytic profile, when the state was built from one.
    pub source: Option<MomentumFn>,
}

impl MomentumState {
    /// Sample a closure on the grid. The closure is retained as the state's
    /// analytic source.
    pub fn from_fn(
        grid: Arc<CartesianGrid>,
        xi: EnergySign,
        f: impl Fn([f64; 3]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        let f: MomentumFn = Arc::new(f);
        let amp: Vec<Complex64> =
            (0..grid.len()).into_par_iter().map(|idx| f(grid.node(idx))).collect();
        MomentumState { grid, amp, xi, source: Some(f) }
    }

    pub fn from_amplitudes(
        grid: Arc<CartesianGrid>,
        xi: EnergySign,
        amp: Vec<Complex64>,
    ) -> Result<Self> {
        if amp.len() != grid.len() {
            return Err(Error::IncompatibleState(format!(
                "amplitude count {} does not match grid size {}",
                amp.len(),
                grid.len()
            )));
        }
        if amp.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NumericalDomain("non-finite amplitude".into()));
        }
        Ok(MomentumState { grid, amp, xi, source: None })
    }

    /// Normalized Gaussian exp(-‖π - π₀‖² / 4σ²) under the invariant measure.
    ///
    /// If the 5σ support sphere is clipped by the grid, the state is rejected
    /// whenever more than 1e-8 of its mass sits in the outermost cell layer.
    pub fn gaussian(
        grid: Arc<CartesianGrid>,
        xi: EnergySign,
        center: [f64; 3],
        sigma: f64,
    ) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
        }
        let clipped = (0..3)
            .any(|a| center[a].abs() + 5.0 * sigma >= grid.axes[a].pi_max);
        let mut state = Self::from_fn(grid, xi, move |p| {
            let d2 = (p[0] - center[0]).powi(2)
                + (p[1] - center[1]).powi(2)
                + (p[2] - center[2]).powi(2);
            Complex64::new((-d2 / (4.0 * sigma * sigma)).exp(), 0.0)
        });
        state.normalize()?;
        if clipped {
            let tail = state.boundary_shell_mass(1);
            if tail > 1e-8 {
                return Err(Error::Resolution(format!(
                    "gaussian support clipped by grid: boundary mass {tail:.3e}"
                )));
            }
        }
        Ok(state)
    }

    /// ⟨φ|ψ⟩ = ∫ dμ(π) φ̄ ψ.
    pub fn inner_product(&self, other: &MomentumState) -> Result<Complex64> {
        if !self.grid.same_layout(&other.grid) {
            return Err(Error::IncompatibleState("grids differ".into()));
        }
        if self.xi != other.xi {
            return Err(Error::IncompatibleState("energy signs differ".into()));
        }
        let g = &self.grid;
        let vals: Vec<Complex64> = (0..g.len())
            .into_par_iter()
            .map(|idx| {
                let w = g.measure_weight(g.node(idx));
                self.amp[idx].conj() * other.amp[idx] * w
            })
            .collect();
        Ok(pairwise_sum_c(&vals))
    }

    pub fn norm_sqr(&self) -> f64 {
        let g = &self.grid;
        let vals: Vec<f64> = (0..g.len())
            .into_par_iter()
            .map(|idx| g.measure_weight(g.node(idx)) * self.amp[idx].norm_sqr())
            .collect();
        pairwise_sum(&vals)
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= 1e-6
    }

    /// Scale to unit norm; the analytic source, if any, is scaled alongside.
    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::NumericalDomain(format!("cannot normalize state, norm² = {n2}")));
        }
        let s = 1.0 / n2.sqrt();
        self.amp.par_iter_mut().for_each(|a| *a *= s);
        if let Some(src) = self.source.take() {
            self.source = Some(Arc::new(move |p| src(p) * s));
        }
        Ok(())
    }

    /// Expectation ∫ dμ |ψ|² f(π) (no normalization applied).
    pub fn density_expectation(&self, f: impl Fn([f64; 3]) -> f64 + Sync) -> f64 {
        let g = &self.grid;
        let vals: Vec<f64> = (0..g.len())
            .into_par_iter()
            .map(|idx| {
                let p = g.node(idx);
                g.measure_weight(p) * self.amp[idx].norm_sqr() * f(p)
            })
            .collect();
        pairwise_sum(&vals)
    }

    /// Probability mass carried by the `layers` outermost cells of the grid.
    pub fn boundary_shell_mass(&self, layers: usize) -> f64 {
        let g = &self.grid;
        let dims = g.dims();
        let vals: Vec<f64> = (0..g.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = g.unindex(idx);
                let on_edge = i < layers
                    || j < layers
                    || k < layers
                    || i >= dims[0] - layers
                    || j >= dims[1] - layers
                    || k >= dims[2] - layers;
                if on_edge {
                    g.measure_weight(g.node(idx)) * self.amp[idx].norm_sqr()
                } else {
                    0.0
                }
            })
            .collect();
        pairwise_sum(&vals)
    }

    /// Probability mass with |π³| < width (the Kijowski singular strip).
    pub fn mass_near_pi3_zero(&self, width: f64) -> f64 {
        self.density_expectation(|p| if p[2].abs() < width { 1.0 } else { 0.0 })
    }

    /// Evaluate at an arbitrary momentum: analytic source when available,
    /// separable cubic (Catmull-Rom) interpolation of the samples otherwise.
    pub fn eval(&self, p: [f64; 3]) -> Complex64 {
        if let Some(src) = &self.source {
            return src(p);
        }
        self.interpolate(p)
    }

    fn interpolate(&self, p: [f64; 3]) -> Complex64 {
        let g = &self.grid;
        // per-axis node index and fraction
        let mut base = [0isize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let ax = &g.axes[a];
            let off = if ax.offset_half { 0.5 } else { 0.0 };
            let u = (p[a] + ax.pi_max) / ax.spacing() - off;
            let i = u.floor();
            base[a] = i as isize;
            frac[a] = u - i;
        }
        let fetch = |i: isize, j: isize, k: isize| -> Complex64 {
            let d = g.dims();
            if i < 0 || j < 0 || k < 0 || i >= d[0] as isize || j >= d[1] as isize
                || k >= d[2] as isize
            {
                Complex64::new(0.0, 0.0)
            } else {
                self.amp[g.index(i as usize, j as usize, k as usize)]
            }
        };
        let cr = |f: [Complex64; 4], t: f64| -> Complex64 {
            // Catmull-Rom cubic through 4 consecutive samples
            let t2 = t * t;
            let t3 = t2 * t;
            0.5 * ((2.0 * f[1])
                + (-f[0] + f[2]) * t
                + (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * t2
                + (-f[0] + 3.0 * f[1] - 3.0 * f[2] + f[3]) * t3)
        };
        let mut plane = [Complex64::new(0.0, 0.0); 4];
        for (di, pl) in plane.iter_mut().enumerate() {
            let i = base[0] - 1 + di as isize;
            let mut row = [Complex64::new(0.0, 0.0); 4];
            for (dj, rw) in row.iter_mut().enumerate() {
                let j = base[1] - 1 + dj as isize;
                let vals = [
                    fetch(i, j, base[2] - 1),
                    fetch(i, j, base[2]),
                    fetch(i, j, base[2] + 1),
                    fetch(i, j, base[2] + 2),
                ];
                *rw = cr(vals, frac[2]);
            }
            *pl = cr(row, frac[1]);
        }
        cr(plane, frac[0])
    }
}

// --- flat binary save/load with JSON descriptor sidecar ---

const STATE_FORMAT_VERSION: u32 = 1;

#[derive(serde::Serialize, serde::Deserialize)]
struct StateDescriptor {
    version: u32,
    xi: String,
    n: [usize; 3],
    pi_max: [f64; 3],
    mass: f64,
    kijowski_safe: bool,
    norm_sqr: f64,
    payload_bytes: usize,
}

impl MomentumState {
    /// Flat binary layout: little-endian header
    /// [u32 version][u32 xi][u32 n1][u32 n2][u32 n3][u32 safe]
    /// [f64 pi_max1][f64 pi_max2][f64 pi_max3][f64 mass],
    /// then n1·n2·n3 interleaved (re, im) f64 pairs in row-major axis order.
    /// A `.json` descriptor sidecar is written next to the payload.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf: Vec<u8> = Vec::with_capacity(40 + 16 * self.amp.len());
        buf.extend_from_slice(&STATE_FORMAT_VERSION.to_le_bytes());
        let xi_tag: u32 = match self.xi {
            EnergySign::Positive => 0,
            EnergySign::Negative => 1,
        };
        buf.extend_from_slice(&xi_tag.to_le_bytes());
        for a in 0..3 {
            buf.extend_from_slice(&(self.grid.axes[a].n as u32).to_le_bytes());
        }
        buf.extend_from_slice(&(self.grid.kijowski_safe as u32).to_le_bytes());
        for a in 0..3 {
            buf.extend_from_slice(&self.grid.axes[a].pi_max.to_le_bytes());
        }
        buf.extend_from_slice(&self.grid.mass.to_le_bytes());
        for a in &self.amp {
            buf.extend_from_slice(&a.re.to_le_bytes());
            buf.extend_from_slice(&a.im.to_le_bytes());
        }
        crate::report::write_atomic(path, &buf)?;

        let desc = StateDescriptor {
            version: STATE_FORMAT_VERSION,
            xi: self.xi.to_string(),
            n: self.grid.dims(),
            pi_max: [
                self.grid.axes[0].pi_max,
                self.grid.axes[1].pi_max,
                self.grid.axes[2].pi_max,
            ],
            mass: self.grid.mass,
            kijowski_safe: self.grid.kijowski_safe,
            norm_sqr: self.norm_sqr(),
            payload_bytes: buf.len(),
        };
        let json = serde_json::to_vec_pretty(&desc)
            .map_err(|e| Error::Config(format!("descriptor encode: {e}")))?;
        crate::report::write_atomic(&path.with_extension("json"), &json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        let mut off = 0usize;
        let take_u32 = |buf: &[u8], off: &mut usize| -> Result<u32> {
            if *off + 4 > buf.len() {
                return Err(Error::Config("truncated state file".into()));
            }
            let v = u32::from_le_bytes(buf[*off..*off + 4].try_into().unwrap());
            *off += 4;
            Ok(v)
        };
        let take_f64 = |buf: &[u8], off: &mut usize| -> Result<f64> {
            if *off + 8 > buf.len() {
                return Err(Error::Config("truncated state file".into()));
            }
            let v = f64::from_le_bytes(buf[*off..*off + 8].try_into().unwrap());
            *off += 8;
            Ok(v)
        };
        let version = take_u32(&buf, &mut off)?;
        if version != STATE_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported state format version {version}")));
        }
        let xi = match take_u32(&buf, &mut off)? {
            0 => EnergySign::Positive,
            1 => EnergySign::Negative,
            v => return Err(Error::Config(format!("bad energy-sign tag {v}"))),
        };
        let n = [
            take_u32(&buf, &mut off)? as usize,
            take_u32(&buf, &mut off)? as usize,
            take_u32(&buf, &mut off)? as usize,
        ];
        let safe = take_u32(&buf, &mut off)? != 0;
        let pi_max = [
            take_f64(&buf, &mut off)?,
            take_f64(&buf, &mut off)?,
            take_f64(&buf, &mut off)?,
        ];
        let mass = take_f64(&buf, &mut off)?;
        let grid = Arc::new(CartesianGrid::new(n, pi_max, mass, safe)?);
        let count = grid.len();
        if buf.len() - off != 16 * count {
            return Err(Error::Config(format!(
                "payload size {} does not match grid ({} nodes)",
                buf.len() - off,
                count
            )));
        }
        let mut amp = Vec::with_capacity(count);
        for idx in 0..count {
            let re = f64::from_le_bytes(buf[off + 16 * idx..off + 16 * idx + 8].try_into().unwrap());
            let im =
                f64::from_le_bytes(buf[off + 16 * idx + 8..off + 16 * idx + 16].try_into().unwrap());
            amp.push(Complex64::new(re, im));
        }
        Self::from_amplitudes(grid, xi, amp)
    }
}

/// Write `value` (a descriptor of anything serializable) as pretty JSON.
pub fn write_json_sidecar<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Config(format!("json encode: {e}")))?;
    crate::report::write_atomic(path, &json)
}
