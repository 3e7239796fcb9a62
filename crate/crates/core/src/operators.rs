//! First-order differential operators in momentum space.
//!
//! Everything here has the shape c(π) + Σ_k a^k(π) ∂/∂π_k acting on grid
//! states. The proper-time four-position acting rules, the Newton-Wigner
//! operator and the fixed-plane detection operators (π-chart) are
//! constructors; addition, scaling, symmetric products and commutators stay
//! inside the class.
//!
//! Derivatives default to 8th-order central finite differences with zero
//! extension beyond the grid (amplitude tails are not periodic); a spectral
//! switch is available for band-limited states where 1e-8-level accuracy is
//! needed.

use crate::error::{Error, Result};
use crate::fft::fft_axis;
use crate::grid::CartesianGrid;
use crate::state::MomentumState;
use crate::util::pairwise_sum;
use crate::EnergySign;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

pub type CoeffFn = Arc<dyn Fn([f64; 3]) -> Complex64 + Send + Sync>;

/// Momentum chart an operator acts in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    /// Cartesian (π¹, π², π³) with the invariant measure.
    PiCartesian,
    /// Kijowski chart (π¹, π², s), s = sign(π³) E_π, flat measure.
    SChart,
}

impl std::fmt::Display for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Chart::PiCartesian => write!(f, "pi-cartesian"),
            Chart::SChart => write!(f, "s-chart"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DerivScheme {
    #[default]
    Fd8,
    Spectral,
}

/// Ordering convention for products of a multiplicative field with a
/// first-order operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductOrdering {
    /// Half-anticommutator ½(gD + Dg); the convention that reproduces the
    /// instantaneous-restriction operator from the proper-time ones.
    Symmetric,
    /// Plain left product gD (negative control).
    Left,
}

#[derive(Clone)]
pub struct FirstOrderOperator {
    pub label: String,
    pub xi: EnergySign,
    pub chart: Chart,
    /// Multiplicative coefficient c(π).
    c: CoeffFn,
    /// Analytic gradient of c, if known (used by products and commutators).
    c_grad: [Option<CoeffFn>; 3],
    /// Derivative coefficients a^k(π); None means identically zero.
    a: [Option<CoeffFn>; 3],
}

/// 4th-order central difference of a coefficient closure.
fn numeric_grad(f: &CoeffFn, p: [f64; 3], axis: usize) -> Complex64 {
    let h = 1e-3 * (1.0 + p[axis].abs());
    let at = |d: f64| {
        let mut q = p;
        q[axis] += d;
        f(q)
    };
    (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
}

impl FirstOrderOperator {
    pub fn new(
        label: impl Into<String>,
        xi: EnergySign,
        chart: Chart,
        c: CoeffFn,
        a: [Option<CoeffFn>; 3],
    ) -> Self {
        FirstOrderOperator {
            label: label.into(),
            xi,
            chart,
            c,
            c_grad: [None, None, None],
            a,
        }
    }

    pub fn with_c_grad(mut self, grad: [CoeffFn; 3]) -> Self {
        let [g0, g1, g2] = grad;
        self.c_grad = [Some(g0), Some(g1), Some(g2)];
        self
    }

    pub fn is_multiplicative(&self) -> bool {
        self.a.iter().all(|x| x.is_none())
    }

    pub fn coefficient(&self, p: [f64; 3]) -> Complex64 {
        (self.c)(p)
    }

    pub fn derivative_coefficient(&self, k: usize, p: [f64; 3]) -> Complex64 {
        self.a[k].as_ref().map_or(Complex64::new(0.0, 0.0), |f| f(p))
    }

    /// Whether the derivative coefficient along axis k is present.
    pub fn derivative_coefficient_present(&self, k: usize) -> bool {
        self.a[k].is_some()
    }

    fn c_grad_at(&self, p: [f64; 3], axis: usize) -> Complex64 {
        match &self.c_grad[axis] {
            Some(g) => g(p),
            None => numeric_grad(&self.c, p, axis),
        }
    }

    /// Identity on the fixed-ξ subspace.
    pub fn identity(xi: EnergySign, chart: Chart) -> Self {
        Self::new("I", xi, chart, Arc::new(|_| Complex64::new(1.0, 0.0)), [None, None, None])
    }

    /// Purely multiplicative operator.
    pub fn multiplicative(
        label: impl Into<String>,
        xi: EnergySign,
        chart: Chart,
        f: impl Fn([f64; 3]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(label, xi, chart, Arc::new(f), [None, None, None])
    }

    /// Momentum component Π^μ: spatial μ are plain multiplications, μ = 0 is
    /// ξ E_π on the fixed-sign subspace.
    pub fn momentum(mu: usize, xi: EnergySign, mass: f64) -> Self {
        let xi_f = xi.factor();
        match mu {
            0 => Self::multiplicative("Pi0", xi, Chart::PiCartesian, move |p| {
                Complex64::new(xi_f * energy(mass, p), 0.0)
            })
            .with_c_grad([
                Arc::new(move |p| Complex64::new(xi_f * p[0] / energy(mass, p), 0.0)),
                Arc::new(move |p| Complex64::new(xi_f * p[1] / energy(mass, p), 0.0)),
                Arc::new(move |p| Complex64::new(xi_f * p[2] / energy(mass, p), 0.0)),
            ]),
            1..=3 => {
                let j = mu - 1;
                Self::multiplicative(format!("Pi{mu}"), xi, Chart::PiCartesian, move |p| {
                    Complex64::new(p[j], 0.0)
                })
                .with_c_grad([
                    Arc::new(move |_| Complex64::new(if j == 0 { 1.0 } else { 0.0 }, 0.0)),
                    Arc::new(move |_| Complex64::new(if j == 1 { 1.0 } else { 0.0 }, 0.0)),
                    Arc::new(move |_| Complex64::new(if j == 2 { 1.0 } else { 0.0 }, 0.0)),
                ])
            }
            _ => panic!("momentum index {mu} out of range"),
        }
    }

    /// Proper-time four-position, time component:
    /// ξ (E/m) [ (i/m)(π·∇ + 3/2) + τ ].
    pub fn q0_phys(tau: f64, xi: EnergySign, mass: f64) -> Self {
        let xi_f = xi.factor();
        let c: CoeffFn = Arc::new(move |p| {
            let e = energy(mass, p);
            Complex64::new(xi_f * e / mass, 0.0) * Complex64::new(tau, 1.5 / mass)
        });
        let mk_a = |k: usize| -> Option<CoeffFn> {
            Some(Arc::new(move |p: [f64; 3]| {
                let e = energy(mass, p);
                Complex64::new(0.0, xi_f * e * p[k] / (mass * mass))
            }))
        };
        Self::new(format!("Q0_phys(tau={tau})"), xi, Chart::PiCartesian, c, [mk_a(0), mk_a(1), mk_a(2)])
    }

    /// Proper-time four-position, spatial component j ∈ {0,1,2}:
    /// ξ [ i(∂_j + (π^j/m²) π·∇ + (3/2)(π^j/m²)) + (π^j/m) τ ].
    pub fn q_phys(j: usize, tau: f64, xi: EnergySign, mass: f64) -> Self {
        assert!(j < 3);
        let xi_f = xi.factor();
        let m2 = mass * mass;
        let c: CoeffFn = Arc::new(move |p| {
            Complex64::new(xi_f * p[j] * tau / mass, xi_f * 1.5 * p[j] / m2)
        });
        let mk_a = |k: usize| -> Option<CoeffFn> {
            Some(Arc::new(move |p: [f64; 3]| {
                let kron = if k == j { 1.0 } else { 0.0 };
                Complex64::new(0.0, xi_f * (kron + p[j] * p[k] / m2))
            }))
        };
        Self::new(format!("Q{}_phys(tau={tau})", j + 1), xi, Chart::PiCartesian, c, [
            mk_a(0),
            mk_a(1),
            mk_a(2),
        ])
    }

    /// Newton-Wigner position operator at observer time t:
    /// ξ i (∂_j - π^j/(2E²)) + (π^j/E) t.
    pub fn newton_wigner(j: usize, t: f64, xi: EnergySign, mass: f64) -> Self {
        assert!(j < 3);
        let xi_f = xi.factor();
        let c: CoeffFn = Arc::new(move |p| {
            let e = energy(mass, p);
            Complex64::new(p[j] * t / e, -xi_f * p[j] / (2.0 * e * e))
        });
        let mut a: [Option<CoeffFn>; 3] = [None, None, None];
        a[j] = Some(Arc::new(move |_| Complex64::new(0.0, xi_f)));
        Self::new(format!("X{}_NW(t={t})", j + 1), xi, Chart::PiCartesian, c, a)
    }

    /// Velocity field π^j/E as a multiplicative operator with its analytic
    /// gradient attached.
    pub fn velocity_field(j: usize, xi: EnergySign, mass: f64) -> Self {
        assert!(j < 3);
        let mk_grad = |k: usize| -> CoeffFn {
            Arc::new(move |p: [f64; 3]| {
                let e = energy(mass, p);
                let kron = if k == j { 1.0 } else { 0.0 };
                Complex64::new(kron / e - p[j] * p[k] / (e * e * e), 0.0)
            })
        };
        Self::multiplicative(format!("Pi{}/E", j + 1), xi, Chart::PiCartesian, move |p| {
            Complex64::new(p[j] / energy(mass, p), 0.0)
        })
        .with_c_grad([mk_grad(0), mk_grad(1), mk_grad(2)])
    }

    /// Detection-time operator for the plane Q³ = z in the π-chart:
    /// (E/π³)[ ξ i(-∂_3 + 1/(2π³)) + z ].
    ///
    /// This is the exact pullback of the s-chart form through the chart
    /// weight √(m/|π³|); the same change of variables reproduces the
    /// transverse rule verbatim, the z-slope matches the classical arrival
    /// rate E/p³, and the operator is symmetric on one-sided real packets.
    pub fn kijowski_time_pi(z: f64, xi: EnergySign, mass: f64) -> Self {
        let xi_f = xi.factor();
        let c: CoeffFn = Arc::new(move |p| {
            let e = energy(mass, p);
            Complex64::new(e / p[2], 0.0) * Complex64::new(z, xi_f / (2.0 * p[2]))
        });
        let a3: CoeffFn = Arc::new(move |p| {
            let e = energy(mass, p);
            Complex64::new(0.0, -xi_f * e / p[2])
        });
        Self::new(format!("T_pi(z={z})"), xi, Chart::PiCartesian, c, [None, None, Some(a3)])
    }

    /// Transverse position on the plane Q³ = z in the π-chart, j ∈ {0,1}:
    /// ξ i(∂_j - (π^j/π³)∂_3 + π^j/(2(π³)²)) + (π^j/π³) z.
    pub fn kijowski_transverse_pi(j: usize, z: f64, xi: EnergySign, mass: f64) -> Self {
        assert!(j < 2);
        let _ = mass;
        let xi_f = xi.factor();
        let c: CoeffFn = Arc::new(move |p| {
            Complex64::new(p[j] * z / p[2], xi_f * p[j] / (2.0 * p[2] * p[2]))
        });
        let mut a: [Option<CoeffFn>; 3] = [None, None, None];
        a[j] = Some(Arc::new(move |_| Complex64::new(0.0, xi_f)));
        a[2] = Some(Arc::new(move |p: [f64; 3]| Complex64::new(0.0, -xi_f * p[j] / p[2])));
        Self::new(format!("X{}_pi(z={z})", j + 1), xi, Chart::PiCartesian, c, a)
    }

    /// Restriction of Q⁰ to the instantaneous surface: the scalar t.
    pub fn restricted_q0_instantaneous(t: f64, xi: EnergySign) -> Self {
        Self::identity(xi, Chart::PiCartesian).scale(Complex64::new(t, 0.0))
    }

    /// Restriction of Q³ to the fixed plane Q³ = z: the scalar z.
    pub fn restricted_q3_fixed_plane(z: f64, xi: EnergySign) -> Self {
        Self::identity(xi, Chart::PiCartesian).scale(Complex64::new(z, 0.0))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let c = self.c.clone();
        let scale_opt = |f: &Option<CoeffFn>| -> Option<CoeffFn> {
            f.as_ref().map(|f| {
                let f = f.clone();
                let g: CoeffFn = Arc::new(move |p| f(p) * s);
                g
            })
        };
        FirstOrderOperator {
            label: format!("{}*{s}", self.label),
            xi: self.xi,
            chart: self.chart,
            c: Arc::new(move |p| c(p) * s),
            c_grad: [
                scale_opt(&self.c_grad[0]),
                scale_opt(&self.c_grad[1]),
                scale_opt(&self.c_grad[2]),
            ],
            a: [scale_opt(&self.a[0]), scale_opt(&self.a[1]), scale_opt(&self.a[2])],
        }
    }

    pub fn add(&self, other: &FirstOrderOperator) -> Result<Self> {
        if self.xi != other.xi || self.chart != other.chart {
            return Err(Error::InvalidComposition(format!(
                "cannot add `{}` and `{}`: sign/chart mismatch",
                self.label, other.label
            )));
        }
        let c1 = self.c.clone();
        let c2 = other.c.clone();
        let add_opt = |x: &Option<CoeffFn>, y: &Option<CoeffFn>| -> Option<CoeffFn> {
            match (x, y) {
                (None, None) => None,
                (Some(f), None) | (None, Some(f)) => Some(f.clone()),
                (Some(f), Some(g)) => {
                    let f = f.clone();
                    let g = g.clone();
                    let h: CoeffFn = Arc::new(move |p| f(p) + g(p));
                    Some(h)
                }
            }
        };
        Ok(FirstOrderOperator {
            label: format!("{} + {}", self.label, other.label),
            xi: self.xi,
            chart: self.chart,
            c: Arc::new(move |p| c1(p) + c2(p)),
            c_grad: [
                add_opt(&self.c_grad[0], &other.c_grad[0]),
                add_opt(&self.c_grad[1], &other.c_grad[1]),
                add_opt(&self.c_grad[2], &other.c_grad[2]),
            ],
            a: [
                add_opt(&self.a[0], &other.a[0]),
                add_opt(&self.a[1], &other.a[1]),
                add_opt(&self.a[2], &other.a[2]),
            ],
        })
    }

    /// Apply to a grid state: (Aψ)(π) = c ψ + Σ_k a^k ∂_k ψ.
    pub fn apply(&self, state: &MomentumState, scheme: DerivScheme) -> Result<MomentumState> {
        if self.chart != Chart::PiCartesian {
            return Err(Error::InvalidChart {
                expected: self.chart.to_string(),
                found: Chart::PiCartesian.to_string(),
            });
        }
        if self.xi != state.xi {
            return Err(Error::IncompatibleState(format!(
                "operator `{}` has sign {}, state has {}",
                self.label, self.xi, state.xi
            )));
        }
        let g = &state.grid;
        let mut out: Vec<Complex64> = (0..g.len())
            .into_par_iter()
            .map(|idx| (self.c)(g.node(idx)) * state.amp[idx])
            .collect();
        for k in 0..3 {
            if let Some(ak) = &self.a[k] {
                let d = derivative_axis(&state.amp, g, k, scheme);
                out.par_iter_mut().enumerate().for_each(|(idx, v)| {
                    *v += ak(g.node(idx)) * d[idx];
                });
            }
        }
        MomentumState::from_amplitudes(state.grid.clone(), state.xi, out)
    }

    /// Symmetric-ordered product of a multiplicative field with a first-order
    /// operator: ½(gD + Dg) = gD + ½ Σ_k a_D^k (∂_k g).
    pub fn sym_product(g: &FirstOrderOperator, d: &FirstOrderOperator) -> Result<Self> {
        Self::ordered_product(g, d, ProductOrdering::Symmetric)
    }

    /// Ordered product of a multiplicative field with a first-order operator.
    pub fn ordered_product(
        g: &FirstOrderOperator,
        d: &FirstOrderOperator,
        ordering: ProductOrdering,
    ) -> Result<Self> {
        if !g.is_multiplicative() {
            return Err(Error::InvalidComposition(format!(
                "`{}` is not purely multiplicative",
                g.label
            )));
        }
        if g.xi != d.xi || g.chart != d.chart {
            return Err(Error::InvalidComposition("sign/chart mismatch in product".into()));
        }
        let gc = g.c.clone();
        let dc = d.c.clone();
        let correction: Option<CoeffFn> = match ordering {
            ProductOrdering::Left => None,
            ProductOrdering::Symmetric => {
                let g2 = g.clone();
                let d2 = d.clone();
                Some(Arc::new(move |p: [f64; 3]| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..3 {
                        if d2.a[k].is_some() {
                            acc += d2.derivative_coefficient(k, p) * g2.c_grad_at(p, k);
                        }
                    }
                    0.5 * acc
                }))
            }
        };
        let c: CoeffFn = match correction {
            None => Arc::new(move |p| gc(p) * dc(p)),
            Some(corr) => Arc::new(move |p| gc(p) * dc(p) + corr(p)),
        };
        let gc2 = g.c.clone();
        let mul_opt = |f: &Option<CoeffFn>| -> Option<CoeffFn> {
            f.as_ref().map(|f| {
                let f = f.clone();
                let gc2 = gc2.clone();
                let h: CoeffFn = Arc::new(move |p| gc2(p) * f(p));
                h
            })
        };
        Ok(FirstOrderOperator {
            label: format!("{}:{}", g.label, d.label),
            xi: g.xi,
            chart: g.chart,
            c,
            c_grad: [None, None, None],
            a: [mul_opt(&d.a[0]), mul_opt(&d.a[1]), mul_opt(&d.a[2])],
        })
    }

    /// Commutator [A, B], closed in the first-order class:
    /// scalar Σ_k (a_A^k ∂_k c_B - a_B^k ∂_k c_A),
    /// vector Σ_k (a_A^k ∂_k a_B^j - a_B^k ∂_k a_A^j).
    pub fn commutator(&self, other: &FirstOrderOperator) -> Result<Self> {
        if self.xi != other.xi || self.chart != other.chart {
            return Err(Error::InvalidComposition("sign/chart mismatch in commutator".into()));
        }
        let a_op = self.clone();
        let b_op = other.clone();
        let c: CoeffFn = {
            let a_op = a_op.clone();
            let b_op = b_op.clone();
            Arc::new(move |p: [f64; 3]| {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..3 {
                    if a_op.a[k].is_some() {
                        acc += a_op.derivative_coefficient(k, p) * b_op.c_grad_at(p, k);
                    }
                    if b_op.a[k].is_some() {
                        acc -= b_op.derivative_coefficient(k, p) * a_op.c_grad_at(p, k);
                    }
                }
                acc
            })
        };
        let mk_vec = |j: usize| -> Option<CoeffFn> {
            let a_op = a_op.clone();
            let b_op = b_op.clone();
            if a_op.a.iter().all(|x| x.is_none()) && b_op.a.iter().all(|x| x.is_none()) {
                return None;
            }
            Some(Arc::new(move |p: [f64; 3]| {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..3 {
                    if a_op.a[k].is_some() {
                        if let Some(baj) = &b_op.a[j] {
                            acc += a_op.derivative_coefficient(k, p) * numeric_grad(baj, p, k);
                        }
                    }
                    if b_op.a[k].is_some() {
                        if let Some(aaj) = &a_op.a[j] {
                            acc -= b_op.derivative_coefficient(k, p) * numeric_grad(aaj, p, k);
                        }
                    }
                }
                acc
            }))
        };
        Ok(FirstOrderOperator {
            label: format!("[{}, {}]", self.label, other.label),
            xi: self.xi,
            chart: self.chart,
            c,
            c_grad: [None, None, None],
            a: [mk_vec(0), mk_vec(1), mk_vec(2)],
        })
    }
}

#[inline]
fn energy(mass: f64, p: [f64; 3]) -> f64 {
    (mass * mass + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// 8th-order central first derivative along an axis, zero extension at the
/// boundary; or the spectral derivative when requested.
pub fn derivative_axis(
    amp: &[Complex64],
    grid: &CartesianGrid,
    axis: usize,
    scheme: DerivScheme,
) -> Vec<Complex64> {
    match scheme {
        DerivScheme::Fd8 => fd8_axis(amp, grid, axis),
        DerivScheme::Spectral => spectral_axis(amp, grid, axis),
    }
}

fn fd8_axis(amp: &[Complex64], grid: &CartesianGrid, axis: usize) -> Vec<Complex64> {
    const W: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let dims = grid.dims();
    let n_axis = dims[axis];
    let stride = match axis {
        0 => dims[1] * dims[2],
        1 => dims[2],
        _ => 1,
    };
    let h = grid.axes[axis].spacing();
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let coord = match axis {
                0 => idx / (dims[1] * dims[2]),
                1 => (idx / dims[2]) % dims[1],
                _ => idx % dims[2],
            };
            let mut acc = Complex64::new(0.0, 0.0);
            for (s, &w) in W.iter().enumerate() {
                let s = s + 1;
                let plus = if coord + s < n_axis {
                    amp[idx + s * stride]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let minus = if coord >= s {
                    amp[idx - s * stride]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                acc += w * (plus - minus);
            }
            acc / h
        })
        .collect()
}

fn spectral_axis(amp: &[Complex64], grid: &CartesianGrid, axis: usize) -> Vec<Complex64> {
    let dims = grid.dims();
    let n = dims[axis];
    let h = grid.axes[axis].spacing();
    let mut data = amp.to_vec();
    fft_axis(&mut data, dims, axis, false);
    let two_pi = 2.0 * std::f64::consts::PI;
    let scale = 1.0 / n as f64;
    data.par_iter_mut().enumerate().for_each(|(idx, v)| {
        let j = match axis {
            0 => idx / (dims[1] * dims[2]),
            1 => (idx / dims[2]) % dims[1],
            _ => idx % dims[2],
        };
        let k_signed = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        // Nyquist mode carries no odd derivative
        let k = if n % 2 == 0 && j == n / 2 { 0.0 } else { k_signed };
        *v *= Complex64::new(0.0, two_pi * k / (n as f64 * h)) * scale;
    });
    fft_axis(&mut data, dims, axis, true);
    data
}

/// ⟨ψ| A ψ⟩ under the invariant measure.
pub fn expectation(
    op: &FirstOrderOperator,
    state: &MomentumState,
    scheme: DerivScheme,
) -> Result<Complex64> {
    let applied = op.apply(state, scheme)?;
    state.inner_product(&applied)
}

/// ⟨A²⟩ - ⟨A⟩², A applied twice; the real part is returned with the
/// imaginary defect (nonzero for non-symmetric operators) alongside.
pub fn variance(
    op: &FirstOrderOperator,
    state: &MomentumState,
    scheme: DerivScheme,
) -> Result<(f64, f64)> {
    let once = op.apply(state, scheme)?;
    let twice = op.apply(&once, scheme)?;
    let m2 = state.inner_product(&twice)?;
    let m1 = state.inner_product(&once)?;
    let var = m2 - m1 * m1;
    Ok((var.re, var.im))
}

/// Relative L²(dμ) distance between two applied fields.
pub fn relative_diff(a: &MomentumState, b: &MomentumState, reference: &MomentumState) -> f64 {
    let g = &a.grid;
    let num: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|idx| g.measure_weight(g.node(idx)) * (a.amp[idx] - b.amp[idx]).norm_sqr())
        .collect();
    (pairwise_sum(&num) / reference.norm_sqr()).sqrt()
}

/// Residual of the decomposition of the Newton-Wigner operator in terms of
/// the proper-time operators:
///   X_NW(t) = Q^j - (Π^j/E) : Q⁰ + (Π^j/E) t,
/// as ‖(lhs - rhs)ψ‖ / ‖ψ‖. `ordering` selects the product convention;
/// `Left` is the negative control, which misses the ξiπ^j/(2E²) correction.
pub fn nw_decomposition_residual(
    state: &MomentumState,
    j: usize,
    t: f64,
    scheme: DerivScheme,
    ordering: ProductOrdering,
) -> Result<f64> {
    let mass = state.grid.mass;
    let xi = state.xi;
    let lhs = FirstOrderOperator::newton_wigner(j, t, xi, mass).apply(state, scheme)?;
    let q0 = FirstOrderOperator::q0_phys(0.0, xi, mass);
    let qj = FirstOrderOperator::q_phys(j, 0.0, xi, mass);
    let vel = FirstOrderOperator::velocity_field(j, xi, mass);
    let mid = FirstOrderOperator::ordered_product(&vel, &q0, ordering)?;
    let rhs_op = qj
        .add(&mid.scale(Complex64::new(-1.0, 0.0)))?
        .add(&vel.scale(Complex64::new(t, 0.0)))?;
    let rhs = rhs_op.apply(state, scheme)?;
    Ok(relative_diff(&lhs, &rhs, state))
}
