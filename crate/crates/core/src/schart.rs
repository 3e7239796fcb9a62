//! The Kijowski chart (π¹, π², s) with s = sign(π³) E_π and flat measure.
//!
//! A state maps onto this chart via ψ_z(π) = √(m/|π³|) ψ(π); that weight is
//! exactly what makes the chart change an isometry between the invariant
//! measure and the flat one. Detections from the left live at s > m,
//! detections from the right at s < -m; the gap (-m, m) is not part of the
//! chart, so the s axis is a union of disjoint uniform segments.

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::operators::{Chart, CoeffFn, FirstOrderOperator};
use crate::state::MomentumState;
use crate::util::{pairwise_sum, pairwise_sum_c};
use crate::EnergySign;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

/// One uniform s-segment, entirely on one side of the mass gap.
#[derive(Clone, Copy, Debug)]
pub struct SSegment {
    pub s_start: f64,
    pub s_end: f64,
    pub n: usize,
}

impl SSegment {
    pub fn spacing(&self) -> f64 {
        (self.s_end - self.s_start) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.s_start + i as f64 * self.spacing()
    }
}

#[derive(Clone, Debug)]
pub struct SChartGrid {
    /// Transverse momentum axes (π¹, π²).
    pub axes_t: [Axis; 2],
    pub segments: Vec<SSegment>,
    pub mass: f64,
}

impl SChartGrid {
    pub fn new(axes_t: [Axis; 2], segments: Vec<SSegment>, mass: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidInput("s-chart needs at least one segment".into()));
        }
        for seg in &segments {
            if seg.n < 16 {
                return Err(Error::InvalidInput("s-segment needs at least 16 nodes".into()));
            }
            if !(seg.s_end > seg.s_start) {
                return Err(Error::InvalidInput("s-segment must have positive length".into()));
            }
            let lo = seg.s_start.min(seg.s_end).abs().min(seg.s_end.abs());
            let same_side = seg.s_start.signum() == seg.s_end.signum();
            if !same_side || lo < mass {
                return Err(Error::InvalidInput(format!(
                    "s-segment [{}, {}] must avoid the mass gap (-{mass}, {mass})",
                    seg.s_start, seg.s_end
                )));
            }
        }
        Ok(SChartGrid { axes_t, segments, mass })
    }

    pub fn n_s(&self) -> usize {
        self.segments.iter().map(|s| s.n).sum()
    }

    pub fn len(&self) -> usize {
        self.axes_t[0].n * self.axes_t[1].n * self.n_s()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (segment, in-segment index) of a flat s-index.
    fn s_locate(&self, mut is: usize) -> (usize, usize) {
        for (k, seg) in self.segments.iter().enumerate() {
            if is < seg.n {
                return (k, is);
            }
            is -= seg.n;
        }
        panic!("s index out of range");
    }

    pub fn s_node(&self, is: usize) -> f64 {
        let (k, i) = self.s_locate(is);
        self.segments[k].node(i)
    }

    /// Trapezoid weight of an s node within its segment.
    pub fn s_weight(&self, is: usize) -> f64 {
        let (k, i) = self.s_locate(is);
        let seg = &self.segments[k];
        seg.spacing() * if i == 0 || i == seg.n - 1 { 0.5 } else { 1.0 }
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, is: usize) -> usize {
        (i1 * self.axes_t[1].n + i2) * self.n_s() + is
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let ns = self.n_s();
        let n2 = self.axes_t[1].n;
        (idx / (n2 * ns), (idx / ns) % n2, idx % ns)
    }

    /// Chart point (π¹, π², s) of a node.
    pub fn node(&self, idx: usize) -> [f64; 3] {
        let (i1, i2, is) = self.unindex(idx);
        [self.axes_t[0].node(i1), self.axes_t[1].node(i2), self.s_node(is)]
    }

    /// Flat-measure weight h₁ h₂ w_s.
    pub fn weight(&self, idx: usize) -> f64 {
        let (_, _, is) = self.unindex(idx);
        self.axes_t[0].spacing() * self.axes_t[1].spacing() * self.s_weight(is)
    }

    /// π³ recovered from a chart point; None inside the kinematic boundary
    /// s² <= ρ² + m².
    pub fn pi3_of(&self, p: [f64; 3]) -> Option<f64> {
        let disc = p[2] * p[2] - p[0] * p[0] - p[1] * p[1] - self.mass * self.mass;
        if disc <= 0.0 {
            None
        } else {
            Some(p[2].signum() * disc.sqrt())
        }
    }
}

#[derive(Clone)]
pub struct SChartState {
    pub grid: Arc<SChartGrid>,
    pub amp: Vec<Complex64>,
    pub xi: EnergySign,
}

impl SChartState {
    pub fn from_closure(
        grid: Arc<SChartGrid>,
        xi: EnergySign,
        f: impl Fn([f64; 3]) -> Complex64 + Sync,
    ) -> Self {
        let amp: Vec<Complex64> =
            (0..grid.len()).into_par_iter().map(|idx| f(grid.node(idx))).collect();
        SChartState { grid, amp, xi }
    }

    pub fn norm_sqr(&self) -> f64 {
        let vals: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .map(|idx| self.grid.weight(idx) * self.amp[idx].norm_sqr())
            .collect();
        pairwise_sum(&vals)
    }

    pub fn inner_product(&self, other: &SChartState) -> Result<Complex64> {
        if !Arc::ptr_eq(&self.grid, &other.grid) || self.xi != other.xi {
            return Err(Error::IncompatibleState("s-chart states differ in grid or sign".into()));
        }
        let vals: Vec<Complex64> = (0..self.grid.len())
            .into_par_iter()
            .map(|idx| {
                self.amp[idx].conj() * other.amp[idx] * self.grid.weight(idx)
            })
            .collect();
        Ok(pairwise_sum_c(&vals))
    }
}

/// Width (in units of the π³ grid spacing) of the singular strip guarded
/// before chart changes.
pub const SINGULAR_STRIP_CELLS: f64 = 3.0;
const SINGULAR_MASS_TOL: f64 = 1e-8;

/// Express a grid state in the s-chart: ψ_z(π¹, π², s) = √(m/|π³|) ψ(π).
///
/// The s range is fit to the state's energy support with padding; states
/// carrying more than 1e-8 of their mass within three cells of π³ = 0 are
/// rejected (the chart weight is singular there).
pub fn to_s_chart(state: &MomentumState, n_s: usize) -> Result<SChartState> {
    let g = &state.grid;
    let m = g.mass;
    let h3 = g.axes[2].spacing();
    let strip = state.mass_near_pi3_zero(SINGULAR_STRIP_CELLS * h3);
    let total = state.norm_sqr();
    if strip > SINGULAR_MASS_TOL * total {
        return Err(Error::SingularDomain(format!(
            "state mass {strip:.3e} within |π³| < {:.3} of the chart singularity",
            SINGULAR_STRIP_CELLS * h3
        )));
    }

    // energy support and side occupation
    let max_density = (0..g.len())
        .into_par_iter()
        .map(|idx| state.amp[idx].norm_sqr())
        .reduce(|| 0.0, f64::max);
    let mut e_min = f64::MAX;
    let mut e_max: f64 = 0.0;
    let mut mass_plus = 0.0;
    let mut mass_minus = 0.0;
    for idx in 0..g.len() {
        let p = g.node(idx);
        let d = state.amp[idx].norm_sqr();
        let w = g.measure_weight(p) * d;
        if p[2] > 0.0 {
            mass_plus += w;
        } else {
            mass_minus += w;
        }
        if d > 1e-24 * max_density {
            let e = g.energy_at(p);
            e_min = e_min.min(e);
            e_max = e_max.max(e);
        }
    }
    if e_max == 0.0 {
        return Err(Error::NumericalDomain("empty state".into()));
    }
    let span = (e_max - e_min).max(1e-6 * m);
    let pad = 0.1 * span + 5.0 * span / n_s as f64;
    let s_lo = (e_min - pad).max(m * (1.0 + 1e-12));
    let s_hi = e_max + pad;

    let side_tol = SINGULAR_MASS_TOL * total;
    let mut segments = Vec::new();
    if mass_minus > side_tol {
        segments.push(SSegment { s_start: -s_hi, s_end: -s_lo, n: n_s });
    }
    if mass_plus > side_tol {
        segments.push(SSegment { s_start: s_lo, s_end: s_hi, n: n_s });
    }
    let sgrid = Arc::new(SChartGrid::new([g.axes[0], g.axes[1]], segments, m)?);

    // nodes inside the singular strip |π³| < 3h₃ carry no amplitude: the
    // chart weight diverges there and the gate above certified the state
    // holds no measurable mass in the strip
    let pi3_floor = SINGULAR_STRIP_CELLS * h3;
    let sgrid2 = sgrid.clone();
    let amp: Vec<Complex64> = (0..sgrid.len())
        .into_par_iter()
        .map(|idx| {
            let p = sgrid2.node(idx);
            match sgrid2.pi3_of(p) {
                None => Complex64::new(0.0, 0.0),
                Some(pi3) if pi3.abs() < pi3_floor => Complex64::new(0.0, 0.0),
                Some(pi3) => {
                    let val = state.eval([p[0], p[1], pi3]);
                    if val.norm_sqr() < 1e-280 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        val * (m / pi3.abs()).sqrt()
                    }
                }
            }
        })
        .collect();
    Ok(SChartState { grid: sgrid, amp, xi: state.xi })
}

/// Detection-time operator at plane z in the s-chart:
/// -ξ i sign(s) ∂/∂s + s z / √(s² - ρ² - m²).
pub fn kijowski_time(z: f64, xi: EnergySign, mass: f64) -> FirstOrderOperator {
    let xi_f = xi.factor();
    let c: CoeffFn = Arc::new(move |p: [f64; 3]| {
        let disc = p[2] * p[2] - p[0] * p[0] - p[1] * p[1] - mass * mass;
        if disc <= 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(p[2] * z / disc.sqrt(), 0.0)
        }
    });
    let a_s: CoeffFn = Arc::new(move |p: [f64; 3]| Complex64::new(0.0, -xi_f * p[2].signum()));
    FirstOrderOperator::new(format!("T_s(z={z})"), xi, Chart::SChart, c, [None, None, Some(a_s)])
}

/// Transverse position on the plane z in the s-chart, j ∈ {0, 1}:
/// ξ i ∂/∂π_j + π^j z / (sign(s) √(s² - ρ² - m²)).
pub fn kijowski_transverse(j: usize, z: f64, xi: EnergySign, mass: f64) -> FirstOrderOperator {
    assert!(j < 2);
    let xi_f = xi.factor();
    let c: CoeffFn = Arc::new(move |p: [f64; 3]| {
        let disc = p[2] * p[2] - p[0] * p[0] - p[1] * p[1] - mass * mass;
        if disc <= 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(p[j] * z / (p[2].signum() * disc.sqrt()), 0.0)
        }
    });
    let mut a: [Option<CoeffFn>; 3] = [None, None, None];
    a[j] = Some(Arc::new(move |_| Complex64::new(0.0, xi_f)));
    FirstOrderOperator::new(format!("X{}_s(z={z})", j + 1), xi, Chart::SChart, c, a)
}

/// The arrival-velocity factor E/π³ = s/√(s² - ρ² - m²) as a multiplicative
/// s-chart operator.
pub fn arrival_slope_field(xi: EnergySign, mass: f64) -> FirstOrderOperator {
    FirstOrderOperator::multiplicative("E/pi3", xi, Chart::SChart, move |p: [f64; 3]| {
        let disc = p[2] * p[2] - p[0] * p[0] - p[1] * p[1] - mass * mass;
        if disc <= 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(p[2] / disc.sqrt(), 0.0)
        }
    })
}

/// Apply an s-chart operator: c ψ + Σ_k a^k ∂_k ψ, the s-derivative taken
/// per segment (no coupling across the mass gap).
pub fn apply_s(op: &FirstOrderOperator, state: &SChartState) -> Result<SChartState> {
    if op.chart != Chart::SChart {
        return Err(Error::InvalidChart {
            expected: op.chart.to_string(),
            found: Chart::SChart.to_string(),
        });
    }
    if op.xi != state.xi {
        return Err(Error::IncompatibleState("energy sign mismatch".into()));
    }
    let g = &state.grid;
    let mut out: Vec<Complex64> = (0..g.len())
        .into_par_iter()
        .map(|idx| op.coefficient(g.node(idx)) * state.amp[idx])
        .collect();
    for k in 0..3 {
        if !op.derivative_coefficient_present(k) {
            continue;
        }
        let d = s_chart_derivative(state, k);
        out.par_iter_mut().enumerate().for_each(|(idx, v)| {
            *v += op.derivative_coefficient(k, g.node(idx)) * d[idx];
        });
    }
    Ok(SChartState { grid: state.grid.clone(), amp: out, xi: state.xi })
}

/// ⟨ψ| A ψ⟩ under the flat s-chart measure.
pub fn expectation_s(op: &FirstOrderOperator, state: &SChartState) -> Result<Complex64> {
    let applied = apply_s(op, state)?;
    state.inner_product(&applied)
}

/// 8th-order central difference along a chart axis; the s axis is
/// differentiated segment by segment.
fn s_chart_derivative(state: &SChartState, axis: usize) -> Vec<Complex64> {
    const W: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let g = &state.grid;
    let ns = g.n_s();
    let n2 = g.axes_t[1].n;
    (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let (i1, i2, is) = g.unindex(idx);
            let mut acc = Complex64::new(0.0, 0.0);
            match axis {
                0 | 1 => {
                    let (coord, count, stride) = if axis == 0 {
                        (i1, g.axes_t[0].n, n2 * ns)
                    } else {
                        (i2, n2, ns)
                    };
                    let h = g.axes_t[axis].spacing();
                    for (s, &w) in W.iter().enumerate() {
                        let s = s + 1;
                        let plus = if coord + s < count {
                            state.amp[idx + s * stride]
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                        let minus = if coord >= s {
                            state.amp[idx - s * stride]
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                        acc += w * (plus - minus);
                    }
                    acc / h
                }
                _ => {
                    let (seg_idx, i_in) = g.s_locate(is);
                    let seg = &g.segments[seg_idx];
                    let h = seg.spacing();
                    for (s, &w) in W.iter().enumerate() {
                        let s = s + 1;
                        let plus = if i_in + s < seg.n {
                            state.amp[idx + s]
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                        let minus = if i_in >= s {
                            state.amp[idx - s]
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                        acc += w * (plus - minus);
                    }
                    acc / h
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CartesianGrid;
    use crate::EnergySign::Positive;

    /// One-sided packet moving in +z, displaced by z0 in position space so
    /// detection-time expectations are nonzero. The transverse extent stays
    /// below the π³ support so the kinematic boundary s² = ρ² + m² never
    /// cuts through the sampled region.
    fn packet_displaced(sigma_z: f64, p3_center: f64, z0: f64) -> MomentumState {
        let g = Arc::new(
            CartesianGrid::new(
                [48, 48, 128],
                [0.75, 0.75, p3_center + 10.0 * sigma_z.max(0.1)],
                1.0,
                true,
            )
            .unwrap(),
        );
        MomentumState::from_fn(g, Positive, move |p| {
            let d2 = (p[0] * p[0] + p[1] * p[1]) / 0.064
                + (p[2] - p3_center) * (p[2] - p3_center) / (4.0 * sigma_z * sigma_z);
            Complex64::from_polar((-d2).exp(), -p[2] * z0)
        })
    }

    fn packet(sigma_z: f64, p3_center: f64) -> MomentumState {
        packet_displaced(sigma_z, p3_center, 0.0)
    }

    #[test]
    fn chart_change_is_isometry() {
        let mut s = packet(0.15, 2.0);
        s.normalize().unwrap();
        let sc = to_s_chart(&s, 512).unwrap();
        let n = sc.norm_sqr();
        assert!((n - 1.0).abs() < 1e-6, "flat norm {n}");
    }

    #[test]
    fn singular_strip_rejected() {
        let g = Arc::new(CartesianGrid::cubic(32, 4.0, 1.0, true).unwrap());
        let s = MomentumState::gaussian(g, Positive, [0.0; 3], 0.5).unwrap();
        assert!(matches!(to_s_chart(&s, 256), Err(Error::SingularDomain(_))));
    }

    #[test]
    fn charts_agree_at_z_zero() {
        // displaced packet: ⟨T(0)⟩ ≈ -z0 ⟨E/π³⟩ is far from zero, so the
        // agreement is a real cross-check of the two quadratures
        let mut s = packet_displaced(0.12, 2.0, 1.3);
        s.normalize().unwrap();
        let t_pi = FirstOrderOperator::kijowski_time_pi(0.0, Positive, 1.0);
        let e_pi = crate::operators::expectation(&t_pi, &s, crate::operators::DerivScheme::Fd8)
            .unwrap();
        let sc = to_s_chart(&s, 768).unwrap();
        let t_s = kijowski_time(0.0, Positive, 1.0);
        let e_s = expectation_s(&t_s, &sc).unwrap();
        assert!(e_pi.re.abs() > 0.5, "expectation should be visibly nonzero: {e_pi}");
        assert!(
            (e_pi - e_s).norm() < 1e-5,
            "pi-chart {e_pi} vs s-chart {e_s}"
        );
    }

    #[test]
    fn time_and_transverse_commute() {
        let mut s = packet(0.15, 2.0);
        s.normalize().unwrap();
        let sc = to_s_chart(&s, 512).unwrap();
        let t = kijowski_time(0.8, Positive, 1.0);
        let x = kijowski_transverse(0, 0.8, Positive, 1.0);
        let tx = apply_s(&t, &apply_s(&x, &sc).unwrap()).unwrap();
        let xt = apply_s(&x, &apply_s(&t, &sc).unwrap()).unwrap();
        let num: f64 = (0..sc.grid.len())
            .map(|i| sc.grid.weight(i) * (tx.amp[i] - xt.amp[i]).norm_sqr())
            .sum();
        let rel = (num / sc.norm_sqr()).sqrt();
        // finite-difference noise floor of the weighted products; the
        // non-commuting scale would be O(1)
        assert!(rel < 2e-5, "commutator {rel:.3e}");
    }

    #[test]
    fn z_term_expectation_is_arrival_slope() {
        let mut s = packet(0.1, 2.0);
        s.normalize().unwrap();
        let sc = to_s_chart(&s, 512).unwrap();
        let z = 1.7;
        let t0 = expectation_s(&kijowski_time(0.0, Positive, 1.0), &sc).unwrap();
        let tz = expectation_s(&kijowski_time(z, Positive, 1.0), &sc).unwrap();
        let slope = expectation_s(&arrival_slope_field(Positive, 1.0), &sc).unwrap();
        assert!(
            ((tz - t0) - slope * z).norm() < 1e-10,
            "{} vs {}",
            (tz - t0).re,
            slope.re * z
        );
    }

    #[test]
    fn single_sided_support_means_plain_derivative() {
        // sign(s) = +1 on a one-sided packet: -i sign(s)∂_s equals -i∂_s
        let mut s = packet(0.15, 1.5);
        s.normalize().unwrap();
        let sc = to_s_chart(&s, 512).unwrap();
        assert_eq!(sc.grid.segments.len(), 1);
        assert!(sc.grid.segments[0].s_start > 0.0);
    }

    #[test]
    fn time_operator_symmetric_on_interior_support() {
        // states vanishing at the segment ends: ⟨Tφ,ψ⟩ = ⟨φ,Tψ⟩
        let axes = [
            Axis { n: 24, pi_max: 1.5, offset_half: false },
            Axis { n: 24, pi_max: 1.5, offset_half: false },
        ];
        let seg = SSegment { s_start: 1.2, s_end: 4.0, n: 512 };
        let g = Arc::new(SChartGrid::new(axes, vec![seg], 1.0).unwrap());
        let mk = |c: f64| {
            SChartState::from_closure(g.clone(), Positive, move |p| {
                let envelope = (-((p[2] - c) / 0.25).powi(2)).exp()
                    * (-(p[0] * p[0] + p[1] * p[1]) / 0.2).exp();
                Complex64::new(envelope, 0.3 * envelope)
            })
        };
        let phi = mk(2.2);
        let psi = mk(2.6);
        let t = kijowski_time(0.0, Positive, 1.0);
        let a = apply_s(&t, &phi).unwrap().inner_product(&psi).unwrap();
        let b = phi.inner_product(&apply_s(&t, &psi).unwrap()).unwrap();
        assert!((a - b).norm() < 1e-8, "defect {}", (a - b).norm());
    }

    #[test]
    fn time_operator_defect_for_boundary_support() {
        // two-sided states finite at s = ±(m+ε): integration by parts leaves
        // a boundary term, the marker of the missing self-adjointness
        let axes = [
            Axis { n: 16, pi_max: 1.0, offset_half: false },
            Axis { n: 16, pi_max: 1.0, offset_half: false },
        ];
        let segs = vec![
            SSegment { s_start: -4.0, s_end: -1.05, n: 256 },
            SSegment { s_start: 1.05, s_end: 4.0, n: 256 },
        ];
        let g = Arc::new(SChartGrid::new(axes, segs, 1.0).unwrap());
        let state = SChartState::from_closure(g.clone(), Positive, move |p| {
            // smooth, nonzero at the inner boundaries |s| = 1.05
            let trans = (-(p[0] * p[0] + p[1] * p[1]) / 0.15).exp();
            let env = (-(p[2].abs() - 1.05) / 1.2).exp();
            Complex64::new(env * trans, 0.2 * env * trans)
        });
        let phi = SChartState::from_closure(g, Positive, move |p| {
            let trans = (-(p[0] * p[0] + p[1] * p[1]) / 0.15).exp();
            let env = (-(p[2].abs() - 1.05) / 0.8).exp();
            Complex64::new(0.7 * env * trans, -0.4 * env * trans)
        });
        let t = kijowski_time(0.0, Positive, 1.0);
        let a = apply_s(&t, &phi).unwrap().inner_product(&state).unwrap();
        let b = phi.inner_product(&apply_s(&t, &state).unwrap()).unwrap();
        let defect = (a - b).norm();
        let scale = phi.norm_sqr().sqrt() * state.norm_sqr().sqrt();
        assert!(
            defect / scale > 1e-4,
            "boundary defect should be visible, got {defect:.3e} / {scale:.3e}"
        );
    }
}
