//! Classical proper-time four-position variables, numerical Poisson brackets
//! on the extended 8D phase space, and restriction of observables to
//! observation surfaces.
//!
//! Phase space is the unconstrained (x^μ, p_μ) with canonical brackets;
//! the mass shell p·p + m² = 0 is imposed only as an evaluation-point
//! predicate, so weak equalities can be probed off shell as well.

use crate::error::{Error, Result};
use crate::fourvec::FourVector;
use std::sync::Arc;

/// Default mass-shell tolerance for the `is_on_shell` predicate.
pub const TOL_SHELL: f64 = 1e-9;
/// Roots with |df/dτ| below this are treated as degenerate.
pub const TOL_DEGENERATE: f64 = 1e-9;

/// A point of the extended phase space: event x^μ, momentum p^μ (both
/// contravariant), rest mass m > 0.
#[derive(Clone, Copy, Debug)]
pub struct PhasePoint {
    pub x: FourVector,
    pub p: FourVector,
    pub m: f64,
}

impl PhasePoint {
    pub fn new(x: FourVector, p: FourVector, m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidInput(format!("mass must be positive, got {m}")));
        }
        Ok(PhasePoint { x, p, m })
    }

    /// Point with p⁰ fixed by the positive-energy mass shell.
    pub fn on_shell(x: FourVector, p_spatial: [f64; 3], m: f64) -> Result<Self> {
        let e = (m * m + p_spatial[0] * p_spatial[0] + p_spatial[1] * p_spatial[1]
            + p_spatial[2] * p_spatial[2])
            .sqrt();
        Self::new(x, FourVector::new(e, p_spatial[0], p_spatial[1], p_spatial[2]), m)
    }

    /// p·p + m²; zero on the mass shell.
    pub fn shell_defect(&self) -> f64 {
        self.p.norm_sqr() + self.m * self.m
    }

    pub fn is_on_shell(&self, tol: f64) -> bool {
        self.shell_defect().abs() <= tol
    }

    /// Angular momentum tensor J^{μν} = x^μ p^ν - x^ν p^μ.
    pub fn angular_momentum(&self, mu: usize, nu: usize) -> f64 {
        self.x[mu] * self.p[nu] - self.x[nu] * self.p[mu]
    }

    fn shifted_x(&self, mu: usize, d: f64) -> PhasePoint {
        let mut q = *self;
        q.x[mu] += d;
        q
    }

    /// Shift the covariant momentum p_μ by `d` (the canonical conjugate of x^μ).
    fn shifted_p_cov(&self, mu: usize, d: f64) -> PhasePoint {
        let mut q = *self;
        if mu == 0 {
            q.p[0] -= d; // p_0 = -p⁰
        } else {
            q.p[mu] += d;
        }
        q
    }
}

/// A real-valued observable A(point, τ) on extended phase space.
#[derive(Clone)]
pub struct ClassicalObservable {
    pub label: String,
    eval: Arc<dyn Fn(&PhasePoint, f64) -> f64 + Send + Sync>,
}

impl ClassicalObservable {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(&PhasePoint, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ClassicalObservable { label: label.into(), eval: Arc::new(eval) }
    }

    pub fn eval(&self, point: &PhasePoint, tau: f64) -> f64 {
        (self.eval)(point, tau)
    }

    /// Coordinate x^μ.
    pub fn coordinate(mu: usize) -> Self {
        Self::new(format!("x{mu}"), move |pt, _| pt.x[mu])
    }

    /// Contravariant momentum Π^μ.
    pub fn momentum(mu: usize) -> Self {
        Self::new(format!("p{mu}"), move |pt, _| pt.p[mu])
    }

    /// Covariant momentum p_μ (canonical conjugate of x^μ).
    pub fn momentum_cov(mu: usize) -> Self {
        Self::new(format!("p_{mu}"), move |pt, _| pt.p.lower(mu))
    }

    /// Proper-time four-position component Q^μ(τ).
    pub fn four_position_component(mu: usize) -> Self {
        Self::new(format!("Q{mu}"), move |pt, tau| {
            four_position(pt, tau).map(|q| q[mu]).unwrap_or(f64::NAN)
        })
    }

    /// Instantaneously restricted position Q̃^μ(t) for observer `u` at time `t`
    /// (τ-independent after restriction).
    pub fn restricted_component(mu: usize, u: FourVector, t: f64) -> Self {
        Self::new(format!("Qtilde{mu}"), move |pt, _| {
            restricted_instantaneous(pt, &u, t).map(|q| q[mu]).unwrap_or(f64::NAN)
        })
    }

    /// Restricted angular momentum J̃^{μν} = Q̃^μ(t) Π^ν - Q̃^ν(t) Π^μ.
    pub fn restricted_angular_momentum(mu: usize, nu: usize, u: FourVector, t: f64) -> Self {
        Self::new(format!("Jtilde{mu}{nu}"), move |pt, _| {
            match restricted_instantaneous(pt, &u, t) {
                Ok(q) => q[mu] * pt.p[nu] - q[nu] * pt.p[mu],
                Err(_) => f64::NAN,
            }
        })
    }
}

/// Proper-time parametrized four-position
/// Q^μ(τ) = -J^{μν} p_ν / m² + p^μ τ / m.
pub fn four_position(point: &PhasePoint, tau: f64) -> Result<FourVector> {
    if !(point.m > 0.0) {
        return Err(Error::InvalidInput("four_position requires m > 0".into()));
    }
    let m2 = point.m * point.m;
    let mut q = FourVector::zero();
    for mu in 0..4 {
        let mut jp = 0.0;
        for nu in 0..4 {
            jp += point.angular_momentum(mu, nu) * point.p.lower(nu);
        }
        q[mu] = -jp / m2 + point.p[mu] * tau / point.m;
    }
    Ok(q)
}

/// Restriction of Q^μ(τ) to the instantaneous surface Q·u = -t of an
/// inertial observer with four-velocity u:
/// Q̃^μ(t) = Q^μ(0) - Π^μ [t + Q(0)·u] / (u·Π).
pub fn restricted_instantaneous(
    point: &PhasePoint,
    u: &FourVector,
    t: f64,
) -> Result<FourVector> {
    if (u.norm_sqr() + 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "observer velocity must satisfy u.u = -1, got {}",
            u.norm_sqr()
        )));
    }
    let up = u.dot(&point.p);
    if up == 0.0 {
        return Err(Error::DegenerateObserver);
    }
    let q0 = four_position(point, 0.0)?;
    let q0u = q0.dot(u);
    Ok(q0 - point.p * ((t + q0u) / up))
}

/// Central-difference gradient of f w.r.t. the 8 canonical coordinates
/// (x^0..x^3, p_0..p_3) at fixed τ, one step size.
fn gradient8(f: &ClassicalObservable, point: &PhasePoint, tau: f64, h: f64) -> Result<[f64; 8]> {
    let mut g = [0.0; 8];
    for mu in 0..4 {
        let fp = f.eval(&point.shifted_x(mu, h), tau);
        let fm = f.eval(&point.shifted_x(mu, -h), tau);
        g[mu] = (fp - fm) / (2.0 * h);
        let gp = f.eval(&point.shifted_p_cov(mu, h), tau);
        let gm = f.eval(&point.shifted_p_cov(mu, -h), tau);
        g[4 + mu] = (gp - gm) / (2.0 * h);
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalDomain(format!(
            "non-finite evaluation of {} in difference stencil",
            f.label
        )));
    }
    Ok(g)
}

fn bracket_once(
    f: &ClassicalObservable,
    g: &ClassicalObservable,
    point: &PhasePoint,
    tau: f64,
    h: f64,
) -> Result<f64> {
    let gf = gradient8(f, point, tau, h)?;
    let gg = gradient8(g, point, tau, h)?;
    let mut pb = 0.0;
    for mu in 0..4 {
        pb += gf[mu] * gg[4 + mu] - gf[4 + mu] * gg[mu];
    }
    Ok(pb)
}

/// Numerical Poisson bracket {f, g} = Σ_μ (∂f/∂x^μ ∂g/∂p_μ - ∂f/∂p_μ ∂g/∂x^μ)
/// with canonical pairs (x^μ, p_μ).
///
/// Central differences at steps h and h/2 combined by Richardson
/// extrapolation, giving O(h⁴) truncation error.
pub fn poisson_bracket(
    f: &ClassicalObservable,
    g: &ClassicalObservable,
    point: &PhasePoint,
    tau: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput("step h must be positive".into()));
    }
    let coarse = bracket_once(f, g, point, tau, h)?;
    let fine = bracket_once(f, g, point, tau, h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Default Poisson-bracket step in natural units.
pub const PB_STEP: f64 = 1e-4;

/// How the τ-root of a surface function is located.
#[derive(Clone)]
pub enum SurfaceKind {
    /// Q·u + t = 0: linear in τ with slope (u·Π)/m, closed-form root.
    Instantaneous { u: FourVector, t: f64 },
    /// Q³(τ) - z = 0: linear in τ with slope p³/m, closed-form root.
    FixedZ { z: f64 },
    /// Anything else; roots found by scan + bisection on the search interval.
    Generic,
}

/// An observation surface f(Q^μ(τ)) = 0.
#[derive(Clone)]
pub struct SurfaceFunction {
    pub label: String,
    eval: Arc<dyn Fn(&PhasePoint, f64) -> f64 + Send + Sync>,
    kind: SurfaceKind,
}

impl SurfaceFunction {
    /// Instantaneous observer surface Q^μ(τ) u_μ + t = 0.
    pub fn instantaneous(u: FourVector, t: f64) -> Self {
        SurfaceFunction {
            label: format!("Q.u + {t}"),
            eval: Arc::new(move |pt, tau| match four_position(pt, tau) {
                Ok(q) => q.dot(&u) + t,
                Err(_) => f64::NAN,
            }),
            kind: SurfaceKind::Instantaneous { u, t },
        }
    }

    /// Fixed detector plane Q³(τ) - z = 0.
    pub fn fixed_z(z: f64) -> Self {
        SurfaceFunction {
            label: format!("Q3 - {z}"),
            eval: Arc::new(move |pt, tau| match four_position(pt, tau) {
                Ok(q) => q[3] - z,
                Err(_) => f64::NAN,
            }),
            kind: SurfaceKind::FixedZ { z },
        }
    }

    /// User-supplied surface; roots are found numerically.
    pub fn generic(
        label: impl Into<String>,
        eval: impl Fn(&PhasePoint, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SurfaceFunction { label: label.into(), eval: Arc::new(eval), kind: SurfaceKind::Generic }
    }

    pub fn eval(&self, point: &PhasePoint, tau: f64) -> f64 {
        (self.eval)(point, tau)
    }

    fn dtau(&self, point: &PhasePoint, tau: f64) -> f64 {
        let h = 1e-6 * (1.0 + tau.abs());
        (self.eval(point, tau + h) - self.eval(point, tau - h)) / (2.0 * h)
    }
}

/// Search interval and bisection controls for generic surfaces.
#[derive(Clone, Copy, Debug)]
pub struct RootSearch {
    pub tau_min: f64,
    pub tau_max: f64,
    /// Number of scan panels used to bracket sign changes.
    pub scan_points: usize,
    pub tol: f64,
}

impl Default for RootSearch {
    fn default() -> Self {
        RootSearch { tau_min: -1e6, tau_max: 1e6, scan_points: 4096, tol: 1e-12 }
    }
}

fn bisect(
    f: &SurfaceFunction,
    point: &PhasePoint,
    mut lo: f64,
    mut hi: f64,
    flo: f64,
    tol: f64,
) -> f64 {
    let mut sign_lo = flo.signum();
    while hi - lo > tol * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        let fm = f.eval(point, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == sign_lo {
            lo = mid;
            sign_lo = fm.signum();
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All simple roots of f(point, ·) relevant for the restriction integral.
pub fn surface_roots(
    f: &SurfaceFunction,
    point: &PhasePoint,
    search: &RootSearch,
) -> Result<Vec<f64>> {
    match f.kind {
        SurfaceKind::Instantaneous { u, t } => {
            let up = u.dot(&point.p);
            if up == 0.0 {
                return Err(Error::DegenerateObserver);
            }
            // f(τ) = Q(0)·u + (u·Π)τ/m + t
            let q0 = four_position(point, 0.0)?;
            let tau = -(q0.dot(&u) + t) * point.m / up;
            Ok(vec![tau])
        }
        SurfaceKind::FixedZ { z } => {
            let slope = point.p[3] / point.m;
            if slope.abs() < TOL_DEGENERATE {
                return Err(Error::DegenerateSurface(slope.abs()));
            }
            let q0 = four_position(point, 0.0)?;
            Ok(vec![(z - q0[3]) / slope])
        }
        SurfaceKind::Generic => {
            let n = search.scan_points.max(8);
            let dt = (search.tau_max - search.tau_min) / n as f64;
            let mut roots = Vec::new();
            let mut prev_tau = search.tau_min;
            let mut prev_val = f.eval(point, prev_tau);
            for i in 1..=n {
                let tau = search.tau_min + i as f64 * dt;
                let val = f.eval(point, tau);
                if !val.is_finite() {
                    return Err(Error::NumericalDomain(format!(
                        "surface {} not finite at tau = {tau}",
                        f.label
                    )));
                }
                if prev_val == 0.0 {
                    roots.push(prev_tau);
                } else if prev_val.signum() != val.signum() && val != 0.0 {
                    roots.push(bisect(f, point, prev_tau, tau, prev_val, search.tol));
                }
                prev_tau = tau;
                prev_val = val;
            }
            if prev_val == 0.0 {
                roots.push(prev_tau);
            }
            if roots.is_empty() {
                return Err(Error::SurfaceMiss(search.tau_min, search.tau_max));
            }
            for &r in &roots {
                let slope = f.dtau(point, r);
                if slope.abs() < TOL_DEGENERATE {
                    return Err(Error::DegenerateSurface(slope.abs()));
                }
            }
            Ok(roots)
        }
    }
}

/// Restriction of the observable A(τ) to the surface f(Q^μ(τ)) = 0:
/// the |df/dτ|-weighted delta integral evaluates to Σ_roots A(τ_r).
pub fn restrict_classical(
    a: &ClassicalObservable,
    f: &SurfaceFunction,
    point: &PhasePoint,
    search: &RootSearch,
) -> Result<f64> {
    let roots = surface_roots(f, point, search)?;
    Ok(roots.iter().map(|&tau| a.eval(point, tau)).sum())
}
