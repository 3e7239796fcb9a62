//! Conical (Mehler) Legendre functions P^{-μ}_{-1/2 + iΛ}(x) for x >= 1.
//!
//! Two independent evaluation paths guard each other:
//!  * a hypergeometric series around x = 1, real-coefficient recursion
//!    c_{k+1} = c_k ((k+1/2)² + Λ²) / ((k+1)(k+1+μ)); its terms alternate and
//!    peak exponentially in Λ·ω, so it is only used where the peak term stays
//!    small (x < 1.5 and Λω <= 8);
//!  * a Gegenbauer-type integral representation
//!    P^{-μ}_ν(cosh ω) = (sinh ω)^μ / (2^μ √π Γ(μ+1/2))
//!                       ∫_0^π sin^{2μ}θ (cosh ω + sinh ω cos θ)^{ν-μ} dθ,
//!    whose integrand for the conical degree reduces to
//!    y^{-μ-1/2} cos(Λ ln y), manifestly real. Trapezoid in θ converges
//!    spectrally (all odd derivatives vanish at both endpoints); the node
//!    count tracks the total phase Λω plus the boundary layer at large x.
//!
//! The function is real for all μ >= 0, Λ >= 0, x >= 1. A third route, the
//! Legendre ODE with ν(ν+1) = -(Λ² + 1/4), is checked in the tests.

use crate::error::{Error, Result};
use crate::specfun::log_gamma;
use num_complex::Complex64;

/// Order/degree bundle: order -μ with μ a non-negative integer, degree
/// -1/2 + iΛ with Λ >= 0.
#[derive(Clone, Copy, Debug)]
pub struct ConicalOrder {
    pub mu: u32,
    pub lambda: f64,
}

impl ConicalOrder {
    pub fn new(mu: u32, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!(
                "conical degree parameter must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(ConicalOrder { mu, lambda })
    }
}

const X_SWITCH: f64 = 1.5;
const PHASE_SWITCH: f64 = 8.0;
const X_OVERFLOW: f64 = 1e6;

fn omega_of(x: f64) -> f64 {
    // arccosh
    (x + (x * x - 1.0).max(0.0).sqrt()).ln()
}

/// P^{-μ}_{-1/2+iΛ}(x) for x >= 1, dual-path evaluation.
pub fn conical_p(order: ConicalOrder, x: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return Err(Error::InvalidInput(format!("conical_p requires x >= 1, got {x}")));
    }
    if x > X_OVERFLOW {
        return Err(Error::Range(format!("conical_p argument {x} above overflow guard")));
    }
    if x < X_SWITCH && order.lambda * omega_of(x) <= PHASE_SWITCH {
        conical_p_series(order, x)
    } else {
        conical_p_integral(order, x)
    }
}

/// Series path:
/// ((x-1)/(x+1))^{μ/2} / Γ(1+μ) · ₂F₁(1/2-iΛ, 1/2+iΛ; 1+μ; (1-x)/2).
pub fn conical_p_series(order: ConicalOrder, x: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return Err(Error::InvalidInput(format!("series path requires x >= 1, got {x}")));
    }
    let mu = order.mu as f64;
    let l2 = order.lambda * order.lambda;
    let w = (1.0 - x) / 2.0;
    if w.abs() >= 1.0 {
        return Err(Error::Range(format!(
            "series argument |1-x|/2 = {} outside radius of convergence",
            w.abs()
        )));
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 0..20_000 {
        let kf = k as f64;
        term *= ((kf + 0.5) * (kf + 0.5) + l2) / ((kf + 1.0) * (kf + 1.0 + mu)) * w;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    let prefactor = if order.mu == 0 {
        1.0
    } else {
        ((x - 1.0) / (x + 1.0)).powf(mu / 2.0) / factorial(order.mu)
    };
    Ok(prefactor * sum)
}

/// Integral path: trapezoid in θ of the real integrand
/// sin^{2μ}θ · y^{-μ-1/2} cos(Λ ln y), y = cosh ω + sinh ω cos θ.
pub fn conical_p_integral(order: ConicalOrder, x: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return Err(Error::InvalidInput(format!("integral path requires x >= 1, got {x}")));
    }
    if x > X_OVERFLOW {
        return Err(Error::Range(format!("conical_p argument {x} above overflow guard")));
    }
    let mu = order.mu as f64;
    let lam = order.lambda;
    let cosh_w = x;
    let sinh_w = (x * x - 1.0).max(0.0).sqrt();
    let omega = omega_of(x);
    // total phase plus the boundary layer near θ = π where ln y varies fastest
    let boundary = if sinh_w > 0.0 {
        (lam * (sinh_w * (omega.exp()) / 2.0).sqrt()).ceil() as usize
    } else {
        0
    };
    let n = (256 + 16 * ((lam * omega).abs().ceil() as usize + order.mu as usize)
        + 4 * boundary)
        .min(4_000_000);
    let h = std::f64::consts::PI / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let theta = i as f64 * h;
        let y = cosh_w + sinh_w * theta.cos();
        let f = theta.sin().powi(2 * order.mu as i32) * y.powf(-mu - 0.5) * (lam * y.ln()).cos();
        acc += if i == 0 || i == n { 0.5 * f } else { f };
    }
    let integral = acc * h;
    let lg_half = log_gamma(Complex64::new(mu + 0.5, 0.0))?.re;
    let norm = sinh_w.powf(mu) / (2.0f64.powf(mu) * std::f64::consts::PI.sqrt() * lg_half.exp());
    Ok(norm * integral)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::Sampler;

    #[test]
    fn value_one_at_argument_one() {
        for &lam in &[0.0, 0.3, 1.0, 7.5] {
            let p = conical_p(ConicalOrder::new(0, lam).unwrap(), 1.0).unwrap();
            assert!((p - 1.0).abs() < 1e-14, "Λ = {lam}: {p}");
        }
    }

    #[test]
    fn vanishes_at_one_for_positive_mu() {
        for mu in 1..=4u32 {
            let p = conical_p(ConicalOrder::new(mu, 2.0).unwrap(), 1.0).unwrap();
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn positive_near_one_for_mu_zero() {
        for &x in &[1.0001, 1.01, 1.1, 1.3] {
            let p = conical_p(ConicalOrder::new(0, 1.0).unwrap(), x).unwrap();
            assert!(p > 0.0, "x = {x}: {p}");
        }
    }

    #[test]
    fn dual_paths_agree_on_overlap_window() {
        // window where the series is free of catastrophic cancellation
        let mut worst: f64 = 0.0;
        for &mu in &[0u32, 1, 2, 3] {
            for &lam in &[0.0, 0.5, 1.0, 5.0] {
                let order = ConicalOrder::new(mu, lam).unwrap();
                for i in 0..=12 {
                    let x = 1.2 + i as f64 * (2.5 - 1.2) / 12.0;
                    let a = conical_p_series(order, x).unwrap();
                    let b = conical_p_integral(order, x).unwrap();
                    let scale = a.abs().max(b.abs()).max(1e-30);
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
        // large Λ: series only trustworthy very close to x = 1
        for i in 0..=8 {
            let x = 1.02 + i as f64 * 0.01;
            let order = ConicalOrder::new(0, 20.0).unwrap();
            let a = conical_p_series(order, x).unwrap();
            let b = conical_p_integral(order, x).unwrap();
            let scale = a.abs().max(b.abs()).max(1e-30);
            worst = worst.max((a - b).abs() / scale);
        }
        assert!(worst < 1e-8, "worst relative disagreement {worst:.3e}");
    }

    #[test]
    fn cross_method_value_mu0_lambda1_x2() {
        let order = ConicalOrder::new(0, 1.0).unwrap();
        let a = conical_p_series(order, 2.0).unwrap();
        let b = conical_p_integral(order, 2.0).unwrap();
        assert!((a - b).abs() / a.abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn satisfies_legendre_ode() {
        // third route: (1-x²)P'' - 2xP' + [ν(ν+1) - μ²/(1-x²)]P = 0
        // with ν(ν+1) = -(Λ² + 1/4) for the conical degree.
        let mut rng = Sampler::new(19);
        for _ in 0..30 {
            let mu = (rng.uniform() * 3.0) as u32;
            let lam = rng.range(0.1, 8.0);
            let x = rng.range(1.05, 4.0);
            let order = ConicalOrder::new(mu, lam).unwrap();
            let h = 1e-4 * x;
            let pm = conical_p(order, x - h).unwrap();
            let p0 = conical_p(order, x).unwrap();
            let pp = conical_p(order, x + h).unwrap();
            let d1 = (pp - pm) / (2.0 * h);
            let d2 = (pp - 2.0 * p0 + pm) / (h * h);
            let nu_term = -(lam * lam + 0.25);
            let mu2 = (mu * mu) as f64;
            let res = (1.0 - x * x) * d2 - 2.0 * x * d1 + (nu_term - mu2 / (1.0 - x * x)) * p0;
            let scale = (x * x * d2.abs()).max(x * d1.abs()).max(p0.abs()).max(1e-6);
            assert!(res.abs() / scale < 1e-4, "mu={mu} lam={lam} x={x}: {res:.3e}");
        }
    }

    #[test]
    fn stable_at_large_phase() {
        // integral path handles Λω where the series would cancel catastrophically
        let order = ConicalOrder::new(1, 40.0).unwrap();
        let p = conical_p(order, 2.0).unwrap();
        assert!(p.is_finite());
        assert!(p.abs() < 1.0, "conical functions are bounded here, got {p}");
    }

    #[test]
    fn domain_guards() {
        let order = ConicalOrder::new(0, 1.0).unwrap();
        assert!(conical_p(order, 0.5).is_err());
        assert!(conical_p(order, 2e6).is_err());
        assert!(ConicalOrder::new(0, -1.0).is_err());
        assert!(ConicalOrder::new(0, f64::NAN).is_err());
    }
}
