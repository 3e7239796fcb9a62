//! Property tests for the invariants that hold on whole input families.

use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::Arc;
use tauloc_core::classical::{
    restrict_classical, ClassicalObservable, PhasePoint, RootSearch, SurfaceFunction,
};
use tauloc_core::fourvec::FourVector;
use tauloc_core::grid::CartesianGrid;
use tauloc_core::specfun::{conical_p_integral, conical_p_series, ConicalOrder};
use tauloc_core::state::MomentumState;
use tauloc_core::EnergySign::Positive;

fn arb_on_shell() -> impl Strategy<Value = PhasePoint> {
    (
        prop::array::uniform4(-2.0f64..2.0),
        prop::array::uniform3(-1.5f64..1.5),
        0.5f64..2.0,
    )
        .prop_map(|(x, p, m)| {
            PhasePoint::on_shell(FourVector(x), p, m).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Restriction property i: τ-independent observables pass through the
    /// delta integral unchanged (single simple root).
    #[test]
    fn restriction_preserves_constants(pt in arb_on_shell(), c in -10.0f64..10.0, z in -2.0f64..2.0) {
        prop_assume!(pt.p[3].abs() > 0.05);
        let a = ClassicalObservable::new("c", move |_, _| c);
        let f = SurfaceFunction::fixed_z(z);
        let r = restrict_classical(&a, &f, &pt, &RootSearch::default()).unwrap();
        prop_assert!((r - c).abs() < 1e-10 * (1.0 + c.abs()));
    }

    /// Restriction property ii: the surface function itself restricts to zero.
    #[test]
    fn restriction_annihilates_surface(pt in arb_on_shell(), t in -2.0f64..2.0) {
        let u = FourVector::new(1.0, 0.0, 0.0, 0.0);
        let f = SurfaceFunction::instantaneous(u, t);
        let f2 = f.clone();
        let a = ClassicalObservable::new("f", move |p: &PhasePoint, tau: f64| f2.eval(p, tau));
        let r = restrict_classical(&a, &f, &pt, &RootSearch::default()).unwrap();
        prop_assert!(r.abs() < 1e-9);
    }

    /// Q^μ(τ) is exactly linear in τ with rate p^μ/m.
    #[test]
    fn four_position_linear_in_tau(pt in arb_on_shell(), tau in -5.0f64..5.0) {
        let q0 = tauloc_core::classical::four_position(&pt, 0.0).unwrap();
        let qt = tauloc_core::classical::four_position(&pt, tau).unwrap();
        for mu in 0..4 {
            prop_assert!((qt[mu] - q0[mu] - pt.p[mu] * tau / pt.m).abs() < 1e-10);
        }
    }

    /// The two conical-function evaluation routes agree wherever the series
    /// is well-conditioned.
    #[test]
    fn conical_dual_path(mu in 0u32..4, lam in 0.0f64..4.0, x in 1.05f64..2.2) {
        let order = ConicalOrder::new(mu, lam).unwrap();
        let a = conical_p_series(order, x).unwrap();
        let b = conical_p_integral(order, x).unwrap();
        let scale = a.abs().max(b.abs()).max(1e-30);
        prop_assert!((a - b).abs() / scale < 1e-7, "mu={} lam={} x={}: {} vs {}", mu, lam, x, a, b);
    }
}

proptest! {
    // grid states are costlier; fewer cases
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Inner products are Hermitian and norms positive for arbitrary
    /// Gaussian pairs on a shared grid.
    #[test]
    fn inner_product_hermitian(
        c1 in prop::array::uniform3(-0.5f64..0.5),
        c2 in prop::array::uniform3(-0.5f64..0.5),
        s1 in 0.3f64..0.8,
        s2 in 0.3f64..0.8,
    ) {
        let grid = Arc::new(CartesianGrid::cubic(16, 5.0, 1.0, false).unwrap());
        let a = MomentumState::gaussian(grid.clone(), Positive, c1, s1).unwrap();
        let b = MomentumState::gaussian(grid, Positive, c2, s2).unwrap();
        let ab = a.inner_product(&b).unwrap();
        let ba = b.inner_product(&a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-12);
        prop_assert!(a.norm_sqr() > 0.0 && b.norm_sqr() > 0.0);
    }

    /// Detection-time densities ignore global phases.
    #[test]
    fn time_density_ignores_global_phase(alpha in 0.0f64..6.283, t in -3.0f64..3.0) {
        let rg = Arc::new(tauloc_core::radial::RadialGrid::new(256, 1e-3, 12.0, 1.0).unwrap());
        let (plain, _) = tauloc_core::radial::RadialState::from_closure(
            rg.clone(), Positive, 0,
            |p| {
                let r = (p[0]*p[0]+p[1]*p[1]+p[2]*p[2]).sqrt();
                Complex64::new((-(r-2.0)*(r-2.0)).exp(), 0.0)
            });
        let (rotated, _) = tauloc_core::radial::RadialState::from_closure(
            rg, Positive, 0,
            move |p| {
                let r = (p[0]*p[0]+p[1]*p[1]+p[2]*p[2]).sqrt();
                Complex64::from_polar((-(r-2.0)*(r-2.0)).exp(), alpha)
            });
        let pa = tauloc_core::povm::time_overlap(&plain, t, 0, 0, 0.0).unwrap().norm_sqr();
        let pb = tauloc_core::povm::time_overlap(&rotated, t, 0, 0, 0.0).unwrap().norm_sqr();
        prop_assert!((pa - pb).abs() < 1e-12 * pa.max(1e-12));
    }
}
