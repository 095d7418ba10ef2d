use adia_core::corrections::u_tilde_terms_volterra;
use adia_core::semiclassical::delta;
use adia_core::{
    a_ell_nested, amplitudes_from_transfer, transfer_matrix_exact, CorrectionControls, EvolveControls, PotentialSpec,
    ScatteringContext, C64,
};
use proptest::prelude::*;

fn gaussian(re: f64, im: f64, center: f64, width: f64, k: f64) -> ScatteringContext {
    ScatteringContext::new(PotentialSpec::gaussian(C64::new(re, im), center, width).unwrap(), k).unwrap()
}

fn simpson(f: impl Fn(f64) -> C64, a: f64, b: f64, n: usize) -> C64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unit_determinant_on_smooth_complex_profiles(
        re in -0.8f64..0.8, im in -0.4f64..0.4, center in -1.0f64..1.0, width in 0.5f64..2.0, k in 0.3f64..6.0,
    ) {
        let m = transfer_matrix_exact(&gaussian(re, im, center, width, k), &EvolveControls::default()).unwrap();
        prop_assert!((m.det() - C64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn mirrored_profile_swaps_reflection_sides(
        re in -0.6f64..0.6, im in -0.3f64..0.3, center in 0.1f64..1.5, width in 0.5f64..1.5, k in 0.5f64..3.0,
    ) {
        let c = EvolveControls::default();
        let a = amplitudes_from_transfer(&transfer_matrix_exact(&gaussian(re, im, center, width, k), &c).unwrap()).unwrap();
        let b = amplitudes_from_transfer(&transfer_matrix_exact(&gaussian(re, im, -center, width, k), &c).unwrap()).unwrap();
        prop_assert!((a.t - b.t).norm() < 1e-8);
        prop_assert!((a.r_left - b.r_right).norm() < 1e-8);
        prop_assert!((a.r_right - b.r_left).norm() < 1e-8);
    }

    #[test]
    fn phase_differences_integrate_the_index(
        re in -0.6f64..0.6, im in -0.3f64..0.3, width in 0.5f64..1.5, k in 0.5f64..3.0, s in 0.05f64..0.95, t in 0.05f64..0.95,
    ) {
        let x = gaussian(re, im, 0.0, width, k);
        let span = x.tau_plus() - x.tau_minus();
        let (a, b) = (x.tau_minus() + s * span, x.tau_minus() + t * span);
        let direct = simpson(|tau| x.refractive_index(tau).unwrap(), a, b, 4000);
        prop_assert!((delta(&x, b).unwrap() - delta(&x, a).unwrap() - direct).norm() < 1e-9);
    }

    #[test]
    fn correction_terms_keep_their_parity(
        re in -0.5f64..0.5, im in -0.3f64..0.3, center in -1.0f64..1.0, width in 0.5f64..1.5, k in 0.5f64..3.0,
    ) {
        let x = gaussian(re, im, center, width, k);
        let controls = CorrectionControls::default();
        let (u, _) = u_tilde_terms_volterra(&x, 4, &controls).unwrap();
        for (l, m) in u.iter().enumerate() {
            let order = l + 1;
            let wrong = if order % 2 == 1 { m.m11.norm().max(m.m22.norm()) } else { m.m12.norm().max(m.m21.norm()) };
            prop_assert!(wrong <= 1e-12 * m.norm_max().max(1e-300), "order {order}: {wrong:e}");
        }
    }

    #[test]
    fn volterra_and_nested_routes_agree(
        re in -0.4f64..0.4, im in -0.2f64..0.2, width in 0.6f64..1.5, k in 0.5f64..2.5,
    ) {
        let x = gaussian(re, im, 0.0, width, k);
        let controls = CorrectionControls::default();
        let (u, _) = u_tilde_terms_volterra(&x, 2, &controls).unwrap();
        let tm = x.tau_minus();
        for order in 1..=2 {
            let a = adia_core::u0_inv(tm) * u[order - 1] * adia_core::u0(tm);
            let nested = a_ell_nested(&x, order, &controls).unwrap();
            prop_assert!((a - nested.a).norm_max() < 1e-7 * (1.0 + a.norm_max()), "order {order}");
        }
    }
}
