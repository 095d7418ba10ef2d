use std::f64::consts::PI;

use adia_core::corrections::{h_tilde_general, u_tilde_terms_volterra};
use adia_core::semiclassical::eta_infinity;
use adia_core::{
    a1_exp_pot_closed_form, a_ell_ibp, adiabatic_evolution, amplitudes_from_transfer, eta, evolve,
    first_order_exp_profile, h_tilde, oracle_rectangular_barrier, parse_sampled, transfer_matrix_exact,
    transfer_matrix_order_n, transfer_matrix_semiclassical, CorrectionControls, CorrectionMethod, EvolveControls,
    Interpolation, Mat2, PotentialSpec, ScatteringContext, C64,
};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn ctx(p: PotentialSpec, k: f64) -> ScatteringContext {
    ScatteringContext::new(p, k).unwrap()
}

#[test]
fn barrier_w_and_index_by_substitution() {
    let x = ctx(PotentialSpec::rectangular(c(1.0, 0.0), 1.0).unwrap(), 2.0);
    assert_eq!(x.w_of_tau(1.0), c(0.125, 0.0));
    let k = 1.7;
    let y = ctx(PotentialSpec::rectangular(c(0.75 * k * k, 0.0), 2.0).unwrap(), k);
    assert!((y.refractive_index(0.5 * y.tau_plus()).unwrap() - c(0.5, 0.0)).norm() < 1e-14);
}

#[test]
fn exp_profile_w_matches_index() {
    let (eps, big_k, l, k) = (0.05, 1.3, 4.0, 0.8);
    let x = ctx(PotentialSpec::exp_profile(eps, big_k, l).unwrap(), k);
    for i in 1..20 {
        let tau = x.tau_plus() * i as f64 / 20.0;
        let n = c(1.0, 0.0) + C64::from_polar(eps, big_k * tau / k);
        assert!((x.w_of_tau(tau) - (c(1.0, 0.0) - n * n) * 0.5).norm() < 1e-14);
        assert!((x.refractive_index(tau).unwrap() - n).norm() < 1e-10);
    }
}

#[test]
fn densely_sampled_gaussian_matches_analytic() {
    let (a, sigma, k) = (c(0.7, 0.2), 1.0, 1.4);
    let mut text = String::from("# x  Re(v)  Im(v)\n");
    let half = 8.0;
    let n = 1601;
    for i in 0..n {
        let xv = -half + 2.0 * half * i as f64 / (n - 1) as f64;
        let v = a * (-xv * xv / (2.0 * sigma * sigma)).exp();
        text.push_str(&format!("{xv:.17e} {:.17e} {:.17e}\n", v.re, v.im));
    }
    let sampled = parse_sampled(&text, Interpolation::Cubic).unwrap();
    let controls = EvolveControls::default();
    let ms = transfer_matrix_exact(&ctx(sampled, k), &controls).unwrap();
    let mg = transfer_matrix_exact(&ctx(PotentialSpec::gaussian(a, 0.0, sigma).unwrap(), k), &controls).unwrap();
    assert!((ms - mg).norm_max() < 1e-6, "{:e}", (ms - mg).norm_max());
}

#[test]
fn real_barrier_is_unitary_and_matches_matching_oracle() {
    for k in [0.4, 1.0, 3.0] {
        let (v0, l) = (c(0.5 * k * k, 0.0), 2.0 / k);
        let m = transfer_matrix_exact(&ctx(PotentialSpec::rectangular(v0, l).unwrap(), k), &EvolveControls::default())
            .unwrap();
        let a = amplitudes_from_transfer(&m).unwrap();
        assert!(a.unitarity_defect_left().abs() < 1e-8 && a.unitarity_defect_right().abs() < 1e-8);
        let oracle = amplitudes_from_transfer(&oracle_rectangular_barrier(v0, k, l).unwrap()).unwrap();
        assert!((a.t - oracle.t).norm() < 1e-10);
        assert!((a.r_left - oracle.r_left).norm() < 1e-10);
        assert!((a.r_right - oracle.r_right).norm() < 1e-10);
    }
}

#[test]
fn exact_engine_reproduces_first_order_exp_profile_at_resonance() {
    let eps = 1e-3;
    for k in [0.4, 0.5, 1.0] {
        let (big_k, l) = (2.0 * k, 2.0 * PI / k);
        let m = transfer_matrix_exact(
            &ctx(PotentialSpec::exp_profile(eps, big_k, l).unwrap(), k),
            &EvolveControls::default(),
        )
        .unwrap();
        let a = amplitudes_from_transfer(&m).unwrap();
        let f = first_order_exp_profile(eps, big_k, k, l);
        let bound = 10.0 * eps * eps;
        assert!((a.t - f.t).norm() < bound);
        assert!((a.r_right - f.r_right).norm() < bound);
        assert!((a.r_left - f.r_left).norm() < bound);
        // The "+1" numerator misses by ε/2.
        assert!(((a.r_left - f.r_left_plus_one).norm() - 0.5 * eps).abs() < bound);
    }
}

#[test]
fn exp_profile_phase_integral_closed_form() {
    let (eps, big_k, l, k) = (0.02, 1.0, 2.5, 0.9);
    let x = ctx(PotentialSpec::exp_profile(eps, big_k, l).unwrap(), k);
    let closed = c(0.0, eps * k / big_k) * (c(1.0, 0.0) - C64::from_polar(1.0, big_k * l));
    assert!((eta_infinity(&x).unwrap() - closed).norm() < 1e-12);
    assert!((eta(&x, x.tau_plus() + 3.0).unwrap() - closed).norm() < 1e-12);
    assert_eq!(eta(&x, -1.0).unwrap(), c(0.0, 0.0));
    let m = transfer_matrix_semiclassical(&x).unwrap();
    assert_eq!((m.m12, m.m21), (c(0.0, 0.0), c(0.0, 0.0)));
    assert!((m.m11 - (c(0.0, 1.0) * closed).exp()).norm() < 1e-12);
    assert!((m.m22 - (c(0.0, -1.0) * closed).exp()).norm() < 1e-12);
}

#[test]
fn adiabatic_error_tracks_diagnostic() {
    let p = PotentialSpec::gaussian(c(0.5, 0.1), 0.0, 1.0).unwrap();
    for k in [4.0, 8.0, 16.0] {
        let x = ctx(p.clone(), k);
        let (a, b) = (x.tau_minus(), x.tau_plus());
        let exact = evolve(&x, a, b, &EvolveControls::default()).unwrap().u;
        let approx = adiabatic_evolution(&x, a, b).unwrap();
        let bound = x.max_adiabaticity(4000) * (b - a);
        assert!((exact - approx).norm_max() <= bound, "k={k}: {:e} > {bound:e}", (exact - approx).norm_max());
    }
}

#[test]
fn order_zero_is_semiclassical() {
    let x = ctx(PotentialSpec::gaussian(c(0.3, 0.1), 0.0, 1.0).unwrap(), 1.5);
    let s = transfer_matrix_order_n(&x, 0, &CorrectionControls::default()).unwrap();
    assert_eq!(s.m(), transfer_matrix_semiclassical(&x).unwrap());
    assert!(s.terms.is_empty());
}

#[test]
fn residual_decreases_through_second_order_for_small_index_contrast() {
    let profiles = [
        (PotentialSpec::gaussian(c(0.08, 0.02), 0.0, 0.6).unwrap(), 1.0),
        (PotentialSpec::rectangular(c(0.09, 0.0), 4.0).unwrap(), 1.0),
        (PotentialSpec::smooth_rectangular(c(0.15, 0.03), 3.0, 0.3).unwrap(), 1.3),
        (PotentialSpec::exp_profile(0.04, 1.0, 2.0 * PI).unwrap(), 0.6),
    ];
    for (p, k) in profiles {
        let x = ctx(p.clone(), k);
        let exact = transfer_matrix_exact(&x, &EvolveControls::default()).unwrap();
        let r = transfer_matrix_order_n(&x, 2, &CorrectionControls::default()).unwrap().with_exact(exact);
        assert!(r.residuals[1] < r.residuals[0] && r.residuals[2] < r.residuals[1], "{p}: {:?}", r.residuals);
        for (j, m) in r.partial_sums.iter().enumerate().skip(1) {
            let expected = r.m0 * (Mat2::identity() + r.terms[..j].iter().fold(Mat2::zero(), |acc, t| acc + t.a));
            assert!((*m - expected).norm_max() < 1e-15);
        }
        assert_eq!(r.term_matrix(1), r.m0 * r.terms[0].a);
    }
}

#[test]
fn ibp_first_order_matches_closed_form_at_small_epsilon() {
    let (eps, big_k, l) = (1e-4, 1.0, 2.0 * PI);
    for k in [0.3, 0.7, 1.6] {
        let x = ctx(PotentialSpec::exp_profile(eps, big_k, l).unwrap(), k);
        let t = a_ell_ibp(&x, 1, &CorrectionControls::default()).unwrap();
        let (p, m) = a1_exp_pot_closed_form(eps, big_k, k, l);
        assert!((t.a_plus - p).norm() < 1e-3 * p.norm(), "k={k}");
        assert!((t.a_minus - m).norm() < 1e-3 * m.norm(), "k={k}");
    }
}

#[test]
fn ibp_on_sharp_barrier_is_the_limit_of_mollified_barriers() {
    let (v0, l, k) = (c(0.2, 0.05), 3.0, 1.2);
    let controls = CorrectionControls::default();
    let sharp = a_ell_ibp(&ctx(PotentialSpec::rectangular(v0, l).unwrap(), k), 1, &controls).unwrap();
    assert!(sharp.a.is_finite() && sharp.norm() > 0.0);
    let mut prev = f64::INFINITY;
    let mut slopes = vec![];
    for ramp in [0.4, 0.2, 0.1, 0.05, 0.025] {
        let smooth = ctx(PotentialSpec::smooth_rectangular(v0, l, ramp).unwrap(), k);
        let (u, _) = u_tilde_terms_volterra(&smooth, 1, &controls).unwrap();
        let tm = smooth.tau_minus();
        let a1 = adia_core::u0_inv(tm) * u[0] * adia_core::u0(tm);
        let d = (a1 - sharp.a).norm_max();
        assert!(d < prev, "ramp {ramp}: {d:e} after {prev:e}");
        prev = d;
        slopes.push(d / ramp);
    }
    // Linear in the ramp width, so the gap closes as the ramp vanishes.
    let (first, last) = (slopes[1], slopes[slopes.len() - 1]);
    assert!((first - last).abs() < 0.02 * last, "{slopes:?}");
}

#[test]
fn transformed_hamiltonian_forms_agree_at_left_edge() {
    let x = ctx(PotentialSpec::gaussian(c(0.6, -0.3), 0.2, 0.9).unwrap(), 1.1);
    let (a, b) = (x.tau_minus(), x.tau_plus());
    for i in 1..40 {
        let tau = a + (b - a) * i as f64 / 40.0;
        let h = h_tilde(&x, tau).unwrap();
        assert_eq!((h.m11, h.m22), (c(0.0, 0.0), c(0.0, 0.0)));
        assert!((h_tilde_general(&x, a, tau).unwrap() - h).norm_max() < 1e-12);
    }
}

#[test]
fn series_routes_reject_what_they_cannot_do() {
    let x = ctx(PotentialSpec::gaussian(c(0.3, 0.0), 0.0, 1.0).unwrap(), 1.0);
    for (method, n) in [(CorrectionMethod::Nested, 4), (CorrectionMethod::Ibp, 3)] {
        let r = transfer_matrix_order_n(&x, n, &CorrectionControls { method, ..CorrectionControls::default() });
        assert!(matches!(r, Err(adia_core::Error::UnsupportedOrder { .. })));
    }
    let volterra = transfer_matrix_order_n(&x, 6, &CorrectionControls::default()).unwrap();
    assert_eq!(volterra.order(), 6);
}
