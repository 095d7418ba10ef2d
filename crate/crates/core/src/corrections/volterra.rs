//! Series terms from the recursion `dŨ^(ℓ)/dτ = −iH̃(τ) Ũ^(ℓ−1)(τ)`,
//! `Ũ^(0) = I`, `Ũ^(ℓ)(τ₋) = 0`, integrated for all orders at once together
//! with `η`.
//!
//! At a jump of `v` the coupling `ṅ/2n = ½ d(ln n)/dτ` is a delta function.
//! Across it the full series is multiplied by `exp((Δ/2)P(δ))` with
//! `Δ = ln n⁺ − ln n⁻`, so the order-ℓ terms pick up
//! `Σ_j (Δ/2)^j P^j/j! · Ũ^(ℓ−j)`.

use num_complex::Complex64 as C64;

use super::{phase_coupling, CorrectionControls, CorrectionMethod, CorrectionTerm};
use crate::error::{Error, Result};
use crate::hamiltonian::{ScatteringContext, DEGENERACY_TOLERANCE};
use crate::mat2::{u0, u0_inv, Mat2, ONE, ZERO};
use crate::ode::dopri5;
use crate::potentials::Side;

fn unpack(y: &[C64], l: usize) -> Mat2 {
    let b = 1 + 4 * (l - 1);
    Mat2::new(y[b], y[b + 1], y[b + 2], y[b + 3])
}

fn pack(y: &mut [C64], l: usize, m: Mat2) {
    let b = 1 + 4 * (l - 1);
    y[b..b + 4].copy_from_slice(&m.entries());
}

fn apply_jump(ctx: &ScatteringContext, tau: f64, y: &mut [C64], order: usize) -> Result<()> {
    let (_, ln_left) = ctx.index_and_log(tau, Side::Left)?;
    let (_, ln_right) = ctx.index_and_log(tau, Side::Right)?;
    let half = (ln_right - ln_left) * 0.5;
    let p = phase_coupling(y[0] + (tau - ctx.tau_minus()));
    // J^(j) = (Δ/2)^j P^j / j!
    let mut jumps = Vec::with_capacity(order + 1);
    let mut coef = ONE;
    for j in 0..=order {
        if j > 0 {
            coef = coef * half / j as f64;
        }
        jumps.push(if j % 2 == 1 { p * coef } else { Mat2::identity() * coef });
    }
    let before: Vec<Mat2> = (0..=order).map(|l| if l == 0 { Mat2::identity() } else { unpack(y, l) }).collect();
    for l in 1..=order {
        let mut acc = Mat2::zero();
        for j in 0..=l {
            acc += jumps[j] * before[l - j];
        }
        pack(y, l, acc);
    }
    Ok(())
}

/// `Ũ^(1..=order)(τ₊, τ₋)` and the accumulated local error estimate.
pub fn u_tilde_terms_volterra(
    ctx: &ScatteringContext,
    order: usize,
    controls: &CorrectionControls,
) -> Result<(Vec<Mat2>, f64)> {
    if ctx.is_free() || order == 0 {
        return Ok((vec![Mat2::zero(); order], 0.0));
    }
    let tau_minus = ctx.tau_minus();
    let mut y = vec![ZERO; 1 + 4 * order];
    let mut err = 0.0;
    let points = ctx.segment_points().to_vec();
    for j in 0..ctx.segment_count() {
        let (a, b) = ctx.segment(j);
        if ctx.is_jump(a) {
            apply_jump(ctx, a, &mut y, order)?;
        }
        let stats = dopri5(
            |t, y, dy| {
                let (n, _) = ctx.index_in_segment(t, j)?;
                if n.norm() < DEGENERACY_TOLERANCE {
                    return Err(Error::DegenerateSpectrum { tau: t, n_abs: n.norm() });
                }
                let g = ctx.ndot_in_segment(t, j)? / (2.0 * n);
                dy[0] = n - ONE;
                let gp = phase_coupling(y[0] + (t - tau_minus)) * g;
                let mut prev = Mat2::identity();
                for l in 1..=order {
                    let d = gp * prev;
                    pack(dy, l, d);
                    prev = unpack(y, l);
                }
                Ok(())
            },
            a,
            b,
            &mut y,
            &controls.ode,
        )?;
        err += stats.error_estimate;
    }
    if let Some(&last) = points.last() {
        if ctx.is_jump(last) {
            apply_jump(ctx, last, &mut y, order)?;
        }
    }
    Ok(((1..=order).map(|l| unpack(&y, l)).collect(), err))
}

/// `Ũ^(ℓ)(τ₊, τ₋)` alone.
pub fn u_tilde_term_volterra(ctx: &ScatteringContext, order: usize, controls: &CorrectionControls) -> Result<Mat2> {
    if order == 0 {
        return Ok(Mat2::identity());
    }
    Ok(u_tilde_terms_volterra(ctx, order, controls)?.0[order - 1])
}

/// `A^(ℓ) = U₀(τ₋)⁻¹ Ũ^(ℓ) U₀(τ₋)` for `ℓ = 1..=order`.
pub(crate) fn a_terms_volterra(
    ctx: &ScatteringContext,
    order: usize,
    controls: &CorrectionControls,
) -> Result<Vec<CorrectionTerm>> {
    let (us, err) = u_tilde_terms_volterra(ctx, order, controls)?;
    let tm = ctx.tau_minus();
    Ok(us
        .into_iter()
        .enumerate()
        .map(|(i, u)| CorrectionTerm::from_matrix(i + 1, u0_inv(tm) * u * u0(tm), CorrectionMethod::Volterra, err))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrections::h_tilde;
    use crate::exact::{evolve, EvolveControls};
    use crate::mat2::I;
    use crate::potentials::PotentialSpec;
    use crate::quadrature::{integrate_adaptive, QuadOptions};
    use crate::semiclassical::adiabatic_evolution;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn free_potential_gives_zero_terms() {
        let ctx = ScatteringContext::new(PotentialSpec::free(), 1.0).unwrap();
        let u = u_tilde_term_volterra(&ctx, 1, &CorrectionControls::default()).unwrap();
        assert_eq!(u, Mat2::zero());
    }

    #[test]
    fn first_order_is_single_integral() {
        let ctx = ScatteringContext::new(PotentialSpec::gaussian(c(0.3, 0.2), 0.0, 1.0).unwrap(), 1.2).unwrap();
        let u1 = u_tilde_term_volterra(&ctx, 1, &CorrectionControls::default()).unwrap();
        let opts = QuadOptions { rel_tol: 1e-12, abs_tol: 1e-15, ..QuadOptions::default() };
        let iv = [(ctx.tau_minus(), ctx.tau_plus())];
        let entry = |pick: fn(&Mat2) -> C64| {
            integrate_adaptive(|t| Ok(pick(&(h_tilde(&ctx, t)? * -I))), &iv, &opts).unwrap().value
        };
        let q12 = entry(|m| m.m12);
        let q21 = entry(|m| m.m21);
        assert!((u1.m12 - q12).norm() < 1e-10, "{:e}", (u1.m12 - q12).norm());
        assert!((u1.m21 - q21).norm() < 1e-10);
        assert_eq!(u1.m11, ZERO);
    }

    #[test]
    fn partial_series_approaches_exact_evolution() {
        let ctx = ScatteringContext::new(PotentialSpec::gaussian(c(0.15, 0.05), 0.0, 0.5).unwrap(), 1.0).unwrap();
        let (a, b) = (ctx.tau_minus(), ctx.tau_plus());
        let exact = evolve(&ctx, a, b, &EvolveControls::default()).unwrap().u;
        let u_ad = adiabatic_evolution(&ctx, a, b).unwrap();
        let (terms, _) = u_tilde_terms_volterra(&ctx, 6, &CorrectionControls::default()).unwrap();
        let mut acc = Mat2::identity();
        let mut prev = (u_ad * acc - exact).norm_max();
        for (l, t) in terms.iter().enumerate() {
            acc += *t;
            let r = (u_ad * acc - exact).norm_max();
            assert!(r < prev || r < 1e-9, "order {}: {r:e} after {prev:e}", l + 1);
            prev = r;
        }
        assert!(prev < 1e-8, "{prev:e}");
    }

    #[test]
    fn jump_rule_is_exact_for_piecewise_constant() {
        // Summing many orders must reproduce the exact barrier matrix.
        let k = 1.0;
        let ctx = ScatteringContext::new(PotentialSpec::rectangular(c(0.3, 0.1), 2.0).unwrap(), k).unwrap();
        let controls = CorrectionControls::default();
        let terms = a_terms_volterra(&ctx, 14, &controls).unwrap();
        let m0 = crate::semiclassical::transfer_matrix_semiclassical(&ctx).unwrap();
        let mut acc = Mat2::identity();
        for t in &terms {
            acc += t.a;
        }
        let exact = crate::exact::oracle_rectangular_barrier(c(0.3, 0.1), k, 2.0).unwrap();
        assert!((m0 * acc - exact).norm_max() < 1e-9, "{:e}", (m0 * acc - exact).norm_max());
    }
}
