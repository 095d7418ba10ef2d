//! Reference computation of the evolution operator `U(τ, τ₀)` by adaptive
//! time-ordered integration, and of the transfer matrix
//! `M = U₀(τ₊)⁻¹ U(τ₊, τ₋) U₀(τ₋)`.
//!
//! Integration runs in the frame co-moving with the free evolution,
//! `V(τ) = U₀(τ)⁻¹ U(τ, τ₀) U₀(τ₀)`, which obeys `V′ = −i w U₀⁻¹ N U₀ V` and is
//! constant wherever `v = 0`. Over the whole support `V` is `M` itself.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::ScatteringContext;
use crate::mat2::{u0, u0_inv, Mat2, I, ONE, ZERO};
use crate::ode::{dopri5, magnus4, OdeStats, OdeTolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stepper {
    /// Embedded Runge–Kutta 4(5) (Dormand–Prince).
    #[default]
    Dopri5,
    /// Fourth-order Magnus exponential with step doubling.
    Magnus4,
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveControls {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub stepper: Stepper,
    /// Doublings of the truncation radius tried for infinite-range potentials.
    pub max_doublings: usize,
}

impl Default for EvolveControls {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 5_000_000, stepper: Stepper::Dopri5, max_doublings: 3 }
    }
}

impl EvolveControls {
    fn ode(&self) -> OdeTolerances {
        OdeTolerances { rtol: self.rtol, atol: self.atol, max_steps: self.max_steps }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvolutionResult {
    pub u: Mat2,
    pub steps: usize,
    /// Accumulated local error bound reported by the stepper.
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ExactTransfer {
    pub m: Mat2,
    pub steps: usize,
    pub error_estimate: f64,
    /// Support actually integrated, in `x`.
    pub support: (f64, f64),
}

/// `U₀(τ)⁻¹ N U₀(τ)`.
fn rotated_coupling(tau: f64) -> Mat2 {
    let e = C64::from_polar(1.0, 2.0 * tau);
    Mat2::new(ONE, e.conj(), -e, -ONE)
}

/// `V(b, a)` in the co-moving frame.
fn evolve_comoving(ctx: &ScatteringContext, a: f64, b: f64, controls: &EvolveControls) -> Result<(Mat2, OdeStats)> {
    let mut cuts = vec![a];
    cuts.extend(ctx.segment_points().iter().copied().filter(|&p| p > a && p < b));
    cuts.push(b);
    let mut v = Mat2::identity();
    let mut stats = OdeStats::default();
    let tol = controls.ode();
    for w in cuts.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let j = match ctx.segment_index(0.5 * (ta + tb), crate::Side::Right) {
            Some(j) => j,
            None => continue,
        };
        let generator = |t: f64| -> Mat2 { rotated_coupling(t) * (-I * ctx.w_in_segment(t, j)) };
        let piece = match controls.stepper {
            Stepper::Dopri5 => {
                let mut y = v.entries().to_vec();
                let s = dopri5(
                    |t, y, dy| {
                        let g = generator(t);
                        let m = Mat2::new(y[0], y[1], y[2], y[3]);
                        let r = g * m;
                        dy.copy_from_slice(&r.entries());
                        Ok(())
                    },
                    ta,
                    tb,
                    &mut y,
                    &tol,
                )?;
                stats.merge(&s);
                Mat2::new(y[0], y[1], y[2], y[3])
            }
            Stepper::Magnus4 => {
                let mut u = v;
                let s = magnus4(|t| Ok(generator(t)), ta, tb, &mut u, &tol)?;
                stats.merge(&s);
                u
            }
        };
        if !piece.is_finite() {
            return Err(Error::ToleranceNotMet(format!("evolution overflowed on [{ta}, {tb}]")));
        }
        v = piece;
    }
    Ok((v, stats))
}

/// Solves `dU/dτ = −iH(τ)U`, `U(τ_from) = I`, splitting at every declared
/// breakpoint so that no step straddles a jump.
pub fn evolve(
    ctx: &ScatteringContext,
    tau_from: f64,
    tau_to: f64,
    controls: &EvolveControls,
) -> Result<EvolutionResult> {
    if !(tau_from.is_finite() && tau_to.is_finite()) || tau_from > tau_to {
        return Err(Error::InvalidParameter(format!("invalid interval [{tau_from}, {tau_to}]")));
    }
    let (v, stats) = evolve_comoving(ctx, tau_from, tau_to, controls)?;
    Ok(EvolutionResult {
        u: u0(tau_to) * v * u0_inv(tau_from),
        steps: stats.steps,
        error_estimate: stats.error_estimate,
    })
}

/// Transfer matrix from exact evolution across the support.
pub fn transfer_matrix_exact(ctx: &ScatteringContext, controls: &EvolveControls) -> Result<Mat2> {
    Ok(transfer_matrix_exact_detailed(ctx, controls)?.m)
}

/// As [`transfer_matrix_exact`], with step statistics. Infinite-range
/// potentials are re-integrated with a doubled truncation radius (composing
/// only the added slabs) until `M` stops changing.
pub fn transfer_matrix_exact_detailed(ctx: &ScatteringContext, controls: &EvolveControls) -> Result<ExactTransfer> {
    if ctx.is_free() {
        return Ok(ExactTransfer { m: Mat2::identity(), steps: 0, error_estimate: 0.0, support: ctx.support_x() });
    }
    let (mut m, mut stats) = evolve_comoving(ctx, ctx.tau_minus(), ctx.tau_plus(), controls)?;
    let mut support = ctx.support_x();
    if !ctx.potential().has_finite_support() {
        let k = ctx.k();
        let tol = (10.0 * controls.rtol).max(1e-12);
        let mut converged = false;
        let mut change = 0.0;
        for _ in 0..controls.max_doublings {
            let (lo, hi) = support;
            let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let wide = (c - 2.0 * r, c + 2.0 * r);
            let outer = ScatteringContext::with_support(ctx.potential_arc(), k, wide.0, wide.1)?;
            let (left, s1) = evolve_comoving(&outer, k * wide.0, k * lo, controls)?;
            let (right, s2) = evolve_comoving(&outer, k * hi, k * wide.1, controls)?;
            stats.merge(&s1);
            stats.merge(&s2);
            let next = right * m * left;
            change = (next - m).norm_max();
            m = next;
            support = wide;
            if change <= tol * m.norm_max().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::TruncationTooSmall { change });
        }
    }
    Ok(ExactTransfer { m, steps: stats.steps, error_estimate: stats.error_estimate, support })
}

/// `[[e^{iqx}, e^{−iqx}], [iq e^{iqx}, −iq e^{−iqx}]]`, mapping plane-wave
/// coefficients to `(ψ, ψ′)` at `x`.
fn plane_wave_matrix(q: C64, x: f64) -> Mat2 {
    let e = (I * q * x).exp();
    let ei = (-I * q * x).exp();
    Mat2::new(e, ei, I * q * e, -I * q * ei)
}

/// Transfer matrix of `v = v0` on `[0, L]` by matching plane waves at both
/// interfaces, with interior wavenumber `κ = k n` on the continuous branch
/// selected from `n = 1` outside.
pub fn oracle_rectangular_barrier(v0: C64, k: f64, length: f64) -> Result<Mat2> {
    if !(k > 0.0 && k.is_finite() && length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidParameter("k and L must be positive".into()));
    }
    if v0 == ZERO {
        return Ok(Mat2::identity());
    }
    let r = (ONE - v0 / (k * k)).sqrt();
    // Root closer to 1; the upper one on a tie.
    let n = if (r - ONE).norm() < (r + ONE).norm() || ((r - ONE).norm() == (r + ONE).norm() && r.im >= 0.0) {
        r
    } else {
        -r
    };
    if n.norm() < crate::hamiltonian::DEGENERACY_TOLERANCE {
        return Err(Error::DegenerateSpectrum { tau: 0.0, n_abs: n.norm() });
    }
    let kk = C64::new(k, 0.0);
    let kappa = n * k;
    let outside_right = plane_wave_matrix(kk, length).inverse().expect("plane-wave matrix is invertible");
    let inside_left =
        plane_wave_matrix(kappa, 0.0).inverse().ok_or(Error::DegenerateSpectrum { tau: 0.0, n_abs: n.norm() })?;
    Ok(outside_right * plane_wave_matrix(kappa, length) * inside_left * plane_wave_matrix(kk, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitudes::amplitudes_from_transfer;
    use crate::potentials::PotentialSpec;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn free_evolution_is_u0() {
        let ctx = ScatteringContext::new(PotentialSpec::free(), 1.7).unwrap();
        let r = evolve(&ctx, -0.3, 4.1, &EvolveControls::default()).unwrap();
        assert!((r.u - u0(4.4)).norm_max() < 1e-14);
        assert_eq!(transfer_matrix_exact(&ctx, &EvolveControls::default()).unwrap(), Mat2::identity());
    }

    #[test]
    fn rectangular_matches_constant_exponential() {
        let (k, l) = (1.3, 1.7);
        let v0 = c(0.8, -0.3);
        let ctx = ScatteringContext::new(PotentialSpec::rectangular(v0, l).unwrap(), k).unwrap();
        let tb = k * l;
        let r = evolve(&ctx, 0.0, tb, &EvolveControls::default()).unwrap();
        // exp(−iH tb) with constant H.
        let h = crate::hamiltonian::hamiltonian_from_w(v0 / (2.0 * k * k));
        let closed = (h * (-I * tb)).exp_traceless();
        assert!((r.u - closed).norm_max() < 1e-10, "{:e}", (r.u - closed).norm_max());
    }

    #[test]
    fn barrier_agrees_with_matching_oracle() {
        let k = 1.1;
        for v0 in [c(0.3, 0.1) * (k * k), c(0.5 * k * k, 0.0), c(2.0, 0.0), c(-1.5, 0.4)] {
            let l = 2.0 / k;
            let ctx = ScatteringContext::new(PotentialSpec::rectangular(v0, l).unwrap(), k).unwrap();
            let m = transfer_matrix_exact(&ctx, &EvolveControls::default()).unwrap();
            let o = oracle_rectangular_barrier(v0, k, l).unwrap();
            assert!((m - o).norm_max() < 1e-10, "v0={v0}: {:e}", (m - o).norm_max());
            assert!((o.det() - ONE).norm() < 1e-13);
        }
    }

    #[test]
    fn real_barrier_is_unitary() {
        let k = 2.0;
        let v0 = c(0.5 * k * k, 0.0);
        let ctx = ScatteringContext::new(PotentialSpec::rectangular(v0, 1.0).unwrap(), k).unwrap();
        let a = amplitudes_from_transfer(&transfer_matrix_exact(&ctx, &EvolveControls::default()).unwrap()).unwrap();
        assert!(a.unitarity_defect_left().abs() < 1e-8);
        assert!(a.unitarity_defect_right().abs() < 1e-8);
    }

    #[test]
    fn steppers_agree_and_compose() {
        let p = PotentialSpec::gaussian(c(0.7, 0.2), 0.3, 0.8).unwrap();
        let ctx = ScatteringContext::new(p, 1.4).unwrap();
        let dp = EvolveControls::default();
        let mg = EvolveControls { stepper: Stepper::Magnus4, ..dp };
        let (a, b, m) = (ctx.tau_minus(), ctx.tau_plus(), 0.2);
        let u1 = evolve(&ctx, a, b, &dp).unwrap().u;
        let u2 = evolve(&ctx, a, b, &mg).unwrap().u;
        assert!((u1 - u2).norm_max() < 1e-8, "{:e}", (u1 - u2).norm_max());
        let left = evolve(&ctx, a, m, &dp).unwrap().u;
        let right = evolve(&ctx, m, b, &dp).unwrap().u;
        assert!((right * left - u1).norm_max() < 1e-9);
        assert!((u1.det() - ONE).norm() < 1e-9);
    }

    #[test]
    fn oracle_trivial_cases() {
        assert_eq!(oracle_rectangular_barrier(ZERO, 1.0, 2.0).unwrap(), Mat2::identity());
        assert!(matches!(oracle_rectangular_barrier(c(1.0, 0.0), 1.0, 2.0), Err(Error::DegenerateSpectrum { .. })));
    }
}
