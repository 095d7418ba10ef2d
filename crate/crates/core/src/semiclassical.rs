//! Zeroth-order (adiabatic) layer: the phase integral `η(τ)`, the geometric
//! phase factor, the adiabatic evolution operator and the semiclassical
//! transfer matrix `diag(e^{iη(∞)}, e^{−iη(∞)})`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::ScatteringContext;
use crate::mat2::{Mat2, I, ONE, ZERO};
use crate::quadrature::{adaptive_panels, gk15, integrate_adaptive, QuadOptions};

/// Widest panel kept in the cache, in units of `τ`.
const MAX_PANEL: f64 = 2.0;

#[derive(Debug, Clone, Copy)]
struct PhasePanel {
    a: f64,
    b: f64,
    segment: usize,
    eta_start: C64,
}

/// Converged quadrature panels of `∫(n − 1)dτ` over the support together
/// with the cumulative value at each panel start.
#[derive(Debug, Clone)]
pub struct PhaseCache {
    tau_minus: f64,
    tau_plus: f64,
    panels: Vec<PhasePanel>,
    eta_total: C64,
}

impl PhaseCache {
    pub(crate) fn build(ctx: &ScatteringContext) -> Result<Self> {
        let opts = QuadOptions { rel_tol: 1e-13, abs_tol: 1e-15, max_panels: 2_000_000 };
        let mut panels = Vec::new();
        let mut eta = ZERO;
        for j in 0..ctx.segment_count() {
            let (a, b) = ctx.segment(j);
            let pieces = ((b - a) / MAX_PANEL).ceil().max(1.0) as usize;
            let h = (b - a) / pieces as f64;
            let intervals: Vec<(f64, f64)> = (0..pieces)
                .map(|i| (a + i as f64 * h, if i + 1 == pieces { b } else { a + (i + 1) as f64 * h }))
                .collect();
            let f = |t: f64| ctx.index_in_segment(t, j).map(|(n, _)| n - ONE);
            for p in adaptive_panels(f, &intervals, &opts)? {
                panels.push(PhasePanel { a: p.a, b: p.b, segment: j, eta_start: eta });
                eta += p.value;
            }
        }
        Ok(Self { tau_minus: ctx.tau_minus(), tau_plus: ctx.tau_plus(), panels, eta_total: eta })
    }

    pub fn eta_total(&self) -> C64 {
        self.eta_total
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// Panel boundaries, useful as quadrature breakpoints for integrands
    /// that contain `η`.
    pub fn panel_edges(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.panels.iter().map(|p| p.a).collect();
        if let Some(p) = self.panels.last() {
            e.push(p.b);
        }
        e
    }

    fn eta(&self, ctx: &ScatteringContext, tau: f64) -> Result<C64> {
        if self.panels.is_empty() || tau <= self.tau_minus {
            return Ok(ZERO);
        }
        if tau >= self.tau_plus {
            return Ok(self.eta_total);
        }
        let i = self.panels.partition_point(|p| p.a <= tau).max(1) - 1;
        let p = self.panels[i];
        if tau <= p.a {
            return Ok(p.eta_start);
        }
        let mut f = |t: f64| ctx.index_in_segment(t, p.segment).map(|(n, _)| n - ONE);
        let (part, _) = gk15(&mut f, p.a, tau.min(p.b))?;
        Ok(p.eta_start + part)
    }
}

/// `η(τ) = ∫_{τ₋}^{τ} [n(τ′) − 1] dτ′`.
pub fn eta(ctx: &ScatteringContext, tau: f64) -> Result<C64> {
    ctx.phase_cache()?.eta(ctx, tau)
}

/// `δ(τ) = ∫_{τ₋}^{τ} n dτ′ = η(τ) + τ − τ₋`.
pub fn delta(ctx: &ScatteringContext, tau: f64) -> Result<C64> {
    Ok(eta(ctx, tau)? + (tau - ctx.tau_minus()))
}

/// `η(∞)`, the full phase integral over the support.
pub fn eta_infinity(ctx: &ScatteringContext) -> Result<C64> {
    Ok(ctx.phase_cache()?.eta_total())
}

/// `e^{iγ±} = √(n(τ₀)/n(τ))` on the continuous branch.
pub fn geometric_phase_factor(ctx: &ScatteringContext, tau0: f64, tau: f64) -> Result<C64> {
    let (n0, l0) = ctx.index_and_log(tau0, crate::Side::Right)?;
    let (n1, l1) = ctx.index_and_log(tau, crate::Side::Right)?;
    for (t, n) in [(tau0, n0), (tau, n1)] {
        if n.norm() < crate::hamiltonian::DEGENERACY_TOLERANCE {
            return Err(Error::DegenerateSpectrum { tau: t, n_abs: n.norm() });
        }
    }
    Ok(((l0 - l1) * 0.5).exp())
}

/// `e^{iγ₊}` from direct quadrature of `γ₊ = i∫⟨Φ₊|∂_τΨ₊⟩dτ`, with the
/// eigenvector derivative taken by a five-point stencil. Requires a smooth
/// potential between the endpoints.
pub fn geometric_phase_by_quadrature(ctx: &ScatteringContext, tau0: f64, tau: f64) -> Result<C64> {
    let (lo, hi, sign) = if tau0 <= tau { (tau0, tau, 1.0) } else { (tau, tau0, -1.0) };
    let mut cuts = vec![lo];
    for &p in ctx.segment_points() {
        if p > lo && p < hi {
            if ctx.is_jump(p) {
                return Err(Error::NonDifferentiable { tau: p });
            }
            cuts.push(p);
        }
    }
    cuts.push(hi);
    let integrand = |t: f64| -> Result<C64> {
        let h = 1e-3;
        let psi = |s: f64| ctx.eigensystem_at(s).map(|e| e.psi_plus);
        let (m2, m1, p1, p2) = (psi(t - 2.0 * h)?, psi(t - h)?, psi(t + h)?, psi(t + 2.0 * h)?);
        let d = |c: usize| (m2[c] - m1[c] * 8.0 + p1[c] * 8.0 - p2[c]) / (12.0 * h);
        let bra = ctx.eigensystem_at(t)?.bra_plus();
        Ok(bra[0] * d(0) + bra[1] * d(1))
    };
    let intervals: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    // The stencil leaves a noise floor near 1e-13 per evaluation.
    let opts = QuadOptions { rel_tol: 1e-10, abs_tol: 1e-11, ..QuadOptions::default() };
    let integral = integrate_adaptive(integrand, &intervals, &opts)?.value * sign;
    // e^{iγ} with γ = i∫⟨Φ|Ψ̇⟩.
    Ok((-integral).exp())
}

/// Adiabatic evolution `Σ_a e^{i[δ_a + γ_a]} |Ψ_a(τ)⟩⟨Φ_a(τ₀)|` with
/// `δ± = ∓∫_{τ₀}^{τ} n`.
pub fn adiabatic_evolution(ctx: &ScatteringContext, tau0: f64, tau: f64) -> Result<Mat2> {
    let es0 = ctx.eigensystem_at(tau0)?;
    let es = ctx.eigensystem_at(tau)?;
    let dd = delta(ctx, tau)? - delta(ctx, tau0)?;
    let geo = geometric_phase_factor(ctx, tau0, tau)?;
    let plus = Mat2::outer(es.psi_plus, es0.phi_plus) * (geo * (-I * dd).exp());
    let minus = Mat2::outer(es.psi_minus, es0.phi_minus) * (geo * (I * dd).exp());
    Ok(plus + minus)
}

/// Zeroth-order transfer matrix `diag(e^{iη(∞)}, e^{−iη(∞)})`.
pub fn transfer_matrix_semiclassical(ctx: &ScatteringContext) -> Result<Mat2> {
    let e = eta_infinity(ctx)?;
    Ok(Mat2::diag((I * e).exp(), (-I * e).exp()))
}
