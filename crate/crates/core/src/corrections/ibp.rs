//! `A₁±` and `A₂±` after integrating by parts, which removes `ṅ`:
//!
//! ```text
//! A₁± = ±i ∫ e^{∓2i[η(τ)+τ]} 𝔪₁(τ) dτ
//! A₂± = ∓(i/2) ∫ 𝔪₂ dτ + ∫∫_{τ₁<τ₂} e^{±2i[δ(τ₂)−δ(τ₁)]} 𝔪₁(τ₁) 𝔪₁(τ₂)
//! ```
//!
//! with `𝔪_ℓ = n (ln n)^ℓ`. Because only `n` enters, potentials with jumps are
//! handled directly.

use num_complex::Complex64 as C64;

use super::nested::initial_grid;
use super::{CorrectionControls, CorrectionMethod, CorrectionTerm};
use crate::error::{Error, Result};
use crate::hamiltonian::ScatteringContext;
use crate::mat2::I;
use crate::quadrature::{integrate_adaptive, refine_until_converged, FilonRule, PanelGrid, SpectralRule};
use crate::semiclassical::eta;

const MAX_ORDER: usize = 2;
const MAX_PIECE: f64 = 2.0;
const FILON_PANEL: f64 = 8.0;

/// Segments cut into pieces no wider than `MAX_PIECE`, tagged with the
/// segment index.
fn pieces(ctx: &ScatteringContext) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for j in 0..ctx.segment_count() {
        let (a, b) = ctx.segment(j);
        let count = ((b - a) / MAX_PIECE).ceil().max(1.0) as usize;
        let h = (b - a) / count as f64;
        for i in 0..count {
            out.push((a + i as f64 * h, if i + 1 == count { b } else { a + (i + 1) as f64 * h }));
        }
    }
    out
}

/// `𝔪_ℓ(τ)` at an interior point of the support.
fn m_ell(ctx: &ScatteringContext, tau: f64, ell: i32) -> Result<C64> {
    let j = ctx
        .segment_index(tau, crate::Side::Right)
        .ok_or_else(|| Error::QuadratureFailure(format!("node {tau} outside the support")))?;
    let (n, ln) = ctx.index_in_segment(tau, j)?;
    Ok(n * ln.powi(ell))
}

fn a1(ctx: &ScatteringContext, controls: &CorrectionControls) -> Result<(C64, C64, f64)> {
    if ctx.k() >= controls.filon_k_threshold {
        let rule = FilonRule::new(16);
        let grid = PanelGrid::from_segments(ctx.segment_points(), FILON_PANEL);
        let (vals, err) = refine_until_converged(grid, &controls.quad, controls.max_refinements, |grid| {
            let plus =
                rule.integrate_grid(|t| Ok(I * m_ell(ctx, t, 1)? * (-2.0 * I * eta(ctx, t)?).exp()), -2.0, grid)?;
            let minus =
                rule.integrate_grid(|t| Ok(-I * m_ell(ctx, t, 1)? * (2.0 * I * eta(ctx, t)?).exp()), 2.0, grid)?;
            Ok(vec![plus, minus])
        })?;
        return Ok((vals[0], vals[1], err));
    }
    let iv = pieces(ctx);
    let plus =
        integrate_adaptive(|t| Ok(I * m_ell(ctx, t, 1)? * (-2.0 * I * (eta(ctx, t)? + t)).exp()), &iv, &controls.quad)?;
    let minus =
        integrate_adaptive(|t| Ok(-I * m_ell(ctx, t, 1)? * (2.0 * I * (eta(ctx, t)? + t)).exp()), &iv, &controls.quad)?;
    Ok((plus.value, minus.value, plus.error.max(minus.error)))
}

fn a2(ctx: &ScatteringContext, controls: &CorrectionControls) -> Result<(C64, C64, f64)> {
    let single = integrate_adaptive(|t| m_ell(ctx, t, 2), &pieces(ctx), &controls.quad)?;
    let rule = SpectralRule::new(16);
    let grid = initial_grid(ctx, &rule)?;
    let tm = ctx.tau_minus();
    let (vals, err) = refine_until_converged(grid, &controls.quad, controls.max_refinements, |grid| {
        let nodes = grid.nodes(&rule);
        let mut m1 = Vec::with_capacity(nodes.len());
        let mut ph = Vec::with_capacity(nodes.len());
        for &t in &nodes {
            m1.push(m_ell(ctx, t, 1)?);
            ph.push((2.0 * I * (eta(ctx, t)? + (t - tm))).exp());
        }
        // e^{+2iδ₂} e^{−2iδ₁} for A₂⁺, the conjugate pairing for A₂⁻.
        let f_up: Vec<C64> = m1.iter().zip(&ph).map(|(m, p)| m * p).collect();
        let f_down: Vec<C64> = m1.iter().zip(&ph).map(|(m, p)| m / p).collect();
        let plus = grid.simplex_integral(&rule, &[f_down.clone(), f_up.clone()]);
        let minus = grid.simplex_integral(&rule, &[f_up, f_down]);
        Ok(vec![plus, minus])
    })?;
    let s = single.value * (0.5 * I);
    Ok((vals[0] - s, vals[1] + s, err + single.error))
}

/// `A^(ℓ)` for `ℓ ∈ {1, 2}` from the integrated-by-parts forms.
pub fn a_ell_ibp(ctx: &ScatteringContext, order: usize, controls: &CorrectionControls) -> Result<CorrectionTerm> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::UnsupportedOrder { order, max: MAX_ORDER });
    }
    if ctx.is_free() {
        return Ok(CorrectionTerm::zero(order, CorrectionMethod::Ibp));
    }
    let (plus, minus, err) = if order == 1 { a1(ctx, controls)? } else { a2(ctx, controls)? };
    Ok(CorrectionTerm::from_components(order, minus, plus, CorrectionMethod::Ibp, err))
}
