//! `A^(ℓ)` for `ℓ ≤ 3` as iterated integrals over the ordered simplex
//! `τ₁ < … < τ_ℓ` of `Π_j g(τ_j) e^{±2i s_j δ(τ_j)}`, where `g = ṅ/2n` and
//! `s_j = (−1)^{ℓ−j}`. The phase `δ` is accumulated on the quadrature grid
//! itself, independently of the cached phase integral.

use num_complex::Complex64 as C64;

use super::{CorrectionControls, CorrectionMethod, CorrectionTerm};
use crate::error::{Error, Result};
use crate::hamiltonian::{ScatteringContext, DEGENERACY_TOLERANCE};
use crate::mat2::{I, ZERO};
use crate::quadrature::{refine_until_converged, PanelGrid, SpectralRule};

const MAX_ORDER: usize = 3;
const RULE_POINTS: usize = 16;

/// Samples of `g`, `n` on the grid nodes and `δ` integrated from `τ₋`.
pub(crate) struct GridSamples {
    pub g: Vec<C64>,
    pub delta: Vec<C64>,
    pub n_max: f64,
}

fn panel_segment(ctx: &ScatteringContext, a: f64, b: f64) -> usize {
    ctx.segment_index(0.5 * (a + b), crate::Side::Right).expect("panels lie inside the support")
}

pub(crate) fn sample_grid(
    ctx: &ScatteringContext,
    grid: &PanelGrid,
    rule: &SpectralRule,
    with_g: bool,
) -> Result<GridSamples> {
    let m = rule.len();
    let count = grid.node_count(rule);
    let mut g = Vec::with_capacity(if with_g { count } else { 0 });
    let mut delta = Vec::with_capacity(count);
    let mut n_max: f64 = 0.0;
    let mut running = ZERO;
    let mut ns = vec![ZERO; m];
    for &(a, b) in &grid.panels {
        let j = panel_segment(ctx, a, b);
        let h = 0.5 * (b - a);
        for (q, t) in rule.map_nodes(a, b).enumerate() {
            let (n, _) = ctx.index_in_segment(t, j)?;
            if n.norm() < DEGENERACY_TOLERANCE {
                return Err(Error::DegenerateSpectrum { tau: t, n_abs: n.norm() });
            }
            n_max = n_max.max(n.norm());
            ns[q] = n;
            if with_g {
                g.push(ctx.ndot_in_segment(t, j)? / (2.0 * n));
            }
        }
        for row in &rule.cumulative {
            let mut s = ZERO;
            for q in 0..m {
                s += ns[q] * row[q];
            }
            delta.push(running + s * h);
        }
        let mut full = ZERO;
        for q in 0..m {
            full += ns[q] * rule.weights[q];
        }
        running += full * h;
    }
    Ok(GridSamples { g, delta, n_max })
}

/// Initial grid with the phase `2δ` advancing at most π/4 per panel.
pub(crate) fn initial_grid(ctx: &ScatteringContext, rule: &SpectralRule) -> Result<PanelGrid> {
    let probe = PanelGrid::from_segments(ctx.segment_points(), std::f64::consts::PI / 8.0);
    let n_max = sample_grid(ctx, &probe, rule, false)?.n_max.max(1.0);
    Ok(PanelGrid::from_segments(ctx.segment_points(), std::f64::consts::PI / (8.0 * n_max)))
}

/// `∫ Π_j g(τ_j) e^{2iσ s_j δ(τ_j)}` over the simplex, for σ = ∓1.
fn simplex_pair(grid: &PanelGrid, rule: &SpectralRule, s: &GridSamples, order: usize) -> Vec<C64> {
    [-1.0, 1.0]
        .iter()
        .map(|&sigma| {
            let factors: Vec<Vec<C64>> = (1..=order)
                .map(|j| {
                    let sj = if (order - j).is_multiple_of(2) { 1.0 } else { -1.0 };
                    s.g.iter().zip(&s.delta).map(|(g, d)| g * (I * (2.0 * sigma * sj) * d).exp()).collect()
                })
                .collect();
            grid.simplex_integral(rule, &factors)
        })
        .collect()
}

/// `A^(ℓ)` by nested quadrature; smooth potentials only.
pub fn a_ell_nested(ctx: &ScatteringContext, order: usize, controls: &CorrectionControls) -> Result<CorrectionTerm> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::UnsupportedOrder { order, max: MAX_ORDER });
    }
    if ctx.is_free() {
        return Ok(CorrectionTerm::zero(order, CorrectionMethod::Nested));
    }
    if let Some(&t) = ctx.jump_points().first() {
        return Err(Error::NonDifferentiable { tau: t });
    }
    let rule = SpectralRule::new(RULE_POINTS);
    let grid = initial_grid(ctx, &rule)?;
    let (vals, err) = refine_until_converged(grid, &controls.quad, controls.max_refinements, |grid| {
        let s = sample_grid(ctx, grid, &rule, true)?;
        Ok(simplex_pair(grid, &rule, &s, order))
    })?;
    let (x_minus, x_plus) = (vals[0], vals[1]);
    let tm = ctx.tau_minus();
    let (a_minus, a_plus) = if order % 2 == 1 {
        ((2.0 * I * tm).exp() * x_plus, (-2.0 * I * tm).exp() * x_minus)
    } else {
        (x_minus, x_plus)
    };
    Ok(CorrectionTerm::from_components(order, a_minus, a_plus, CorrectionMethod::Nested, err))
}
