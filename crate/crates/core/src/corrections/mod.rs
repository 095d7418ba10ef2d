//! Systematic corrections to the semiclassical transfer matrix.
//!
//! In the frame that follows the adiabatic evolution the Hamiltonian becomes
//! `H̃(τ) = i(ṅ/2n)·[[0, e^{−2iδ}], [e^{2iδ}, 0]]` (with `τ₀` at the left edge
//! of the support), and the transfer matrix factorises as
//! `M = M_sc·(I + Σ_ℓ A^(ℓ))` with `A^(ℓ) = U₀(τ₋)⁻¹ Ũ^(ℓ) U₀(τ₋)`, where
//! `Ũ^(ℓ)` is the ℓ-th term of the time-ordered exponential of `−iH̃`.
//!
//! Three independent routes compute `A^(ℓ)`:
//! * [`volterra`]: the recursion `dŨ^(ℓ)/dτ = −iH̃ Ũ^(ℓ−1)`, all orders in
//!   one ODE pass;
//! * [`nested`]: iterated integrals over the ordered simplex (`ℓ ≤ 3`);
//! * [`ibp`]: the integrated-by-parts forms free of `ṅ` (`ℓ ≤ 2`).

pub mod ibp;
pub mod nested;
pub mod volterra;

use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::{ScatteringContext, DEGENERACY_TOLERANCE};
use crate::mat2::{Mat2, I, ONE, ZERO};
use crate::ode::OdeTolerances;
use crate::quadrature::QuadOptions;
use crate::semiclassical::{delta, transfer_matrix_semiclassical};

pub use ibp::a_ell_ibp;
pub use nested::a_ell_nested;
pub use volterra::{u_tilde_term_volterra, u_tilde_terms_volterra};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrectionMethod {
    #[default]
    Volterra,
    Nested,
    Ibp,
}

impl CorrectionMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Volterra => "volterra",
            Self::Nested => "nested-quadrature",
            Self::Ibp => "ibp",
        }
    }

    /// Highest order the route supports, `None` when unbounded.
    pub fn max_order(&self) -> Option<usize> {
        match self {
            Self::Volterra => None,
            Self::Nested => Some(3),
            Self::Ibp => Some(2),
        }
    }
}

impl fmt::Display for CorrectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CorrectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volterra" => Ok(Self::Volterra),
            "nested" | "nested-quadrature" => Ok(Self::Nested),
            "ibp" => Ok(Self::Ibp),
            other => Err(Error::InvalidParameter(format!("unknown correction method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CorrectionControls {
    pub method: CorrectionMethod,
    pub ode: OdeTolerances,
    pub quad: QuadOptions,
    /// From this `k` on, single oscillatory integrals use the Filon rule.
    pub filon_k_threshold: f64,
    /// Bisections of the panel grid allowed for simplex integrals.
    pub max_refinements: usize,
}

impl Default for CorrectionControls {
    fn default() -> Self {
        Self {
            method: CorrectionMethod::Volterra,
            ode: OdeTolerances { rtol: 1e-10, atol: 1e-14, ..OdeTolerances::default() },
            quad: QuadOptions { rel_tol: 1e-10, abs_tol: 1e-14, ..QuadOptions::default() },
            filon_k_threshold: 20.0,
            max_refinements: 8,
        }
    }
}

/// One term `A^(ℓ) = σ₁^{ν_ℓ} diag(A_ℓ⁻, A_ℓ⁺)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionTerm {
    pub order: usize,
    pub a: Mat2,
    /// `ν_ℓ = (1 − (−1)^ℓ)/2`.
    pub parity: u8,
    pub a_minus: C64,
    pub a_plus: C64,
    pub method: CorrectionMethod,
    pub error_estimate: f64,
}

impl CorrectionTerm {
    /// Reads `A_ℓ±` off the matrix according to the parity of `order`. The
    /// matrix is stored as computed, wrong-parity entries included.
    pub fn from_matrix(order: usize, a: Mat2, method: CorrectionMethod, error_estimate: f64) -> Self {
        let parity = (order % 2) as u8;
        let (a_minus, a_plus) = if parity == 1 { (a.m21, a.m12) } else { (a.m11, a.m22) };
        Self { order, a, parity, a_minus, a_plus, method, error_estimate }
    }

    /// Builds the term from `A_ℓ±` with the exact parity structure.
    pub fn from_components(
        order: usize,
        a_minus: C64,
        a_plus: C64,
        method: CorrectionMethod,
        error_estimate: f64,
    ) -> Self {
        let parity = (order % 2) as u8;
        let a = if parity == 1 { Mat2::new(ZERO, a_plus, a_minus, ZERO) } else { Mat2::diag(a_minus, a_plus) };
        Self { order, a, parity, a_minus, a_plus, method, error_estimate }
    }

    pub fn zero(order: usize, method: CorrectionMethod) -> Self {
        Self::from_components(order, ZERO, ZERO, method, 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.a.norm_max()
    }

    /// Largest entry that the parity structure requires to vanish.
    pub fn wrong_parity_norm(&self) -> f64 {
        let a = &self.a;
        if self.parity == 1 {
            a.m11.norm().max(a.m22.norm())
        } else {
            a.m12.norm().max(a.m21.norm())
        }
    }
}

/// Order-by-order approximation of the transfer matrix.
#[derive(Debug, Clone)]
pub struct SeriesResult {
    /// `M^(0) = M_sc`.
    pub m0: Mat2,
    pub terms: Vec<CorrectionTerm>,
    /// `M^(≤j) = M_sc·(I + Σ_{ℓ≤j} A^(ℓ))` for `j = 0..=n`.
    pub partial_sums: Vec<Mat2>,
    pub exact: Option<Mat2>,
    /// `‖M_exact − M^(≤j)‖` (max entry), filled by [`SeriesResult::with_exact`].
    pub residuals: Vec<f64>,
}

impl SeriesResult {
    fn new(m0: Mat2, terms: Vec<CorrectionTerm>) -> Self {
        let mut partial_sums = vec![m0];
        let mut acc = Mat2::identity();
        for t in &terms {
            acc += t.a;
            partial_sums.push(m0 * acc);
        }
        Self { m0, terms, partial_sums, exact: None, residuals: vec![] }
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }

    /// The highest-order approximation.
    pub fn m(&self) -> Mat2 {
        *self.partial_sums.last().expect("partial sums are never empty")
    }

    /// `M^(ℓ) = M_sc·A^(ℓ)`.
    pub fn term_matrix(&self, order: usize) -> Mat2 {
        if order == 0 {
            self.m0
        } else {
            self.m0 * self.terms[order - 1].a
        }
    }

    pub fn with_exact(mut self, m_exact: Mat2) -> Self {
        self.residuals = self.partial_sums.iter().map(|m| (m_exact - *m).norm_max()).collect();
        self.exact = Some(m_exact);
        self
    }
}

/// `P(δ) = [[0, e^{−2iδ}], [e^{2iδ}, 0]]`.
pub(crate) fn phase_coupling(delta: C64) -> Mat2 {
    let e = (2.0 * I * delta).exp();
    let ei = (-2.0 * I * delta).exp();
    Mat2::new(ZERO, ei, e, ZERO)
}

/// `H̃(τ)` for `τ₀ = τ₋`, where `n(τ₀) = 1`.
pub fn h_tilde(ctx: &ScatteringContext, tau: f64) -> Result<Mat2> {
    if ctx.segment_index(tau, crate::Side::Right).is_none() && !ctx.is_jump(tau) {
        return Ok(Mat2::zero());
    }
    let n = ctx.refractive_index(tau)?;
    if n.norm() < DEGENERACY_TOLERANCE {
        return Err(Error::DegenerateSpectrum { tau, n_abs: n.norm() });
    }
    let nd = ctx.ndot(tau)?;
    Ok(phase_coupling(delta(ctx, tau)?) * (I * nd / (2.0 * n)))
}

/// `H̃(τ)` for an arbitrary reference point `τ₀`, in the Pauli form
/// `i(ṅ/2n){cos 2δ σ₁ + sin 2δ (𝔞₊σ₂ − i𝔞₋σ₃)}` with
/// `δ = ∫_{τ₀}^{τ} n` and `𝔞± = [n(τ₀) ± n(τ₀)⁻¹]/2`.
pub fn h_tilde_general(ctx: &ScatteringContext, tau0: f64, tau: f64) -> Result<Mat2> {
    let n = ctx.refractive_index(tau)?;
    let n0 = ctx.refractive_index(tau0)?;
    for (t, v) in [(tau, n), (tau0, n0)] {
        if v.norm() < DEGENERACY_TOLERANCE {
            return Err(Error::DegenerateSpectrum { tau: t, n_abs: v.norm() });
        }
    }
    let nd = ctx.ndot(tau)?;
    let d = delta(ctx, tau)? - delta(ctx, tau0)?;
    let a_plus = (n0 + n0.inv()) * 0.5;
    let a_minus = (n0 - n0.inv()) * 0.5;
    let (c, s) = ((2.0 * d).cos(), (2.0 * d).sin());
    let bracket = Mat2::sigma1() * c + (Mat2::sigma2() * a_plus - Mat2::sigma3() * (I * a_minus)) * s;
    Ok(bracket * (I * nd / (2.0 * n)))
}

/// Correction terms `A^(1..=n)` by the route selected in `controls`.
pub fn correction_terms(
    ctx: &ScatteringContext,
    n: usize,
    controls: &CorrectionControls,
) -> Result<Vec<CorrectionTerm>> {
    if let Some(max) = controls.method.max_order() {
        if n > max {
            return Err(Error::UnsupportedOrder { order: n, max });
        }
    }
    match controls.method {
        CorrectionMethod::Volterra => volterra::a_terms_volterra(ctx, n, controls),
        CorrectionMethod::Nested => (1..=n).map(|l| a_ell_nested(ctx, l, controls)).collect(),
        CorrectionMethod::Ibp => (1..=n).map(|l| a_ell_ibp(ctx, l, controls)).collect(),
    }
}

/// `M^(≤n) = M_sc·(I + Σ_{ℓ=1}^{n} A^(ℓ))` with all partial sums.
pub fn transfer_matrix_order_n(
    ctx: &ScatteringContext,
    n: usize,
    controls: &CorrectionControls,
) -> Result<SeriesResult> {
    let m0 = transfer_matrix_semiclassical(ctx)?;
    let terms = if n == 0 { vec![] } else { correction_terms(ctx, n, controls)? };
    Ok(SeriesResult::new(m0, terms))
}

/// `(e^{idL} − 1)/d`, continued analytically through `d = 0`.
fn difference_quotient(d: f64, length: f64) -> C64 {
    if d.abs() < 1e-6 {
        // iL Σ_j (idL)^j/(j+1)!
        let z = I * (d * length);
        let mut term = ONE;
        let mut sum = ONE;
        for j in 1..8 {
            term = term * z / (j as f64 + 1.0);
            sum += term;
        }
        I * length * sum
    } else {
        ((I * (d * length)).exp() - ONE) / d
    }
}

/// First-order closed form `(A₁⁺, A₁⁻)` for the index profile
/// `n = 1 + εe^{iKx}` on `(0, L)`: `A₁± = ±[(e^{i(K∓2k)L} − 1)/(K∓2k)]kε`.
pub fn a1_exp_pot_closed_form(epsilon: f64, wavenumber: f64, k: f64, length: f64) -> (C64, C64) {
    let plus = difference_quotient(wavenumber - 2.0 * k, length) * (k * epsilon);
    let minus = -difference_quotient(wavenumber + 2.0 * k, length) * (k * epsilon);
    (plus, minus)
}

/// First-order amplitudes of the exponential index profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpProfileFirstOrder {
    pub t: C64,
    pub r_right: C64,
    /// `[e^{i(K+2k)L} − 1]kε/(K+2k)`, which follows from `R^l = −A₁⁻`.
    pub r_left: C64,
    /// The same expression with `+1` in the numerator.
    pub r_left_plus_one: C64,
}

pub fn first_order_exp_profile(epsilon: f64, wavenumber: f64, k: f64, length: f64) -> ExpProfileFirstOrder {
    let (a_plus, a_minus) = a1_exp_pot_closed_form(epsilon, wavenumber, k, length);
    let e = (I * ((wavenumber + 2.0 * k) * length)).exp();
    ExpProfileFirstOrder {
        t: ONE + difference_quotient(wavenumber, length) * (k * epsilon),
        r_right: a_plus,
        r_left: -a_minus,
        r_left_plus_one: (e + ONE) * (k * epsilon) / (wavenumber + 2.0 * k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn h_tilde_vanishes_for_free_potential() {
        let ctx = ScatteringContext::new(PotentialSpec::free(), 1.0).unwrap();
        assert_eq!(h_tilde(&ctx, 0.5).unwrap(), Mat2::zero());
    }

    #[test]
    fn h_tilde_has_zero_diagonal() {
        let ctx = ScatteringContext::new(PotentialSpec::gaussian(c(0.4, 0.3), 0.0, 1.0).unwrap(), 1.3).unwrap();
        for t in [-3.0, -0.5, 0.0, 1.1, 2.4] {
            let h = h_tilde(&ctx, t).unwrap();
            assert_eq!(h.m11, ZERO);
            assert_eq!(h.m22, ZERO);
        }
    }

    #[test]
    fn general_form_reduces_at_left_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let amp = c(rng.gen_range(-0.8..0.8), rng.gen_range(-0.5..0.5));
            let k = rng.gen_range(0.6..2.0);
            let ctx = ScatteringContext::new(PotentialSpec::gaussian(amp, 0.0, 1.0).unwrap(), k).unwrap();
            let t0 = ctx.tau_minus();
            for _ in 0..10 {
                let t = rng.gen_range(t0..ctx.tau_plus());
                let a = h_tilde(&ctx, t).unwrap();
                let b = h_tilde_general(&ctx, t0, t).unwrap();
                assert!((a - b).norm_max() < 1e-12 * a.norm_max().max(1e-3), "t={t}");
            }
        }
    }

    #[test]
    fn general_form_matches_projector_sum() {
        // Σ_a e^{2aiδ}|Ψ_a(τ₀)⟩⟨Φ_a(τ₀)| with the sign matching Ψ_{−a}.
        let ctx = ScatteringContext::new(PotentialSpec::gaussian(c(0.9, 0.4), 0.0, 1.0).unwrap(), 1.0).unwrap();
        let (t0, t) = (-0.7, 0.9);
        let es0 = ctx.eigensystem_at(t0).unwrap();
        let d = delta(&ctx, t).unwrap() - delta(&ctx, t0).unwrap();
        let n = ctx.refractive_index(t).unwrap();
        let nd = ctx.ndot(t).unwrap();
        let sum = es0.projector(true, false) * (2.0 * I * d).exp() + es0.projector(false, true) * (-2.0 * I * d).exp();
        let expected = sum * (I * nd / (2.0 * n));
        let got = h_tilde_general(&ctx, t0, t).unwrap();
        assert!((got - expected).norm_max() < 1e-12, "{:e}", (got - expected).norm_max());
    }

    #[test]
    fn closed_form_limits() {
        assert_eq!(a1_exp_pot_closed_form(0.0, 1.0, 0.7, 3.0), (ZERO, ZERO));
        let (k, l, eps) = (0.5, 2.0, 1e-3);
        let (p, _) = a1_exp_pot_closed_form(eps, 2.0 * k, k, l);
        assert!((p - I * (l * k * eps)).norm() < 1e-18);
        // Continuity across the removable singularity.
        let below = difference_quotient(0.999e-6, l);
        let above = difference_quotient(1.001e-6, l);
        assert!((below - above).norm() < 1e-8 * l);
    }

    #[test]
    fn term_parity_bookkeeping() {
        let t = CorrectionTerm::from_components(3, c(1.0, 2.0), c(3.0, 0.0), CorrectionMethod::Nested, 0.0);
        assert_eq!(t.a, Mat2::new(ZERO, c(3.0, 0.0), c(1.0, 2.0), ZERO));
        assert_eq!(t.a, Mat2::sigma1() * Mat2::diag(t.a_minus, t.a_plus));
        assert_eq!(t.wrong_parity_norm(), 0.0);
        let e = CorrectionTerm::from_matrix(2, Mat2::new(ONE, c(0.1, 0.0), ZERO, ONE), CorrectionMethod::Volterra, 0.0);
        assert_eq!(e.parity, 0);
        assert!((e.wrong_parity_norm() - 0.1).abs() < 1e-16);
    }
}
