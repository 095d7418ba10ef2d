//! The two-level Hamiltonian `H(τ) = −σ₃ + w(τ)N` in the dimensionless
//! coordinate `τ = kx`, the refractive index `n = √(1 − 2w)` on a continuous
//! branch, and the biorthonormal eigensystem of `H`.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mat2::{Mat2, Vec2, ONE, ZERO};
use crate::potentials::{PotentialSpec, Side};
use crate::semiclassical::PhaseCache;

/// `|n|` below which the eigensystem is reported as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;
/// `|n|` below which the square-root branch cannot be continued.
pub const BRANCH_TOLERANCE: f64 = 1e-12;
/// Infinite-range potentials are cut where `|v| < TRUNCATION_THRESHOLD·k²`.
pub const TRUNCATION_THRESHOLD: f64 = 1e-12;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// A potential at one wavenumber, with the support and the split points of
/// the integration domain expressed in `τ`.
///
/// Branch tracking of `n(τ)` and the phase integral are computed lazily on
/// first use and are read-only afterwards, so a context can be shared across
/// threads.
#[derive(Debug)]
pub struct ScatteringContext {
    k: f64,
    potential: Arc<PotentialSpec>,
    /// Segment boundaries in `x`, sorted: support edges, breakpoints, kinks.
    points_x: Vec<f64>,
    /// The same boundaries in `τ`.
    points: Vec<f64>,
    /// Indices into `points` that are jump discontinuities of `v`.
    jumps: Vec<usize>,
    numeric_derivative: bool,
    branch: OnceLock<Result<BranchTable>>,
    phase: OnceLock<Result<PhaseCache>>,
}

impl Clone for ScatteringContext {
    fn clone(&self) -> Self {
        Self {
            k: self.k,
            potential: self.potential.clone(),
            points_x: self.points_x.clone(),
            points: self.points.clone(),
            jumps: self.jumps.clone(),
            numeric_derivative: self.numeric_derivative,
            branch: OnceLock::new(),
            phase: OnceLock::new(),
        }
    }
}

impl ScatteringContext {
    pub fn new(potential: impl Into<Arc<PotentialSpec>>, k: f64) -> Result<Self> {
        let potential = potential.into();
        check_k(k)?;
        let (lo, hi) = potential.support(k, TRUNCATION_THRESHOLD);
        Self::build(potential, k, lo, hi)
    }

    /// Context with an explicit support `[x₋, x₊]`; the potential is treated
    /// as zero outside. Used to enlarge the truncation of infinite-range
    /// potentials.
    pub fn with_support(potential: impl Into<Arc<PotentialSpec>>, k: f64, x_minus: f64, x_plus: f64) -> Result<Self> {
        check_k(k)?;
        if !(x_minus.is_finite() && x_plus.is_finite() && x_minus <= x_plus) {
            return Err(Error::InvalidParameter(format!("invalid support [{x_minus}, {x_plus}]")));
        }
        Self::build(potential.into(), k, x_minus, x_plus)
    }

    fn build(potential: Arc<PotentialSpec>, k: f64, lo: f64, hi: f64) -> Result<Self> {
        let mut points_x = vec![];
        let mut jump_x = vec![];
        if hi > lo {
            points_x.push(lo);
            points_x.push(hi);
            for b in potential.breakpoints() {
                if b >= lo && b <= hi {
                    points_x.push(b);
                    jump_x.push(b);
                }
            }
            for c in potential.kinks() {
                if c > lo && c < hi {
                    points_x.push(c);
                }
            }
            points_x.sort_by(f64::total_cmp);
            points_x.dedup();
        }
        let points: Vec<f64> = points_x.iter().map(|x| k * x).collect();
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("segment points collapse after scaling by k".into()));
        }
        let jumps = points_x.iter().enumerate().filter(|(_, x)| jump_x.contains(x)).map(|(i, _)| i).collect();
        Ok(Self {
            k,
            potential,
            points_x,
            points,
            jumps,
            numeric_derivative: false,
            branch: OnceLock::new(),
            phase: OnceLock::new(),
        })
    }

    /// Forces finite-difference `v′` even when the potential supplies one.
    pub fn with_numeric_derivative(mut self, on: bool) -> Self {
        self.numeric_derivative = on;
        self
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn potential_arc(&self) -> Arc<PotentialSpec> {
        self.potential.clone()
    }

    /// `(x₋, x₊)`; equal when the potential vanishes.
    pub fn support_x(&self) -> (f64, f64) {
        match (self.points_x.first(), self.points_x.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0.0, 0.0),
        }
    }

    pub fn tau_minus(&self) -> f64 {
        self.points.first().copied().unwrap_or(0.0)
    }

    pub fn tau_plus(&self) -> f64 {
        self.points.last().copied().unwrap_or(0.0)
    }

    pub fn is_free(&self) -> bool {
        self.points.len() < 2
    }

    /// Sorted segment boundaries in `τ`.
    pub fn segment_points(&self) -> &[f64] {
        &self.points
    }

    pub fn segment_count(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn segment(&self, j: usize) -> (f64, f64) {
        (self.points[j], self.points[j + 1])
    }

    /// Jump discontinuities of `v` in `τ`.
    pub fn jump_points(&self) -> Vec<f64> {
        self.jumps.iter().map(|&i| self.points[i]).collect()
    }

    pub fn is_jump(&self, tau: f64) -> bool {
        self.jumps.iter().any(|&i| self.points[i] == tau)
    }

    /// True when `v` has no jumps inside or at the edges of the support.
    pub fn is_smooth(&self) -> bool {
        self.jumps.is_empty()
    }

    /// Segment containing `τ`, taking the one-sided limit at boundaries.
    pub fn segment_index(&self, tau: f64, side: Side) -> Option<usize> {
        let p = &self.points;
        if p.len() < 2 || tau < p[0] || tau > p[p.len() - 1] {
            return None;
        }
        let idx = p.partition_point(|&s| s <= tau);
        if p[idx - 1] == tau {
            match side {
                Side::Right if idx < p.len() => Some(idx - 1),
                Side::Left if idx >= 2 => Some(idx - 2),
                _ => None,
            }
        } else {
            Some(idx - 1)
        }
    }

    /// Position in `x` for a `τ` inside segment `j`, clamped into the segment
    /// together with the side to evaluate on.
    fn x_in_segment(&self, tau: f64, j: usize) -> (f64, Side) {
        let (xa, xb) = (self.points_x[j], self.points_x[j + 1]);
        if tau <= self.points[j] {
            return (xa, Side::Right);
        }
        if tau >= self.points[j + 1] {
            return (xb, Side::Left);
        }
        let x = tau / self.k;
        if x <= xa {
            (xa, Side::Right)
        } else if x >= xb {
            (xb, Side::Left)
        } else {
            (x, Side::Right)
        }
    }

    /// `v(τ/k)`, zero outside the support; right limit at boundaries.
    pub fn potential_at(&self, tau: f64) -> C64 {
        self.potential_sided(tau, Side::Right)
    }

    pub fn potential_sided(&self, tau: f64, side: Side) -> C64 {
        match self.segment_index(tau, side) {
            Some(j) => self.potential_in_segment(tau, j),
            None => ZERO,
        }
    }

    pub(crate) fn potential_in_segment(&self, tau: f64, j: usize) -> C64 {
        let (x, s) = self.x_in_segment(tau, j);
        self.potential.evaluate_sided(x, self.k, s)
    }

    /// `w(τ) = v(τ/k)/(2k²)`.
    pub fn w_of_tau(&self, tau: f64) -> C64 {
        self.potential_at(tau) / (2.0 * self.k * self.k)
    }

    pub fn w_sided(&self, tau: f64, side: Side) -> C64 {
        self.potential_sided(tau, side) / (2.0 * self.k * self.k)
    }

    pub(crate) fn w_in_segment(&self, tau: f64, j: usize) -> C64 {
        self.potential_in_segment(tau, j) / (2.0 * self.k * self.k)
    }

    /// `H(τ) = −σ₃ + w(τ)N`.
    pub fn hamiltonian_at(&self, tau: f64) -> Mat2 {
        hamiltonian_from_w(self.w_of_tau(tau))
    }

    /// `dv/dx` inside segment `j`, analytic when available.
    fn potential_derivative_in_segment(&self, tau: f64, j: usize) -> C64 {
        if !self.numeric_derivative {
            let (x, s) = self.x_in_segment(tau, j);
            if let Some(d) = self.potential.derivative_sided(x, self.k, s) {
                return d;
            }
        }
        let (a, b) = self.segment(j);
        let h = 1e-6 * tau.abs().max(1.0);
        let f = |t: f64| self.potential_in_segment(t, j);
        let dv_dtau = if tau - h >= a && tau + h <= b {
            (f(tau + h) - f(tau - h)) / (2.0 * h)
        } else if tau + 2.0 * h <= b {
            (f(tau) * -3.0 + f(tau + h) * 4.0 - f(tau + 2.0 * h)) / (2.0 * h)
        } else {
            (f(tau) * 3.0 - f(tau - h) * 4.0 + f(tau - 2.0 * h)) / (2.0 * h)
        };
        dv_dtau * self.k
    }

    /// `v′(x)` at `τ = kx`; `NonDifferentiable` on a jump.
    pub fn potential_derivative(&self, tau: f64) -> Result<C64> {
        if self.is_jump(tau) {
            return Err(Error::NonDifferentiable { tau });
        }
        Ok(match self.segment_index(tau, Side::Right) {
            Some(j) => self.potential_derivative_in_segment(tau, j),
            None => ZERO,
        })
    }

    fn branch_table(&self) -> Result<&BranchTable> {
        self.branch.get_or_init(|| BranchTable::build(self)).as_ref().map_err(Clone::clone)
    }

    pub(crate) fn phase_cache(&self) -> Result<&PhaseCache> {
        self.phase.get_or_init(|| PhaseCache::build(self)).as_ref().map_err(Clone::clone)
    }

    /// `n(τ)` and the continuous `ln n(τ)` inside segment `j`.
    pub(crate) fn index_in_segment(&self, tau: f64, j: usize) -> Result<(C64, C64)> {
        let table = self.branch_table()?;
        let seg = &table.segments[j];
        let i = seg.nearest(tau);
        let root = principal_index(self.w_in_segment(tau, j), tau)?;
        Ok(continue_branch(root, seg.n[i], seg.ln[i]))
    }

    /// Branch-continuous refractive index; right limit at breakpoints.
    pub fn refractive_index(&self, tau: f64) -> Result<C64> {
        self.refractive_index_sided(tau, Side::Right)
    }

    pub fn refractive_index_sided(&self, tau: f64, side: Side) -> Result<C64> {
        Ok(self.index_and_log(tau, side)?.0)
    }

    /// `ln n(τ)` on the same continuous branch as `n`.
    pub fn log_index(&self, tau: f64) -> Result<C64> {
        Ok(self.index_and_log(tau, Side::Right)?.1)
    }

    pub fn index_and_log(&self, tau: f64, side: Side) -> Result<(C64, C64)> {
        match self.segment_index(tau, side) {
            Some(j) => self.index_in_segment(tau, j),
            None => Ok((ONE, ZERO)),
        }
    }

    /// `ṅ = dn/dτ = −v′/(2k³n)`.
    pub fn ndot(&self, tau: f64) -> Result<C64> {
        if self.is_jump(tau) {
            return Err(Error::NonDifferentiable { tau });
        }
        match self.segment_index(tau, Side::Right) {
            Some(j) => self.ndot_in_segment(tau, j),
            None => Ok(ZERO),
        }
    }

    pub(crate) fn ndot_in_segment(&self, tau: f64, j: usize) -> Result<C64> {
        let (n, _) = self.index_in_segment(tau, j)?;
        if n.norm() < DEGENERACY_TOLERANCE {
            return Err(Error::DegenerateSpectrum { tau, n_abs: n.norm() });
        }
        let dv = self.potential_derivative_in_segment(tau, j);
        Ok(-dv / (2.0 * self.k.powi(3) * n))
    }

    pub fn eigensystem_at(&self, tau: f64) -> Result<EigenSystem> {
        let n = self.refractive_index(tau)?;
        EigenSystem::from_index(n).map_err(|_| Error::DegenerateSpectrum { tau, n_abs: n.norm() })
    }

    /// `|ṅ/(4n²)|`; `+∞` where `v` jumps or the spectrum degenerates.
    pub fn adiabaticity_diagnostic(&self, tau: f64) -> f64 {
        let n = match self.refractive_index(tau) {
            Ok(n) if n.norm() >= DEGENERACY_TOLERANCE => n,
            _ => return f64::INFINITY,
        };
        match self.ndot(tau) {
            Ok(nd) => (nd / (4.0 * n * n)).norm(),
            Err(_) => f64::INFINITY,
        }
    }

    /// The same quantity written through the potential,
    /// `|v′(x)| / (8|k² − v(x)|^{3/2})`.
    pub fn adiabaticity_from_potential(&self, tau: f64) -> f64 {
        match self.potential_derivative(tau) {
            Ok(dv) => {
                let v = self.potential_at(tau);
                dv.norm() / (8.0 * (self.k * self.k - v).norm().powf(1.5))
            }
            Err(_) => f64::INFINITY,
        }
    }

    /// Largest diagnostic over the support, sampled at `samples` points per
    /// segment; `+∞` when `v` has jumps.
    pub fn max_adiabaticity(&self, samples: usize) -> f64 {
        if !self.is_smooth() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for j in 0..self.segment_count() {
            let (a, b) = self.segment(j);
            for i in 0..=samples {
                let t = a + (b - a) * i as f64 / samples as f64;
                worst = worst.max(self.adiabaticity_diagnostic(t));
            }
        }
        worst
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("k must be positive and finite, got {k}")))
    }
}

/// `[[w−1, w], [−w, 1−w]]`.
pub fn hamiltonian_from_w(w: C64) -> Mat2 {
    Mat2::new(w - ONE, w, -w, ONE - w)
}

fn principal_index(w: C64, tau: f64) -> Result<C64> {
    let r = (ONE - 2.0 * w).sqrt();
    if r.norm() < BRANCH_TOLERANCE {
        return Err(Error::BranchAmbiguity { tau });
    }
    Ok(r)
}

/// Picks the root `±r` closer to `prev`; on an exact tie the one with
/// non-negative imaginary part. The log is unwrapped towards `prev_ln`.
fn continue_branch(r: C64, prev: C64, prev_ln: C64) -> (C64, C64) {
    let dp = (r - prev).norm();
    let dm = (r + prev).norm();
    let n = if dp < dm {
        r
    } else if dm < dp {
        -r
    } else if r.im > 0.0 || (r.im == 0.0 && r.re > 0.0) {
        r
    } else {
        -r
    };
    let base = n.ln();
    let turns = ((prev_ln.im - base.im) / TWO_PI).round();
    (n, C64::new(base.re, base.im + turns * TWO_PI))
}

#[derive(Debug)]
struct BranchSegment {
    taus: Vec<f64>,
    n: Vec<C64>,
    ln: Vec<C64>,
}

impl BranchSegment {
    fn nearest(&self, tau: f64) -> usize {
        let i = self.taus.partition_point(|&t| t < tau);
        if i == 0 {
            0
        } else if i == self.taus.len() {
            i - 1
        } else if tau - self.taus[i - 1] <= self.taus[i] - tau {
            i - 1
        } else {
            i
        }
    }
}

/// Reference samples of `n` along `τ`, walked left to right from `n = 1` with
/// steps small enough that the two roots are never confused.
#[derive(Debug)]
struct BranchTable {
    segments: Vec<BranchSegment>,
}

impl BranchTable {
    fn build(ctx: &ScatteringContext) -> Result<Self> {
        let mut prev = ONE;
        let mut prev_ln = ZERO;
        let mut segments = Vec::with_capacity(ctx.segment_count());
        for j in 0..ctx.segment_count() {
            let (a, b) = ctx.segment(j);
            let h_max = (0.5f64).min((b - a) / 16.0);
            let r = principal_index(ctx.w_in_segment(a, j), a)?;
            let (n0, l0) = continue_branch(r, prev, prev_ln);
            let mut seg = BranchSegment { taus: vec![a], n: vec![n0], ln: vec![l0] };
            let (mut t, mut n_prev, mut l_prev) = (a, n0, l0);
            let mut h = h_max;
            while t < b {
                let t_next = if t + h >= b { b } else { t + h };
                let r = principal_index(ctx.w_in_segment(t_next, j), t_next)?;
                let (n_next, l_next) = continue_branch(r, n_prev, l_prev);
                let d_near = (n_next - n_prev).norm();
                let d_far = (n_next + n_prev).norm();
                if d_near > 0.25 * d_far {
                    h *= 0.5;
                    if h < 1e-12 * t.abs().max(1.0) {
                        return Err(Error::BranchAmbiguity { tau: t });
                    }
                    continue;
                }
                seg.taus.push(t_next);
                seg.n.push(n_next);
                seg.ln.push(l_next);
                t = t_next;
                n_prev = n_next;
                l_prev = l_next;
                if d_near < 0.02 * d_far {
                    h = (h * 1.5).min(h_max);
                }
            }
            prev = n_prev;
            prev_ln = l_prev;
            segments.push(seg);
        }
        Ok(Self { segments })
    }
}

/// Eigenvalues `E± = ±n`, right eigenvectors `Ψ±` of `H` and right
/// eigenvectors `Φ±` of `H†`, normalised so that `⟨Φ_a|Ψ_b⟩ = δ_ab`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub n: C64,
    pub e_plus: C64,
    pub e_minus: C64,
    pub psi_plus: Vec2,
    pub psi_minus: Vec2,
    pub phi_plus: Vec2,
    pub phi_minus: Vec2,
}

impl EigenSystem {
    pub fn from_index(n: C64) -> Result<Self> {
        if n.norm() < DEGENERACY_TOLERANCE {
            return Err(Error::DegenerateSpectrum { tau: f64::NAN, n_abs: n.norm() });
        }
        let inv = (2.0 * n).inv();
        let (bp, bm) = Self::bras(n, inv);
        Ok(Self {
            n,
            e_plus: n,
            e_minus: -n,
            psi_plus: [(ONE - n) * 0.5, (ONE + n) * 0.5],
            psi_minus: [(ONE + n) * 0.5, (ONE - n) * 0.5],
            phi_plus: [bp[0].conj(), bp[1].conj()],
            phi_minus: [bm[0].conj(), bm[1].conj()],
        })
    }

    fn bras(n: C64, inv: C64) -> (Vec2, Vec2) {
        ([(n - ONE) * inv, (n + ONE) * inv], [(n + ONE) * inv, (n - ONE) * inv])
    }

    /// Row vector `⟨Φ±|`, analytic in `n`.
    pub fn bra_plus(&self) -> Vec2 {
        [self.phi_plus[0].conj(), self.phi_plus[1].conj()]
    }

    pub fn bra_minus(&self) -> Vec2 {
        [self.phi_minus[0].conj(), self.phi_minus[1].conj()]
    }

    /// `|Ψ_a⟩⟨Φ_b|` for `a, b ∈ {+, −}` given as booleans (`true` = `+`).
    pub fn projector(&self, a: bool, b: bool) -> Mat2 {
        let psi = if a { self.psi_plus } else { self.psi_minus };
        let phi = if b { self.phi_plus } else { self.phi_minus };
        Mat2::outer(psi, phi)
    }
}
