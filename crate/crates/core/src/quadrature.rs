//! Quadrature rules for complex integrands.
//!
//! - adaptive Gauss–Kronrod (7/15) with global error control,
//! - composite Gauss–Legendre panels with a spectral cumulative-integration
//!   matrix, used for iterated integrals over ordered simplices,
//! - a Filon-type panel rule for integrands of the form `a(t)·e^{iωt}`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Gauss–Kronrod 15-point estimate on `[a, b]` with the embedded 7-point
/// Gauss rule as error estimate.
pub fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(C64, f64)>
where
    F: FnMut(f64) -> Result<C64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        kronrod += (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let value = kronrod * h;
    let err = ((kronrod - gauss) * h).norm();
    Ok((value, err))
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-14, max_panels: 200_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate {
    pub value: C64,
    pub error: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod over a union of intervals.
///
/// The integrand is never evaluated at interval endpoints, so intervals may
/// end on discontinuities of the integrand.
pub fn integrate_adaptive<F>(f: F, intervals: &[(f64, f64)], opts: &QuadOptions) -> Result<QuadEstimate>
where
    F: FnMut(f64) -> Result<C64>,
{
    let panels = adaptive_panels(f, intervals, opts)?;
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    for p in &panels {
        value += p.value;
        error += p.error;
    }
    Ok(QuadEstimate { value, error, panels: panels.len() })
}

/// One converged panel of [`adaptive_panels`].
#[derive(Debug, Clone, Copy)]
pub struct PanelValue {
    pub a: f64,
    pub b: f64,
    pub value: C64,
    pub error: f64,
}

/// The converged panel set of [`integrate_adaptive`], sorted by position.
pub fn adaptive_panels<F>(mut f: F, intervals: &[(f64, f64)], opts: &QuadOptions) -> Result<Vec<PanelValue>>
where
    F: FnMut(f64) -> Result<C64>,
{
    let mut heap = BinaryHeap::new();
    let mut total = C64::new(0.0, 0.0);
    let mut total_err = 0.0;
    for &(a, b) in intervals {
        if b <= a {
            continue;
        }
        let (value, error) = gk15(&mut f, a, b)?;
        total += value;
        total_err += error;
        heap.push(Panel { a, b, value, error });
    }
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if total_err <= target {
            break;
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::QuadratureFailure(format!(
                "no convergence after {} panels (error {:e}, target {:e})",
                heap.len(),
                total_err,
                target
            )));
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b || (worst.b - worst.a) < 1e-13 * (1.0 + worst.a.abs()) {
            // Rounding limit: the remaining error cannot be reduced further.
            heap.push(Panel { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m)?;
        let (v2, e2) = gk15(&mut f, m, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, error: e2 });
    }
    let mut out: Vec<PanelValue> =
        heap.into_iter().map(|p| PanelValue { a: p.a, b: p.b, value: p.value, error: p.error }).collect();
    out.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(out)
}

/// Legendre polynomials `P_0(x) … P_{n}(x)`.
pub fn legendre_all(n: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
    }
    for j in 1..n {
        p[j + 1] = ((2 * j + 1) as f64 * x * p[j] - j as f64 * p[j - 1]) / (j + 1) as f64;
    }
    p
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let p = legendre_all(m, x);
            dp = m as f64 * (x * p[m] - p[m - 1]) / (x * x - 1.0);
            let dx = p[m] / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let p = legendre_all(m, x);
        dp = if dp == 0.0 { 1.0 } else { m as f64 * (x * p[m] - p[m - 1]) / (x * x - 1.0) };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule together with its cumulative-integration matrix
/// `S[j][q] = ∫_{-1}^{x_j} ℓ_q(s) ds`, where `ℓ_q` are the Lagrange basis
/// polynomials on the nodes.
#[derive(Debug, Clone)]
pub struct SpectralRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub cumulative: Vec<Vec<f64>>,
}

impl SpectralRule {
    pub fn new(m: usize) -> Self {
        let (nodes, weights) = gauss_legendre(m);
        let p_at_nodes: Vec<Vec<f64>> = nodes.iter().map(|&x| legendre_all(m, x)).collect();
        let mut cumulative = vec![vec![0.0; m]; m];
        for j in 0..m {
            let pj = &p_at_nodes[j];
            for q in 0..m {
                let pq = &p_at_nodes[q];
                let mut s = 0.5 * (nodes[j] + 1.0);
                for n in 1..m {
                    s += 0.5 * pq[n] * (pj[n + 1] - pj[n - 1]);
                }
                cumulative[j][q] = weights[q] * s;
            }
        }
        Self { nodes, weights, cumulative }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Physical node positions on `[a, b]`.
    pub fn map_nodes(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().map(move |&s| c + h * s)
    }

    pub fn integrate<F>(&self, mut f: F, a: f64, b: f64) -> Result<C64>
    where
        F: FnMut(f64) -> Result<C64>,
    {
        let h = 0.5 * (b - a);
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.map_nodes(a, b).zip(&self.weights) {
            acc += f(x)? * *w;
        }
        Ok(acc * h)
    }
}

/// A partition of an interval into panels, each carrying the nodes of a
/// [`SpectralRule`].
#[derive(Debug, Clone)]
pub struct PanelGrid {
    pub panels: Vec<(f64, f64)>,
}

impl PanelGrid {
    /// Splits each segment `[s_i, s_{i+1}]` into equal panels no wider than
    /// `max_width`.
    pub fn from_segments(points: &[f64], max_width: f64) -> Self {
        let mut panels = Vec::new();
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let count = ((b - a) / max_width).ceil().max(1.0) as usize;
            let h = (b - a) / count as f64;
            for i in 0..count {
                let lo = a + i as f64 * h;
                let hi = if i + 1 == count { b } else { a + (i + 1) as f64 * h };
                panels.push((lo, hi));
            }
        }
        Self { panels }
    }

    /// Every panel bisected.
    pub fn refined(&self) -> Self {
        let mut panels = Vec::with_capacity(2 * self.panels.len());
        for &(a, b) in &self.panels {
            let m = 0.5 * (a + b);
            panels.push((a, m));
            panels.push((m, b));
        }
        Self { panels }
    }

    /// All node positions, panel by panel.
    pub fn nodes(&self, rule: &SpectralRule) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.panels.len() * rule.len());
        for &(a, b) in &self.panels {
            out.extend(rule.map_nodes(a, b));
        }
        out
    }

    pub fn node_count(&self, rule: &SpectralRule) -> usize {
        self.panels.len() * rule.len()
    }

    /// Iterated integral over the ordered simplex `t₁ < t₂ < … < t_ℓ`,
    ///
    /// `∫ f_ℓ(t_ℓ) ∫_{t_{ℓ−1}<t_ℓ} f_{ℓ−1}(t_{ℓ−1}) ⋯ ∫_{t₁<t₂} f₁(t₁)`,
    ///
    /// where `factors[j]` holds `f_{j+1}` sampled at [`PanelGrid::nodes`].
    pub fn simplex_integral(&self, rule: &SpectralRule, factors: &[Vec<C64>]) -> C64 {
        let m = rule.len();
        let zero = C64::new(0.0, 0.0);
        // Inner cumulative integral F_{j-1} at the nodes; F_0 ≡ 1.
        let mut inner: Vec<C64> = vec![C64::new(1.0, 0.0); self.node_count(rule)];
        let mut total = zero;
        for f in factors {
            debug_assert_eq!(f.len(), inner.len());
            let mut running = zero;
            let mut next = vec![zero; inner.len()];
            let mut prod = vec![zero; m];
            for (p, &(a, b)) in self.panels.iter().enumerate() {
                let h = 0.5 * (b - a);
                let base = p * m;
                for q in 0..m {
                    prod[q] = f[base + q] * inner[base + q];
                }
                for j in 0..m {
                    let mut s = zero;
                    for q in 0..m {
                        s += prod[q] * rule.cumulative[j][q];
                    }
                    next[base + j] = running + s * h;
                }
                let mut full = zero;
                for q in 0..m {
                    full += prod[q] * rule.weights[q];
                }
                running += full * h;
            }
            total = running;
            inner = next;
        }
        total
    }
}

/// `∫_{-1}^{1} P_j(s) e^{iθs} ds` for `j = 0..m`.
fn legendre_fourier_moments(m: usize, theta: f64, dense: &(Vec<f64>, Vec<f64>)) -> Vec<C64> {
    if theta.abs() <= 48.0 {
        let (xs, ws) = dense;
        let mut mom = vec![C64::new(0.0, 0.0); m + 1];
        for (&x, &w) in xs.iter().zip(ws) {
            let e = C64::from_polar(w, theta * x);
            let p = legendre_all(m, x);
            for j in 0..=m {
                mom[j] += e * p[j];
            }
        }
        mom
    } else {
        // 2 iʲ j_j(θ) with upward recurrence, stable for j < |θ|.
        let (s, c) = theta.sin_cos();
        let mut jb = vec![0.0; m + 1];
        jb[0] = s / theta;
        if m >= 1 {
            jb[1] = s / (theta * theta) - c / theta;
        }
        for n in 1..m {
            jb[n + 1] = (2 * n + 1) as f64 / theta * jb[n] - jb[n - 1];
        }
        let mut ip = C64::new(1.0, 0.0);
        let mut mom = Vec::with_capacity(m + 1);
        for v in jb {
            mom.push(ip * (2.0 * v));
            ip *= C64::new(0.0, 1.0);
        }
        mom
    }
}

/// Filon-type rule for `∫_a^b a(t) e^{iωt} dt`: the amplitude is interpolated
/// by a polynomial on Gauss–Legendre nodes and the oscillatory factor is
/// integrated exactly against it.
#[derive(Debug, Clone)]
pub struct FilonRule {
    rule: SpectralRule,
    dense: (Vec<f64>, Vec<f64>),
}

impl FilonRule {
    pub fn new(m: usize) -> Self {
        Self { rule: SpectralRule::new(m), dense: gauss_legendre(96) }
    }

    /// Weights `W_q` such that `∫_a^b a(t)e^{iωt} ≈ Σ_q W_q a(t_q)` on one panel.
    pub fn panel_weights(&self, omega: f64, a: f64, b: f64) -> Vec<C64> {
        let m = self.rule.len();
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let theta = omega * h;
        let mom = legendre_fourier_moments(m - 1, theta, &self.dense);
        let phase = C64::from_polar(h, omega * c);
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(&s, &w)| {
                let p = legendre_all(m - 1, s);
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..m {
                    acc += mom[j] * (0.5 * (2 * j + 1) as f64 * w * p[j]);
                }
                acc * phase
            })
            .collect()
    }

    pub fn integrate_panel<F>(&self, amp: &mut F, omega: f64, a: f64, b: f64) -> Result<C64>
    where
        F: FnMut(f64) -> Result<C64>,
    {
        let weights = self.panel_weights(omega, a, b);
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.rule.map_nodes(a, b).zip(weights) {
            acc += amp(x)? * w;
        }
        Ok(acc)
    }

    pub fn integrate_grid<F>(&self, mut amp: F, omega: f64, grid: &PanelGrid) -> Result<C64>
    where
        F: FnMut(f64) -> Result<C64>,
    {
        let mut acc = C64::new(0.0, 0.0);
        for &(a, b) in &grid.panels {
            acc += self.integrate_panel(&mut amp, omega, a, b)?;
        }
        Ok(acc)
    }
}

/// Repeats `eval` on successively bisected grids until two consecutive
/// results agree componentwise to `max(abs_tol, rel_tol·max|value|)`.
/// Returns the last values and the largest change.
pub fn refine_until_converged<F>(
    mut grid: PanelGrid,
    opts: &QuadOptions,
    max_refinements: usize,
    mut eval: F,
) -> Result<(Vec<C64>, f64)>
where
    F: FnMut(&PanelGrid) -> Result<Vec<C64>>,
{
    let mut prev = eval(&grid)?;
    for _ in 0..max_refinements {
        grid = grid.refined();
        let next = eval(&grid)?;
        let diff = next.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = next.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if diff <= opts.abs_tol.max(opts.rel_tol * scale) {
            return Ok((next, diff));
        }
        prev = next;
    }
    Err(Error::QuadratureFailure(format!("panel refinement did not converge after {max_refinements} bisections")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for m in [1usize, 2, 5, 8, 16, 33] {
            let (x, w) = gauss_legendre(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * m) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "m={m} deg={deg}");
            }
        }
    }

    #[test]
    fn cumulative_matrix_integrates_polynomials() {
        let rule = SpectralRule::new(12);
        // f(s) = 3s² + 2s - 1, F(x) = x³ + x² - x - (−1 + 1 + 1)
        for (j, &x) in rule.nodes.iter().enumerate() {
            let approx: f64 = rule
                .nodes
                .iter()
                .enumerate()
                .map(|(q, &s)| rule.cumulative[j][q] * (3.0 * s * s + 2.0 * s - 1.0))
                .sum();
            let exact = x * x * x + x * x - x - 1.0;
            assert!((approx - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn adaptive_handles_peaked_and_oscillatory_integrands() {
        let opts = QuadOptions::default();
        let r = integrate_adaptive(|x| Ok(c(1.0 / (1e-4 + x * x), 0.0)), &[(-1.0, 1.0)], &opts).unwrap();
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((r.value.re - exact).abs() < 1e-9 * exact);

        let r = integrate_adaptive(|x| Ok(C64::from_polar(1.0, 40.0 * x)), &[(0.0, 3.0)], &opts).unwrap();
        let exact = (C64::from_polar(1.0, 120.0) - 1.0) / c(0.0, 40.0);
        assert!((r.value - exact).norm() < 1e-11);
    }

    #[test]
    fn simplex_integral_of_constants_is_volume() {
        // ∫_{0<t1<t2<t3<2} 1 = 2³/3!
        let rule = SpectralRule::new(8);
        let grid = PanelGrid::from_segments(&[0.0, 2.0], 0.3);
        let ones = vec![c(1.0, 0.0); grid.node_count(&rule)];
        let v = grid.simplex_integral(&rule, &[ones.clone(), ones.clone(), ones]);
        assert!((v - c(8.0 / 6.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn simplex_integral_of_exponentials() {
        // ∫_{0<t1<t2<1} e^{i a t1} e^{i b t2}: brute-force closed form.
        let (a, b) = (3.0, -1.7);
        let rule = SpectralRule::new(10);
        let grid = PanelGrid::from_segments(&[0.0, 0.5, 1.0], 0.2);
        let nodes = grid.nodes(&rule);
        let f1: Vec<C64> = nodes.iter().map(|&t| C64::from_polar(1.0, a * t)).collect();
        let f2: Vec<C64> = nodes.iter().map(|&t| C64::from_polar(1.0, b * t)).collect();
        let v = grid.simplex_integral(&rule, &[f1, f2]);
        // ∫_0^1 e^{ibt2} (e^{iat2} − 1)/(ia) dt2
        let ia = c(0.0, a);
        let e = |w: f64| (C64::from_polar(1.0, w) - 1.0) / c(0.0, w);
        let exact = (e(a + b) - e(b)) / ia;
        assert!((v - exact).norm() < 1e-13);
    }

    #[test]
    fn filon_matches_closed_form_at_high_frequency() {
        // ∫_0^2 t² e^{iωt} dt
        let filon = FilonRule::new(8);
        for omega in [0.5, 7.0, 60.0, 900.0] {
            let grid = PanelGrid::from_segments(&[0.0, 2.0], 1.0);
            let v = filon.integrate_grid(|t| Ok(c(t * t, 0.0)), omega, &grid).unwrap();
            let iw = c(0.0, omega);
            let e = C64::from_polar(1.0, 2.0 * omega);
            let exact = e * (c(4.0, 0.0) / iw - c(4.0, 0.0) / (iw * iw) + 2.0 / (iw * iw * iw)) - 2.0 / (iw * iw * iw);
            assert!((v - exact).norm() < 1e-12 * (1.0 + exact.norm()), "omega={omega}");
        }
    }
}
