//! Built-in scattering potentials and sampled potentials read from files.
//!
//! Potentials are functions of the position `x` (units of length) with
//! values in units of 1/length². The exponential index profile is defined
//! through its refractive index, so its potential `v = k²(1 − n²)` depends on
//! the wavenumber; every evaluation therefore takes `k`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Which one-sided limit to take when `x` sits exactly on a discontinuity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Linear,
    #[default]
    Cubic,
    /// Piecewise-cubic Hermite with Fritsch–Carlson slopes; no overshoot.
    MonotoneCubic,
}

impl std::str::FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "cubic" => Ok(Self::Cubic),
            "monotone" | "monotone-cubic" | "pchip" => Ok(Self::MonotoneCubic),
            other => Err(Error::InvalidParameter(format!("unknown interpolation '{other}'"))),
        }
    }
}

/// Potential tabulated on a strictly increasing grid.
#[derive(Debug, Clone)]
pub struct SampledPotential {
    xs: Arc<[f64]>,
    values: Arc<[C64]>,
    /// Node slopes for Hermite interpolation; empty for linear.
    slopes: Arc<[C64]>,
    interpolation: Interpolation,
}

impl SampledPotential {
    pub fn new(xs: Vec<f64>, values: Vec<C64>, interpolation: Interpolation) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(Error::InvalidParameter("x and v columns differ in length".into()));
        }
        if xs.len() < 2 {
            return Err(Error::MalformedFile { line: 0, reason: "at least two samples are required".into() });
        }
        for (i, w) in xs.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::MalformedFile { line: i + 2, reason: "x column is not strictly increasing".into() });
            }
        }
        let slopes = match interpolation {
            Interpolation::Linear => Vec::new(),
            Interpolation::Cubic => natural_spline_slopes(&xs, &values),
            Interpolation::MonotoneCubic => {
                let re: Vec<f64> = values.iter().map(|v| v.re).collect();
                let im: Vec<f64> = values.iter().map(|v| v.im).collect();
                let dre = pchip_slopes(&xs, &re);
                let dim = pchip_slopes(&xs, &im);
                dre.into_iter().zip(dim).map(|(a, b)| C64::new(a, b)).collect()
            }
        };
        Ok(Self { xs: xs.into(), values: values.into(), slopes: slopes.into(), interpolation })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    fn lo(&self) -> f64 {
        self.xs[0]
    }

    fn hi(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// Interval index `i` with `xs[i] ≤ x ≤ xs[i+1]`, honouring the side at nodes.
    fn interval(&self, x: f64, side: Side) -> usize {
        let n = self.xs.len();
        let p = match side {
            Side::Right => self.xs.partition_point(|&xi| xi <= x),
            Side::Left => self.xs.partition_point(|&xi| xi < x),
        };
        p.saturating_sub(1).min(n - 2)
    }

    fn inside(&self, x: f64, side: Side) -> bool {
        let (lo, hi) = (self.lo(), self.hi());
        (x > lo && x < hi) || (x == lo && side == Side::Right) || (x == hi && side == Side::Left)
    }

    fn value(&self, x: f64, side: Side) -> C64 {
        if !self.inside(x, side) {
            return ZERO;
        }
        let i = self.interval(x, side);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        match self.interpolation {
            Interpolation::Linear => y0 * (1.0 - t) + y1 * t,
            _ => {
                let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
                let t2 = t * t;
                let t3 = t2 * t;
                y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
                    + d0 * (h * (t3 - 2.0 * t2 + t))
                    + y1 * (-2.0 * t3 + 3.0 * t2)
                    + d1 * (h * (t3 - t2))
            }
        }
    }

    fn derivative(&self, x: f64, side: Side) -> C64 {
        if !self.inside(x, side) {
            return ZERO;
        }
        let i = self.interval(x, side);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        match self.interpolation {
            Interpolation::Linear => (y1 - y0) / h,
            _ => {
                let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
                let t2 = t * t;
                (y0 * (6.0 * t2 - 6.0 * t) + y1 * (6.0 * t - 6.0 * t2)) / h
                    + d0 * (3.0 * t2 - 4.0 * t + 1.0)
                    + d1 * (3.0 * t2 - 2.0 * t)
            }
        }
    }
}

fn natural_spline_slopes(xs: &[f64], ys: &[C64]) -> Vec<C64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let sec: Vec<C64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    // Second derivatives from the tridiagonal system, natural end conditions.
    let mut m2 = vec![ZERO; n];
    if n > 2 {
        let size = n - 2;
        let mut diag = vec![0.0; size];
        let mut rhs = vec![ZERO; size];
        for j in 0..size {
            let i = j + 1;
            diag[j] = 2.0 * (h[i - 1] + h[i]);
            rhs[j] = (sec[i] - sec[i - 1]) * 6.0;
        }
        // Thomas algorithm; off-diagonals are h[i].
        for j in 1..size {
            let w = h[j] / diag[j - 1];
            diag[j] -= w * h[j];
            let prev = rhs[j - 1];
            rhs[j] -= prev * w;
        }
        let mut sol = vec![ZERO; size];
        sol[size - 1] = rhs[size - 1] / diag[size - 1];
        for j in (0..size - 1).rev() {
            sol[j] = (rhs[j] - sol[j + 1] * h[j + 1]) / diag[j];
        }
        m2[1..n - 1].copy_from_slice(&sol);
    }
    let mut d = vec![ZERO; n];
    for i in 0..n - 1 {
        d[i] = sec[i] - (m2[i] * 2.0 + m2[i + 1]) * (h[i] / 6.0);
    }
    d[n - 1] = sec[n - 2] + (m2[n - 2] + m2[n - 1] * 2.0) * (h[n - 2] / 6.0);
    d
}

fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = del[0];
        d[1] = del[0];
        return d;
    }
    for i in 1..n - 1 {
        if del[i - 1] * del[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| -> f64 {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

/// Quintic smoothstep `6t⁵ − 15t⁴ + 10t³` and its derivative, clamped to `[0, 1]`.
fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        let t2 = t * t;
        (t2 * t * (10.0 + t * (6.0 * t - 15.0)), 30.0 * t2 * (t - 1.0) * (t - 1.0))
    }
}

#[derive(Debug, Clone)]
pub enum PotentialKind {
    Free,
    /// `v0` on `[0, length]`.
    Rectangular {
        v0: C64,
        length: f64,
    },
    /// `amplitude·exp(−(x − center)²/(2 width²))`, infinite range.
    Gaussian {
        amplitude: C64,
        center: f64,
        width: f64,
    },
    /// Refractive index `1 + ε e^{iKx}` on `[0, length]`.
    ExpProfile {
        epsilon: f64,
        wavenumber: f64,
        length: f64,
    },
    /// Rectangular barrier whose edges rise over `ramp` with a C² quintic
    /// smoothstep; a smooth stand-in for the sharp barrier.
    SmoothRectangular {
        v0: C64,
        length: f64,
        ramp: f64,
    },
    Sampled(SampledPotential),
}

/// Immutable description of a potential.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    kind: PotentialKind,
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PotentialKind::Free => write!(f, "free"),
            PotentialKind::Rectangular { v0, length } => write!(f, "rectangular(v0={v0}, L={length})"),
            PotentialKind::Gaussian { amplitude, center, width } => {
                write!(f, "gaussian(v0={amplitude}, x0={center}, sigma={width})")
            }
            PotentialKind::ExpProfile { epsilon, wavenumber, length } => {
                write!(f, "exp-profile(eps={epsilon}, K={wavenumber}, L={length})")
            }
            PotentialKind::SmoothRectangular { v0, length, ramp } => {
                write!(f, "smooth-rectangular(v0={v0}, L={length}, ramp={ramp})")
            }
            PotentialKind::Sampled(s) => write!(f, "sampled({} points, {:?})", s.xs.len(), s.interpolation),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite_c(name: &str, v: C64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite")))
    }
}

impl PotentialSpec {
    pub fn free() -> Self {
        Self { kind: PotentialKind::Free }
    }

    pub fn rectangular(v0: C64, length: f64) -> Result<Self> {
        finite_c("v0", v0)?;
        positive("length", length)?;
        Ok(Self { kind: PotentialKind::Rectangular { v0, length } })
    }

    pub fn gaussian(amplitude: C64, center: f64, width: f64) -> Result<Self> {
        finite_c("amplitude", amplitude)?;
        positive("width", width)?;
        if !center.is_finite() {
            return Err(Error::InvalidParameter("center must be finite".into()));
        }
        Ok(Self { kind: PotentialKind::Gaussian { amplitude, center, width } })
    }

    pub fn exp_profile(epsilon: f64, wavenumber: f64, length: f64) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(Error::InvalidParameter("epsilon must be finite".into()));
        }
        positive("K", wavenumber)?;
        positive("length", length)?;
        Ok(Self { kind: PotentialKind::ExpProfile { epsilon, wavenumber, length } })
    }

    pub fn smooth_rectangular(v0: C64, length: f64, ramp: f64) -> Result<Self> {
        finite_c("v0", v0)?;
        positive("length", length)?;
        positive("ramp", ramp)?;
        if 2.0 * ramp > length {
            return Err(Error::InvalidParameter("ramp must not exceed half the length".into()));
        }
        Ok(Self { kind: PotentialKind::SmoothRectangular { v0, length, ramp } })
    }

    pub fn sampled(s: SampledPotential) -> Self {
        Self { kind: PotentialKind::Sampled(s) }
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// True when `v` depends on `k` (index-first profiles).
    pub fn is_k_coupled(&self) -> bool {
        matches!(self.kind, PotentialKind::ExpProfile { .. })
    }

    /// True when `v(x)` is real for every `x`.
    pub fn is_real(&self) -> bool {
        match &self.kind {
            PotentialKind::Free => true,
            PotentialKind::Rectangular { v0, .. } | PotentialKind::SmoothRectangular { v0, .. } => v0.im == 0.0,
            PotentialKind::Gaussian { amplitude, .. } => amplitude.im == 0.0,
            PotentialKind::ExpProfile { epsilon, .. } => *epsilon == 0.0,
            PotentialKind::Sampled(s) => s.values.iter().all(|v| v.im == 0.0),
        }
    }

    pub fn has_finite_support(&self) -> bool {
        !matches!(self.kind, PotentialKind::Gaussian { .. })
    }

    /// Support `[x₋, x₊]`; infinite-range potentials are cut where
    /// `|v| < threshold·k²`. A vanishing potential has an empty support
    /// (`x₋ = x₊`).
    pub fn support(&self, k: f64, threshold: f64) -> (f64, f64) {
        match &self.kind {
            PotentialKind::Free => (0.0, 0.0),
            PotentialKind::Rectangular { v0, length } | PotentialKind::SmoothRectangular { v0, length, .. } => {
                if *v0 == ZERO {
                    (0.0, 0.0)
                } else {
                    (0.0, *length)
                }
            }
            PotentialKind::ExpProfile { epsilon, length, .. } => {
                if *epsilon == 0.0 {
                    (0.0, 0.0)
                } else {
                    (0.0, *length)
                }
            }
            PotentialKind::Gaussian { amplitude, center, width } => {
                let ratio = amplitude.norm() / (threshold * k * k);
                if ratio <= 1.0 {
                    (*center, *center)
                } else {
                    let r = width * (2.0 * ratio.ln()).sqrt();
                    (center - r, center + r)
                }
            }
            PotentialKind::Sampled(s) => {
                if s.values.iter().all(|v| *v == ZERO) {
                    (s.lo(), s.lo())
                } else {
                    (s.lo(), s.hi())
                }
            }
        }
    }

    /// Jump discontinuities of `v`.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Free | PotentialKind::Gaussian { .. } | PotentialKind::SmoothRectangular { .. } => vec![],
            PotentialKind::Rectangular { v0, length } => {
                if *v0 == ZERO {
                    vec![]
                } else {
                    vec![0.0, *length]
                }
            }
            PotentialKind::ExpProfile { epsilon, length, .. } => {
                if *epsilon == 0.0 {
                    return vec![];
                }
                vec![0.0, *length]
            }
            PotentialKind::Sampled(s) => {
                let mut b = vec![];
                if s.values[0] != ZERO {
                    b.push(s.lo());
                }
                if s.values[s.values.len() - 1] != ZERO {
                    b.push(s.hi());
                }
                b
            }
        }
    }

    /// Points where `v` is continuous but a low derivative jumps. Integrators
    /// split their intervals here in addition to the breakpoints.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::SmoothRectangular { v0, length, ramp } => {
                if *v0 == ZERO {
                    vec![]
                } else {
                    vec![*ramp, length - ramp]
                }
            }
            PotentialKind::Sampled(s) if s.interpolation == Interpolation::Linear => s.xs[1..s.xs.len() - 1].to_vec(),
            _ => vec![],
        }
    }

    /// Refractive index of an index-first profile, `None` for other kinds.
    pub fn index_profile(&self, x: f64) -> Option<C64> {
        match &self.kind {
            PotentialKind::ExpProfile { epsilon, wavenumber, length } => {
                if x > 0.0 && x < *length {
                    Some(1.0 + C64::from_polar(*epsilon, wavenumber * x))
                } else {
                    Some(C64::new(1.0, 0.0))
                }
            }
            _ => None,
        }
    }

    /// `v(x)`; at a breakpoint the limit from the right is returned.
    pub fn evaluate(&self, x: f64, k: f64) -> C64 {
        self.evaluate_sided(x, k, Side::Right)
    }

    pub fn evaluate_sided(&self, x: f64, k: f64, side: Side) -> C64 {
        let inside = |lo: f64, hi: f64| {
            (x > lo && x < hi) || (x == lo && side == Side::Right) || (x == hi && side == Side::Left)
        };
        match &self.kind {
            PotentialKind::Free => ZERO,
            PotentialKind::Rectangular { v0, length } => {
                if inside(0.0, *length) {
                    *v0
                } else {
                    ZERO
                }
            }
            PotentialKind::Gaussian { amplitude, center, width } => {
                let u = (x - center) / width;
                amplitude * (-0.5 * u * u).exp()
            }
            PotentialKind::ExpProfile { epsilon, wavenumber, length } => {
                if inside(0.0, *length) {
                    let n = 1.0 + C64::from_polar(*epsilon, wavenumber * x);
                    (1.0 - n * n) * (k * k)
                } else {
                    ZERO
                }
            }
            PotentialKind::SmoothRectangular { v0, length, ramp } => {
                if x <= 0.0 || x >= *length {
                    return ZERO;
                }
                let (up, _) = smoothstep(x / ramp);
                let (down, _) = smoothstep((length - x) / ramp);
                v0 * (up * down)
            }
            PotentialKind::Sampled(s) => s.value(x, side),
        }
    }

    /// Analytic `dv/dx`, when the kind provides one.
    pub fn derivative_sided(&self, x: f64, k: f64, side: Side) -> Option<C64> {
        let inside = |lo: f64, hi: f64| {
            (x > lo && x < hi) || (x == lo && side == Side::Right) || (x == hi && side == Side::Left)
        };
        Some(match &self.kind {
            PotentialKind::Free | PotentialKind::Rectangular { .. } => ZERO,
            PotentialKind::Gaussian { amplitude, center, width } => {
                let u = (x - center) / width;
                amplitude * (-0.5 * u * u).exp() * (-u / width)
            }
            PotentialKind::ExpProfile { epsilon, wavenumber, length } => {
                if inside(0.0, *length) {
                    let e = C64::from_polar(*epsilon, wavenumber * x);
                    let n = 1.0 + e;
                    let dn = e * C64::new(0.0, *wavenumber);
                    -(n * dn) * (2.0 * k * k)
                } else {
                    ZERO
                }
            }
            PotentialKind::SmoothRectangular { v0, length, ramp } => {
                if x <= 0.0 || x >= *length {
                    return Some(ZERO);
                }
                let (up, dup) = smoothstep(x / ramp);
                let (down, ddown) = smoothstep((length - x) / ramp);
                v0 * ((dup * down - up * ddown) / ramp)
            }
            PotentialKind::Sampled(s) => s.derivative(x, side),
        })
    }

    pub fn has_analytic_derivative(&self) -> bool {
        true
    }
}

/// Central finite difference of `v` with step `h`, switching to a one-sided
/// second-order stencil when the central one would leave `[lo, hi]`.
pub fn finite_difference(p: &PotentialSpec, x: f64, k: f64, h: f64, lo: f64, hi: f64) -> C64 {
    let f = |y: f64, side: Side| p.evaluate_sided(y, k, side);
    if x - h >= lo && x + h <= hi {
        (f(x + h, Side::Left) - f(x - h, Side::Right)) / (2.0 * h)
    } else if x + 2.0 * h <= hi {
        (f(x, Side::Right) * -3.0 + f(x + h, Side::Right) * 4.0 - f(x + 2.0 * h, Side::Left)) / (2.0 * h)
    } else {
        (f(x, Side::Left) * 3.0 - f(x - h, Side::Left) * 4.0 + f(x - 2.0 * h, Side::Right)) / (2.0 * h)
    }
}

/// Parses the sampled-potential text format: `#` comments, rows
/// `x  Re(v)  [Im(v)]`, `x` strictly increasing.
pub fn parse_sampled(text: &str, interpolation: Interpolation) -> Result<PotentialSpec> {
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(Error::MalformedFile {
                line: line_no,
                reason: format!("expected 2 or 3 columns, found {}", cols.len()),
            });
        }
        let mut nums = [0.0f64; 3];
        for (j, c) in cols.iter().enumerate() {
            let v: f64 = c.parse().map_err(|_| Error::MalformedFile {
                line: line_no,
                reason: format!("cannot parse '{c}' as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedFile { line: line_no, reason: format!("non-finite value '{c}'") });
            }
            nums[j] = v;
        }
        if let Some(&last) = xs.last() {
            if !(nums[0] > last) {
                return Err(Error::MalformedFile {
                    line: line_no,
                    reason: "x column is not strictly increasing".into(),
                });
            }
        }
        xs.push(nums[0]);
        vs.push(C64::new(nums[1], nums[2]));
    }
    if xs.len() < 2 {
        return Err(Error::MalformedFile { line: 0, reason: "at least two data rows are required".into() });
    }
    Ok(PotentialSpec::sampled(SampledPotential::new(xs, vs, interpolation)?))
}

pub fn load_sampled(path: impl AsRef<Path>, interpolation: Interpolation) -> Result<PotentialSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_sampled(&text, interpolation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn free_is_zero_everywhere() {
        let p = PotentialSpec::free();
        for x in [-3.0, 0.0, 1e9] {
            assert_eq!(p.evaluate(x, 2.0), ZERO);
        }
        assert_eq!(p.support(1.0, 1e-12), (0.0, 0.0));
    }

    #[test]
    fn rectangular_edges_follow_side_convention() {
        let p = PotentialSpec::rectangular(c(1.0, 0.5), 2.0).unwrap();
        assert_eq!(p.evaluate_sided(0.0, 1.0, Side::Left), ZERO);
        assert_eq!(p.evaluate_sided(0.0, 1.0, Side::Right), c(1.0, 0.5));
        assert_eq!(p.evaluate_sided(2.0, 1.0, Side::Left), c(1.0, 0.5));
        assert_eq!(p.evaluate_sided(2.0, 1.0, Side::Right), ZERO);
        assert_eq!(p.breakpoints(), vec![0.0, 2.0]);
    }

    #[test]
    fn exp_profile_potential_matches_index() {
        let (eps, kk, l, k) = (0.01, 1.3, 5.0, 0.7);
        let p = PotentialSpec::exp_profile(eps, kk, l).unwrap();
        let x = 1.234;
        let n = 1.0 + C64::from_polar(eps, kk * x);
        let v = p.evaluate(x, k);
        assert!((v - (1.0 - n * n) * (k * k)).norm() < 1e-15);
        assert_eq!(p.index_profile(x), Some(n));
        assert_eq!(p.evaluate(-0.1, k), ZERO);
        assert_eq!(p.evaluate(5.1, k), ZERO);
    }

    #[test]
    fn gaussian_truncation_radius() {
        let p = PotentialSpec::gaussian(c(0.5, 0.0), 1.0, 2.0).unwrap();
        let (lo, hi) = p.support(1.0, 1e-12);
        assert!((p.evaluate(lo, 1.0).norm() - 1e-12).abs() < 1e-18);
        assert!((p.evaluate(hi, 1.0).norm() - 1e-12).abs() < 1e-18);
        assert!((lo + hi - 2.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let corpus = [
            PotentialSpec::gaussian(c(0.4, 0.2), 0.3, 1.1).unwrap(),
            PotentialSpec::exp_profile(0.05, 2.0, 3.0).unwrap(),
            PotentialSpec::smooth_rectangular(c(0.3, -0.1), 4.0, 0.5).unwrap(),
            PotentialSpec::rectangular(c(0.3, 0.0), 2.0).unwrap(),
            parse_sampled(
                &(0..=60)
                    .map(|i| {
                        let x = -3.0 + 0.1 * i as f64;
                        format!("{x} {} {}\n", (-x * x).exp(), 0.2 * (-x * x).exp())
                    })
                    .collect::<String>(),
                Interpolation::Cubic,
            )
            .unwrap(),
        ];
        let k = 1.4;
        for p in &corpus {
            let (lo, hi) = p.support(k, 1e-12);
            let mut cuts = vec![lo, hi];
            cuts.extend(p.kinks());
            cuts.extend(p.breakpoints());
            cuts.sort_by(f64::total_cmp);
            let mut checked = 0;
            while checked < 100 {
                let x = rng.gen_range(lo..hi);
                // Stay away from interior kinks so the reference is smooth.
                if cuts.iter().any(|c| (x - c).abs() < 1e-3) {
                    continue;
                }
                let h = 1e-6 * x.abs().max(1.0);
                let fd = finite_difference(p, x, k, h, lo, hi);
                let an = p.derivative_sided(x, k, Side::Right).unwrap();
                let scale = an.norm().max(1e-3 * p.evaluate(x, k).norm()).max(1e-12);
                assert!((fd - an).norm() <= 1e-6 * scale, "{p} at x={x}: fd={fd} an={an}");
                checked += 1;
            }
        }
    }

    #[test]
    fn sampled_reproduces_nodes_exactly() {
        let text = "# comment\n0.0 0.0\n0.5 1.0 0.25\n1.0 0.3 -0.1\n1.7 0.0\n";
        for interp in [Interpolation::Linear, Interpolation::Cubic, Interpolation::MonotoneCubic] {
            let p = parse_sampled(text, interp).unwrap();
            assert_eq!(p.evaluate(0.5, 1.0), c(1.0, 0.25));
            assert_eq!(p.evaluate(1.0, 1.0), c(0.3, -0.1));
            assert_eq!(p.evaluate(2.0, 1.0), ZERO);
            assert!(p.breakpoints().is_empty());
        }
    }

    #[test]
    fn sampled_nonzero_endpoints_are_breakpoints() {
        let p = parse_sampled("0 1\n1 2\n2 1\n", Interpolation::Cubic).unwrap();
        assert_eq!(p.breakpoints(), vec![0.0, 2.0]);
        assert_eq!(p.evaluate_sided(2.0, 1.0, Side::Left), c(1.0, 0.0));
        assert_eq!(p.evaluate_sided(2.0, 1.0, Side::Right), ZERO);
    }

    #[test]
    fn two_point_zero_file_is_free() {
        let p = parse_sampled("-1 0\n1 0 0\n", Interpolation::Cubic).unwrap();
        let (lo, hi) = p.support(1.0, 1e-12);
        assert_eq!(lo, hi);
        assert_eq!(p.evaluate(0.0, 1.0), ZERO);
    }

    #[test]
    fn malformed_files_are_rejected() {
        for text in ["0 1\n1 NaN\n", "0 1\n0 2\n", "0 1 2 3\n1 0\n", "0 1\n", "0 abc\n1 0\n", "0 1\n1 inf\n"] {
            assert!(
                matches!(parse_sampled(text, Interpolation::Cubic), Err(Error::MalformedFile { .. })),
                "accepted {text:?}"
            );
        }
    }

    #[test]
    fn monotone_cubic_does_not_overshoot() {
        let text = "0 0\n1 0\n2 1\n3 1\n4 1\n";
        let p = parse_sampled(text, Interpolation::MonotoneCubic).unwrap();
        for i in 0..=400 {
            let x = i as f64 * 0.01;
            let v = p.evaluate_sided(x, 1.0, Side::Left).re;
            assert!((-1e-15..=1.0 + 1e-15).contains(&v), "overshoot {v} at {x}");
        }
        let cubic = parse_sampled(text, Interpolation::Cubic).unwrap();
        let max = (0..=400).map(|i| cubic.evaluate(i as f64 * 0.01, 1.0).re).fold(f64::MIN, f64::max);
        assert!(max > 1.0, "natural spline should overshoot on a step");
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.dat");
        std::fs::write(&path, "0 0\n1 0.5 0.1\n2 0\n").unwrap();
        let p = load_sampled(&path, Interpolation::Linear).unwrap();
        assert_eq!(p.evaluate(0.5, 1.0), c(0.25, 0.05));
        assert!(matches!(load_sampled(dir.path().join("missing"), Interpolation::Linear), Err(Error::Io(_))));
    }
}
