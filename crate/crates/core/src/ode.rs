//! Adaptive integrators for linear complex ODEs.
//!
//! [`dopri5`] is an embedded Dormand–Prince 5(4) pair on an arbitrary complex
//! state vector. [`magnus4`] is a fourth-order Magnus stepper for
//! `dU/dτ = A(τ)·U` with traceless 2×2 `A`; it keeps `det U = 1` to rounding
//! and is exact for piecewise-constant generators.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mat2::Mat2;

#[derive(Debug, Clone, Copy)]
pub struct OdeTolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeTolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 5_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Sum over accepted steps of the largest local error estimate.
    pub error_estimate: f64,
}

impl OdeStats {
    pub fn merge(&mut self, other: &OdeStats) {
        self.steps += other.steps;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
        self.error_estimate += other.error_estimate;
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn min_step(t: f64) -> f64 {
    1e-13 * t.abs().max(1.0)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 ≥ t0` in place.
///
/// `f` is evaluated at both endpoints of each step, including `t0` and `t1`.
pub fn dopri5<F>(mut f: F, t0: f64, t1: f64, y: &mut [C64], tol: &OdeTolerances) -> Result<OdeStats>
where
    F: FnMut(f64, &[C64], &mut [C64]) -> Result<()>,
{
    let n = y.len();
    let mut stats = OdeStats::default();
    if t1 <= t0 || n == 0 {
        return Ok(stats);
    }
    let zero = C64::new(0.0, 0.0);
    let mut k = vec![vec![zero; n]; 7];
    let mut tmp = vec![zero; n];
    let mut y_new = vec![zero; n];

    let mut t = t0;
    f(t, y, &mut k[0])?;
    stats.evaluations += 1;

    let norm = |v: &[C64], s: &[C64]| -> f64 {
        let mut acc = 0.0;
        for (vi, si) in v.iter().zip(s) {
            let sc = tol.atol + tol.rtol * si.norm();
            acc += (vi.norm() / sc).powi(2);
        }
        (acc / v.len() as f64).sqrt()
    };

    // Initial step guess from the scale of y and y'.
    let d0 = norm(y, y);
    let d1 = norm(&k[0], y);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(t1 - t0).max(min_step(t));

    let mut last = false;
    while !last || t < t1 {
        if stats.steps + stats.rejected >= tol.max_steps {
            return Err(Error::ToleranceNotMet(format!("step budget of {} exhausted at t = {t}", tol.max_steps)));
        }
        if t + h >= t1 || t + 1.01 * h >= t1 {
            h = t1 - t;
            last = true;
        } else {
            last = false;
        }

        macro_rules! stage {
            ($dst:expr, $c:expr, $( ($ai:expr, $ki:expr) ),* ) => {{
                for i in 0..n {
                    let mut s = zero;
                    $( s += k[$ki][i] * $ai; )*
                    tmp[i] = y[i] + s * h;
                }
                let (_, rest) = k.split_at_mut($dst);
                f(t + $c * h, &tmp, &mut rest[0])?;
            }};
        }
        stage!(1, C2, (A21, 0));
        stage!(2, C3, (A31, 0), (A32, 1));
        stage!(3, C4, (A41, 0), (A42, 1), (A43, 2));
        stage!(4, C5, (A51, 0), (A52, 1), (A53, 2), (A54, 3));
        stage!(5, 1.0, (A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4));
        let t_next = if last { t1 } else { t + h };
        for i in 0..n {
            y_new[i] = y[i] + (k[0][i] * A71 + k[2][i] * A73 + k[3][i] * A74 + k[4][i] * A75 + k[5][i] * A76) * h;
        }
        {
            let (_, rest) = k.split_at_mut(6);
            f(t_next, &y_new, &mut rest[0])?;
        }
        stats.evaluations += 6;

        let mut err_max = 0.0f64;
        let mut acc = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
            let sc = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            acc += (e.norm() / sc).powi(2);
            err_max = err_max.max(e.norm());
        }
        let err = (acc / n as f64).sqrt();

        if err <= 1.0 || h <= min_step(t) {
            if err > 1.0 {
                return Err(Error::StepUnderflow { tau: t, step: h });
            }
            t = t_next;
            y.copy_from_slice(&y_new);
            let (first, rest) = k.split_at_mut(6);
            first[0].copy_from_slice(&rest[0]);
            stats.steps += 1;
            stats.error_estimate += err_max;
            if last {
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            last = false;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < min_step(t) {
                return Err(Error::StepUnderflow { tau: t, step: h });
            }
        }
    }
    Ok(stats)
}

/// One fourth-order Magnus step for `U' = A(τ)U` over `[t, t + h]`.
fn magnus_step<F>(gen: &mut F, t: f64, h: f64) -> Result<Mat2>
where
    F: FnMut(f64) -> Result<Mat2>,
{
    let d = 3f64.sqrt() / 6.0;
    let a1 = gen(t + h * (0.5 - d))?;
    let a2 = gen(t + h * (0.5 + d))?;
    let omega = (a1 + a2) * (0.5 * h) + a2.commutator(&a1) * (3f64.sqrt() / 12.0 * h * h);
    Ok(omega.exp_traceless())
}

/// Propagates `u` by `U' = A(τ)U` from `t0` to `t1` with step-doubling
/// error control. The generator is only sampled at interior Gauss points.
pub fn magnus4<F>(mut gen: F, t0: f64, t1: f64, u: &mut Mat2, tol: &OdeTolerances) -> Result<OdeStats>
where
    F: FnMut(f64) -> Result<Mat2>,
{
    let mut stats = OdeStats::default();
    if t1 <= t0 {
        return Ok(stats);
    }
    let mut t = t0;
    let mut h = (t1 - t0).min(0.5);
    loop {
        if stats.steps + stats.rejected >= tol.max_steps {
            return Err(Error::ToleranceNotMet(format!("step budget of {} exhausted at t = {t}", tol.max_steps)));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let big = magnus_step(&mut gen, t, h)?;
        let half = 0.5 * h;
        let small = magnus_step(&mut gen, t + half, half)? * magnus_step(&mut gen, t, half)?;
        stats.evaluations += 6;
        let diff = (small - big).norm_max() / 15.0;
        let scale = tol.atol + tol.rtol * small.norm_max().max(1.0);
        let err = diff / scale;
        if err <= 1.0 || h <= min_step(t) {
            if err > 1.0 {
                return Err(Error::StepUnderflow { tau: t, step: h });
            }
            *u = small * *u;
            stats.steps += 1;
            stats.error_estimate += diff * u.norm_max();
            if last {
                break;
            }
            t += h;
            let fac = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 4.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < min_step(t) {
                return Err(Error::StepUnderflow { tau: t, step: h });
            }
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::{u0, I};

    #[test]
    fn dopri5_exponential_decay_and_rotation() {
        let lambda = C64::new(-0.3, 2.0);
        let mut y = vec![C64::new(1.0, 0.0)];
        let tol = OdeTolerances::default();
        let stats = dopri5(
            |_, y, dy| {
                dy[0] = lambda * y[0];
                Ok(())
            },
            0.0,
            10.0,
            &mut y,
            &tol,
        )
        .unwrap();
        let exact = (lambda * 10.0).exp();
        assert!((y[0] - exact).norm() < 1e-9, "err {}", (y[0] - exact).norm());
        assert!(stats.steps > 10);
    }

    #[test]
    fn dopri5_polynomial_rhs_hits_endpoint() {
        // y' = 3t², y(0) = 0 → y(2) = 8
        let mut y = vec![C64::new(0.0, 0.0)];
        dopri5(
            |t, _, dy| {
                dy[0] = C64::new(3.0 * t * t, 0.0);
                Ok(())
            },
            0.0,
            2.0,
            &mut y,
            &OdeTolerances::default(),
        )
        .unwrap();
        assert!((y[0].re - 8.0).abs() < 1e-12);
    }

    #[test]
    fn magnus_free_evolution() {
        // A = iσ₃ gives u0.
        let mut u = Mat2::identity();
        let gen = |_t: f64| Ok(Mat2::sigma3().scale(I));
        magnus4(gen, 0.0, 7.5, &mut u, &OdeTolerances::default()).unwrap();
        assert!((u - u0(7.5)).norm_max() < 1e-12);
    }

    #[test]
    fn magnus_and_dopri_agree_on_time_dependent_generator() {
        let gen = |t: f64| -> Mat2 {
            let w = C64::new(0.3 * (-t * t).exp(), 0.1 * t.sin());
            let h = Mat2::new(w - 1.0, w, -w, -w + 1.0);
            h.scale(C64::new(0.0, -1.0))
        };
        let tol = OdeTolerances::default();
        let mut u = Mat2::identity();
        magnus4(|t| Ok(gen(t)), -3.0, 4.0, &mut u, &tol).unwrap();
        let mut y: Vec<C64> = Mat2::identity().entries().to_vec();
        dopri5(
            |t, y, dy| {
                let a = gen(t);
                let m = a * Mat2::new(y[0], y[1], y[2], y[3]);
                dy.copy_from_slice(&m.entries());
                Ok(())
            },
            -3.0,
            4.0,
            &mut y,
            &tol,
        )
        .unwrap();
        let v = Mat2::new(y[0], y[1], y[2], y[3]);
        assert!((u - v).norm_max() < 1e-8, "diff {}", (u - v).norm_max());
        assert!((u.det() - 1.0).norm() < 1e-12);
    }
}
