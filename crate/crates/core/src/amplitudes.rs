//! Conversion between the transfer matrix and the scattering amplitudes.
//!
//! With plane waves `A± e^{ikx} + B± e^{−ikx}` on the two sides of the
//! potential, `(A₊, B₊) = M (A₋, B₋)` and
//!
//! ```text
//!     M = [ T − Rˡ Rʳ / T    Rʳ / T ]
//!         [ −Rˡ / T          1 / T  ]
//! ```

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mat2::Mat2;

/// Default lower bound on `|M22|` below which a spectral singularity is reported.
pub const SPECTRAL_SINGULARITY_THRESHOLD: f64 = 1e-12;

/// Transmission and left/right reflection amplitudes at one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub t: C64,
    pub r_left: C64,
    pub r_right: C64,
}

impl Amplitudes {
    pub fn new(t: C64, r_left: C64, r_right: C64) -> Self {
        Self { t, r_left, r_right }
    }

    /// `|T|² + |Rˡ|² − 1`, zero for real potentials.
    pub fn unitarity_defect_left(&self) -> f64 {
        self.t.norm_sqr() + self.r_left.norm_sqr() - 1.0
    }

    /// `|T|² + |Rʳ|² − 1`, zero for real potentials.
    pub fn unitarity_defect_right(&self) -> f64 {
        self.t.norm_sqr() + self.r_right.norm_sqr() - 1.0
    }
}

/// Reads `T`, `Rˡ`, `Rʳ` off a transfer matrix using the default threshold.
pub fn amplitudes_from_transfer(m: &Mat2) -> Result<Amplitudes> {
    amplitudes_from_transfer_with(m, SPECTRAL_SINGULARITY_THRESHOLD)
}

pub fn amplitudes_from_transfer_with(m: &Mat2, threshold: f64) -> Result<Amplitudes> {
    let m22_abs = m.m22.norm();
    if !(m22_abs >= threshold) {
        return Err(Error::SpectralSingularity { m22_abs, threshold });
    }
    let t = m.m22.inv();
    Ok(Amplitudes { t, r_left: -m.m21 * t, r_right: m.m12 * t })
}

/// Builds the transfer matrix from the amplitudes. The result has unit
/// determinant by construction.
pub fn transfer_from_amplitudes(a: &Amplitudes) -> Result<Mat2> {
    if a.t == C64::new(0.0, 0.0) || !a.t.is_finite() {
        return Err(Error::ZeroTransmission);
    }
    let inv_t = a.t.inv();
    Ok(Mat2::new(a.t - a.r_left * a.r_right * inv_t, a.r_right * inv_t, -a.r_left * inv_t, inv_t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::ONE;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn free_particle() {
        let a = amplitudes_from_transfer(&Mat2::identity()).unwrap();
        assert_eq!(a, Amplitudes::new(ONE, c(0.0, 0.0), c(0.0, 0.0)));
        assert_eq!(transfer_from_amplitudes(&a).unwrap(), Mat2::identity());
    }

    #[test]
    fn diagonal_phase_matrix_is_reflectionless() {
        let phi = 0.73;
        let e = C64::from_polar(1.0, phi);
        let a = amplitudes_from_transfer(&Mat2::diag(e, e.conj())).unwrap();
        assert!((a.t - e).norm() < 1e-15);
        assert_eq!(a.r_left, c(0.0, 0.0));
        assert_eq!(a.r_right, c(0.0, 0.0));
    }

    #[test]
    fn singular_m22_is_reported() {
        let m = Mat2::new(ONE, ONE, ONE, c(1e-13, 0.0));
        match amplitudes_from_transfer(&m) {
            Err(Error::SpectralSingularity { m22_abs, .. }) => assert!(m22_abs < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        assert!(amplitudes_from_transfer_with(&m, 1e-14).is_ok());
    }

    #[test]
    fn zero_transmission_is_rejected() {
        let a = Amplitudes::new(c(0.0, 0.0), ONE, ONE);
        assert_eq!(transfer_from_amplitudes(&a), Err(Error::ZeroTransmission));
    }

    proptest! {
        #[test]
        fn transfer_from_amplitudes_is_unimodular(
            t in (0.05f64..3.0, -3.2f64..3.2),
            rl in (-2.0f64..2.0, -2.0f64..2.0),
            rr in (-2.0f64..2.0, -2.0f64..2.0),
        ) {
            let a = Amplitudes::new(C64::from_polar(t.0, t.1), c(rl.0, rl.1), c(rr.0, rr.1));
            let m = transfer_from_amplitudes(&a).unwrap();
            prop_assert!((m.det() - ONE).norm() < 1e-12 * (1.0 + m.norm_max().powi(2)));
        }

        #[test]
        fn round_trip_on_unimodular_matrices(
            e in proptest::array::uniform6(-2.0f64..2.0),
        ) {
            // Unimodular matrix with prescribed m12, m21, m22; m11 from det = 1.
            let m12 = c(e[0], e[1]);
            let m21 = c(e[2], e[3]);
            let m22 = c(e[4], e[5]);
            prop_assume!(m22.norm() > 0.1);
            let m11 = (ONE + m12 * m21) / m22;
            let m = Mat2::new(m11, m12, m21, m22);
            let back = transfer_from_amplitudes(&amplitudes_from_transfer(&m).unwrap()).unwrap();
            prop_assert!((back - m).norm_max() < 1e-12 * (1.0 + m.norm_max().powi(2)));
        }
    }
}
