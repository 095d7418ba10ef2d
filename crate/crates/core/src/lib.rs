//! Transfer matrices for one-dimensional scattering, computed exactly and
//! through the adiabatic (semiclassical) expansion with its systematic
//! corrections.

pub mod amplitudes;
pub mod corrections;
pub mod error;
pub mod exact;
pub mod hamiltonian;
pub mod mat2;
pub mod ode;
pub mod potentials;
pub mod quadrature;
pub mod semiclassical;

pub use amplitudes::{amplitudes_from_transfer, amplitudes_from_transfer_with, transfer_from_amplitudes, Amplitudes};
pub use corrections::{
    a1_exp_pot_closed_form, a_ell_ibp, a_ell_nested, correction_terms, first_order_exp_profile, h_tilde,
    transfer_matrix_order_n, CorrectionControls, CorrectionMethod, CorrectionTerm, ExpProfileFirstOrder, SeriesResult,
};
pub use error::{Error, Result};
pub use exact::{
    evolve, oracle_rectangular_barrier, transfer_matrix_exact, transfer_matrix_exact_detailed, EvolveControls,
    ExactTransfer, Stepper,
};
pub use hamiltonian::{EigenSystem, ScatteringContext};
pub use mat2::{mat2_mul, u0, u0_inv, Mat2};
pub use num_complex::Complex64 as C64;
pub use potentials::{
    load_sampled, parse_sampled, Interpolation, PotentialKind, PotentialSpec, SampledPotential, Side,
};
pub use semiclassical::{
    adiabatic_evolution, eta, geometric_phase_by_quadrature, geometric_phase_factor, transfer_matrix_semiclassical,
};
