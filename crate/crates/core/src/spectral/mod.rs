//! Periodic pseudospectral machinery shared by every solver.
//!
//! Transform convention: the forward transform is unnormalized and the
//! inverse divides by `n`, so `to_values ∘ to_modes` is the identity and
//! `‖f‖²_{L²} = h/n · Σ |c_j|²`. Odd-order derivatives zero the Nyquist mode.
//! Nonlinear products that feed a time integrator are dealiased with the 2/3
//! rule.

mod etd;
mod field;
mod grid;

pub use etd::{EtdCoefficients, Etdrk4};
pub use field::{
    antideriv_zero_mean, dealias, dealiased_product, deriv, norms, Antiderivative, ModeCoeffs, Norms, RealField,
};
pub use grid::{make_grid, Grid};

pub(crate) use field::dealias_in_place;

pub type C64 = num_complex::Complex<f64>;
