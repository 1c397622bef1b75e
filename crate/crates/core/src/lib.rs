//! Classical simulation of Hadamard-test circuits for time-domain spectroscopy.
//!
//! A double-sided Feynman diagram is compiled into an ancilla-controlled
//! circuit in which every dipole insertion is replaced by the unitary
//! `M(F) = exp(-i mu F)` and all time evolution runs forward. The ancilla
//! readout `<sigma_x> + i <sigma_y>` gives the correlation function of the
//! `M` operators; mixed finite differences over the `F` variables recover the
//! dipole correlation functions, which are summed into response functions and
//! Fourier transformed into spectra.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and the
//! parallel grid driver live in the `qspec` crate.
//!
//! Layout:
//!
//! - [`operator`]: dense complex matrices, Hermitian operators with a cached
//!   eigendecomposition, states, tensor products and partial traces.
//! - [`model`]: benchmark molecular models.
//! - [`diagram`], [`dsl`], [`catalog`]: Feynman diagrams, commutator
//!   expansion, conjugate-pair reduction and the spectroscopy catalog.
//! - [`circuit`]: circuit compilation and exact, shot-sampled, Lindblad and
//!   explicit-bath simulation.
//! - [`oracle`]: direct operator-product evaluation, independent of the
//!   circuit path.
//! - [`estimator`]: finite-difference stencils and response grids.
//! - [`signal`]: convolution with pulses, Fourier transforms and spectra.
//! - [`cost`]: gate-cost accounting.

#![no_std]
// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod circuit;
pub mod cost;
pub mod diagram;
pub mod dsl;
mod error;
pub mod estimator;
pub mod model;
pub mod operator;
pub mod oracle;
pub mod signal;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;

#[cfg(test)]
pub(crate) mod testutil;
