//! Exact and semiclassical spectra of the quantum Rabi model.
//!
//! `quantum` diagonalizes the two parity sectors of
//! `H = ω₀ a†a + (Ω/2) σz − λ (a† + a) σx`; `semiclassical` evaluates
//! the phase-space density of states and shell averages; `asymptotics`
//! holds the critical laws at `ε_c = −1` and fits against them;
//! `spectral_stats` turns quantum spectra into windowed densities and gap maps.

pub mod asymptotics;
pub mod error;
pub mod multiprec;
pub mod params;
pub mod quadrature;
pub mod quantum;
pub mod semiclassical;
pub mod spectral_stats;
pub mod tridiag;

pub use error::{Error, Result};
pub use params::{Parity, RabiParams};
