//! Physical parameters of the Rabi Hamiltonian
//! `H = ω₀ a†a + (Ω/2) σz − λ (a† + a) σx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cavity frequency `omega0`, two-level splitting `omega` and the
/// dimensionless coupling `g = 2λ/√(ω₀Ω)`.
///
/// Only `g` is stored; `λ` is always derived from it so the two can never
/// disagree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiParams {
    omega0: f64,
    omega: f64,
    g: f64,
}

impl RabiParams {
    pub fn new(omega0: f64, omega: f64, g: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega0 must be finite and > 0, got {omega0}"
            )));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Omega must be finite and > 0, got {omega}"
            )));
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "g must be finite and >= 0, got {g}"
            )));
        }
        let ratio = omega / omega0;
        if !(ratio.is_finite() && ratio >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Omega/omega0 must be finite and >= 1, got {ratio}"
            )));
        }
        Ok(Self { omega0, omega, g })
    }

    /// `ω₀ = 1`, `Ω = ratio`.
    pub fn from_ratio(ratio: f64, g: f64) -> Result<Self> {
        Self::new(1.0, ratio, g)
    }

    /// Builds the parameters from the bare coupling `λ`.
    pub fn from_lambda(omega0: f64, omega: f64, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Self::new(omega0, omega, 2.0 * lambda / (omega0 * omega).sqrt())
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn lambda(&self) -> f64 {
        0.5 * self.g * (self.omega0 * self.omega).sqrt()
    }

    /// Frequency ratio `R = Ω/ω₀`.
    pub fn ratio(&self) -> f64 {
        self.omega / self.omega0
    }

    /// `ε = 2E/Ω`.
    pub fn rescale(&self, energy: f64) -> f64 {
        2.0 * energy / self.omega
    }

    pub fn unscale(&self, eps: f64) -> f64 {
        0.5 * eps * self.omega
    }

    /// Default Fock truncation `⌈4·R·max(1, g²)⌉ + 100`.
    pub fn default_truncation(&self) -> usize {
        (4.0 * self.ratio() * self.g.powi(2).max(1.0)).ceil() as usize + 100
    }

    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(self.omega0, self.omega, g)
    }
}

/// Eigenvalue of the parity operator `Π = exp(iπ a†a) σz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Parity::Plus => "+",
            Parity::Minus => "-",
        }
    }

    /// `σz` eigenvalue of chain site `n`.
    ///
    /// Minus chain: `|0,↓⟩, |1,↑⟩, |2,↓⟩, …`; Plus chain: `|0,↑⟩, |1,↓⟩, …`.
    pub fn site_spin(self, n: usize) -> f64 {
        let even = n.is_multiple_of(2);
        match (self, even) {
            (Parity::Minus, true) | (Parity::Plus, false) => -1.0,
            _ => 1.0,
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
