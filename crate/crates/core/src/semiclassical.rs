//! Semiclassical phase-space description of the Rabi model.
//!
//! With `x, p` the scaled cavity quadratures, the low spin branch evolves in
//! the effective potential `V₋(x) = x²/2 − ½√(1+2g²x²)` (in units of `Ω`),
//! so an orbit of rescaled energy `ε` has momentum
//! `p(x) = √(ε − x² + √(1+2g²x²))`. Densities are per unit `ε` in the
//! `ω₀ = 1` convention; divide by `ω₀` for other cavity frequencies.
//!
//! Integrals run over `x ∈ [x₁, x₂]` and count the full orbit, both mirror
//! wells included, so `N(ε)` is the enclosed phase-space area over `π` and
//! `ν = ∂N/∂ε`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::RabiParams;
use crate::quadrature::integrate;

/// Energy of the excited-state critical point, the top of the barrier at `x = 0`.
pub const CRITICAL_ENERGY: f64 = -1.0;

pub const DEFAULT_QUAD_TOL: f64 = 1e-9;

/// Half-width of the excluded band around `ε_c` where `ν` is reported as divergent.
pub const GUARD_BAND: f64 = 1e-8;

/// Quadrature tolerance for accumulated-state evaluations that get
/// differentiated numerically.
const DERIVATIVE_QUAD_TOL: f64 = 1e-13;
const DERIVATIVE_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectivePotential {
    pub branch: Branch,
    pub g: f64,
}

impl EffectivePotential {
    pub fn new(branch: Branch, g: f64) -> Self {
        Self { branch, g }
    }

    pub fn value(&self, x: f64) -> f64 {
        potential_value(self.branch, self.g, x)
    }

    /// Non-negative position of the potential minimum.
    pub fn minimum_position(&self) -> f64 {
        match self.branch {
            Branch::Lower if self.g > 1.0 => ((self.g * self.g - self.g.powi(-2)) / 2.0).sqrt(),
            _ => 0.0,
        }
    }
}

/// `x²/2 ∓ ½√(1+2g²x²)` in units of `Ω`; the lower branch takes the minus sign.
pub fn potential_value(branch: Branch, g: f64, x: f64) -> f64 {
    let root = 0.5 * (1.0 + 2.0 * g * g * x * x).sqrt();
    match branch {
        Branch::Lower => 0.5 * x * x - root,
        Branch::Upper => 0.5 * x * x + root,
    }
}

/// Rescaled ground-state energy `ε_GS(g)`.
pub fn ground_energy(g: f64) -> f64 {
    if g <= 1.0 {
        -1.0
    } else {
        -(g * g + 1.0 / (g * g)) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoints {
    pub x1: f64,
    pub x2: f64,
    /// Two separate orbits, one per well.
    pub disconnected: bool,
}

/// Orbit geometry, with the roots of `p²` in `y = x²` kept for
/// cancellation-free evaluation near the turning points.
#[derive(Debug, Clone, Copy)]
struct Orbit {
    eps: f64,
    g: f64,
    x1: f64,
    x2: f64,
    y_minus: f64,
    disconnected: bool,
}

impl Orbit {
    fn new(g: f64, eps: f64) -> Result<Self> {
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "g must be finite and >= 0, got {g}"
            )));
        }
        if !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eps must be finite, got {eps}"
            )));
        }
        let eps_gs = ground_energy(g);
        if eps < eps_gs {
            return Err(Error::NoAllowedOrbit { eps, eps_gs });
        }
        let g2 = g * g;
        let disc = (g2 * g2 + 2.0 * eps * g2 + 1.0).max(0.0);
        let y_plus = (eps + g2 + disc.sqrt()).max(0.0);
        // product of the roots is ε² − 1
        let y_minus = if y_plus > 0.0 {
            (eps - 1.0) * (eps + 1.0) / y_plus
        } else {
            0.0
        };
        let disconnected = g > 1.0 && eps < CRITICAL_ENERGY;
        let x1 = if disconnected {
            y_minus.max(0.0).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            eps,
            g,
            x1,
            x2: y_plus.sqrt(),
            y_minus,
            disconnected,
        })
    }

    fn s(&self, x: f64) -> f64 {
        (1.0 + 2.0 * self.g * self.g * x * x).sqrt()
    }

    /// `p²` at `x`, given `u = x₂ − x` and `v = x − x₁` to full precision.
    fn p_sq(&self, x: f64, u: f64, v: f64) -> f64 {
        let y = x * x;
        let s = self.s(x);
        let a = self.eps - y;
        if a >= 0.0 {
            return a + s;
        }
        // p² = (y₊ − y)(y − y₋) / (s + y − ε)
        let upper = u * (self.x2 + x);
        let lower = if self.disconnected {
            v * (x + self.x1)
        } else {
            y - self.y_minus
        };
        (upper * lower / (s - a)).max(0.0)
    }

    /// `∫_{x₁}^{x₂} h(x, p) dx` for integrands with `1/p` endpoint singularities.
    ///
    /// `x = x₂ − t²` on the upper half and `x = x₁ + t²` on the lower half of
    /// a disconnected orbit make the integrands smooth in `t`.
    fn integrate<H>(&self, h: H, tol: f64) -> Result<f64>
    where
        H: Fn(f64, f64) -> f64,
    {
        let (x1, x2) = (self.x1, self.x2);
        if x2 <= x1 {
            return Ok(0.0);
        }
        let xm = 0.5 * (x1 + x2);
        let upper = integrate(
            |t| {
                let u = t * t;
                let x = x2 - u;
                2.0 * t * h(x, self.p_sq(x, u, x - x1).sqrt())
            },
            0.0,
            (x2 - xm).sqrt(),
            0.0,
            tol,
        )?
        .value;
        let lower = if self.disconnected {
            integrate(
                |t| {
                    let v = t * t;
                    let x = x1 + v;
                    2.0 * t * h(x, self.p_sq(x, x2 - x, v).sqrt())
                },
                0.0,
                (xm - x1).sqrt(),
                0.0,
                tol,
            )?
            .value
        } else {
            let body = |x: f64| h(x, self.p_sq(x, x2 - x, x).sqrt());
            // near ε_c the integrand peaks at x = 0 with width ~√|ε − ε_c|
            let knee = 64.0 * (self.eps - CRITICAL_ENERGY).abs().sqrt();
            if knee > 0.0 && knee < xm {
                integrate(body, 0.0, knee, 0.0, tol)?.value
                    + integrate(body, knee, xm, 0.0, tol)?.value
            } else {
                integrate(body, 0.0, xm, 0.0, tol)?.value
            }
        };
        Ok(upper + lower)
    }

    fn inverse_momentum_integral(&self, tol: f64) -> Result<f64> {
        self.integrate(|_, p| 1.0 / p, tol)
    }
}

fn check_tol(quad_tol: f64) -> Result<()> {
    if quad_tol.is_finite() && quad_tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "quad_tol must be positive, got {quad_tol}"
        )))
    }
}

/// Orbits through or next to the barrier top have a divergent period.
fn check_regular(g: f64, eps: f64) -> Result<()> {
    if g >= 1.0 && (eps - CRITICAL_ENERGY).abs() < GUARD_BAND {
        return Err(Error::Divergent { eps, g });
    }
    Ok(())
}

/// Orbits of zero area (`ε = ε_GS`) have no shell to average over.
fn check_above_ground(g: f64, eps: f64) -> Result<()> {
    let eps_gs = ground_energy(g);
    if eps <= eps_gs {
        return Err(Error::NoAllowedOrbit { eps, eps_gs });
    }
    Ok(())
}

pub fn turning_points(g: f64, eps: f64) -> Result<TurningPoints> {
    let orbit = Orbit::new(g, eps)?;
    Ok(TurningPoints {
        x1: orbit.x1,
        x2: orbit.x2,
        disconnected: orbit.disconnected,
    })
}

/// `ε − x² + √(1+2g²x²)`, the squared momentum on the lower branch.
pub fn radicand(g: f64, eps: f64, x: f64) -> f64 {
    eps - x * x + (1.0 + 2.0 * g * g * x * x).sqrt()
}

/// `ν(ε, g) = (2/π) ∫_{x₁}^{x₂} dx / p`.
pub fn dos_semiclassical(g: f64, eps: f64, quad_tol: f64) -> Result<f64> {
    check_tol(quad_tol)?;
    let orbit = Orbit::new(g, eps)?;
    check_above_ground(g, eps)?;
    check_regular(g, eps)?;
    Ok(2.0 / PI * orbit.inverse_momentum_integral(quad_tol)?)
}

/// `N(ε, g) = (4/π) ∫_{x₁}^{x₂} p dx`, the phase-space area below `ε` over `π`.
pub fn accumulated_states(g: f64, eps: f64, quad_tol: f64) -> Result<f64> {
    check_tol(quad_tol)?;
    let orbit = Orbit::new(g, eps)?;
    Ok(4.0 / PI * orbit.integrate(|_, p| p, quad_tol)?)
}

/// Microcanonical averages on the energy shell `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellObservables {
    /// `(ω₀/Ω)⟨a†a⟩`, without the `−ω₀/(2Ω)` zero-point offset.
    pub nphot_scaled: f64,
    pub sz: f64,
}

impl ShellObservables {
    /// `(⟨σz⟩ + 1)/2`
    pub fn upper_population(&self) -> f64 {
        0.5 * (self.sz + 1.0)
    }
}

pub fn observables_microcanonical(g: f64, eps: f64, quad_tol: f64) -> Result<ShellObservables> {
    check_tol(quad_tol)?;
    let orbit = Orbit::new(g, eps)?;
    check_above_ground(g, eps)?;
    check_regular(g, eps)?;
    let weight = orbit.inverse_momentum_integral(quad_tol)?;
    let spin = orbit.integrate(|x, p| 1.0 / (orbit.s(x) * p), quad_tol)?;
    let photons = orbit.integrate(|x, p| 0.5 * (x * x + p * p) / p, quad_tol)?;
    Ok(ShellObservables {
        nphot_scaled: photons / weight,
        sz: (-spin / weight).clamp(-1.0, 1.0),
    })
}

/// Level count below bare energy `E` as a function of the bare parameters.
fn accumulated_bare(energy: f64, omega0: f64, omega: f64, lambda: f64) -> Result<f64> {
    let eps = 2.0 * energy / omega;
    let g = 2.0 * lambda / (omega0 * omega).sqrt();
    let area = PI * accumulated_states(g, eps, DERIVATIVE_QUAD_TOL)?;
    Ok(omega / (2.0 * PI * omega0) * area)
}

/// The same averages obtained by differentiating the semiclassical level
/// count with respect to `ω₀` and `Ω` at fixed `λ` and energy.
pub fn observables_hellmann_feynman(params: &RabiParams, eps: f64) -> Result<ShellObservables> {
    let orbit = Orbit::new(params.g(), eps)?;
    check_above_ground(params.g(), eps)?;
    check_regular(params.g(), eps)?;
    let (w0, w, lambda) = (params.omega0(), params.omega(), params.lambda());
    let energy = params.unscale(eps);
    let h0 = DERIVATIVE_STEP * w0;
    let hw = DERIVATIVE_STEP * w;
    let d_omega0 = (accumulated_bare(energy, w0 + h0, w, lambda)?
        - accumulated_bare(energy, w0 - h0, w, lambda)?)
        / (2.0 * h0);
    let d_omega = (accumulated_bare(energy, w0, w + hw, lambda)?
        - accumulated_bare(energy, w0, w - hw, lambda)?)
        / (2.0 * hw);
    // ∂N/∂E, analytically
    let nu_e = 2.0 / (PI * w0) * orbit.inverse_momentum_integral(DERIVATIVE_QUAD_TOL)?;
    // −∂N/∂ω₀ / ν_E = ⟨a†a⟩ + ½
    let n_plus_half = -d_omega0 / nu_e;
    Ok(ShellObservables {
        nphot_scaled: w0 / w * n_plus_half,
        sz: -2.0 * d_omega / nu_e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DosSource {
    Semiclassical,
    QuantumWindowed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosCurve {
    pub grid: Vec<f64>,
    pub nu: Vec<f64>,
    pub ncum: Option<Vec<f64>>,
    pub g: f64,
    pub source: DosSource,
}

impl DosCurve {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.nu.iter_mut().for_each(|v| *v *= factor);
        if let Some(n) = out.ncum.as_mut() {
            n.iter_mut().for_each(|v| *v *= factor);
        }
        out
    }
}

/// `ν` (and optionally `N`) over a grid, evaluated in parallel.
pub fn dos_curve(g: f64, grid: &[f64], quad_tol: f64, with_cumulative: bool) -> Result<DosCurve> {
    let nu = grid
        .par_iter()
        .map(|&e| dos_semiclassical(g, e, quad_tol))
        .collect::<Result<Vec<_>>>()?;
    let ncum = if with_cumulative {
        Some(
            grid.par_iter()
                .map(|&e| accumulated_states(g, e, quad_tol))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(DosCurve {
        grid: grid.to_vec(),
        nu,
        ncum,
        g,
        source: DosSource::Semiclassical,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableCurve {
    pub grid: Vec<f64>,
    pub nphot_scaled: Vec<f64>,
    pub sz: Vec<f64>,
    pub g: f64,
}

pub fn observable_curve(g: f64, grid: &[f64], quad_tol: f64) -> Result<ObservableCurve> {
    let values = grid
        .par_iter()
        .map(|&e| observables_microcanonical(g, e, quad_tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(ObservableCurve {
        grid: grid.to_vec(),
        nphot_scaled: values.iter().map(|v| v.nphot_scaled).collect(),
        sz: values.iter().map(|v| v.sz).collect(),
        g,
    })
}

/// `ν` evaluated on the mirror well `x ∈ [−x₂, −x₁]`.
pub fn dos_semiclassical_mirrored(g: f64, eps: f64, quad_tol: f64) -> Result<f64> {
    check_tol(quad_tol)?;
    let orbit = Orbit::new(g, eps)?;
    check_above_ground(g, eps)?;
    check_regular(g, eps)?;
    let (x1, x2) = (orbit.x1, orbit.x2);
    let xm = 0.5 * (x1 + x2);
    // x = −x₂ + t² runs from the outer turning point inwards
    let outer = integrate(
        |t| {
            let u = t * t;
            let x = -x2 + u;
            2.0 * t / orbit.p_sq(-x, u, -x - x1).sqrt()
        },
        0.0,
        (x2 - xm).sqrt(),
        0.0,
        quad_tol,
    )?
    .value;
    let inner = if orbit.disconnected {
        integrate(
            |t| {
                let v = t * t;
                let x = -x1 - v;
                2.0 * t / orbit.p_sq(-x, x2 + x, v).sqrt()
            },
            0.0,
            (xm - x1).sqrt(),
            0.0,
            quad_tol,
        )?
        .value
    } else {
        integrate(
            |x| 1.0 / orbit.p_sq(-x, x2 + x, -x).sqrt(),
            -xm,
            0.0,
            0.0,
            quad_tol,
        )?
        .value
    };
    Ok(2.0 / PI * (outer + inner))
}
