//! Critical laws of the density of states at `ε_c = −1` and least-squares
//! extraction of exponents and slopes from sampled curves.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::semiclassical::{DosCurve, GUARD_BAND};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LawKind {
    /// `ν ≈ A·δε^{−1/4}` above the ground state at `g = 1`.
    PowerLawQpt,
    /// `ν ≈ A·(−ln δε) + K` on both sides of `ε_c` for `g > 1`.
    LogEsqpt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalLaw {
    pub kind: LawKind,
    pub g: f64,
    /// `1/ω₀` units.
    pub prefactor: f64,
    pub exponent: Option<f64>,
    /// Constant `K`, when known.
    pub offset: Option<f64>,
}

impl CriticalLaw {
    pub fn value(&self, delta: f64) -> f64 {
        match self.kind {
            LawKind::PowerLawQpt => self.prefactor * delta.powf(self.exponent.unwrap_or(-0.25)),
            LawKind::LogEsqpt => self.prefactor * -delta.ln() + self.offset.unwrap_or(0.0),
        }
    }
}

fn check_omega0(omega0: f64) -> Result<()> {
    if omega0.is_finite() && omega0 > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "omega0 must be finite and > 0, got {omega0}"
        )))
    }
}

/// `Γ(5/4)/Γ(3/4) · 2^{5/4} / (ω₀√π) · δε^{−1/4}`.
pub fn law_power_qpt(omega0: f64) -> Result<CriticalLaw> {
    check_omega0(omega0)?;
    let prefactor = gamma(1.25) / gamma(0.75) * 2f64.powf(1.25) / (omega0 * PI.sqrt());
    Ok(CriticalLaw {
        kind: LawKind::PowerLawQpt,
        g: 1.0,
        prefactor,
        exponent: Some(-0.25),
        offset: None,
    })
}

/// Slope `1/(ω₀π√(g²−1))` of `ν` against `−ln|ε − ε_c|`.
pub fn law_log_esqpt(omega0: f64, g: f64) -> Result<CriticalLaw> {
    check_omega0(omega0)?;
    if !(g.is_finite() && g > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "logarithmic law needs g > 1, got {g}"
        )));
    }
    let prefactor = 1.0 / (omega0 * PI * (g * g - 1.0).sqrt());
    Ok(CriticalLaw {
        kind: LawKind::LogEsqpt,
        g,
        prefactor,
        exponent: None,
        offset: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Above,
    Below,
    Both,
}

impl Side {
    fn admits(self, eps: f64, eps_c: f64) -> bool {
        match self {
            Side::Above => eps > eps_c,
            Side::Below => eps < eps_c,
            Side::Both => eps != eps_c,
        }
    }
}

/// Range of `δε = |ε − ε_c|` used by a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub min: f64,
    pub max: f64,
}

impl FitWindow {
    pub const SEMICLASSICAL: FitWindow = FitWindow {
        min: 1e-6,
        max: 1e-3,
    };

    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min > 0.0 && max > min) {
            return Err(Error::InvalidParameter(format!(
                "fit window [{min}, {max}] is empty"
            )));
        }
        Ok(Self { min, max })
    }

    /// `[3·spacing, 0.1]`, above the scale where quantum curves saturate.
    pub fn quantum(spacing: f64) -> Result<Self> {
        Self::new(3.0 * spacing, 0.1)
    }

    /// Inclusive, with a relative slack that absorbs the rounding of `ε_c ± δε`.
    pub fn contains(&self, delta: f64) -> bool {
        delta >= self.min * (1.0 - 1e-9) && delta <= self.max * (1.0 + 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub kind: LawKind,
    pub side: Side,
    /// Exponent (power law) or slope against `−ln δε` (log law).
    pub slope: f64,
    /// `ln A` (power law) or the offset `K` at `δε = 1` (log law).
    pub intercept: f64,
    pub residual_norm: f64,
    pub window: FitWindow,
    pub points: usize,
}

impl FitReport {
    /// `A` for a power-law fit, the slope for a log fit.
    pub fn prefactor(&self) -> f64 {
        match self.kind {
            LawKind::PowerLawQpt => self.intercept.exp(),
            LawKind::LogEsqpt => self.slope,
        }
    }
}

/// Ordinary least squares `y ≈ a·x + b`; returns `(a, b, ‖residual‖₂)`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let r = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a * x - b).powi(2))
        .sum::<f64>()
        .sqrt();
    (a, b, r)
}

/// Fits the critical law of `kind` to the samples of `curve` whose distance
/// from `eps_c` lies inside `window` on the requested side.
///
/// A power law is fitted as `ln ν` against `ln δε`, a log law as `ν`
/// against `−ln δε`.
pub fn fit_divergence(
    curve: &DosCurve,
    eps_c: f64,
    kind: LawKind,
    window: FitWindow,
    side: Side,
) -> Result<FitReport> {
    if window.min < GUARD_BAND {
        return Err(Error::InvalidParameter(format!(
            "fit window starts at {} inside the guard band {GUARD_BAND}",
            window.min
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (e, nu) in curve.grid.iter().zip(&curve.nu) {
        let delta = (e - eps_c).abs();
        if !side.admits(*e, eps_c) || !window.contains(delta) || !nu.is_finite() {
            continue;
        }
        match kind {
            LawKind::PowerLawQpt => {
                if *nu <= 0.0 {
                    continue;
                }
                xs.push(delta.ln());
                ys.push(nu.ln());
            }
            LawKind::LogEsqpt => {
                xs.push(-delta.ln());
                ys.push(*nu);
            }
        }
    }
    if xs.len() < 5 {
        return Err(Error::TooFewPoints {
            needed: 5,
            found: xs.len(),
        });
    }
    let (slope, intercept, residual_norm) = least_squares(&xs, &ys);
    Ok(FitReport {
        kind,
        side,
        slope,
        intercept,
        residual_norm,
        window,
        points: xs.len(),
    })
}

/// `count` energies `ε_c ± δε` with `δε` spaced geometrically over `window`,
/// ordered by `ε`.
pub fn geometric_grid(eps_c: f64, window: FitWindow, count: usize, side: Side) -> Vec<f64> {
    let count = count.max(2);
    let (lo, hi) = (window.min.ln(), window.max.ln());
    let deltas: Vec<f64> = (0..count)
        .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
        .collect();
    let mut grid = Vec::with_capacity(2 * count);
    if matches!(side, Side::Below | Side::Both) {
        grid.extend(deltas.iter().rev().map(|d| eps_c - d));
    }
    if matches!(side, Side::Above | Side::Both) {
        grid.extend(deltas.iter().map(|d| eps_c + d));
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassical::DosSource;

    #[test]
    fn power_law_constants() {
        let law = law_power_qpt(1.0).unwrap();
        assert_eq!(law.exponent, Some(-0.25));
        assert!((law.prefactor - 0.99255).abs() < 1e-4);
        assert_eq!(law_power_qpt(2.0).unwrap().prefactor, law.prefactor / 2.0);
        assert!(law_power_qpt(0.0).is_err());
    }

    #[test]
    fn log_law_constants() {
        assert!((law_log_esqpt(1.0, 2f64.sqrt()).unwrap().prefactor - 1.0 / PI).abs() < 1e-15);
        assert!((law_log_esqpt(1.0, 1.2).unwrap().prefactor - 0.4799).abs() < 1e-4);
        assert!((law_log_esqpt(1.0, 1.4).unwrap().prefactor - 0.3248).abs() < 1e-4);
        assert!(law_log_esqpt(1.0, 1.0).is_err());
        assert!(law_log_esqpt(1.0, 0.5).is_err());
    }

    fn synthetic(law: CriticalLaw, side: Side) -> DosCurve {
        let grid = geometric_grid(-1.0, FitWindow::SEMICLASSICAL, 12, side);
        let nu = grid.iter().map(|e| law.value((e + 1.0f64).abs())).collect();
        DosCurve {
            grid,
            nu,
            ncum: None,
            g: law.g,
            source: DosSource::Semiclassical,
        }
    }

    #[test]
    fn recovers_exact_laws() {
        let law = law_power_qpt(1.0).unwrap();
        let r = fit_divergence(
            &synthetic(law, Side::Above),
            -1.0,
            LawKind::PowerLawQpt,
            FitWindow::SEMICLASSICAL,
            Side::Above,
        )
        .unwrap();
        assert!((r.slope + 0.25).abs() < 1e-12);
        assert!((r.prefactor() - law.prefactor).abs() < 1e-12);

        let law = CriticalLaw {
            offset: Some(0.3),
            ..law_log_esqpt(1.0, 1.4).unwrap()
        };
        let r = fit_divergence(
            &synthetic(law, Side::Both),
            -1.0,
            LawKind::LogEsqpt,
            FitWindow::SEMICLASSICAL,
            Side::Both,
        )
        .unwrap();
        assert_eq!(r.points, 24);
        assert!((r.slope - law.prefactor).abs() < 1e-12);
        assert!((r.intercept - 0.3).abs() < 1e-10);
    }

    #[test]
    fn needs_five_points() {
        let law = law_log_esqpt(1.0, 1.4).unwrap();
        let grid = geometric_grid(-1.0, FitWindow::SEMICLASSICAL, 4, Side::Above);
        let nu = grid.iter().map(|e| law.value(e + 1.0)).collect();
        let curve = DosCurve {
            grid,
            nu,
            ncum: None,
            g: 1.4,
            source: DosSource::Semiclassical,
        };
        assert_eq!(
            fit_divergence(
                &curve,
                -1.0,
                LawKind::LogEsqpt,
                FitWindow::SEMICLASSICAL,
                Side::Above
            ),
            Err(Error::TooFewPoints {
                needed: 5,
                found: 4
            })
        );
    }

    #[test]
    fn window_must_avoid_guard_band() {
        let law = law_log_esqpt(1.0, 1.4).unwrap();
        let curve = synthetic(law, Side::Above);
        let w = FitWindow::new(1e-9, 1e-3).unwrap();
        assert!(fit_divergence(&curve, -1.0, LawKind::LogEsqpt, w, Side::Above).is_err());
        assert!(FitWindow::new(1e-3, 1e-4).is_err());
    }

    #[test]
    fn grid_is_sorted_and_inside_window() {
        let g = geometric_grid(-1.0, FitWindow::SEMICLASSICAL, 7, Side::Both);
        assert_eq!(g.len(), 14);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g
            .iter()
            .all(|e| FitWindow::SEMICLASSICAL.contains((e + 1.0f64).abs())));
    }
}
