//! Diagnostics built from both parity spectra: merged level lists, the
//! sliding-window density of states and parity gap maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Parity, RabiParams};
use crate::quantum::{converged_window, precise_gap, ParitySpectrum, TruncationOptions};

pub const DEFAULT_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub eps: f64,
    pub parity: Parity,
    /// Position within its own sector.
    pub index: usize,
}

/// Converged levels of both sectors, sorted by energy.
///
/// Levels above the lower of the two sectors' converged ranges are left out
/// so the merged list has no holes.
pub fn merge_levels(plus: &ParitySpectrum, minus: &ParitySpectrum) -> Vec<Level> {
    let top = |s: &ParitySpectrum| {
        s.converged_eps()
            .last()
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    };
    let cutoff = top(plus).min(top(minus));
    let mut levels: Vec<Level> = [plus, minus]
        .iter()
        .flat_map(|s| {
            s.converged_eps()
                .iter()
                .enumerate()
                .filter(move |(_, e)| **e <= cutoff)
                .map(move |(index, eps)| Level {
                    eps: *eps,
                    parity: s.parity,
                    index,
                })
        })
        .collect();
    levels.sort_by(|a, b| {
        a.eps
            .total_cmp(&b.eps)
            .then(a.parity.cmp(&b.parity))
            .then(a.index.cmp(&b.index))
    });
    levels
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DosPoint {
    /// `(ε_i + ε_{i+N})/2`
    pub eps_bar: f64,
    /// `N/(ε_{i+N} − ε_i)`, levels per unit `ε`.
    pub nu_bar: f64,
    /// `nu_bar·2ω₀/Ω`, comparable with the semiclassical `ν`.
    pub nu_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDos {
    pub points: Vec<DosPoint>,
    pub window_n: usize,
    pub ratio: f64,
    pub g: f64,
    pub dim_plus: usize,
    pub dim_minus: usize,
    /// Converged levels dropped because the other sector stops earlier.
    pub dropped_levels: usize,
}

impl WindowedDos {
    pub fn eps(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.eps_bar).collect()
    }

    pub fn nu_scaled(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.nu_scaled).collect()
    }

    /// Linear interpolation of the scaled density at `eps`.
    pub fn interpolate(&self, eps: f64) -> Option<f64> {
        let i = self.points.partition_point(|p| p.eps_bar < eps);
        if i == 0 || i == self.points.len() {
            return self
                .points
                .get(i)
                .filter(|p| p.eps_bar == eps)
                .map(|p| p.nu_scaled);
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        let t = (eps - a.eps_bar) / (b.eps_bar - a.eps_bar);
        Some(a.nu_scaled + t * (b.nu_scaled - a.nu_scaled))
    }

    /// Energy of the densest window.
    pub fn densest(&self) -> Option<DosPoint> {
        self.points
            .iter()
            .copied()
            .reduce(|best, p| if p.nu_bar > best.nu_bar { p } else { best })
    }
}

/// Sliding window of `window_n` level spacings over the merged spectrum,
/// stride one.
pub fn windowed_dos(
    plus: &ParitySpectrum,
    minus: &ParitySpectrum,
    window_n: usize,
) -> Result<WindowedDos> {
    if window_n < 2 {
        return Err(Error::InvalidParameter(format!(
            "window must hold at least 2 levels, got {window_n}"
        )));
    }
    if plus.params != minus.params || plus.parity == minus.parity {
        return Err(Error::InvalidParameter(
            "windowed_dos needs one spectrum of each parity at equal parameters".into(),
        ));
    }
    let levels = merge_levels(plus, minus);
    let available = levels.len();
    if available <= window_n {
        return Err(Error::WindowTooLarge {
            window: window_n,
            available,
        });
    }
    let params = plus.params;
    let to_scaled = 2.0 * params.omega0() / params.omega();
    let points = levels
        .windows(window_n + 1)
        .map(|w| {
            let (lo, hi) = (w[0].eps, w[window_n].eps);
            let nu_bar = window_n as f64 / (hi - lo);
            DosPoint {
                eps_bar: 0.5 * (lo + hi),
                nu_bar,
                nu_scaled: nu_bar * to_scaled,
            }
        })
        .collect();
    let dropped_levels =
        plus.n_converged.min(plus.len()) + minus.n_converged.min(minus.len()) - available;
    Ok(WindowedDos {
        points,
        window_n,
        ratio: params.ratio(),
        g: params.g(),
        dim_plus: plus.dim,
        dim_minus: minus.dim,
        dropped_levels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub g: f64,
    pub k: usize,
    /// `(ε_k⁺ + ε_k⁻)/2`
    pub eps: f64,
    /// Signed `ε_k⁺ − ε_k⁻`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapMap {
    pub ratio: f64,
    pub k_max: usize,
    pub eps_max: f64,
    pub entries: Vec<GapEntry>,
    /// `(g, k)` pairs whose levels were not converged below `eps_max`.
    pub unconverged: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapOptions {
    /// Only levels strictly below this rescaled energy are paired; levels
    /// within `1e-9` of it count as on the boundary.
    pub eps_max: f64,
    /// Truncation convergence tolerance in units of `ω₀`.
    pub tol: f64,
    /// Resolve gaps below `f64` resolution in multiprecision.
    pub precise: bool,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            eps_max: 1.0,
            tol: 1e-10,
            precise: false,
        }
    }
}

/// `Δ_k` for `k < k_max` at every coupling in `g_values`.
///
/// The default `eps_max = 1` keeps the map on the lower spin branch; above
/// it the upper-branch levels of one sector interleave with the other.
pub fn gap_map(ratio: f64, g_values: &[f64], k_max: usize, options: GapOptions) -> Result<GapMap> {
    let rows = g_values
        .par_iter()
        .map(|&g| gap_row(ratio, g, k_max, &options))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    let mut unconverged = Vec::new();
    for (row, missing) in rows {
        entries.extend(row);
        unconverged.extend(missing);
    }
    Ok(GapMap {
        ratio,
        k_max,
        eps_max: options.eps_max,
        entries,
        unconverged,
    })
}

fn gap_row(
    ratio: f64,
    g: f64,
    k_max: usize,
    options: &GapOptions,
) -> Result<(Vec<GapEntry>, Vec<(f64, usize)>)> {
    let params = RabiParams::from_ratio(ratio, g)?;
    let (dim_p, plus) = converged_window(
        &params,
        Parity::Plus,
        options.eps_max,
        options.tol,
        TruncationOptions::default(),
    )?;
    let (dim_m, minus) = converged_window(
        &params,
        Parity::Minus,
        options.eps_max,
        options.tol,
        TruncationOptions::default(),
    )?;
    let below = |sp: &ParitySpectrum| {
        sp.converged_eps()
            .iter()
            .filter(|e| **e < options.eps_max - 1e-9)
            .count()
    };
    let available = below(&plus).min(below(&minus)).min(k_max);
    let mut entries = Vec::with_capacity(available);
    for k in 0..available {
        let coarse = plus.eps[k] - minus.eps[k];
        let delta = if options.precise {
            precise_gap(&params, k, dim_p.max(dim_m))?
        } else {
            coarse
        };
        entries.push(GapEntry {
            g,
            k,
            eps: 0.5 * (plus.eps[k] + minus.eps[k]),
            delta,
        });
    }
    let missing = (available..k_max).map(|k| (g, k)).collect();
    Ok((entries, missing))
}
