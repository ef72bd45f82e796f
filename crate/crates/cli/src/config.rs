use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Lowest levels of both parity sectors over a coupling sweep
    Spectrum,
    /// Parity splittings Δ_k over a coupling sweep
    Gapmap,
    /// Semiclassical and windowed quantum density of states
    Dos,
    /// Photon number and spin polarization, semiclassical and per eigenstate
    Observables,
    /// Localization probabilities on |0,↓⟩ and |1,↓⟩
    Probabilities,
    /// Fits of the critical divergence of the density of states
    Asymptotics,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Gapmap => "gapmap",
            Command::Dos => "dos",
            Command::Observables => "observables",
            Command::Probabilities => "probabilities",
            Command::Asymptotics => "asymptotics",
        }
    }
}

/// Every setting a run can take, as flags; all optional so a config file
/// can supply them.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Frequency ratio Ω/ω₀
    #[arg(long, global = true)]
    pub ratio: Option<f64>,
    /// Cavity frequency ω₀
    #[arg(long, global = true)]
    pub omega0: Option<f64>,
    /// Coupling g
    #[arg(long, global = true)]
    pub g: Option<f64>,
    #[arg(long, global = true)]
    pub g_min: Option<f64>,
    #[arg(long, global = true)]
    pub g_max: Option<f64>,
    /// Number of couplings in a sweep
    #[arg(long, global = true)]
    pub g_steps: Option<usize>,
    /// Levels per parity sector
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Fixed Fock truncation instead of the default rule
    #[arg(long, global = true)]
    pub truncation: Option<usize>,
    /// Lowest rescaled energy of density and observable curves
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps_min: Option<f64>,
    /// Highest rescaled energy of density and observable curves
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps_max: Option<f64>,
    /// Points on semiclassical curves
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true)]
    pub quad_tol: Option<f64>,
    /// Levels per window of the quantum density of states
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// Resolve parity splittings below double precision
    #[arg(long, global = true)]
    pub precise: Option<bool>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub emit_svg: Option<bool>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            ratio: self.ratio.or(base.ratio),
            omega0: self.omega0.or(base.omega0),
            g: self.g.or(base.g),
            g_min: self.g_min.or(base.g_min),
            g_max: self.g_max.or(base.g_max),
            g_steps: self.g_steps.or(base.g_steps),
            levels: self.levels.or(base.levels),
            truncation: self.truncation.or(base.truncation),
            eps_min: self.eps_min.or(base.eps_min),
            eps_max: self.eps_max.or(base.eps_max),
            points: self.points.or(base.points),
            quad_tol: self.quad_tol.or(base.quad_tol),
            window: self.window.or(base.window),
            precise: self.precise.or(base.precise),
            out: self.out.or(base.out),
            emit_svg: self.emit_svg.or(base.emit_svg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub ratio: f64,
    pub omega0: f64,
    pub g: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub g_steps: usize,
    pub levels: usize,
    pub truncation: Option<usize>,
    pub eps_min: Option<f64>,
    pub eps_max: f64,
    pub points: usize,
    pub quad_tol: f64,
    pub window: usize,
    pub precise: bool,
    pub out: PathBuf,
    pub emit_svg: bool,
}

impl RunConfig {
    pub fn resolve(command: Command, s: Settings) -> Result<Self> {
        let cfg = RunConfig {
            command,
            ratio: s.ratio.unwrap_or(1000.0),
            omega0: s.omega0.unwrap_or(1.0),
            g: s.g.unwrap_or(1.2),
            g_min: s.g_min.unwrap_or(0.0),
            g_max: s.g_max.unwrap_or(3.0),
            g_steps: s.g_steps.unwrap_or(61),
            levels: s.levels.unwrap_or(60),
            truncation: s.truncation,
            eps_min: s.eps_min,
            eps_max: s.eps_max.unwrap_or(0.0),
            points: s.points.unwrap_or(400),
            quad_tol: s.quad_tol.unwrap_or(1e-9),
            window: s.window.unwrap_or(10),
            precise: s.precise.unwrap_or(false),
            out: s.out.unwrap_or_else(|| PathBuf::from(".")),
            emit_svg: s.emit_svg.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("ratio", self.ratio),
            ("omega0", self.omega0),
            ("quad-tol", self.quad_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                bail!("--{name} must be a positive number, got {v}");
            }
        }
        if self.ratio < 1.0 {
            bail!("--ratio must be >= 1, got {}", self.ratio);
        }
        for (name, v) in [("g", self.g), ("g-min", self.g_min), ("g-max", self.g_max)] {
            if !(v.is_finite() && v >= 0.0) {
                bail!("--{name} must be finite and >= 0, got {v}");
            }
        }
        if self.g_max < self.g_min {
            bail!("empty coupling range [{}, {}]", self.g_min, self.g_max);
        }
        if self.g_steps == 0 || self.levels == 0 || self.points < 2 {
            bail!("--g-steps, --levels must be >= 1 and --points >= 2");
        }
        if self.window < 2 {
            bail!("--window must be >= 2, got {}", self.window);
        }
        if let Some(t) = self.truncation {
            if t < 2 {
                bail!("--truncation must be >= 2, got {t}");
            }
        }
        if !self.eps_max.is_finite()
            || self
                .eps_min
                .is_some_and(|e| !e.is_finite() || e >= self.eps_max)
        {
            bail!("energy range must be finite and nonempty");
        }
        Ok(())
    }

    /// Couplings of a sweep, evenly spaced and inclusive.
    pub fn g_grid(&self) -> Vec<f64> {
        if self.g_steps == 1 {
            return vec![self.g_min];
        }
        let step = (self.g_max - self.g_min) / (self.g_steps - 1) as f64;
        (0..self.g_steps)
            .map(|i| self.g_min + step * i as f64)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = Settings {
            ratio: Some(40.0),
            g: Some(2.0),
            window: Some(4),
            ..Default::default()
        };
        let flags = Settings {
            g: Some(1.4),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Command::Dos, flags.over(file)).unwrap();
        assert_eq!(cfg.ratio, 40.0);
        assert_eq!(cfg.g, 1.4);
        assert_eq!(cfg.window, 4);
        assert_eq!(cfg.quad_tol, 1e-9);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            Settings {
                ratio: Some(0.5),
                ..Default::default()
            },
            Settings {
                quad_tol: Some(0.0),
                ..Default::default()
            },
            Settings {
                g_min: Some(2.0),
                g_max: Some(1.0),
                ..Default::default()
            },
            Settings {
                window: Some(1),
                ..Default::default()
            },
            Settings {
                eps_min: Some(0.5),
                eps_max: Some(0.0),
                ..Default::default()
            },
        ];
        for s in bad {
            assert!(RunConfig::resolve(Command::Dos, s).is_err());
        }
    }

    #[test]
    fn sweep_is_inclusive() {
        let s = Settings {
            g_min: Some(0.0),
            g_max: Some(3.0),
            g_steps: Some(61),
            ..Default::default()
        };
        let grid = RunConfig::resolve(Command::Spectrum, s).unwrap().g_grid();
        assert_eq!(grid.len(), 61);
        assert_eq!(grid[0], 0.0);
        assert!((grid[60] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn config_file_keys_match_flags() {
        let s: Settings =
            serde_json::from_str(r#"{"ratio": 40, "g_min": 0.5, "emit_svg": true}"#).unwrap();
        assert_eq!(s.g_min, Some(0.5));
        assert!(serde_json::from_str::<Settings>(r#"{"bogus": 1}"#).is_err());
    }
}
