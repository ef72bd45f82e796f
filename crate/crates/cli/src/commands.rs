use std::path::Path;

use anyhow::{bail, Context, Result};
use rabi_esqpt::asymptotics::{
    fit_divergence, geometric_grid, law_log_esqpt, law_power_qpt, FitReport, FitWindow, LawKind,
    Side,
};
use rabi_esqpt::quantum::{
    build_parity_chain, converged_window, diagonalize, diagonalize_below, eigen_observables,
    EigenObservables, ParitySpectrum, TruncationOptions,
};
use rabi_esqpt::semiclassical::{
    self, dos_curve, dos_semiclassical, observable_curve, CRITICAL_ENERGY, GUARD_BAND,
};
use rabi_esqpt::spectral_stats::{gap_map, windowed_dos, GapOptions};
use rabi_esqpt::{Parity, RabiParams};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::output::{ensure_dir, header, num, write_csv, write_json, write_text, Table};
use crate::svg::{Plot, Series, Style};

/// Truncation tolerance of converged quantum spectra, in units of `ω₀`.
const QUANTUM_TOL: f64 = 1e-8;

#[derive(Debug, Serialize)]
pub struct Summary {
    pub command: &'static str,
    pub library_version: &'static str,
    pub config: RunConfig,
    pub metrics: Value,
    pub files: Vec<String>,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    files: Vec<String>,
}

impl Run<'_> {
    fn dir(&self) -> &Path {
        &self.cfg.out
    }

    fn csv(&mut self, name: &str, extra: &[(&str, String)], table: &Table) -> Result<()> {
        write_csv(self.dir(), name, &header(self.cfg, extra), table)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn svg(&mut self, name: &str, plot: Plot) -> Result<()> {
        if self.cfg.emit_svg {
            write_text(self.dir(), name, &plot.render())?;
            self.files.push(name.to_string());
        }
        Ok(())
    }
}

pub fn run(cfg: &RunConfig) -> Result<Summary> {
    ensure_dir(&cfg.out)?;
    let mut run = Run {
        cfg,
        files: Vec::new(),
    };
    let metrics = match cfg.command {
        Command::Spectrum => spectrum(&mut run)?,
        Command::Gapmap => gapmap(&mut run)?,
        Command::Dos => dos(&mut run)?,
        Command::Observables => observables(&mut run)?,
        Command::Probabilities => probabilities(&mut run)?,
        Command::Asymptotics => asymptotics(&mut run)?,
    };
    let name = format!("{}_summary.json", cfg.command.name());
    run.files.push(name.clone());
    let summary = Summary {
        command: cfg.command.name(),
        library_version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        metrics,
        files: run.files,
    };
    write_json(&cfg.out, &name, &summary)?;
    Ok(summary)
}

fn params_at(cfg: &RunConfig, g: f64) -> Result<RabiParams> {
    RabiParams::new(cfg.omega0, cfg.omega0 * cfg.ratio, g)
        .with_context(|| format!("parameters at g={g}"))
}

/// Both sectors below `eps_max`, either at the fixed truncation or grown
/// until converged.
fn sectors(
    cfg: &RunConfig,
    params: &RabiParams,
    want_vectors: bool,
) -> Result<[(usize, ParitySpectrum); 2]> {
    let one = |parity: Parity| -> Result<(usize, ParitySpectrum)> {
        match cfg.truncation {
            Some(dim) => {
                let chain = build_parity_chain(params, parity, dim)?;
                Ok((dim, diagonalize_below(&chain, want_vectors, cfg.eps_max)?))
            }
            None => {
                let opts = TruncationOptions {
                    want_vectors,
                    ..Default::default()
                };
                Ok(converged_window(
                    params,
                    parity,
                    cfg.eps_max,
                    QUANTUM_TOL,
                    opts,
                )?)
            }
        }
    };
    let (plus, minus) = rayon::join(|| one(Parity::Plus), || one(Parity::Minus));
    Ok([plus.context("plus sector")?, minus.context("minus sector")?])
}

/// Midpoint grid from the ground state (or `eps_min`) to `eps_max`, with
/// the guard band around `ε_c` removed.
fn energy_grid(cfg: &RunConfig, g: f64) -> Result<Vec<f64>> {
    let lo = cfg
        .eps_min
        .unwrap_or_else(|| semiclassical::ground_energy(g))
        .max(semiclassical::ground_energy(g));
    if lo >= cfg.eps_max {
        bail!("energy range [{lo}, {}] is empty at g={g}", cfg.eps_max);
    }
    let h = (cfg.eps_max - lo) / cfg.points as f64;
    Ok((0..cfg.points)
        .map(|i| lo + (i as f64 + 0.5) * h)
        .filter(|e| (e - CRITICAL_ENERGY).abs() > GUARD_BAND)
        .collect())
}

fn spectrum(run: &mut Run) -> Result<Value> {
    let cfg = run.cfg;
    let grid = cfg.g_grid();
    let rows: Vec<(f64, usize, [Vec<f64>; 2])> = grid
        .par_iter()
        .map(|&g| -> Result<_> {
            let p = params_at(cfg, g)?;
            let dim = cfg.truncation.unwrap_or_else(|| p.default_truncation());
            let level = |parity| -> Result<Vec<f64>> {
                Ok(diagonalize(&build_parity_chain(&p, parity, dim)?, false, cfg.levels)?.eps)
            };
            Ok((g, dim, [level(Parity::Plus)?, level(Parity::Minus)?]))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&["g", "parity", "k", "eps", "truncation"]);
    let mut series = [Vec::new(), Vec::new()];
    for (g, dim, sectors) in &rows {
        for (i, parity) in [Parity::Plus, Parity::Minus].into_iter().enumerate() {
            for (k, e) in sectors[i].iter().enumerate() {
                table.push(vec![
                    num(*g),
                    parity.label().into(),
                    k.to_string(),
                    num(*e),
                    dim.to_string(),
                ]);
                series[i].push((*g, *e));
            }
        }
    }
    let rule = cfg
        .truncation
        .map_or_else(|| "4R*max(1,g^2)+100".to_string(), |d| d.to_string());
    run.csv(
        "spectrum.csv",
        &[("levels", cfg.levels.to_string()), ("truncation", rule)],
        &table,
    )?;
    let [plus, minus] = series;
    run.svg(
        "spectrum.svg",
        Plot {
            title: format!("lowest levels, R = {}", cfg.ratio),
            x_label: "g".into(),
            y_label: "eps".into(),
            series: vec![
                Series::new("parity +", Style::Points, plus),
                Series::new("parity -", Style::Points, minus),
            ],
            ..Default::default()
        },
    )?;
    let ground = rows
        .iter()
        .map(|(g, _, s)| json!({"g": g, "eps": s[0][0].min(s[1][0])}))
        .collect::<Vec<_>>();
    Ok(json!({
        "couplings": rows.len(),
        "levels_per_sector": cfg.levels,
        "max_truncation": rows.iter().map(|r| r.1).max(),
        "ground_state": ground,
    }))
}

fn gapmap(run: &mut Run) -> Result<Value> {
    let cfg = run.cfg;
    let grid = cfg.g_grid();
    let options = GapOptions {
        precise: cfg.precise,
        ..Default::default()
    };
    let map = gap_map(cfg.ratio, &grid, cfg.levels, options)?;

    let mut table = Table::new(&["g", "k", "eps", "delta"]);
    let mut bands = [Vec::new(), Vec::new(), Vec::new()];
    for e in &map.entries {
        table.push(vec![num(e.g), e.k.to_string(), num(e.eps), num(e.delta)]);
        let band = match e.delta.abs() {
            d if d < 1e-12 => 0,
            d if d < 1e-4 => 1,
            _ => 2,
        };
        bands[band].push((e.g, e.eps));
    }
    let extra = [
        ("levels", cfg.levels.to_string()),
        ("eps_max", num(map.eps_max)),
        ("truncation", "converged".to_string()),
        ("truncation_tol", num(options.tol)),
        ("delta_units", "eps".to_string()),
        ("precise", cfg.precise.to_string()),
    ];
    run.csv("gapmap.csv", &extra, &table)?;
    let [closed, narrow, open] = bands;
    run.svg(
        "gapmap.svg",
        Plot {
            title: format!("parity splittings, R = {}", cfg.ratio),
            x_label: "g".into(),
            y_label: "eps".into(),
            series: vec![
                Series::new("|delta| < 1e-12", Style::Points, closed),
                Series::new("|delta| < 1e-4", Style::Points, narrow),
                Series::new("|delta| >= 1e-4", Style::Points, open),
            ],
            ..Default::default()
        },
    )?;
    let smallest = map
        .entries
        .iter()
        .map(|e| e.delta.abs())
        .fold(f64::INFINITY, f64::min);
    let largest = map
        .entries
        .iter()
        .map(|e| e.delta.abs())
        .fold(0.0, f64::max);
    Ok(json!({
        "entries": map.entries.len(),
        "unconverged": map.unconverged.len(),
        "min_abs_delta": smallest.is_finite().then_some(smallest),
        "max_abs_delta": largest,
    }))
}

fn dos(run: &mut Run) -> Result<Value> {
    let cfg = run.cfg;
    let params = params_at(cfg, cfg.g)?;
    let grid = energy_grid(cfg, cfg.g)?;
    let sc = dos_curve(cfg.g, &grid, cfg.quad_tol, true)?;
    let [(dim_plus, plus), (dim_minus, minus)] = sectors(cfg, &params, false)?;
    let quantum = windowed_dos(&plus, &minus, cfg.window)?;

    let mut table = Table::new(&["eps", "nu", "ncum"]);
    let ncum = sc.ncum.as_deref().unwrap_or(&[]);
    for (i, (e, nu)) in sc.grid.iter().zip(&sc.nu).enumerate() {
        table.push(vec![
            num(*e),
            num(*nu),
            ncum.get(i).map_or_else(String::new, |v| num(*v)),
        ]);
    }
    let extra = [
        ("g", num(cfg.g)),
        (
            "nu_units",
            "1/omega0, comparable with nu_scaled".to_string(),
        ),
        ("ncum_units", "levels below eps times 2/R".to_string()),
    ];
    run.csv("dos_semiclassical.csv", &extra, &table)?;

    let mut qtable = Table::new(&["eps_bar", "nu_bar", "nu_scaled"]);
    let mut deviation: f64 = 0.0;
    let mut compared = 0;
    for p in &quantum.points {
        qtable.push(vec![num(p.eps_bar), num(p.nu_bar), num(p.nu_scaled)]);
        // near ε_c the windowed average cannot follow the divergence
        if (p.eps_bar - CRITICAL_ENERGY).abs() > 0.05
            && p.eps_bar > semiclassical::ground_energy(cfg.g) + 0.05
        {
            let reference = dos_semiclassical(cfg.g, p.eps_bar, cfg.quad_tol)?;
            deviation = deviation.max((p.nu_scaled / reference - 1.0).abs());
            compared += 1;
        }
    }
    let extra = [
        ("g", num(cfg.g)),
        ("window", cfg.window.to_string()),
        ("truncation_plus", dim_plus.to_string()),
        ("truncation_minus", dim_minus.to_string()),
        ("truncation_tol", num(QUANTUM_TOL)),
        (
            "nu_units",
            "nu_bar per unit eps, nu_scaled = nu_bar*2*omega0/Omega".to_string(),
        ),
    ];
    run.csv("dos_quantum.csv", &extra, &qtable)?;
    run.svg(
        "dos.svg",
        Plot {
            title: format!("density of states, g = {}, R = {}", cfg.g, cfg.ratio),
            x_label: "eps".into(),
            y_label: "nu".into(),
            series: vec![
                Series::new(
                    "semiclassical",
                    Style::Line,
                    sc.grid.iter().copied().zip(sc.nu.iter().copied()).collect(),
                ),
                Series::new(
                    "quantum",
                    Style::Points,
                    quantum
                        .points
                        .iter()
                        .map(|p| (p.eps_bar, p.nu_scaled))
                        .collect(),
                ),
            ],
            ..Default::default()
        },
    )?;
    Ok(json!({
        "g": cfg.g,
        "semiclassical_points": sc.len(),
        "quantum_points": quantum.points.len(),
        "truncation_plus": dim_plus,
        "truncation_minus": dim_minus,
        "dropped_levels": quantum.dropped_levels,
        "compared_points": compared,
        "max_relative_deviation": deviation,
        "densest_quantum": quantum.densest().map(|p| json!({"eps": p.eps_bar, "nu_scaled": p.nu_scaled})),
    }))
}

fn quantum_observables(cfg: &RunConfig) -> Result<(usize, usize, Vec<EigenObservables>)> {
    let params = params_at(cfg, cfg.g)?;
    let [(dim_plus, plus), (dim_minus, minus)] = sectors(cfg, &params, true)?;
    let obs = vec![eigen_observables(&plus)?, eigen_observables(&minus)?];
    Ok((dim_plus, dim_minus, obs))
}

fn observables(run: &mut Run) -> Result<Value> {
    let cfg = run.cfg;
    let grid = energy_grid(cfg, cfg.g)?;
    let sc = observable_curve(cfg.g, &grid, cfg.quad_tol)?;
    let mut table = Table::new(&["eps", "nphot_scaled", "upper_population", "sz"]);
    for i in 0..sc.grid.len() {
        table.push(vec![
            num(sc.grid[i]),
            num(sc.nphot_scaled[i]),
            num((sc.sz[i] + 1.0) / 2.0),
            num(sc.sz[i]),
        ]);
    }
    run.csv(
        "observables_semiclassical.csv",
        &[("g", num(cfg.g))],
        &table,
    )?;

    let (dim_plus, dim_minus, obs) = quantum_observables(cfg)?;
    let mut qtable = Table::new(&[
        "parity",
        "k",
        "eps",
        "nphot_scaled",
        "upper_population",
        "sz",
    ]);
    let mut quantum_points = (Vec::new(), Vec::new());
    for o in &obs {
        for k in 0..o.eps.len() {
            let nphot = o.n_phot[k] / cfg.ratio;
            qtable.push(vec![
                o.parity.label().into(),
                k.to_string(),
                num(o.eps[k]),
                num(nphot),
                num((o.sz[k] + 1.0) / 2.0),
                num(o.sz[k]),
            ]);
            quantum_points.0.push((o.eps[k], nphot));
            quantum_points.1.push((o.eps[k], o.sz[k]));
        }
    }
    let extra = [
        ("g", num(cfg.g)),
        ("truncation_plus", dim_plus.to_string()),
        ("truncation_minus", dim_minus.to_string()),
        ("nphot_units", "<n>*omega0/Omega".to_string()),
    ];
    run.csv("observables_quantum.csv", &extra, &qtable)?;
    run.svg(
        "observables.svg",
        Plot {
            title: format!("observables, g = {}, R = {}", cfg.g, cfg.ratio),
            x_label: "eps".into(),
            y_label: "nphot_scaled, sz".into(),
            series: vec![
                Series::new(
                    "nphot semiclassical",
                    Style::Line,
                    sc.grid
                        .iter()
                        .copied()
                        .zip(sc.nphot_scaled.iter().copied())
                        .collect(),
                ),
                Series::new(
                    "sz semiclassical",
                    Style::Line,
                    sc.grid.iter().copied().zip(sc.sz.iter().copied()).collect(),
                ),
                Series::new("nphot quantum", Style::Points, quantum_points.0),
                Series::new("sz quantum", Style::Points, quantum_points.1),
            ],
            ..Default::default()
        },
    )?;
    let nearest_critical = (0..sc.grid.len())
        .min_by(|&a, &b| {
            (sc.grid[a] - CRITICAL_ENERGY)
                .abs()
                .total_cmp(&(sc.grid[b] - CRITICAL_ENERGY).abs())
        })
        .map(|i| json!({"eps": sc.grid[i], "nphot_scaled": sc.nphot_scaled[i], "sz": sc.sz[i]}));
    Ok(json!({
        "g": cfg.g,
        "semiclassical_points": sc.grid.len(),
        "quantum_levels": obs.iter().map(|o| o.eps.len()).sum::<usize>(),
        "truncation_plus": dim_plus,
        "truncation_minus": dim_minus,
        "semiclassical_near_critical": nearest_critical,
    }))
}

fn probabilities(run: &mut Run) -> Result<Value> {
    let cfg = run.cfg;
    let (dim_plus, dim_minus, obs) = quantum_observables(cfg)?;
    let mut table = Table::new(&["parity", "k", "eps", "p_loc"]);
    let mut series = Vec::new();
    let mut peaks = Vec::new();
    for o in &obs {
        let mut points = Vec::new();
        for k in 0..o.eps.len() {
            table.push(vec![
                o.parity.label().into(),
                k.to_string(),
                num(o.eps[k]),
                num(o.p_loc[k]),
            ]);
            points.push((o.eps[k], o.p_loc[k]));
        }
        series.push(Series::new(
            format!("parity {}", o.parity.label()),
            Style::Points,
            points,
        ));
        if let Some(k) = o.argmax_p_loc() {
            peaks.push(
                json!({"parity": o.parity.label(), "k": k, "eps": o.eps[k], "p_loc": o.p_loc[k]}),
            );
        }
    }
    let extra = [
        ("g", num(cfg.g)),
        ("truncation_plus", dim_plus.to_string()),
        ("truncation_minus", dim_minus.to_string()),
        ("p_loc", "|<0,down|psi>|^2 + |<1,down|psi>|^2".to_string()),
    ];
    run.csv("probabilities.csv", &extra, &table)?;
    run.svg(
        "probabilities.svg",
        Plot {
            title: format!(
                "localization at the origin, g = {}, R = {}",
                cfg.g, cfg.ratio
            ),
            x_label: "eps".into(),
            y_label: "P".into(),
            log_y: true,
            series,
        },
    )?;
    Ok(json!({
        "g": cfg.g,
        "levels": obs.iter().map(|o| o.eps.len()).sum::<usize>(),
        "truncation_plus": dim_plus,
        "truncation_minus": dim_minus,
        "peaks": peaks,
    }))
}

fn fit_json(r: &FitReport) -> Value {
    json!({
        "side": format!("{:?}", r.side).to_lowercase(),
        "slope": r.slope,
        "intercept": r.intercept,
        "prefactor": r.prefactor(),
        "residual_norm": r.residual_norm,
        "points": r.points,
        "window": [r.window.min, r.window.max],
    })
}

fn asymptotics(run: &mut Run) -> Result<Value> {
    let cfg = run.cfg;
    let g = cfg.g;
    let window = FitWindow::SEMICLASSICAL;
    let count = cfg.points.clamp(5, 200);
    let (kind, side) = if (g - 1.0).abs() < 1e-12 {
        (LawKind::PowerLawQpt, Side::Above)
    } else if g > 1.0 {
        (LawKind::LogEsqpt, Side::Both)
    } else {
        bail!("no divergence of the density of states at g = {g} < 1");
    };
    let grid = geometric_grid(CRITICAL_ENERGY, window, count, side);
    let curve = dos_curve(g, &grid, cfg.quad_tol, false)?.scaled(1.0 / cfg.omega0);
    let (law, fits) = match kind {
        LawKind::PowerLawQpt => (
            law_power_qpt(cfg.omega0)?,
            vec![fit_divergence(
                &curve,
                CRITICAL_ENERGY,
                kind,
                window,
                Side::Above,
            )?],
        ),
        LawKind::LogEsqpt => {
            let fits = [Side::Above, Side::Below, Side::Both]
                .into_iter()
                .map(|s| fit_divergence(&curve, CRITICAL_ENERGY, kind, window, s))
                .collect::<rabi_esqpt::Result<Vec<_>>>()?;
            (law_log_esqpt(cfg.omega0, g)?, fits)
        }
    };

    let mut table = Table::new(&["eps", "delta", "nu", "law"]);
    for (e, nu) in curve.grid.iter().zip(&curve.nu) {
        let d = (e - CRITICAL_ENERGY).abs();
        table.push(vec![num(*e), num(d), num(*nu), num(law.value(d))]);
    }
    let extra = [
        ("g", num(g)),
        ("nu_units", "levels per unit energy".to_string()),
        ("law", format!("{kind:?}")),
    ];
    run.csv("asymptotics.csv", &extra, &table)?;

    let (x_label, transform): (&str, fn(f64) -> f64) = match kind {
        LawKind::PowerLawQpt => ("log10 |eps - eps_c|", f64::log10),
        LawKind::LogEsqpt => ("-ln |eps - eps_c|", |d: f64| -d.ln()),
    };
    let sample = |f: &dyn Fn(f64, f64) -> f64| -> Vec<(f64, f64)> {
        curve
            .grid
            .iter()
            .zip(&curve.nu)
            .map(|(e, nu)| {
                let d = (e - CRITICAL_ENERGY).abs();
                (transform(d), f(d, *nu))
            })
            .collect()
    };
    run.svg(
        "asymptotics.svg",
        Plot {
            title: format!("critical density of states, g = {g}"),
            x_label: x_label.into(),
            y_label: "nu".into(),
            log_y: kind == LawKind::PowerLawQpt,
            series: vec![
                Series::new("semiclassical", Style::Points, sample(&|_, nu| nu)),
                Series::new("law", Style::Line, sample(&|d, _| law.value(d))),
            ],
        },
    )?;

    let primary = fits.last().expect("at least one fit");
    let mut metrics = json!({
        "g": g,
        "kind": format!("{kind:?}"),
        "fits": fits.iter().map(fit_json).collect::<Vec<_>>(),
        "law_prefactor": law.prefactor,
    });
    match kind {
        LawKind::PowerLawQpt => {
            metrics["exponent"] = json!(primary.slope);
            metrics["prefactor"] = json!(primary.prefactor());
            metrics["law_exponent"] = json!(law.exponent);
        }
        LawKind::LogEsqpt => {
            metrics["slope"] = json!(primary.slope);
            metrics["offset"] = json!(primary.intercept);
        }
    }
    Ok(metrics)
}
