//! Exact diagonalization of the Rabi Hamiltonian in its two parity sectors.
//!
//! `Π = exp(iπ a†a) σz` commutes with `H`, and each eigenspace of `Π` is
//! spanned by a chain of Fock-spin states in which `H` is tridiagonal:
//!
//! * Minus: `|0,↓⟩, |1,↑⟩, |2,↓⟩, …` with `d_n = ω₀ n + (−1)^{n+1} Ω/2`
//! * Plus:  `|0,↑⟩, |1,↓⟩, |2,↑⟩, …` with `d_n = ω₀ n + (−1)^n Ω/2`
//!
//! and couplings `−λ√(n+1)` in both. Energies are rescaled to `ε = 2E/Ω` only
//! when a [`ParitySpectrum`] is assembled; the solver itself works in bare
//! energy units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiprec::{bits_for_gap, MpChain};
use crate::params::{Parity, RabiParams};
use crate::semiclassical;
use crate::tridiag::SymTridiagonal;

#[derive(Debug, Clone, PartialEq)]
pub struct ParityChain {
    params: RabiParams,
    parity: Parity,
    matrix: SymTridiagonal,
}

impl ParityChain {
    pub fn params(&self) -> &RabiParams {
        &self.params
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn diag(&self) -> &[f64] {
        self.matrix.diag()
    }

    pub fn offdiag(&self) -> &[f64] {
        self.matrix.offdiag()
    }

    pub fn matrix(&self) -> &SymTridiagonal {
        &self.matrix
    }
}

pub fn build_parity_chain(params: &RabiParams, parity: Parity, dim: usize) -> Result<ParityChain> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain dimension must be >= 2, got {dim}"
        )));
    }
    let omega0 = params.omega0();
    let half_omega = 0.5 * params.omega();
    let lambda = params.lambda();
    let diag = (0..dim)
        .map(|n| omega0 * n as f64 + parity.site_spin(n) * half_omega)
        .collect();
    let offdiag = (0..dim - 1)
        .map(|n| -lambda * ((n + 1) as f64).sqrt())
        .collect();
    Ok(ParityChain {
        params: *params,
        parity,
        matrix: SymTridiagonal::new(diag, offdiag)?,
    })
}

/// Lowest eigenpairs of one parity sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParitySpectrum {
    pub params: RabiParams,
    pub parity: Parity,
    /// Truncation length of the chain that produced this spectrum.
    pub dim: usize,
    /// Bare energies `E_k`, ascending.
    pub energies: Vec<f64>,
    /// Rescaled energies `ε_k = 2E_k/Ω`.
    pub eps: Vec<f64>,
    /// Eigenvectors in the chain basis, one per energy.
    #[serde(skip)]
    pub vectors: Option<Vec<Vec<f64>>>,
    /// Number of leading levels certified stable under truncation growth.
    pub n_converged: usize,
}

impl ParitySpectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn converged_eps(&self) -> &[f64] {
        &self.eps[..self.n_converged.min(self.eps.len())]
    }

    /// Index of the level closest to `eps`; the lower level wins a tie.
    pub fn nearest(&self, eps: f64) -> Option<usize> {
        nearest_index(&self.eps, eps)
    }
}

pub(crate) fn nearest_index(levels: &[f64], target: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in levels.iter().enumerate() {
        let d = (e - target).abs();
        match best {
            Some((_, bd)) if bd <= d => {}
            _ => best = Some((i, d)),
        }
    }
    best.map(|(i, _)| i)
}

/// Lowest `k_max` eigenvalues (and optionally eigenvectors) of a chain.
///
/// `n_converged` is left at `k_max`; only [`converged_window`] certifies
/// truncation convergence.
pub fn diagonalize(
    chain: &ParityChain,
    want_vectors: bool,
    k_max: usize,
) -> Result<ParitySpectrum> {
    let k_max = k_max.min(chain.dim());
    let energies = chain.matrix.lowest_eigenvalues(k_max)?;
    let vectors = if want_vectors {
        Some(chain.matrix.eigenvectors(&energies)?)
    } else {
        None
    };
    let eps = energies.iter().map(|e| chain.params.rescale(*e)).collect();
    Ok(ParitySpectrum {
        params: chain.params,
        parity: chain.parity,
        dim: chain.dim(),
        energies,
        eps,
        vectors,
        n_converged: k_max,
    })
}

/// All levels with `ε ≤ eps_max`.
pub fn diagonalize_below(
    chain: &ParityChain,
    want_vectors: bool,
    eps_max: f64,
) -> Result<ParitySpectrum> {
    let e_max = chain.params.unscale(eps_max);
    let count = chain.matrix.count_below(e_max);
    let mut spectrum = diagonalize(chain, want_vectors, count)?;
    // the Sturm count and bisection may disagree by an ulp at the boundary
    while spectrum.eps.last().is_some_and(|e| *e > eps_max) {
        spectrum.eps.pop();
        spectrum.energies.pop();
        if let Some(v) = spectrum.vectors.as_mut() {
            v.pop();
        }
    }
    spectrum.n_converged = spectrum.len();
    Ok(spectrum)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncationOptions {
    /// Largest truncation tried; `None` means `200·R·max(1, g²)`.
    pub cap: Option<usize>,
    /// Initial truncation; `None` estimates it from the classical turning point.
    pub start: Option<usize>,
    pub want_vectors: bool,
}

/// Photon number at the outer classical turning point of energy `eps`,
/// `R·x₂²/2`, plus a margin for the evanescent tail.
pub fn truncation_estimate(params: &RabiParams, eps_max: f64) -> usize {
    let g = params.g();
    let eps = eps_max.max(semiclassical::ground_energy(g));
    let x2_sq = eps + g * g + (g.powi(4) + 2.0 * eps * g * g + 1.0).max(0.0).sqrt();
    let n_tp = (params.ratio() * x2_sq / 2.0).ceil().max(0.0);
    n_tp as usize + 20 + (6.0 * (n_tp + 1.0).sqrt()).ceil() as usize
}

/// Smallest tested truncation for which every level with `ε ≤ eps_max`
/// moves by less than `tol·ω₀` when the truncation grows by 25%.
///
/// Starting from [`truncation_estimate`], the truncation is grown by 25%
/// per round until the criterion holds. The returned spectrum holds all
/// levels below `eps_max` and has `n_converged` set to their count.
pub fn converged_window(
    params: &RabiParams,
    parity: Parity,
    eps_max: f64,
    tol: f64,
    options: TruncationOptions,
) -> Result<(usize, ParitySpectrum)> {
    if !eps_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps_max must be finite, got {eps_max}"
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let cap = options
        .cap
        .unwrap_or_else(|| (200.0 * params.ratio() * params.g().powi(2).max(1.0)).ceil() as usize)
        .max(2);
    let mut dim = options
        .start
        .unwrap_or_else(|| truncation_estimate(params, eps_max))
        .max(2);
    if dim > cap {
        return Err(Error::TruncationCapExceeded { cap, eps_max });
    }
    let mut current = diagonalize_below(&build_parity_chain(params, parity, dim)?, false, eps_max)?;
    loop {
        let grown = ((dim as f64) * 1.25).ceil() as usize;
        if grown > cap {
            return Err(Error::TruncationCapExceeded { cap, eps_max });
        }
        let next = diagonalize_below(&build_parity_chain(params, parity, grown)?, false, eps_max)?;
        let stable = next.len() == current.len()
            && current
                .energies
                .iter()
                .zip(&next.energies)
                .all(|(a, b)| (a - b).abs() < tol * params.omega0());
        if stable {
            let mut spectrum = if options.want_vectors {
                diagonalize_below(&build_parity_chain(params, parity, dim)?, true, eps_max)?
            } else {
                current
            };
            spectrum.n_converged = spectrum.len();
            return Ok((dim, spectrum));
        }
        dim = grown;
        current = next;
    }
}

/// Per-eigenstate expectation values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenObservables {
    pub parity: Parity,
    pub eps: Vec<f64>,
    /// `⟨a†a⟩`
    pub n_phot: Vec<f64>,
    /// `⟨σz⟩`
    pub sz: Vec<f64>,
    /// `|⟨0,↓|φ_k⟩|²` (Minus) or `|⟨1,↓|φ_k⟩|²` (Plus).
    pub p_loc: Vec<f64>,
}

impl EigenObservables {
    /// Index of the eigenstate with the largest localization probability.
    pub fn argmax_p_loc(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in self.p_loc.iter().enumerate() {
            if best.is_none_or(|(_, b)| *p > b) {
                best = Some((i, *p));
            }
        }
        best.map(|(i, _)| i)
    }
}

pub fn eigen_observables(spectrum: &ParitySpectrum) -> Result<EigenObservables> {
    let vectors = spectrum
        .vectors
        .as_ref()
        .ok_or(Error::MissingEigenvectors)?;
    let loc_site = match spectrum.parity {
        Parity::Minus => 0,
        Parity::Plus => 1,
    };
    let mut n_phot = Vec::with_capacity(vectors.len());
    let mut sz = Vec::with_capacity(vectors.len());
    let mut p_loc = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut n = 0.0;
        let mut s = 0.0;
        for (site, c) in v.iter().enumerate() {
            let w = c * c;
            n += site as f64 * w;
            s += spectrum.parity.site_spin(site) * w;
        }
        n_phot.push(n.max(0.0));
        sz.push(s.clamp(-1.0, 1.0));
        p_loc.push(v.get(loc_site).map_or(0.0, |c| (c * c).min(1.0)));
    }
    Ok(EigenObservables {
        parity: spectrum.parity,
        eps: spectrum.eps.clone(),
        n_phot,
        sz,
        p_loc,
    })
}

/// `Δ_k = ε_k⁺ − ε_k⁻` on a chain of length `dim`, resolved even when it is
/// far below the `f64` resolution of the energies.
///
/// The `f64` difference is used whenever it carries at least ~8 significant
/// digits; otherwise both eigenvalues are re-solved in multiprecision with
/// a mantissa wide enough for the gap.
pub fn precise_gap(params: &RabiParams, k: usize, dim: usize) -> Result<f64> {
    let plus = build_parity_chain(params, Parity::Plus, dim)?;
    let minus = build_parity_chain(params, Parity::Minus, dim)?;
    let ep = plus.matrix.eigenvalue(k)?;
    let em = minus.matrix.eigenvalue(k)?;
    let scale = plus.matrix.norm().max(minus.matrix.norm());
    let noise = 64.0 * f64::EPSILON * scale;
    let coarse = ep - em;
    if coarse.abs() > 1e8 * noise {
        return Ok(params.rescale(coarse));
    }
    let mut guess = coarse.abs().max(noise * 1e-3);
    for _ in 0..8 {
        let prec = bits_for_gap(scale, guess);
        let width = 1e3 * noise;
        let p = MpChain::new(params, Parity::Plus, dim, prec)?.refine_eigenvalue(k, ep, width)?;
        let m = MpChain::new(params, Parity::Minus, dim, prec)?.refine_eigenvalue(k, em, width)?;
        let gap = p.sub(&m, prec);
        let value = gap.to_f64();
        // accept once the gap is resolved with ~40 bits to spare
        if !gap.is_zero() && bits_for_gap(scale, value) <= prec {
            return Ok(params.rescale(value));
        }
        guess = if gap.is_zero() {
            guess * 2f64.powi(-(prec as i32))
        } else {
            value.abs()
        };
        guess = guess.max(f64::MIN_POSITIVE);
    }
    Err(Error::NoConvergence {
        index: k,
        iterations: 8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(ratio: f64, g: f64) -> RabiParams {
        RabiParams::from_ratio(ratio, g).unwrap()
    }

    #[test]
    fn decoupled_minus_chain() {
        let c = build_parity_chain(&params(40.0, 0.0), Parity::Minus, 3).unwrap();
        assert_eq!(c.diag(), &[-20.0, 21.0, -18.0]);
        assert_eq!(c.offdiag(), &[0.0, 0.0]);
    }

    #[test]
    fn decoupled_plus_chain() {
        let c = build_parity_chain(&params(40.0, 0.0), Parity::Plus, 2).unwrap();
        assert_eq!(c.diag(), &[20.0, -19.0]);
    }

    #[test]
    fn couplings_follow_lambda() {
        let c = build_parity_chain(&params(40.0, 1.0), Parity::Minus, 3).unwrap();
        let lambda = 40f64.sqrt() / 2.0;
        assert!((lambda - 3.1623).abs() < 1e-4);
        assert!((c.offdiag()[0] + lambda).abs() < 1e-14);
        assert!((c.offdiag()[1] + lambda * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_short_chain() {
        assert!(build_parity_chain(&params(40.0, 1.0), Parity::Minus, 1).is_err());
    }

    #[test]
    fn decoupled_spectrum_in_rescaled_units() {
        let c = build_parity_chain(&params(40.0, 0.0), Parity::Minus, 30).unwrap();
        let s = diagonalize(&c, false, 5).unwrap();
        for (k, e) in s.eps.iter().enumerate() {
            assert!((e - (-1.0 + 0.1 * k as f64)).abs() < 1e-13, "{k}: {e}");
        }
    }

    #[test]
    fn decoupled_ground_state_observables() {
        let c = build_parity_chain(&params(40.0, 0.0), Parity::Minus, 20).unwrap();
        let s = diagonalize(&c, true, 3).unwrap();
        let o = eigen_observables(&s).unwrap();
        assert!(o.n_phot[0].abs() < 1e-20);
        assert!((o.sz[0] + 1.0).abs() < 1e-15);
        assert!((o.p_loc[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn observables_need_vectors() {
        let c = build_parity_chain(&params(40.0, 1.0), Parity::Minus, 20).unwrap();
        let s = diagonalize(&c, false, 3).unwrap();
        assert_eq!(eigen_observables(&s), Err(Error::MissingEigenvectors));
    }

    #[test]
    fn nearest_prefers_lower_on_tie() {
        assert_eq!(nearest_index(&[-1.25, -0.75], -1.0), Some(0));
        assert_eq!(nearest_index(&[-1.2, -0.95], -1.0), Some(1));
        assert_eq!(nearest_index(&[], -1.0), None);
    }

    #[test]
    fn decoupled_window_size() {
        let p = params(40.0, 0.0);
        for eps_max in [-0.5, 0.0, 0.7] {
            let (dim, s) = converged_window(
                &p,
                Parity::Minus,
                eps_max,
                1e-10,
                TruncationOptions::default(),
            )
            .unwrap();
            let base = (40.0f64 * (eps_max + 1.0) / 2.0).ceil() as usize;
            assert_eq!(dim, truncation_estimate(&p, eps_max));
            assert!(dim > base);
            // even photon numbers up to R(ε+1)/2 carry the Minus-sector lower levels
            let expected = (0..=base)
                .filter(|n| n % 2 == 0 && -1.0 + 2.0 * *n as f64 / 40.0 <= eps_max)
                .count();
            assert_eq!(s.len(), expected);
            assert_eq!(s.n_converged, expected);
        }
    }

    #[test]
    fn window_cap_is_enforced() {
        let p = params(100.0, 1.5);
        let opts = TruncationOptions {
            cap: Some(50),
            ..Default::default()
        };
        assert!(matches!(
            converged_window(&p, Parity::Plus, 0.0, 1e-10, opts),
            Err(Error::TruncationCapExceeded { cap: 50, .. })
        ));
        assert!(converged_window(
            &p,
            Parity::Plus,
            f64::NAN,
            1e-10,
            TruncationOptions::default()
        )
        .is_err());
        assert!(
            converged_window(&p, Parity::Plus, 0.0, 0.0, TruncationOptions::default()).is_err()
        );
    }

    #[test]
    fn precise_gap_matches_f64_when_resolvable() {
        let p = params(40.0, 1.2);
        let dim = p.default_truncation();
        let plus = diagonalize(
            &build_parity_chain(&p, Parity::Plus, dim).unwrap(),
            false,
            3,
        )
        .unwrap();
        let minus = diagonalize(
            &build_parity_chain(&p, Parity::Minus, dim).unwrap(),
            false,
            3,
        )
        .unwrap();
        let gap = precise_gap(&p, 2, dim).unwrap();
        assert!((gap - (plus.eps[2] - minus.eps[2])).abs() < 1e-12);
    }
}
