#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rabi_esqpt::quantum::{build_parity_chain, diagonalize};
use rabi_esqpt::{Parity, RabiParams};

/// Full Fock⊗spin Hamiltonian with `dim` photon states, basis index `2n + s`
/// where `s = 0` is spin down.
pub fn dense_hamiltonian(p: &RabiParams, dim: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(2 * dim, 2 * dim);
    let lambda = p.lambda();
    for n in 0..dim {
        for s in 0..2 {
            let sz = if s == 0 { -1.0 } else { 1.0 };
            h[(2 * n + s, 2 * n + s)] = p.omega0() * n as f64 + 0.5 * p.omega() * sz;
        }
        if n + 1 < dim {
            let amp = -lambda * ((n + 1) as f64).sqrt();
            // (a† + a) σx couples (n, s) with (n+1, 1−s)
            for s in 0..2 {
                h[(2 * n + s, 2 * (n + 1) + (1 - s))] = amp;
                h[(2 * (n + 1) + (1 - s), 2 * n + s)] = amp;
            }
        }
    }
    h
}

pub fn dense_spectrum(p: &RabiParams, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(dense_hamiltonian(p, dim))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Union of both parity-chain spectra, sorted.
pub fn chain_spectrum(p: &RabiParams, dim: usize) -> Vec<f64> {
    let mut all = Vec::new();
    for parity in [Parity::Plus, Parity::Minus] {
        let chain = build_parity_chain(p, parity, dim).unwrap();
        all.extend(diagonalize(&chain, false, dim).unwrap().energies);
    }
    all.sort_by(f64::total_cmp);
    all
}

/// Largest deviation between the two spectra relative to the spectral radius.
pub fn max_relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / scale)
        .fold(0.0, f64::max)
}
