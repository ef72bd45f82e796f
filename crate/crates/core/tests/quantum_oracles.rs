mod common;

use common::{chain_spectrum, dense_spectrum, max_relative_deviation};
use proptest::prelude::*;
use rabi_esqpt::quantum::{build_parity_chain, diagonalize, eigen_observables, precise_gap};
use rabi_esqpt::{Parity, RabiParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn parity_chains_match_dense_oracle(
        omega0 in 0.2f64..3.0,
        ratio in 1.0f64..60.0,
        g in 0.0f64..3.0,
        dim in 2usize..=12,
    ) {
        let p = RabiParams::new(omega0, omega0 * ratio, g).unwrap();
        let dense = dense_spectrum(&p, dim);
        let chains = chain_spectrum(&p, dim);
        prop_assert!(max_relative_deviation(&dense, &chains) <= 1e-10);
    }

    #[test]
    fn leading_submatrix_interlaces(ratio in 1.0f64..60.0, g in 0.1f64..3.0, dim in 3usize..60) {
        let p = RabiParams::from_ratio(ratio, g).unwrap();
        for parity in [Parity::Plus, Parity::Minus] {
            let chain = build_parity_chain(&p, parity, dim).unwrap();
            let full = diagonalize(&chain, false, dim).unwrap().energies;
            let lead = chain.matrix().leading(dim - 1).unwrap().lowest_eigenvalues(dim - 1).unwrap();
            // weakly coupled tails separate by less than the rounding level
            let slack = 8.0 * f64::EPSILON * chain.matrix().norm();
            for k in 0..dim - 1 {
                prop_assert!(full[k] <= lead[k] + slack && lead[k] <= full[k + 1] + slack);
            }
        }
    }

    #[test]
    fn stored_pairs_are_accurate(ratio in 1.0f64..100.0, g in 0.0f64..3.0) {
        let p = RabiParams::from_ratio(ratio, g).unwrap();
        let dim = 150;
        for parity in [Parity::Plus, Parity::Minus] {
            let chain = build_parity_chain(&p, parity, dim).unwrap();
            let s = diagonalize(&chain, true, 40).unwrap();
            let vectors = s.vectors.as_ref().unwrap();
            for k in 1..s.len() {
                prop_assert!(s.energies[k] > s.energies[k - 1] || g == 0.0);
            }
            for (e, v) in s.energies.iter().zip(vectors) {
                let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                prop_assert!((norm - 1.0).abs() < 1e-12);
                prop_assert!(chain.matrix().residual(*e, v) <= 1e-9 * chain.matrix().norm());
            }
            let o = eigen_observables(&s).unwrap();
            for k in 0..s.len() {
                prop_assert!(o.n_phot[k] >= 0.0);
                prop_assert!((-1.0..=1.0).contains(&o.sz[k]));
                prop_assert!((0.0..=1.0).contains(&o.p_loc[k]));
            }
        }
    }
}

#[test]
fn sigma_z_is_energy_derivative() {
    // ⟨σz⟩ = ∂E_k/∂(Ω/2) at fixed ω₀ and λ
    let base = RabiParams::from_ratio(40.0, 1.3).unwrap();
    let lambda = base.lambda();
    let dim = 400;
    let h = 1e-4;
    for parity in [Parity::Plus, Parity::Minus] {
        let s = diagonalize(&build_parity_chain(&base, parity, dim).unwrap(), true, 30).unwrap();
        let o = eigen_observables(&s).unwrap();
        let shifted = |d: f64| {
            let p = RabiParams::from_lambda(1.0, 40.0 + 2.0 * d, lambda).unwrap();
            diagonalize(&build_parity_chain(&p, parity, dim).unwrap(), false, 30)
                .unwrap()
                .energies
        };
        let (up, down) = (shifted(h), shifted(-h));
        for k in 0..30 {
            let fd = (up[k] - down[k]) / (2.0 * h);
            assert!(
                (fd - o.sz[k]).abs() < 1e-5,
                "{parity} {k}: {fd} vs {}",
                o.sz[k]
            );
        }
    }
}

#[test]
fn superradiant_ground_energy() {
    let p = RabiParams::from_ratio(40.0, 2.0).unwrap();
    let s = diagonalize(
        &build_parity_chain(&p, Parity::Minus, p.default_truncation()).unwrap(),
        false,
        1,
    )
    .unwrap();
    // finite-frequency offset is O(ω₀/Ω)
    assert!((s.eps[0] + 2.125).abs() < 2.0 / 40.0, "{}", s.eps[0]);
}

// Values from an independent 200-digit bisection of both parity chains.
#[test]
fn tunnel_splitting_matches_multiprecision_oracle() {
    let cases = [
        (20.0, 2.0, 0, 1.748733818e-15),
        (40.0, 2.0, 0, 3.371401357e-30),
        (80.0, 2.0, 0, 1.681133212e-59),
        (40.0, 2.0, 1, 5.691787249e-28),
        (80.0, 1.2, 0, 1.174914601e-8),
    ];
    for (ratio, g, k, expected) in cases {
        let p = RabiParams::from_ratio(ratio, g).unwrap();
        let gap = precise_gap(&p, k, p.default_truncation()).unwrap();
        assert!(
            (gap / expected - 1.0).abs() < 1e-6,
            "R={ratio} g={g} k={k}: {gap:e} vs {expected:e}"
        );
    }
}

#[test]
fn tunnel_splitting_shrinks_with_frequency_ratio() {
    for k in 0..3 {
        let gaps: Vec<f64> = [40.0, 80.0, 160.0]
            .iter()
            .map(|r| {
                let p = RabiParams::from_ratio(*r, 2.0).unwrap();
                precise_gap(&p, k, p.default_truncation()).unwrap().abs()
            })
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "k={k}: {gaps:?}");
    }
}

#[test]
fn doublets_are_far_below_level_spacing() {
    for ratio in [40.0, 80.0, 160.0] {
        let p = RabiParams::from_ratio(ratio, 1.5).unwrap();
        let dim = p.default_truncation();
        let minus = diagonalize(
            &build_parity_chain(&p, Parity::Minus, dim).unwrap(),
            false,
            200,
        )
        .unwrap();
        for k in 0..minus.len() - 1 {
            if minus.eps[k + 1] >= -1.0 {
                break;
            }
            let spacing = minus.eps[k + 1] - minus.eps[k];
            // the last couple of doublets below ε_c are blurred by tunnelling over the barrier top
            if minus.eps[k] > -1.0 - 2.0 * spacing {
                continue;
            }
            let gap = precise_gap(&p, k, dim).unwrap().abs();
            assert!(gap * 10.0 < spacing, "R={ratio} k={k}: {gap} vs {spacing}");
        }
    }
}
