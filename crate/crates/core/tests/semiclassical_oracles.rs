use rabi_esqpt::asymptotics::law_log_esqpt;
use rabi_esqpt::quantum::{converged_window, TruncationOptions};
use rabi_esqpt::semiclassical::{accumulated_states, dos_semiclassical, CRITICAL_ENERGY};
use rabi_esqpt::{Parity, RabiParams};

fn quantum_count(ratio: f64, g: f64, eps: f64) -> usize {
    let p = RabiParams::from_ratio(ratio, g).unwrap();
    [Parity::Plus, Parity::Minus]
        .iter()
        .map(|&parity| {
            let (_, s) =
                converged_window(&p, parity, eps, 1e-8, TruncationOptions::default()).unwrap();
            s.len()
        })
        .sum()
}

#[test]
fn level_count_matches_phase_space_volume() {
    let ratio = 1000.0;
    for (g, eps) in [(1.2, 0.0), (2.0, -0.5), (0.6, 0.3)] {
        let expected = ratio / 2.0 * accumulated_states(g, eps, 1e-10).unwrap();
        let found = quantum_count(ratio, g, eps) as f64;
        assert!(
            (found / expected - 1.0).abs() < 0.02,
            "g={g} eps={eps}: {found} vs {expected}"
        );
    }
}

#[test]
fn count_error_stays_bounded_as_ratio_grows() {
    // the count is exact up to an O(1) Maslov-type offset
    let (g, eps) = (1.4, -0.2);
    let n = accumulated_states(g, eps, 1e-10).unwrap();
    for ratio in [100.0, 400.0, 1600.0] {
        let found = quantum_count(ratio, g, eps) as f64;
        assert!(
            (found - ratio / 2.0 * n).abs() < 3.0,
            "R={ratio}: {found} vs {}",
            ratio / 2.0 * n
        );
    }
}

#[test]
fn logarithmic_offset_converges() {
    for g in [1.2, 1.4, 2.0] {
        let a = law_log_esqpt(1.0, g).unwrap().prefactor;
        for side in [1.0, -1.0] {
            let offsets: Vec<f64> = (3..=7)
                .map(|k| {
                    let d = 10f64.powi(-k);
                    dos_semiclassical(g, CRITICAL_ENERGY + side * d, 1e-11).unwrap() - a * -d.ln()
                })
                .collect();
            let steps: Vec<f64> = offsets.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            assert!(
                steps.windows(2).all(|s| s[1] < s[0]),
                "g={g} side={side}: {offsets:?}"
            );
            assert!(
                steps[steps.len() - 1] < 1e-4,
                "g={g} side={side}: {offsets:?}"
            );
        }
    }
}
