mod support;

use efrk::schemes::{builtin, BuiltinTableau};
use efrk::stability::{delta_coefficients, energy_matrix_entries, log_samples, psd_scan};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use support::{closed_delta, closed_diagonal};

fn random_arguments(count: usize) -> Vec<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    (0..count)
        .map(|k| if k % 2 == 0 { 1e6 * unit() } else { 10f64.powf(-6.0 + 12.0 * unit()) })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn recurrence_matches_closed_forms() {
    for which in BuiltinTableau::ALL {
        let t = builtin(which);
        for z in random_arguments(100).into_iter().chain([0.0]) {
            let dc = delta_coefficients(&t, z).unwrap();
            for i in 1..=t.stages() {
                for j in 1..=i {
                    let want = closed_delta(which, i, j, z);
                    assert!(rel(dc.delta(i, j), want) <= 1e-10, "{which} Δ{i}{j}({z}) = {} vs {want}", dc.delta(i, j));
                }
            }
            let entries = energy_matrix_entries(&t, z).unwrap();
            for i in 1..=t.stages() {
                let got = entries.iter().find(|e| e.label == format!("D{i}")).unwrap().value;
                let want = closed_diagonal(which, i, z);
                assert!(rel(got, want) <= 1e-10, "{which} D{i}({z}) = {got} vs {want}");
            }
        }
    }
}

#[test]
fn values_at_zero() {
    let d = delta_coefficients(&builtin(BuiltinTableau::Rk33), 0.0).unwrap();
    assert!((d.delta(2, 1) - 1.5).abs() < 1e-15);
    assert!((d.delta(3, 1) - 1.0 / 3.0).abs() < 1e-15);
    assert!((d.delta(3, 2) - 4.0 / 3.0).abs() < 1e-15);
    let e = energy_matrix_entries(&builtin(BuiltinTableau::Rk33), 0.0).unwrap();
    let values: Vec<f64> = e.iter().take(3).map(|e| e.value).collect();
    for (got, want) in values.iter().zip([25.0 / 12.0, 1.0 / 12.0, 0.5]) {
        assert!((got - want).abs() < 1e-14);
    }
    let e = energy_matrix_entries(&builtin(BuiltinTableau::Rk22), 0.0).unwrap();
    let values: Vec<f64> = e.iter().map(|e| e.value).collect();
    assert_eq!(values.len(), 3);
    for (got, want) in values.iter().zip([0.5, 1.5, 1.0]) {
        assert!((got - want).abs() < 1e-15);
    }
}

#[test]
fn omega_rows_sum_to_zero() {
    for which in BuiltinTableau::ALL {
        let t = builtin(which);
        for z in log_samples(200, 1e-6, 1e8) {
            let dc = delta_coefficients(&t, z).unwrap();
            for i in 1..=t.stages() {
                let sum: f64 = (0..=i).map(|k| dc.omega(i, k)).sum();
                assert!(sum.abs() <= 1e-12, "{which} row {i} at z={z}: {sum:e}");
            }
        }
    }
}

#[test]
fn energy_matrices_are_non_negative() {
    for which in BuiltinTableau::ALL {
        let scan = psd_scan(&builtin(which), 1000, 1e8).unwrap();
        assert!(scan.samples >= 1000);
        assert!(scan.min_value >= -1e-13, "{which}: {scan:?}");
    }
}
