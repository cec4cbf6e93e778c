use efrk::diagnostics::error_l2;
use efrk::driver::{reference_config, reference_solution, run, GridSpec, InitialCondition, RunConfig, StepControl};
use efrk::schemes::{BuiltinTableau, SchemeKind, Stepper};
use efrk::{Grid, ModelParams, RealField};

const DELTA: f64 = 1e-2;

fn sine_run(scheme: SchemeKind, tau: f64, n: usize) -> RunConfig {
    RunConfig {
        grid: GridSpec {
            n: vec![n],
            lower: vec![-1.0],
            upper: vec![1.0],
        },
        model: ModelParams::new(0.01),
        scheme,
        step: StepControl::Uniform { tau },
        t_final: 0.1,
        snapshots: vec![],
        seed: 0,
        initial: InitialCondition::SineSum {
            amplitude: 0.1,
            modes: vec![3.0, 5.0],
        },
        reference: None,
    }
}

fn final_state(config: &RunConfig) -> RealField {
    run(config).unwrap().final_state.u
}

fn rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[test]
fn efrk_temporal_orders() {
    let reference = reference_solution(&sine_run(SchemeKind::efrk(BuiltinTableau::Rk33), DELTA / 512.0, 128), 4).unwrap();
    for (which, order) in [(BuiltinTableau::Rk11, 1.0), (BuiltinTableau::Rk22, 2.0), (BuiltinTableau::Rk33, 3.0)] {
        let errors: Vec<f64> = (6..=9)
            .map(|k| {
                let u = final_state(&sine_run(SchemeKind::efrk(which), DELTA / 2f64.powi(k), 128));
                error_l2(&u, &reference).unwrap()
            })
            .collect();
        let finest = rate(errors[2], errors[3]);
        assert!((finest - order).abs() <= 0.15, "{which}: {errors:?} rate {finest}");
    }
}

#[test]
fn strang_is_second_order() {
    let reference = reference_solution(&sine_run(SchemeKind::Strang, DELTA / 256.0, 64), 4).unwrap();
    let mut config = sine_run(SchemeKind::Strang, 0.0, 64);
    config.model = config.model.with_kappa(0.0);
    let errors: Vec<f64> = [DELTA / 64.0, DELTA / 128.0, DELTA / 256.0]
        .iter()
        .map(|&tau| {
            config.step = StepControl::Uniform { tau };
            error_l2(&final_state(&config), &reference).unwrap()
        })
        .collect();
    let r = rate(errors[1], errors[2]);
    assert!((r - 2.0).abs() <= 0.15, "{errors:?}");
}

#[test]
fn ifrk_and_efrk_agree_to_local_order() {
    // Both schemes have local error O(τ^{p+1}), so one step from the same
    // state differs by O(τ^{p+1}) once τℓ is small for every active mode.
    let grid = Grid::new(&[16], &[-1.0], &[1.0]).unwrap();
    let u = grid.sample(|x| 0.1 * ((3.0 * std::f64::consts::PI * x[0]).sin() + (5.0 * std::f64::consts::PI * x[0]).sin()));
    let params = ModelParams::new(0.01);
    for (which, p) in [(BuiltinTableau::Rk11, 1), (BuiltinTableau::Rk22, 2), (BuiltinTableau::Rk33, 3)] {
        let diff = |tau: f64| {
            let a = Stepper::new(&grid, params, SchemeKind::efrk(which), tau).unwrap().step(&u).unwrap();
            let b = Stepper::new(&grid, params, SchemeKind::ifrk(which), tau).unwrap().step(&u).unwrap();
            error_l2(&a, &b).unwrap()
        };
        let (d1, d2) = (diff(4e-5), diff(2e-5));
        let r = rate(d1, d2);
        assert!((r - (p as f64 + 1.0)).abs() <= 0.2, "{which}: {d1:e} {d2:e} rate {r}");
    }
}

#[test]
fn reference_run_is_third_order_self_consistent() {
    let base = sine_run(SchemeKind::efrk(BuiltinTableau::Rk33), DELTA / 64.0, 64);
    let reference = reference_solution(&base, 6).unwrap();
    let tau_ref = DELTA / 64.0 / 64.0;
    let err_at = |refine: u32| error_l2(&final_state(&reference_config(&base, refine)), &reference).unwrap();
    let (e4, e5) = (err_at(4), err_at(5));
    let c = e4 / (4.0 * tau_ref).powi(3);
    assert!(e5 <= 1.2 * c * (2.0 * tau_ref).powi(3), "{e4:e} {e5:e}");
}

#[test]
fn errors_are_insensitive_to_the_reference_level() {
    let scheme = sine_run(SchemeKind::efrk(BuiltinTableau::Rk11), DELTA / 64.0, 128);
    let u = final_state(&scheme);
    let e4 = error_l2(&u, &reference_solution(&scheme, 4).unwrap()).unwrap();
    let e6 = error_l2(&u, &reference_solution(&scheme, 6).unwrap()).unwrap();
    assert!((e4 - e6).abs() <= 0.01 * e6, "{e4:e} {e6:e}");
}
