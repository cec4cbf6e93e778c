mod support;

use efrk::schemes::{builtin, damping_factor, BuiltinTableau, DampingKind, SchemeKind, Stepper};
use efrk::{Grid, ModelParams, RealField};
use support::{newton_equilibrium, tanh_profile, Equilibrium};

const EPS2: f64 = 0.01;

fn steady(n: usize) -> Equilibrium {
    let grid = Grid::new(&[n], &[-1.0], &[1.0]).unwrap();
    let eq = newton_equilibrium(&tanh_profile(&grid, EPS2), EPS2);
    assert!(eq.residual <= 1e-13, "Newton residual {:e}", eq.residual);
    eq
}

fn drift(kind: &SchemeKind, u: &RealField, params: ModelParams, tau: f64) -> f64 {
    let v = Stepper::new(u.grid(), params, kind.clone(), tau).unwrap().step(u).unwrap();
    v.max_abs_diff(u).unwrap()
}

#[test]
fn newton_state_is_a_discrete_steady_state() {
    let eq = steady(64);
    let ops = efrk::model::Operators::new(eq.u.grid(), ModelParams::new(EPS2));
    let mu = ops.chemical_potential(&eq.u).unwrap();
    assert!(mu.values().iter().all(|m| (m - eq.mu).abs() < 1e-12));
    assert!(eq.u.values().iter().any(|&v| v > 0.99) && eq.u.values().iter().any(|&v| v < -0.99));
}

#[test]
fn efrk_fixes_discrete_equilibria_for_all_steps() {
    let eq = steady(64);
    for kappa in [0.0, 2.0, 5.0] {
        let params = ModelParams::new(EPS2).with_kappa(kappa);
        for which in BuiltinTableau::ALL {
            let kind = SchemeKind::efrk(which);
            for tau in [1e-5, 1e-4, 1e-3, 1e-2, 0.1, 1.0] {
                let d = drift(&kind, &eq.u, params, tau);
                assert!(d <= 1e-11, "{kind} κ={kappa} τ={tau}: {d:e}");
            }
        }
    }
}

#[test]
fn efrk_fixes_a_two_dimensional_equilibrium() {
    let grid = Grid::new(&[16, 16], &[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let eps2: f64 = 0.02;
    let w = (2.0 * eps2).sqrt();
    let guess = grid.sample(|x| ((0.6 - (x[0] * x[0] + x[1] * x[1]).sqrt()) / w).tanh());
    let eq = newton_equilibrium(&guess, eps2);
    assert!(eq.residual <= 1e-13);
    let params = ModelParams::new(eps2);
    for which in BuiltinTableau::ALL {
        for tau in [1e-5, 1e-2, 1.0] {
            let d = drift(&SchemeKind::efrk(which), &eq.u, params, tau);
            assert!(d <= 1e-11, "{which} τ={tau}: {d:e}");
        }
    }
}

#[test]
fn ifrk_and_splitting_move_the_equilibrium() {
    let eq = steady(64);
    let params = ModelParams::new(EPS2);
    let tau = 1e-2;
    let efrk = drift(&SchemeKind::efrk(BuiltinTableau::Rk33), &eq.u, params, tau);
    for kind in [
        SchemeKind::ifrk(BuiltinTableau::Rk11),
        SchemeKind::ifrk(BuiltinTableau::Rk22),
        SchemeKind::ifrk(BuiltinTableau::Rk33),
        SchemeKind::LieTrotter,
        SchemeKind::Strang,
    ] {
        let d = drift(&kind, &eq.u, params, tau);
        assert!(d > 1e-6 && d > 1e3 * efrk, "{kind}: {d:e}");
    }
}

#[test]
fn lie_trotter_moves_each_mode_by_its_damping_factor() {
    // With N_κ(u*) = −L_κu*, one Lie–Trotter step multiplies mode ℓ of u*
    // by e^{τℓ}(1 − τℓ).
    let eq = steady(32);
    let params = ModelParams::new(EPS2);
    let tau = 1e-3;
    let ops = efrk::model::Operators::new(eq.u.grid(), params);
    let expected = efrk::spectral::apply_symbol_map(&ops.l_kappa, |l| (tau * l).exp() * (1.0 - tau * l), &eq.u).unwrap();
    let step = Stepper::new(eq.u.grid(), params, SchemeKind::LieTrotter, tau).unwrap().step(&eq.u).unwrap();
    assert!(step.max_abs_diff(&expected).unwrap() < 1e-11);
    let t = builtin(BuiltinTableau::Rk11);
    assert!((damping_factor(&t, DampingKind::Ifrk, 1, 1.0).unwrap() - 2.0 / std::f64::consts::E).abs() < 1e-15);
}
