mod support;

use efrk::schemes::{builtin, BuiltinTableau, SchemeKind, Stepper};
use efrk::spectral::{self, Grid};
use efrk::{taylor, ModelParams};
use support::{to_field, to_vector, Dense};

fn line8() -> Grid {
    Grid::new(&[8], &[-1.0], &[1.0]).unwrap()
}

fn data(grid: &Grid) -> efrk::RealField {
    grid.sample(|x| 0.3 * (std::f64::consts::PI * x[0]).sin() - 0.2 * (3.0 * x[0]).cos() + 0.05)
}

fn params(kappa: f64) -> ModelParams {
    ModelParams::new(0.01).with_kappa(kappa).with_truncation(false)
}

fn linf(a: &nalgebra::DVector<f64>, b: &efrk::RealField) -> f64 {
    (a - to_vector(b)).amax()
}

#[test]
fn dense_laplacian_matches_symbol() {
    let grid = Grid::new(&[8, 4], &[-1.0, 0.0], &[1.0, 3.0]).unwrap();
    let dense = support::dense_laplacian(&grid);
    let u = grid.sample(|x| (x[0] * 2.0).sin() * (x[1] + 0.3).cos() + x[0] * x[1]);
    let fast = spectral::apply_symbol(&spectral::laplacian_symbol(&grid), &u).unwrap();
    assert!(linf(&(&dense * to_vector(&u)), &fast) < 1e-11);
}

#[test]
fn phi_maps_match_dense_polynomials() {
    let grid = line8();
    let p = params(2.0);
    let dense = Dense::new(&grid, p.epsilon2, p.kappa);
    let ops = efrk::model::Operators::new(&grid, p);
    let u = data(&grid);
    for (k, c, tau) in [(2, 1.0, 0.1), (3, 2.0 / 3.0, 0.01), (1, 0.5, 1.0)] {
        let fast = taylor::apply_phi(k, c, tau, &ops.l_kappa, &u).unwrap();
        let want = dense.phi(k, c, tau) * to_vector(&u);
        let scale = want.amax().max(1.0);
        assert!(linf(&want, &fast) <= 1e-10 * scale, "k={k}");
    }
}

#[test]
fn efrk_step_matches_dense_oracle() {
    let grid = line8();
    let u = data(&grid);
    for kappa in [0.0, 2.0] {
        let p = params(kappa);
        let dense = Dense::new(&grid, p.epsilon2, p.kappa);
        for which in BuiltinTableau::ALL {
            let t = builtin(which);
            // Larger steps make ‖φ_s(−τL)‖ large enough that the dense
            // solve itself loses the 1e−10 accuracy.
            for tau in [1e-3, 1e-2, 0.1] {
                let fast = Stepper::new(&grid, p, SchemeKind::Efrk(t.clone()), tau)
                    .unwrap()
                    .step(&u)
                    .unwrap();
                let want = dense.efrk_step(&t, tau, &to_vector(&u));
                let err = linf(&want, &fast);
                assert!(err <= 1e-10, "{which} κ={kappa} τ={tau}: {err:e}");
            }
        }
    }
}

#[test]
fn ifrk_and_splitting_match_dense_oracle() {
    let grid = line8();
    let u = data(&grid);
    let p = params(2.0);
    let dense = Dense::new(&grid, p.epsilon2, p.kappa);
    let tau = 1e-3;
    let v = to_vector(&u);
    for which in BuiltinTableau::ALL {
        let t = builtin(which);
        let fast = Stepper::new(&grid, p, SchemeKind::Ifrk(t.clone()), tau).unwrap().step(&u).unwrap();
        assert!(linf(&dense.ifrk_step(&t, tau, &v), &fast) <= 1e-10, "{which}");
    }
    let lt = Stepper::new(&grid, p, SchemeKind::LieTrotter, tau).unwrap().step(&u).unwrap();
    assert!(linf(&dense.lie_trotter_step(tau, &v), &lt) <= 1e-10);
    let st = Stepper::new(&grid, p, SchemeKind::Strang, tau).unwrap().step(&u).unwrap();
    assert!(linf(&dense.strang_step(tau, &v), &st) <= 1e-10);
}

#[test]
fn efrk_step_matches_dense_oracle_in_2d() {
    let grid = Grid::new(&[8, 8], &[0.0, 0.0], &[2.0, 2.0]).unwrap();
    let u = grid.sample(|x| 0.4 * (std::f64::consts::PI * x[0]).cos() * (std::f64::consts::PI * x[1]).sin() + 0.1);
    let p = params(2.0);
    let dense = Dense::new(&grid, p.epsilon2, p.kappa);
    let t = builtin(BuiltinTableau::Rk33);
    let fast = Stepper::new(&grid, p, SchemeKind::Efrk(t.clone()), 0.05).unwrap().step(&u).unwrap();
    let want = dense.efrk_step(&t, 0.05, &to_vector(&u));
    assert!(linf(&want, &fast) <= 1e-10);
    let _ = to_field(&grid, &want);
}
