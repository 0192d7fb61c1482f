//! Integrator accuracy against a manufactured solution, structural
//! properties of undriven motion, and whole-run behaviour.

use platelab::dynamics::{self, ModelParams, Outcome, RunSpec, SimState};
use platelab::functionals::{self, Monitors, UpsilonParams};
use platelab::grid::{self, Grid, GridFunction};
use platelab::solver;
use platelab::varexp::ExponentField;
use std::f64::consts::PI;

fn sup_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Forced problem with the exact semi-discrete solution u(t) = e^{-t} s,
/// s = sin(pi x). The forcing is built from the *discrete* operators, so the
/// only error left is the time discretization; the scheme should show
/// second order.
#[test]
fn manufactured_solution_converges_at_second_order() {
    let g = Grid::line(1.0, 49).unwrap();
    let m = ExponentField::constant(g.clone(), 3.0).unwrap();
    let p = ExponentField::constant(g.clone(), 4.0).unwrap();
    let params = ModelParams::new(1.0, 0.0, 1.0, m, p).unwrap();

    let s = g.sample(|c| (PI * c[0]).sin());
    let lls = grid::laplacian(&grid::laplacian(&s));
    // with a = 1 the membrane term cancels against the strong damping in the
    // forcing; what is left is e (s + L^2 s) - e^2 |s| s - e^3 s^3
    let forcing = |t: f64| -> GridFunction {
        let e = (-t).exp();
        let vals: Vec<f64> = s
            .values()
            .iter()
            .zip(lls.values())
            .map(|(&si, &bi)| e * (si + bi) - e * e * si.abs() * si - e * e * e * si * si * si)
            .collect();
        GridFunction::from_values(s.grid().clone(), vals).unwrap()
    };

    let t_end = 0.5;
    let mut errs = Vec::new();
    for steps in [50usize, 100, 200] {
        let dt = t_end / steps as f64;
        let mut state = SimState::new(s.clone(), s.scale(-1.0), dt).unwrap();
        for _ in 0..steps {
            state = dynamics::step_with_forcing(&state, &params, dt, Some(&forcing)).unwrap();
        }
        let exact = s.scale((-t_end).exp());
        errs.push(sup_diff(&state.u, &exact));
    }
    let o1 = solver::observed_order(errs[0], errs[1]);
    let o2 = solver::observed_order(errs[1], errs[2]);
    assert!(
        o1 > 1.9 && o2 > 1.9,
        "orders {o1}, {o2} from errors {errs:?}"
    );
}

/// With every dissipative and source term switched off the scheme is
/// symmetric: negating the velocity and integrating forward again returns
/// to the initial state, and the energy never drifts.
#[test]
fn undriven_undamped_motion_is_time_reversible() {
    let g = Grid::line(1.0, 49).unwrap();
    let m = ExponentField::constant(g.clone(), 2.0).unwrap();
    let p = ExponentField::constant(g.clone(), 4.0).unwrap();
    let mut params = ModelParams::new(1.0, 0.0, 1.0, m, p).unwrap();
    params.toggles.source = false;
    params.toggles.damping = false;
    params.toggles.strong_damping = false;

    let u0 = g.sample(|c| 0.5 * (PI * c[0]).sin());
    let v0 = g.zeros();
    let dt = 1e-3;
    let steps = 800;

    let mut state = SimState::new(u0.clone(), v0.clone(), dt).unwrap();
    let e0 = functionals::energy(&state, &params);
    for _ in 0..steps {
        state = dynamics::step(&state, &params, dt).unwrap();
    }
    let e_mid = functionals::energy(&state, &params);
    assert!(
        (e_mid - e0).abs() <= 1e-7 * e0.abs(),
        "energy drifted from {e0} to {e_mid}"
    );

    let mut back = SimState::new(state.u.clone(), state.v.scale(-1.0), dt).unwrap();
    for _ in 0..steps {
        back = dynamics::step(&back, &params, dt).unwrap();
    }
    assert!(sup_diff(&back.u, &u0) <= 1e-6, "u failed to return: {}", sup_diff(&back.u, &u0));
    assert!(back.v.linf() <= 1e-5, "v failed to vanish: {}", back.v.linf());
}

/// The per-step defect of the discrete energy identity shrinks at second
/// order, with every term of the model switched on.
#[test]
fn dissipation_identity_sharpens_at_second_order() {
    let g = Grid::line(1.0, 39).unwrap();
    let m = ExponentField::sample(g.clone(), |c| 2.2 + 0.4 * c[0]).unwrap();
    let p = ExponentField::sample(g.clone(), |c| 3.0 + 0.5 * c[0]).unwrap();
    let params = ModelParams::new(1.0, 0.05, 1.5, m, p).unwrap();
    let u0 = g.sample(|c| 0.8 * (PI * c[0]).sin());
    let v0 = g.sample(|c| 0.3 * (2.0 * PI * c[0]).sin());

    let metric = |dt: f64| -> f64 {
        let mut spec =
            RunSpec::new(params.clone(), u0.clone(), v0.clone(), 0.4).unwrap();
        spec.dt0 = dt;
        spec.dt_floor = dt;
        spec.dt_ceiling = dt;
        spec.sample_stride = 1;
        spec.thresholds = Vec::new();
        let out = dynamics::run(&spec).unwrap();
        assert!(matches!(out.outcome, Outcome::CompletedHorizon));
        out.trace[1..]
            .iter()
            .map(|s| s.diss_residual.abs())
            .fold(0.0, f64::max)
    };

    let r1 = metric(2e-3);
    let r2 = metric(1e-3);
    let r3 = metric(5e-4);
    let o1 = solver::observed_order(r1, r2);
    let o2 = solver::observed_order(r2, r3);
    assert!(
        o1 > 1.9 && o2 > 1.9,
        "orders {o1}, {o2} from residuals {r1}, {r2}, {r3}"
    );
}

/// Forcing passed through the run loop must act exactly like forcing passed
/// to the raw stepper.
#[test]
fn run_loop_reproduces_direct_stepping() {
    let g = Grid::line(1.0, 29).unwrap();
    let m = ExponentField::constant(g.clone(), 2.0).unwrap();
    let p = ExponentField::constant(g.clone(), 3.0).unwrap();
    let params = ModelParams::new(1.0, 0.1, 1.0, m, p).unwrap();
    let u0 = g.sample(|c| 0.4 * (PI * c[0]).sin());
    let v0 = g.zeros();
    let forcing = |t: f64| -> GridFunction {
        let g = Grid::line(1.0, 29).unwrap();
        g.sample(|c| 0.05 * (PI * c[0]).sin() * (3.0 * t).cos())
    };

    let dt = 1e-4f64;
    let horizon = 0.02;
    let steps = (horizon / dt).round() as usize;
    let mut direct = SimState::new(u0.clone(), v0.clone(), dt).unwrap();
    for _ in 0..steps {
        direct = dynamics::step_with_forcing(&direct, &params, dt, Some(&forcing)).unwrap();
    }

    let mut spec = RunSpec::new(params, u0, v0, horizon).unwrap();
    spec.dt0 = dt;
    spec.dt_floor = dt;
    spec.dt_ceiling = dt;
    spec.forcing = Some(Box::new(forcing));
    let out = dynamics::run(&spec).unwrap();

    assert!(matches!(out.outcome, Outcome::CompletedHorizon));
    assert_eq!(out.steps_accepted, steps);
    assert!(sup_diff(&out.final_state.u, &direct.u) <= 1e-13);
    assert!(sup_diff(&out.final_state.v, &direct.v) <= 1e-13);
}

/// A damped run to the horizon: monotone sample times, a final sample at the
/// horizon, non-increasing energy, and the positive part dominating it.
#[test]
fn horizon_run_keeps_its_trace_invariants() {
    let g = Grid::line(1.0, 39).unwrap();
    let m = ExponentField::constant(g.clone(), 2.5).unwrap();
    let p = ExponentField::constant(g.clone(), 4.0).unwrap();
    let params = ModelParams::new(1.0, 0.05, 1.0, m, p).unwrap();
    let u0 = g.sample(|c| 0.5 * (PI * c[0]).sin());
    let v0 = g.sample(|c| 0.2 * (PI * c[0]).sin());

    let mut spec = RunSpec::new(params, u0, v0, 0.2).unwrap();
    spec.sample_stride = 1;
    spec.monitors = Monitors {
        e2: Some(5.0),
        upsilon: Some(UpsilonParams { t_star: 1.0, rho: 0.5, omega: 1.0 }),
        ..Monitors::default()
    };
    let out = dynamics::run(&spec).unwrap();
    assert!(matches!(out.outcome, Outcome::CompletedHorizon));
    assert!((out.final_state.t - 0.2).abs() < 1e-12);

    let tr = &out.trace;
    assert!(tr.len() >= 3);
    assert!((tr.last().unwrap().t - 0.2).abs() < 1e-12);
    for w in tr.windows(2) {
        assert!(w[1].t > w[0].t, "sample times not increasing");
        // damped motion: the energy may only fall, up to the scheme defect
        assert!(w[1].e <= w[0].e + 1e-8, "energy rose: {} -> {}", w[0].e, w[1].e);
    }
    for s in tr {
        assert!(s.r >= s.e - 1e-12, "positive part {} below energy {}", s.r, s.e);
        let h = s.h.expect("gap monitor configured");
        assert!((h - (5.0 - s.e)).abs() < 1e-12);
        assert!(s.upsilon.is_some());
    }

    // time-integral monitor: starts at the closed-form value and grows
    let first = tr[0].upsilon.unwrap();
    let q0 = tr[0].norm_u_2.powi(2) + tr[0].norm_grad_u_2.powi(2);
    let expect0 = tr[0].norm_u_2.powi(2) + 1.0 * q0 + 0.5 * 1.0;
    assert!((first - expect0).abs() <= 1e-12 * expect0.abs().max(1.0));
}

/// Data far into the unstable regime must be declared a numerical blow-up,
/// with ordered threshold passages and a fitted passage time inside the
/// horizon.
#[test]
fn unstable_data_reaches_the_blowup_declaration() {
    let g = Grid::line(1.0, 31).unwrap();
    let m = ExponentField::constant(g.clone(), 2.0).unwrap();
    let p = ExponentField::constant(g.clone(), 5.0).unwrap();
    let params = ModelParams::new(1.0, 0.0, 1.0, m, p).unwrap();
    // amplitude 9 puts the source potential far above the elastic terms
    let u0 = g.sample(|c| 9.0 * (PI * c[0]).sin());
    let v0 = g.zeros();

    let state = SimState::new(u0.clone(), v0.clone(), 1e-4).unwrap();
    assert!(functionals::energy(&state, &params) < 0.0, "test wants negative energy data");

    let mut spec = RunSpec::new(params, u0, v0, 5.0).unwrap();
    spec.dt0 = 1e-5;
    spec.sample_stride = 50;
    let out = dynamics::run(&spec).unwrap();

    assert!(
        matches!(out.outcome, Outcome::NumericalBlowup),
        "outcome {:?}, failure {:?}",
        out.outcome,
        out.failure
    );
    let t_num = out.t_num.expect("blow-up must report a time");
    assert!(t_num > 0.0 && t_num < 5.0, "t_num {t_num}");

    assert!(out.passages.len() >= 3, "passages {:?}", out.passages);
    for w in out.passages.windows(2) {
        assert!(w[1].0 > w[0].0 && w[1].1 >= w[0].1, "passages out of order: {:?}", out.passages);
    }
    // the fitted passage time may not precede the last recorded passage
    let last_passage = out.passages.last().unwrap().1;
    assert!(t_num >= last_passage - 1e-12, "t_num {t_num} before passage {last_passage}");
    if let Some(k) = out.blowup_kappa {
        assert!(k > 0.0 && k.is_finite());
    }
}
