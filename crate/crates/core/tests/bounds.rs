//! The threshold/bound formulas exercised against independent scalar
//! searches and against data assembled from actual grid functions.

use platelab::bounds::{self, BoundsInput, FieldOutcome, Regime};
use platelab::embedding::{self, AscentParams, EstimateMode, EmbeddingConstants};
use platelab::functionals;
use platelab::grid::{self, Grid};
use platelab::init;
use platelab::varexp::ExponentField;

/// Golden-section argmax; the well function is unimodal on (0, hi].
fn scan_peak(f: impl Fn(f64) -> f64, hi: f64) -> (f64, f64) {
    let mut best_x = hi;
    let mut best = f64::NEG_INFINITY;
    for i in 1..=4000 {
        let x = hi * i as f64 / 4000.0;
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (mut lo, mut hi) = (best_x * 0.999, (best_x * 1.001).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

#[test]
fn threshold_matches_a_direct_scan_of_the_well() {
    for (b1, pm, pp) in [(1.0, 4.0, 4.0), (1.2, 3.5, 4.5), (2.0, 5.0, 5.0)] {
        let (alpha1, e1) = bounds::alpha1_e1(b1, pm).unwrap();
        let (alpha_hat, peak) = scan_peak(|a| bounds::g_of_alpha(a, b1, pm, pp), 3.0 * alpha1.max(1.0));
        assert!(
            (alpha_hat - alpha1).abs() <= 1e-4 * alpha1,
            "b1 {b1}, p- {pm}: argmax {alpha_hat} vs {alpha1}"
        );
        assert!(
            (peak - e1).abs() <= 1e-9 * e1,
            "b1 {b1}, p- {pm}: peak {peak} vs height {e1}"
        );
    }
}

#[test]
fn well_roots_solve_the_level_equation() {
    let (b1, pm, pp) = (1.3, 4.0, 4.6);
    let (alpha1, e1) = bounds::alpha1_e1(b1, pm).unwrap();
    let e0 = 0.6 * e1;
    let (r1, r2) = bounds::solve_alpha_roots(e0, b1, pm, pp).unwrap();
    assert!(r1 < alpha1 && alpha1 < r2, "roots {r1}, {r2} fail to bracket {alpha1}");
    for r in [r1, r2] {
        let residual = bounds::g_of_alpha(r, b1, pm, pp) - e0;
        assert!(residual.abs() <= 1e-10 * e0, "root {r} leaves residual {residual}");
    }
}

/// The closing-time lemma must reproduce the concavity bound exactly when
/// fed the bound's own auxiliary function.
#[test]
fn concavity_cross_check_is_a_fixed_point() {
    let (e0, c, pm) = (0.1, 4.8, 4.0);
    let (norm_sq, inner, grad_sq) = (1.0, 1.0, 1.0);
    let cb = bounds::concavity_bound(e0, c, pm, norm_sq, inner, grad_sq).unwrap();
    assert!((cb.rho - 0.5).abs() < 1e-14);
    assert!((cb.omega - 1.0).abs() < 1e-14);
    assert!((cb.t_upper - 3.0).abs() < 1e-12);

    let theta = (pm - 2.0) / 4.0;
    let psi0 = norm_sq + cb.t_upper * grad_sq + cb.rho * cb.omega * cb.omega;
    let dpsi0 = 2.0 * inner + 2.0 * cb.rho * cb.omega;
    let t = bounds::concavity_time(psi0, dpsi0, theta).unwrap();
    assert!(
        (t - cb.t_upper).abs() <= 1e-12 * cb.t_upper,
        "closing time {t} vs bound {}",
        cb.t_upper
    );
}

#[test]
fn lower_bound_is_stable_under_tolerance_refinement() {
    let coarse = bounds::ode_lower_bound(0.7, 2.0, 3.0, 4.0, 1e-6).unwrap();
    let mid = bounds::ode_lower_bound(0.7, 2.0, 3.0, 4.0, 1e-8).unwrap();
    let fine = bounds::ode_lower_bound(0.7, 2.0, 3.0, 4.0, 1e-10).unwrap();
    assert!((coarse - fine).abs() <= 2e-6, "{coarse} vs {fine}");
    assert!((mid - fine).abs() <= 2e-8, "{mid} vs {fine}");
    // a stronger source coefficient can only shorten the guaranteed window
    let weaker = bounds::ode_lower_bound(0.7, 4.0, 3.0, 4.0, 1e-10).unwrap();
    assert!(weaker < fine);
}

fn input_from_grid(amplitude: f64) -> BoundsInput {
    let g = Grid::line(1.0, 63).unwrap();
    let m = ExponentField::constant(g.clone(), 2.0).unwrap();
    let p = ExponentField::constant(g.clone(), 5.0).unwrap();
    let params =
        platelab::dynamics::ModelParams::new(1.0, 0.05, 1.0, m.clone(), p.clone()).unwrap();
    let constants =
        embedding::estimate_embedding_constants(&g, &p, EstimateMode::Numeric(AscentParams::default()))
            .unwrap();

    let u0 = init::clamped_mode(&g, amplitude).unwrap();
    let v0 = g.zeros();
    let state = platelab::dynamics::SimState::new(u0.clone(), v0.clone(), 1e-4).unwrap();
    let terms = functionals::energy_terms(&state, &params);
    let lap = grid::laplacian(&u0);

    BoundsInput {
        p_minus: p.lo(),
        p_plus: p.hi(),
        m_minus: m.lo(),
        m_plus: m.hi(),
        m_is_two: true,
        gamma: params.gamma(),
        a: params.a(),
        b: params.b(),
        constants,
        omega_measure: g.omega_measure(),
        dim: g.dim(),
        e0: terms.total(),
        r0: terms.positive_part(),
        norm_u0_sq: grid::l2_norm_sq(&u0),
        grad_u0_sq: grid::grad_norm_sq(&u0),
        norm_lap_u0_sq: grid::l2_norm_sq(&lap),
        inner_u0_u1: grid::l2_inner(&u0, &v0).unwrap(),
        quad_tol: 1e-9,
    }
}

#[test]
fn report_for_small_data_certifies_decay() {
    let input = input_from_grid(0.02);
    let report = bounds::full_report(&input).unwrap();

    assert_eq!(report.regime, Regime::GlobalCandidate, "e0 {} e1 {}", report.e0, report.e1);
    assert!(report.alpha0 < report.alpha1);
    assert!(report.e0 > 0.0 && report.e0 < report.e1);

    let (r1, r2) = *report.roots.value().expect("roots below the well height");
    assert!(r1 < report.alpha1 && report.alpha1 < r2);

    let decay = report.decay.value().expect("global regime must certify decay");
    assert!(decay.k > 0.0 && decay.k.is_finite());
    assert!(decay.delta > 0.0 && decay.delta < 1.0);
    assert!(report.e0 < decay.e2_tilde);

    let lower = report.lower.value().expect("lower bound always evaluates");
    assert!(lower.t_lower > 0.0 && lower.t_lower.is_finite());
    assert!(lower.heuristic, "one-dimensional data must flag the heuristic chain");

    // wrong-regime sections state why they are missing
    assert!(report.gap.reason().unwrap().contains("regime"));
    // zero initial velocity voids the growth condition
    assert!(report.concavity.reason().is_some());
}

#[test]
fn report_for_large_data_bounds_the_blowup_time() {
    let input = input_from_grid(12.0);
    assert!(input.e0 < 0.0, "amplitude 12 should sink the energy, got {}", input.e0);
    let report = bounds::full_report(&input).unwrap();

    assert_eq!(report.regime, Regime::BlowupLowEnergy);
    assert!(report.alpha0 > report.alpha1);

    let gap = report.gap.value().expect("unstable regime must produce the gap bound");
    assert!(gap.m1 > 0.0 && gap.m2 > 0.0);
    assert!(gap.t_upper > 0.0 && gap.t_upper.is_finite());
    let ratio = (gap.m1 / gap.m2) * (gap.m1 / gap.m2);
    assert!(
        (gap.t_upper_alternate - gap.t_upper * ratio).abs() <= 1e-9 * gap.t_upper_alternate.abs(),
        "alternate ordering drifted: {} vs {}",
        gap.t_upper_alternate,
        gap.t_upper * ratio
    );

    // negative energy sits below every level set: no roots section
    assert!(report.roots.reason().is_some());
    assert!(report.decay.reason().unwrap().contains("regime"));
}

/// Synthetic high-energy data: the regime uses the structural constant, the
/// concavity bound applies, and the generic closing-time lemma lands on the
/// same number.
#[test]
fn report_for_high_energy_data_uses_the_concavity_route() {
    let constants = EmbeddingConstants {
        b: 1.0,
        b1: 1.0,
        s: 1.0,
        s_star: 2.0,
        q_star: 4.0,
        provenance: embedding::Provenance::UserSupplied,
        ascent_slack: 0.0,
    };
    let input = BoundsInput {
        p_minus: 4.0,
        p_plus: 4.0,
        m_minus: 2.0,
        m_plus: 2.0,
        m_is_two: true,
        gamma: 0.5,
        a: 1.0,
        b: 0.1,
        constants,
        omega_measure: 1.0,
        dim: 1,
        e0: 0.3,
        r0: 1.0,
        norm_u0_sq: 2.0,
        grad_u0_sq: 0.5,
        norm_lap_u0_sq: 3.0,
        inner_u0_u1: 1.0,
        quad_tol: 1e-9,
    };
    // c = min(2 + p-, 2 p- (p- - 2) a / (1 + (2 p- + 1) s^2)) = 1.6 here,
    // so the growth window is 0 < e0 < 0.4 while the well height is 0.25
    let report = bounds::full_report(&input).unwrap();
    assert!((report.c - 1.6).abs() < 1e-14);
    assert!(report.e0 > report.e1, "data must sit above the well height");
    assert_eq!(report.regime, Regime::BlowupHighEnergy);

    let cb = report.concavity.value().expect("growth and mass conditions hold");
    assert!((cb.rho - 0.1).abs() < 1e-14);
    assert!((cb.omega - 1.0).abs() < 1e-14);
    assert!((cb.t_upper - 3.5).abs() < 1e-12);

    match &report.concavity_time {
        FieldOutcome::Value(t) => {
            assert!((t - cb.t_upper).abs() <= 1e-12 * cb.t_upper, "lemma gave {t}");
        }
        FieldOutcome::Absent(r) => panic!("closing time missing: {r}"),
    }

    assert!(report.gap.reason().unwrap().contains("regime"));
}
