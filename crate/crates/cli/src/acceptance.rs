//! Executable acceptance suite: ten checks that exercise the library end to
//! end, each with an explicit tolerance and an independent way of knowing the
//! right answer.  `platelab accept` runs them from the CLI; the `acceptance`
//! integration test runs the same functions under `cargo test`.
//!
//! The suite is deterministic: every randomized check draws from a seeded
//! ChaCha stream, and every simulation pins its step-size policy.

use std::fmt::Display;
use std::time::Instant;

use platelab::bounds::{self, Regime};
use platelab::dynamics::{self, Outcome, RunSpec};
use platelab::embedding;
use platelab::grid::{Grid, GridFunction};
use platelab::solver;
use platelab::varexp::{self, ExponentField, DEFAULT_NORM_TOL};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scenarios;

pub struct CriterionResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:<28} {} [{:>6.1}s] {}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.seconds,
            self.detail
        )
    }
}

type Check = fn() -> Result<String, String>;

/// Registry of all acceptance checks, in presentation order.
pub const CRITERIA: &[(&str, Check)] = &[
    ("luxemburg_norm", luxemburg_norm),
    ("modular_sandwich", modular_sandwich),
    ("dissipation_order", dissipation_order),
    ("invariant_sets", invariant_sets),
    ("blowup_time_ordering", blowup_time_ordering),
    ("high_energy_growth", high_energy_growth),
    ("lower_bound_oracle", lower_bound_oracle),
    ("decay_certificate", decay_certificate),
    ("constant_formulas", constant_formulas),
    ("discretization_convergence", discretization_convergence),
];

pub fn run_named(name: &'static str, check: Check) -> CriterionResult {
    let start = Instant::now();
    let outcome = check();
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => CriterionResult { name, passed: true, detail, seconds },
        Err(detail) => CriterionResult { name, passed: false, detail, seconds },
    }
}

/// Run every criterion whose name contains `filter` (all of them when absent).
pub fn run_all(filter: Option<&str>) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .filter(|(name, _)| filter.is_none_or(|f| name.contains(f)))
        .map(|&(name, check)| run_named(name, check))
        .collect()
}

fn ctx<E: Display>(what: &'static str) -> impl Fn(E) -> String {
    move |e| format!("{what}: {e}")
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_field(grid: &Grid, rng: &mut ChaCha8Rng, scale: f64) -> GridFunction {
    let values = (0..grid.len()).map(|_| rng.gen_range(-3.0..3.0) * scale).collect();
    GridFunction::from_values(*grid, values).expect("length matches by construction")
}

fn random_exponent(grid: &Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Result<ExponentField, String> {
    let a = rng.gen_range(lo..hi);
    let b = rng.gen_range(lo..hi);
    let spec = match rng.gen_range(0..3u32) {
        0 => format!("constant:{a}"),
        1 => {
            let split = rng.gen_range(0.2..0.8) * grid.extent_axis(0);
            format!("piecewise:{a},{b}@{split}")
        }
        _ => {
            let c1 = (b - a) / grid.extent_axis(0);
            format!("affine:{a}+{c1}*x")
        }
    };
    ExponentField::from_spec(*grid, &spec).map_err(|e| format!("exponent spec {spec}: {e}"))
}

// -------------------------------------------------------------------------
// 1. Luxemburg norm: constant-exponent reduction, a long piecewise grid with
//    a closed-form root, and positive homogeneity.
// -------------------------------------------------------------------------

fn luxemburg_norm() -> Result<String, String> {
    let grid = Grid::line(1.7, 63).map_err(ctx("grid"))?;
    let mut rng = seeded(101);

    // Constant exponent: the norm must collapse to modular^(1/q) even though
    // the solver never special-cases that path.
    let mut worst_const: f64 = 0.0;
    for trial in 0..1000 {
        let q = rng.gen_range(1.2..6.0);
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let f = random_field(&grid, &mut rng, scale);
        let p = ExponentField::constant(grid, q).map_err(ctx("constant exponent"))?;
        let m = varexp::modular(&f, &p).map_err(ctx("modular"))?;
        let norm = varexp::luxemburg_norm(&f, &p, DEFAULT_NORM_TOL).map_err(ctx("norm"))?;
        let expected = m.powf(1.0 / q);
        let rel = (norm - expected).abs() / expected.max(f64::MIN_POSITIVE);
        worst_const = worst_const.max(rel);
        if rel > 1e-10 {
            return Err(format!(
                "constant-exponent reduction failed on trial {trial}: q = {q}, \
                 norm = {norm}, modular^(1/q) = {expected}, rel err = {rel:.3e}"
            ));
        }
    }

    // Unit function on [0, 2] with exponent 2 on the left half and 3 on the
    // right: the norm solves 1/x^2 + 1/x^3 = 1, whose root is known to many
    // digits.  The grid is sized so each half carries measure 1 up to one
    // cell, keeping the discretization error inside the tolerance.
    let long = Grid::line(2.0, 1_599_999).map_err(ctx("long grid"))?;
    let p2 = ExponentField::from_spec(long, "piecewise:2,3@1").map_err(ctx("piecewise spec"))?;
    let ones = GridFunction::from_values(long, vec![1.0; long.len()]).map_err(ctx("unit field"))?;
    let lux = varexp::luxemburg_norm(&ones, &p2, DEFAULT_NORM_TOL).map_err(ctx("norm"))?;
    let root = 1.324_717_957_244_746;
    let err = (lux - root).abs();
    if err > 1e-6 {
        return Err(format!(
            "piecewise closed form missed: norm = {lux}, expected {root}, err = {err:.3e}"
        ));
    }

    // Positive homogeneity across exponent shapes and five decades of scale.
    let mut worst_hom: f64 = 0.0;
    for trial in 0..200 {
        let p = random_exponent(&grid, &mut rng, 1.3, 4.5)?;
        let f = random_field(&grid, &mut rng, 1.0);
        let c = 10f64.powf(rng.gen_range(-2.0..2.0));
        let base = varexp::luxemburg_norm(&f, &p, DEFAULT_NORM_TOL).map_err(ctx("norm"))?;
        let scaled = f.scale(c);
        let norm_scaled = varexp::luxemburg_norm(&scaled, &p, DEFAULT_NORM_TOL).map_err(ctx("norm"))?;
        let rel = (norm_scaled - c * base).abs() / (c * base).max(f64::MIN_POSITIVE);
        worst_hom = worst_hom.max(rel);
        if rel > 1e-10 {
            return Err(format!(
                "homogeneity failed on trial {trial}: c = {c}, |N(cf) - cN(f)|/cN(f) = {rel:.3e}"
            ));
        }
    }

    Ok(format!(
        "1000 constant-exponent reductions (worst rel {worst_const:.2e}), \
         piecewise root err {err:.2e}, 200 homogeneity checks (worst rel {worst_hom:.2e})"
    ))
}

// -------------------------------------------------------------------------
// 2. Modular/norm sandwich on random fields across six decades of scale.
// -------------------------------------------------------------------------

fn modular_sandwich() -> Result<String, String> {
    let grid = Grid::line(1.3, 63).map_err(ctx("grid"))?;
    let mut rng = seeded(202);
    let mut violations = 0usize;
    let mut first = String::new();
    for trial in 0..1000 {
        let p = random_exponent(&grid, &mut rng, 1.1, 5.0)?;
        let scale = 10f64.powf(rng.gen_range(-6.0..6.0));
        let f = random_field(&grid, &mut rng, scale);
        let check = varexp::check_sandwich(&f, &p).map_err(ctx("sandwich"))?;
        if !check.passed {
            violations += 1;
            if first.is_empty() {
                first = format!(
                    "trial {trial}: norm {} modular {} bounds [{}, {}]",
                    check.norm, check.modular, check.lower, check.upper
                );
            }
        }
    }
    if violations > 0 {
        return Err(format!("{violations}/1000 sandwich violations; first: {first}"));
    }
    Ok("1000 random field/exponent pairs, 0 sandwich violations".into())
}

// -------------------------------------------------------------------------
// 3. Discrete energy dissipation: the per-step residual shrinks at second
//    order in dt and the energy never rises by more than the residual.
// -------------------------------------------------------------------------

fn pinned_run(
    params: &platelab::dynamics::ModelParams,
    u0: &GridFunction,
    v0: &GridFunction,
    horizon: f64,
    dt: f64,
) -> Result<dynamics::RunResult, String> {
    let mut spec = RunSpec::new(params.clone(), u0.clone(), v0.clone(), horizon).map_err(ctx("run spec"))?;
    spec.dt0 = dt;
    spec.dt_floor = dt;
    spec.dt_ceiling = dt;
    spec.sample_stride = 1;
    spec.thresholds = Vec::new();
    dynamics::run(&spec).map_err(ctx("run"))
}

fn dissipation_order() -> Result<String, String> {
    let grid = Grid::line(1.0, 200).map_err(ctx("grid"))?;
    let m = ExponentField::from_spec(grid, "affine:2.2+0.4*x").map_err(ctx("m spec"))?;
    let p = ExponentField::from_spec(grid, "affine:3+0.5*x").map_err(ctx("p spec"))?;
    let params = dynamics::ModelParams::new(1.0, 0.05, 1.5, m, p).map_err(ctx("params"))?;
    let u0 = platelab::init::clamped_mode(&grid, 0.05).map_err(ctx("initial data"))?;
    let v0 = grid.zeros();

    let mut maxima = Vec::new();
    let mut worst_rise: f64 = f64::NEG_INFINITY;
    for level in 0..3 {
        let dt = 2e-3 / f64::powi(2.0, level);
        let result = pinned_run(&params, &u0, &v0, 5.0, dt)?;
        if result.outcome != Outcome::CompletedHorizon {
            return Err(format!("run at dt = {dt} ended early: {:?}", result.failure));
        }
        let mut max_r: f64 = 0.0;
        for pair in result.trace.windows(2) {
            let r = pair[1].diss_residual;
            max_r = max_r.max(r.abs());
            let rise = (pair[1].e - pair[0].e) - r.abs();
            worst_rise = worst_rise.max(rise);
        }
        maxima.push(max_r);
    }
    let order01 = solver::observed_order(maxima[0], maxima[1]);
    let order12 = solver::observed_order(maxima[1], maxima[2]);
    if order01 < 1.9 || order12 < 1.9 {
        return Err(format!(
            "residual orders {order01:.3}, {order12:.3} below 1.9 \
             (max residuals {:.3e}, {:.3e}, {:.3e})",
            maxima[0], maxima[1], maxima[2]
        ));
    }
    // The identity E(next) - E(prev) = residual - dt * dissipated power makes
    // any rise beyond |residual| a sign error; allow bare rounding.
    if worst_rise > 1e-15 {
        return Err(format!("energy rose {worst_rise:.3e} beyond the step residual"));
    }
    Ok(format!(
        "residual orders {order01:.2}/{order12:.2} (maxima {:.2e}/{:.2e}/{:.2e}), \
         no rise beyond residual",
        maxima[0], maxima[1], maxima[2]
    ))
}

// -------------------------------------------------------------------------
// 4. Invariant sets: below the well height the bending level stays under the
//    small root forever; on the unstable branch it stays above the large root
//    until numerical blow-up.
// -------------------------------------------------------------------------

fn scenario_run(
    sc: &scenarios::Scenario,
    horizon: f64,
    dt0: f64,
    ceiling: f64,
    stride: usize,
) -> Result<dynamics::RunResult, String> {
    let mut spec = RunSpec::new(sc.params.clone(), sc.u0.clone(), sc.v0.clone(), horizon)
        .map_err(ctx("run spec"))?;
    spec.dt0 = dt0;
    spec.dt_floor = 1e-10;
    spec.dt_ceiling = ceiling;
    spec.sample_stride = stride;
    dynamics::run(&spec).map_err(ctx("run"))
}

fn invariant_sets() -> Result<String, String> {
    // Stable branch: energy at half the well height, bending level below the
    // first threshold.
    let sc = scenarios::global_scenario(99).map_err(ctx("global scenario"))?;
    let input = scenarios::bounds_input(&sc, 1e-9).map_err(ctx("bounds input"))?;
    let report = bounds::full_report(&input).map_err(ctx("bounds report"))?;
    if report.regime != Regime::GlobalCandidate {
        return Err(format!("expected global regime, classifier said {}", report.regime));
    }
    let &(alpha2_tilde, _) = report
        .roots
        .value()
        .ok_or_else(|| format!("level roots absent: {:?}", report.roots.reason()))?;
    let b1sq = sc.constants.b1 * sc.constants.b1;
    let run = scenario_run(&sc, 5.0, 1e-3, 1e-3, 5)?;
    if run.outcome != Outcome::CompletedHorizon {
        return Err(format!("stable run ended early: {:?}", run.failure));
    }
    let mut max_alpha: f64 = 0.0;
    for s in &run.trace {
        max_alpha = max_alpha.max(b1sq * s.norm_lap_u_2 * s.norm_lap_u_2);
    }
    if max_alpha > alpha2_tilde * 1.001 {
        return Err(format!(
            "stable orbit escaped: max bending level {max_alpha:.6} vs root {alpha2_tilde:.6}"
        ));
    }

    // Unstable branch: same energy, bending level beyond the far root.
    let su = scenarios::unstable_scenario(99).map_err(ctx("unstable scenario"))?;
    let input_u = scenarios::bounds_input(&su, 1e-9).map_err(ctx("bounds input"))?;
    let report_u = bounds::full_report(&input_u).map_err(ctx("bounds report"))?;
    if report_u.regime != Regime::BlowupLowEnergy {
        return Err(format!("expected low-energy blow-up regime, got {}", report_u.regime));
    }
    let &(_, alpha2) = report_u
        .roots
        .value()
        .ok_or_else(|| format!("level roots absent: {:?}", report_u.roots.reason()))?;
    let b1sq_u = su.constants.b1 * su.constants.b1;
    let run_u = scenario_run(&su, 5.0, 1e-6, 1e-3, 5)?;
    if run_u.outcome != Outcome::NumericalBlowup {
        return Err(format!(
            "unstable run should blow up, got {:?} ({:?})",
            run_u.outcome, run_u.failure
        ));
    }
    let mut min_alpha = f64::INFINITY;
    for s in &run_u.trace {
        min_alpha = min_alpha.min(b1sq_u * s.norm_lap_u_2 * s.norm_lap_u_2);
    }
    if min_alpha < alpha2 * 0.999 {
        return Err(format!(
            "unstable orbit dipped inside: min bending level {min_alpha:.6} vs root {alpha2:.6}"
        ));
    }
    Ok(format!(
        "stable max level {:.4} <= {:.4}; unstable min level {:.4} >= {:.4}, blow-up at t = {:.4}",
        max_alpha,
        alpha2_tilde * 1.001,
        min_alpha,
        alpha2 * 0.999,
        run_u.t_num.unwrap_or(f64::NAN)
    ))
}

// -------------------------------------------------------------------------
// 5. Blow-up time bracketing: certified lower bound <= measured time <=
//    certified upper bound, with the measured time stable under refinement.
// -------------------------------------------------------------------------

fn blowup_time_ordering() -> Result<String, String> {
    let coarse = scenarios::unstable_scenario(100).map_err(ctx("coarse scenario"))?;
    let fine = scenarios::unstable_scenario(200).map_err(ctx("fine scenario"))?;

    let run_c = scenario_run(&coarse, 5.0, 1e-6, 1e-3, 10)?;
    let run_f = scenario_run(&fine, 5.0, 1e-6, 1e-3, 10)?;
    let t_c = run_c.t_num.ok_or("coarse run produced no blow-up time")?;
    let t_f = run_f.t_num.ok_or("fine run produced no blow-up time")?;
    let drift = (t_c - t_f).abs() / t_f;
    if drift > 0.02 {
        return Err(format!(
            "blow-up time unstable under refinement: {t_c:.5} vs {t_f:.5} ({:.2}%)",
            drift * 100.0
        ));
    }

    let input = scenarios::bounds_input(&fine, 1e-9).map_err(ctx("bounds input"))?;
    let report = bounds::full_report(&input).map_err(ctx("bounds report"))?;
    let gap = report
        .gap
        .value()
        .ok_or_else(|| format!("gap bound absent: {:?}", report.gap.reason()))?;
    let lower = report
        .lower
        .value()
        .ok_or_else(|| format!("lower bound absent: {:?}", report.lower.reason()))?;
    if !(lower.t_lower <= t_f) {
        return Err(format!("ordering broken: T_lower {} > T_num {t_f}", lower.t_lower));
    }
    if !(t_f <= gap.t_upper) {
        return Err(format!("ordering broken: T_num {t_f} > T_upper {}", gap.t_upper));
    }
    Ok(format!(
        "{:.4e} <= {t_f:.5} <= {:.4}; refinement drift {:.3}%",
        lower.t_lower,
        gap.t_upper,
        drift * 100.0
    ))
}

// -------------------------------------------------------------------------
// 6. High-energy growth: the cross-term functional grows at least
//    exponentially at the certified rate, and blow-up lands before the
//    concavity deadline.
// -------------------------------------------------------------------------

fn high_energy_growth() -> Result<String, String> {
    let sc = scenarios::high_energy_scenario(99, 0.35).map_err(ctx("scenario"))?;
    let input = scenarios::bounds_input(&sc, 1e-9).map_err(ctx("bounds input"))?;
    let report = bounds::full_report(&input).map_err(ctx("bounds report"))?;
    if report.regime != Regime::BlowupHighEnergy {
        return Err(format!("expected high-energy regime, got {}", report.regime));
    }
    let conc = report
        .concavity
        .value()
        .ok_or_else(|| format!("concavity bound absent: {:?}", report.concavity.reason()))?;
    let c = report.c;
    let p_minus = input.p_minus;

    let mut spec = RunSpec::new(sc.params.clone(), sc.u0.clone(), sc.v0.clone(), 1.0)
        .map_err(ctx("run spec"))?;
    spec.dt0 = 1e-6;
    spec.dt_floor = 1e-10;
    spec.dt_ceiling = 1e-4;
    spec.sample_stride = 10;
    spec.monitors.psi = Some((c, p_minus));
    let run = dynamics::run(&spec).map_err(ctx("run"))?;
    if run.outcome != Outcome::NumericalBlowup {
        return Err(format!("expected blow-up, got {:?} ({:?})", run.outcome, run.failure));
    }
    let t_num = run.t_num.ok_or("blow-up without an extrapolated time")?;
    if !(t_num <= conc.t_upper) {
        return Err(format!("T_num {t_num:.4} exceeds concavity deadline {:.4}", conc.t_upper));
    }

    let psi0 = run.trace[0].psi.ok_or("growth functional missing from first sample")?;
    if !(psi0 > 0.0) {
        return Err(format!("growth functional must start positive, got {psi0}"));
    }
    let mut min_ratio = f64::INFINITY;
    let mut checked = 0usize;
    for s in &run.trace {
        let Some(psi) = s.psi else { continue };
        let envelope = psi0 * (c * s.t).exp();
        if envelope.is_finite() {
            min_ratio = min_ratio.min(psi / envelope);
            checked += 1;
        }
    }
    if min_ratio < 0.95 {
        return Err(format!(
            "growth envelope violated: min psi / (psi0 e^(c t)) = {min_ratio:.4} over {checked} samples"
        ));
    }
    Ok(format!(
        "min envelope ratio {min_ratio:.3} over {checked} samples, \
         T_num {t_num:.4} <= deadline {:.4}",
        conc.t_upper
    ))
}

// -------------------------------------------------------------------------
// 7. ODE lower bound vs an independent oracle: fixed-step RK4 in log space
//    against the library's adaptive quadrature.
// -------------------------------------------------------------------------

/// Time for the comparison ODE to sweep [r0, y_cut], integrated as
/// t = int_0^S y(s) / (k1 y(s)^q + k2) ds with y = r0 e^s, by classical RK4
/// with Richardson acceptance.  Entirely separate route from the library's
/// adaptive Simpson rule in the y variable.
fn rk4_escape_time(r0: f64, k1: f64, k2: f64, q: f64) -> Result<f64, String> {
    let y_cut = 1e9f64;
    let s_end = (y_cut / r0).ln();
    let g = |s: f64| {
        let y = r0 * s.exp();
        y / (k1 * y.powf(q) + k2)
    };
    let integrate = |n: usize| {
        let h = s_end / n as f64;
        let mut acc = 0.0;
        let mut s = 0.0;
        for _ in 0..n {
            let k_a = g(s);
            let k_b = g(s + 0.5 * h);
            let k_c = g(s + h);
            acc += h * (k_a + 4.0 * k_b + k_c) / 6.0;
            s += h;
        }
        acc
    };
    let mut n = 4096usize;
    let mut prev = integrate(n);
    loop {
        n *= 2;
        let next = integrate(n);
        if (next - prev).abs() <= 1e-9 {
            // Everything beyond y_cut contributes less than the pure power
            // tail, which is itself far below the comparison tolerance.
            let tail = y_cut.powf(1.0 - q) / (k1 * (q - 1.0));
            return Ok(next + tail);
        }
        if n >= 1 << 17 {
            return Err(format!("oracle failed to settle: |delta| = {:.3e}", (next - prev).abs()));
        }
        prev = next;
    }
}

fn lower_bound_oracle() -> Result<String, String> {
    let mut rng = seeded(55);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let k1 = rng.gen_range(0.5..5.0);
        let k2 = rng.gen_range(0.1..3.0);
        let p_plus = rng.gen_range(3.0..5.0);
        let r0 = rng.gen_range(0.3..2.0);
        let lib = bounds::ode_lower_bound(r0, k1, k2, p_plus, 1e-9).map_err(ctx("lower bound"))?;
        let oracle = rk4_escape_time(r0, k1, k2, p_plus - 1.0)?;
        let err = (lib - oracle).abs();
        worst = worst.max(err);
        if err > 1e-6 {
            return Err(format!(
                "trial {trial}: quadrature {lib:.12} vs oracle {oracle:.12} \
                 (k1 {k1:.3}, k2 {k2:.3}, p+ {p_plus:.3}, r0 {r0:.3}), err {err:.3e}"
            ));
        }
    }
    Ok(format!("20 random coefficient tuples, worst |difference| {worst:.2e}"))
}

// -------------------------------------------------------------------------
// 8. Exponential decay: below the decay threshold the energy stays under the
//    certified envelope and the fitted rate beats the certified one.
// -------------------------------------------------------------------------

fn decay_certificate() -> Result<String, String> {
    let sc = scenarios::decay_scenario(99).map_err(ctx("scenario"))?;
    let input = scenarios::bounds_input(&sc, 1e-9).map_err(ctx("bounds input"))?;
    let report = bounds::full_report(&input).map_err(ctx("bounds report"))?;
    if report.regime != Regime::GlobalCandidate {
        return Err(format!("expected global regime, got {}", report.regime));
    }
    let cert = report
        .decay
        .value()
        .ok_or_else(|| format!("decay certificate absent: {:?}", report.decay.reason()))?;
    if !(sc.e0 <= cert.e2_tilde) {
        return Err(format!("scenario energy {} above decay threshold {}", sc.e0, cert.e2_tilde));
    }

    let run = scenario_run(&sc, 5.0, 1e-3, 1e-3, 5)?;
    if run.outcome != Outcome::CompletedHorizon {
        return Err(format!("decay run ended early: {:?}", run.failure));
    }
    let e0 = run.trace[0].e;
    let mut violations = 0usize;
    let mut ts = Vec::with_capacity(run.trace.len());
    let mut logs = Vec::with_capacity(run.trace.len());
    for s in &run.trace {
        let envelope = e0 * (1.0 - cert.k * s.t).exp();
        if s.e > envelope + 1e-12 * e0.abs() {
            violations += 1;
        }
        if s.e > 0.0 {
            ts.push(s.t);
            logs.push(s.e.ln());
        }
    }
    if violations > 0 {
        return Err(format!("{violations} envelope violations out of {}", run.trace.len()));
    }
    if ts.len() < run.trace.len() {
        return Err(format!(
            "energy lost positivity on {} samples; decay fit is meaningless",
            run.trace.len() - ts.len()
        ));
    }
    let (slope, _) = solver::linear_fit(&ts, &logs).map_err(ctx("fit"))?;
    let fitted = -slope;
    if !(fitted >= cert.k) {
        return Err(format!("fitted rate {fitted:.4} below certified rate {:.4}", cert.k));
    }
    Ok(format!(
        "0 envelope violations over {} samples; fitted rate {fitted:.3} >= certified {:.4}",
        run.trace.len(),
        cert.k
    ))
}

// -------------------------------------------------------------------------
// 9. Closed-form constants, double implementation: fresh inline arithmetic
//    against the library functions on worked inputs.
// -------------------------------------------------------------------------

fn close(label: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{label}: got {got:.12}, want {want:.12}, |diff| {:.3e} > {tol:.1e}", (got - want).abs()))
    }
}

// The inline expressions keep each formula's printed shape with the worked
// constants substituted, so terms like `2.0 - 2.0` stay as written.
#[allow(clippy::eq_op)]
fn constant_formulas() -> Result<String, String> {
    // Growth constant at a = 1, p- = 4, s = 1: min of the two branches.
    let c_lib = bounds::c_constant(1.0, 4.0, 1.0).map_err(ctx("growth constant"))?;
    let branch_a = 2.0 + 4.0;
    let branch_b = 2.0 * 4.0 * (4.0 - 2.0) * 1.0 / (1.0 + (2.0 * 4.0 + 1.0) * 1.0 * 1.0);
    let c_inline = if branch_a < branch_b { branch_a } else { branch_b };
    close("growth constant vs inline", c_lib, c_inline, 1e-9)?;
    close("growth constant literal", c_lib, 1.6, 1e-12)?;

    // Well geometry at b1 = 2, p- = 4.
    let (a1_lib, e1_lib) = bounds::alpha1_e1(2.0, 4.0).map_err(ctx("well geometry"))?;
    let a1_inline = (1.0 / (2.0f64 * 2.0)).powf(2.0 / (4.0 - 2.0));
    let e1_inline = (0.5 - 1.0 / 4.0) * a1_inline.powf(4.0 / 2.0);
    close("first threshold vs inline", a1_lib, a1_inline, 1e-9)?;
    close("well height vs inline", e1_lib, e1_inline, 1e-9)?;
    close("first threshold literal", a1_lib, 0.25, 1e-12)?;
    close("well height literal", e1_lib, 0.015625, 1e-12)?;

    // Decay rate on the worked inputs e0 = 0.1, level 0.2, b1 = 1, p = 4,
    // m- = 2, s = 1; transcribed step by step.
    let cert = bounds::decay_certificate(0.1, 0.2, 1.0, 4.0, 4.0, 2.0, 1.0).map_err(ctx("decay"))?;
    let x = 2.0 * 1.0f64 * 0.2f64.powf((4.0 - 2.0) / 2.0);
    let delta = (4.0 - 1.0) * x / (4.0 - x);
    let eps5 = (1.0 - delta) * (4.0 - 2.0) / (4.0 * 4.0);
    let lhs = (2.0 * 4.0 * 0.1f64 / (4.0 - 2.0)).powf((2.0 - 2.0) / 2.0) * 2.0 * 4.0 * 1.0 / (4.0 - 2.0);
    let eps4 = (1.0 - delta) / 4.0 / lhs;
    let denom = 3.0 * 1.0 / 2.0
        + eps4.powf(1.0 / (1.0 - 2.0))
        + 2.0 * 4.0 * 1.0 / (4.0 - 2.0)
        + 2.0 * 4.0 / (4.0 - 2.0)
        + 1.0 / (2.0 * eps5);
    let k_inline = (1.0 - delta) / 2.0 / denom;
    close("decay rate vs inline", cert.k, k_inline, 1e-9)?;
    close("decay rate literal", cert.k, 0.008439, 1e-6)?;

    Ok(format!(
        "growth constant {c_lib}, threshold {a1_lib}, well height {e1_lib}, decay rate {:.9}",
        cert.k
    ))
}

// -------------------------------------------------------------------------
// 10. Discretization accuracy of the two spectral quantities everything else
//     leans on: the clamped beam eigenvalue and the Poincare constant.
// -------------------------------------------------------------------------

fn discretization_convergence() -> Result<String, String> {
    let grid = Grid::line(1.0, 400).map_err(ctx("grid"))?;
    let lam = embedding::clamped_biharmonic_lambda1(&grid).map_err(ctx("beam eigenvalue"))?;
    let k1 = embedding::CLAMPED_BEAM_K1;
    let target = k1.powi(4);
    let rel = (lam - target).abs() / target;
    if rel > 0.01 {
        return Err(format!(
            "beam eigenvalue off by {:.3}%: got {lam:.4}, continuum {target:.4}",
            rel * 100.0
        ));
    }

    let fine = Grid::line(1.0, 800).map_err(ctx("grid"))?;
    let (mu, _) = embedding::dirichlet_laplacian_lambda1(&fine).map_err(ctx("membrane eigenvalue"))?;
    let s = 1.0 / mu.sqrt();
    let s_target = 1.0 / std::f64::consts::PI;
    let err = (s - s_target).abs();
    if err > 1e-3 {
        return Err(format!("Poincare constant off: got {s:.8}, continuum {s_target:.8}"));
    }
    Ok(format!(
        "beam eigenvalue rel err {:.2e} (tol 1e-2), Poincare constant err {err:.2e} (tol 1e-3)",
        rel
    ))
}
