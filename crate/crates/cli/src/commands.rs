//! The work behind each subcommand: simulate, bounds, sweep, norms.
//!
//! Every run writes its artifacts under the output directory (the
//! `PLATELAB_OUT` environment variable overrides the configured one) via
//! atomic renames, and reports carry no timestamps, so the same config and
//! seed always produce byte-identical files.

use crate::config::{self, AutoOff, MonitorE2, RunConfig, UpsilonRule};
use crate::report::{self, Report};
use crate::scenarios;
use crate::trace;
use platelab::bounds::{self, BoundsInput, BoundsReport, Regime};
use platelab::dynamics::{self, Outcome, RunResult, RunSpec};
use platelab::embedding;
use platelab::functionals::{self, EnergySample, Monitors, UpsilonParams};
use platelab::grid;
use platelab::solver;
use platelab::varexp::{self, ExponentField};
use std::path::PathBuf;

/// Failures ranked by exit code: config errors exit 2, anything that breaks
/// mid-computation exits 3.
#[derive(Debug)]
pub enum CmdError {
    Config(Vec<String>),
    Numeric(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Numeric(_) => 3,
        }
    }

    pub fn print(&self) {
        match self {
            CmdError::Config(errs) => {
                for e in errs {
                    eprintln!("config error: {e}");
                }
            }
            CmdError::Numeric(e) => eprintln!("error: {e}"),
        }
    }
}

impl From<config::ConfigErrors> for CmdError {
    fn from(e: config::ConfigErrors) -> Self {
        CmdError::Config(e.0)
    }
}

impl From<platelab::Error> for CmdError {
    fn from(e: platelab::Error) -> Self {
        CmdError::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Numeric(format!("i/o failure: {e}"))
    }
}

pub const OUT_DIR_ENV: &str = "PLATELAB_OUT";

fn out_dir(cfg: &RunConfig) -> PathBuf {
    match std::env::var(OUT_DIR_ENV) {
        Ok(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from(&cfg.output.dir),
    }
}

pub struct SimOutput {
    pub report_text: String,
    pub report_path: PathBuf,
    pub trace_path: Option<PathBuf>,
    pub exit: i32,
}

struct Prepared {
    cfg: RunConfig,
    canonical: String,
    input: BoundsInput,
    bounds_report: BoundsReport,
    /// Same bounds re-derived with the safety-multiplied embedding constant.
    hardened: Option<BoundsReport>,
    logholder: platelab::varexp::LogHolderReport,
}

fn prepare(text: &str) -> Result<(Prepared, platelab::dynamics::ModelParams, grid::GridFunction, grid::GridFunction), CmdError> {
    let cfg = config::parse(text)?;
    let canonical = config::emit(&cfg);
    let g = cfg.build_grid()?;
    let params = cfg.build_model(&g)?;
    let (u0, v0) = cfg.build_init(&g)?;
    let constants = embedding::estimate_embedding_constants(&g, &params.p, cfg.estimate_mode())?;
    let logholder = varexp::log_holder_check(&params.p, cfg.logholder.a, cfg.logholder.delta)?;
    let input = scenarios::bounds_input_from(&params, &u0, &v0, constants, cfg.bounds.quad_tol)?;
    let bounds_report = bounds::full_report(&input)?;
    let hardened = if cfg.bounds.safety > 1.0 {
        let mut hard = input.clone();
        hard.constants.b *= cfg.bounds.safety;
        hard.constants.b1 = hard.constants.b.max(1.0);
        Some(bounds::full_report(&hard)?)
    } else {
        None
    };
    Ok((Prepared { cfg, canonical, input, bounds_report, hardened, logholder }, params, u0, v0))
}

fn push_config_echo(rep: &mut Report, canonical: &str) {
    rep.push("config.sha256", report::config_hash(canonical));
    for line in canonical.lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            rep.push(&format!("config.{k}"), v);
        }
    }
}

fn push_field<T, F: FnOnce(&mut Report, &T)>(
    rep: &mut Report,
    key: &str,
    field: &bounds::FieldOutcome<T>,
    f: F,
) {
    match field.value() {
        Some(v) => f(rep, v),
        None => rep.push_absent(key, field.reason().unwrap_or("not computed")),
    }
}

fn push_bounds(rep: &mut Report, prefix: &str, input: &BoundsInput, br: &BoundsReport) {
    let p = |k: &str| format!("{prefix}{k}");
    rep.push(&p("constants.b"), input.constants.b);
    rep.push(&p("constants.b1"), input.constants.b1);
    rep.push(&p("constants.s"), input.constants.s);
    rep.push(&p("constants.s_star"), input.constants.s_star);
    rep.push(&p("constants.q_star"), input.constants.q_star);
    rep.push(&p("constants.provenance"), format!("{:?}", input.constants.provenance));
    rep.push(&p("threshold.alpha1"), br.alpha1);
    rep.push(&p("threshold.e1"), br.e1);
    rep.push(&p("threshold.alpha0"), br.alpha0);
    rep.push(&p("energy.e0"), br.e0);
    rep.push(&p("regime"), br.regime);
    rep.push(&p("growth.c"), br.c);
    match br.roots.value() {
        Some((lo, hi)) => {
            rep.push(&p("roots.alpha2_tilde"), lo);
            rep.push(&p("roots.alpha2"), hi);
        }
        None => {
            let why = br.roots.reason().unwrap_or("not computed");
            rep.push_absent(&p("roots.alpha2_tilde"), why);
            rep.push_absent(&p("roots.alpha2"), why);
        }
    }
    push_field(rep, &p("exponent.sigma"), &br.sigma, |r, s| r.push(&p("exponent.sigma"), s));
    match br.gap.value() {
        Some(gapv) => {
            rep.push(&p("gap.sigma"), gapv.choice.sigma);
            rep.push(&p("gap.eps1"), gapv.choice.eps1);
            rep.push(&p("gap.e2"), gapv.choice.e2);
            rep.push(&p("gap.h0"), gapv.choice.h0);
            rep.push(&p("gap.eps"), gapv.choice.eps);
            rep.push(&p("gap.f0"), gapv.choice.f0);
            rep.push(&p("gap.m1"), gapv.m1);
            rep.push(&p("gap.m2"), gapv.m2);
            rep.push(&p("gap.t_upper"), gapv.t_upper);
            rep.push(&p("gap.t_upper_alternate"), gapv.t_upper_alternate);
        }
        None => rep.push_absent(&p("gap.t_upper"), br.gap.reason().unwrap_or("not computed")),
    }
    match br.concavity.value() {
        Some(cb) => {
            rep.push(&p("concavity.rho"), cb.rho);
            rep.push(&p("concavity.omega"), cb.omega);
            rep.push(&p("concavity.t_upper"), cb.t_upper);
        }
        None => rep.push_absent(
            &p("concavity.t_upper"),
            br.concavity.reason().unwrap_or("not computed"),
        ),
    }
    push_field(rep, &p("concavity.t_upper_crosscheck"), &br.concavity_time, |r, t| {
        r.push(&p("concavity.t_upper_crosscheck"), t)
    });
    match br.lower.value() {
        Some(lb) => {
            rep.push(&p("lower.k1"), lb.k1);
            rep.push(&p("lower.k2"), lb.k2);
            rep.push(&p("lower.t_lower"), lb.t_lower);
            rep.push(&p("lower.heuristic"), lb.heuristic);
        }
        None => rep.push_absent(&p("lower.t_lower"), br.lower.reason().unwrap_or("not computed")),
    }
    match br.decay.value() {
        Some(dc) => {
            rep.push(&p("decay.delta"), dc.delta);
            rep.push(&p("decay.eps4"), dc.eps4);
            rep.push(&p("decay.eps5"), dc.eps5);
            rep.push(&p("decay.k"), dc.k);
            rep.push(&p("decay.e2_tilde"), dc.e2_tilde);
        }
        None => rep.push_absent(&p("decay.k"), br.decay.reason().unwrap_or("not computed")),
    }
}

/// Resolved per-sample monitors plus the levels the comparison block needs.
struct ResolvedMonitors {
    monitors: Monitors,
    upsilon_reason: Option<String>,
}

fn resolve_monitors(cfg: &RunConfig, br: &BoundsReport, input: &BoundsInput) -> ResolvedMonitors {
    let e2 = match cfg.monitor.e2 {
        MonitorE2::Value(v) => Some(v),
        MonitorE2::Off => None,
        MonitorE2::Auto => br
            .gap
            .value()
            .map(|gapv| gapv.choice.e2)
            .or_else(|| br.decay.value().map(|d| d.e2_tilde)),
    };
    let psi = match cfg.monitor.psi {
        AutoOff::Off => None,
        AutoOff::Auto => {
            (br.regime == Regime::BlowupHighEnergy).then_some((br.c, input.p_minus))
        }
    };
    let f = match cfg.monitor.f {
        AutoOff::Off => None,
        AutoOff::Auto => br
            .gap
            .value()
            .map(|gapv| (gapv.choice.e2, gapv.choice.sigma, gapv.choice.eps)),
    };
    let mut upsilon_reason = None;
    let upsilon = match cfg.monitor.upsilon {
        UpsilonRule::Off => None,
        UpsilonRule::Explicit { t_star, rho, omega } => {
            Some(UpsilonParams { t_star, rho, omega })
        }
        UpsilonRule::Auto => match br.concavity.value() {
            Some(cb) => Some(UpsilonParams { t_star: cb.t_upper, rho: cb.rho, omega: cb.omega }),
            None => {
                upsilon_reason =
                    Some(br.concavity.reason().unwrap_or("no comparison parameters").to_string());
                None
            }
        },
    };
    ResolvedMonitors { monitors: Monitors { e2, psi, f, upsilon }, upsilon_reason }
}

fn push_run_outcome(rep: &mut Report, res: &RunResult) {
    let outcome = match res.outcome {
        Outcome::CompletedHorizon => "completed_horizon",
        Outcome::NumericalBlowup => "numerical_blowup",
        Outcome::StepFloorAbort => "step_floor_abort",
    };
    rep.push("run.outcome", outcome);
    match res.t_num {
        Some(t) => rep.push("run.t_num", t),
        None => rep.push_absent("run.t_num", "no numerical blow-up declared"),
    }
    rep.push("run.steps_accepted", res.steps_accepted);
    rep.push("run.steps_rejected", res.steps_rejected);
    rep.push("run.samples", res.trace.len());
    rep.push("run.threshold_passages", res.passages.len());
    match res.blowup_kappa {
        Some(k) => rep.push("run.blowup_kappa", k),
        None => rep.push_absent("run.blowup_kappa", "fewer than three threshold passages"),
    }
    if let Some(f) = &res.failure {
        rep.push("run.failure", f);
    }
    if let Some(last) = res.trace.last() {
        rep.push("run.final_t", last.t);
        rep.push("run.final_e", last.e);
        rep.push("run.final_norm_u_2", last.norm_u_2);
    }
}

/// Largest factor by which E rises between consecutive samples beyond the
/// recorded step residual; nonpositive when dissipation holds sample-wise.
fn max_energy_rise(trace: &[EnergySample]) -> f64 {
    trace
        .windows(2)
        .map(|w| (w[1].e - w[0].e) - w[1].diss_residual.abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn push_comparison(
    rep: &mut Report,
    br: &BoundsReport,
    input: &BoundsInput,
    res: &RunResult,
    monitors: &Monitors,
) {
    let blew_up = matches!(res.outcome, Outcome::NumericalBlowup);
    rep.push("compare.energy_monotone_within_residual", max_energy_rise(&res.trace) <= 1e-9);

    match (res.t_num, br.gap.value()) {
        (Some(t_num), Some(gapv)) => {
            rep.push("compare.t_num", t_num);
            rep.push("compare.gap_t_upper", gapv.t_upper);
            rep.push("compare.t_num_le_gap_upper", t_num <= gapv.t_upper);
        }
        _ => rep.push_absent(
            "compare.t_num_le_gap_upper",
            if blew_up { "no finite-time upper bound in this regime" } else { "run did not blow up" },
        ),
    }
    match (res.t_num, br.concavity.value()) {
        (Some(t_num), Some(cb)) => {
            rep.push("compare.concavity_t_upper", cb.t_upper);
            rep.push("compare.t_num_le_concavity_upper", t_num <= cb.t_upper);
        }
        _ => rep.push_absent(
            "compare.t_num_le_concavity_upper",
            if blew_up { "no concavity bound in this regime" } else { "run did not blow up" },
        ),
    }
    match (res.t_num, br.lower.value()) {
        (Some(t_num), Some(lb)) => {
            rep.push("compare.lower_t_le_t_num", lb.t_lower <= t_num);
        }
        _ => rep.push_absent("compare.lower_t_le_t_num", "needs both a blow-up time and the ode bound"),
    }

    // stable-regime checks: the weighted bending norm must stay under the
    // first root level, and the energy under its certified envelope
    if br.regime == Regime::GlobalCandidate {
        if let Some((alpha2_tilde, _)) = br.roots.value() {
            let b1sq = input.constants.b1 * input.constants.b1;
            let worst = res
                .trace
                .iter()
                .map(|s| b1sq * s.norm_lap_u_2 * s.norm_lap_u_2)
                .fold(f64::NEG_INFINITY, f64::max);
            rep.push("compare.invariant_alpha_max", worst);
            rep.push("compare.invariant_alpha_level", alpha2_tilde);
            rep.push("compare.invariant_holds", worst <= alpha2_tilde * 1.001);
        }
        match br.decay.value() {
            Some(dc) if !res.trace.is_empty() => {
                let e0 = res.trace[0].e;
                let violations = res
                    .trace
                    .iter()
                    .filter(|s| s.e > e0 * (1.0 - dc.k * s.t).exp() + 1e-12 * e0.abs())
                    .count();
                rep.push("compare.decay_envelope_violations", violations);
                let pts: Vec<(f64, f64)> = res
                    .trace
                    .iter()
                    .filter(|s| s.e > 0.0)
                    .map(|s| (s.t, s.e.ln()))
                    .collect();
                if pts.len() >= 2 {
                    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
                    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
                    if let Ok((slope, _)) = solver::linear_fit(&xs, &ys) {
                        rep.push("compare.decay_rate_fitted", -slope);
                        rep.push("compare.decay_rate_certified", dc.k);
                        rep.push("compare.decay_rate_meets_certificate", -slope >= dc.k);
                    }
                }
            }
            _ => rep.push_absent("compare.decay_envelope_violations", "no decay certificate"),
        }
    } else if br.regime == Regime::BlowupLowEnergy {
        if let Some((_, alpha2)) = br.roots.value() {
            let b1sq = input.constants.b1 * input.constants.b1;
            let worst = res
                .trace
                .iter()
                .map(|s| b1sq * s.norm_lap_u_2 * s.norm_lap_u_2)
                .fold(f64::INFINITY, f64::min);
            rep.push("compare.exterior_alpha_min", worst);
            rep.push("compare.exterior_alpha_level", alpha2);
            rep.push("compare.exterior_holds", worst >= alpha2 * 0.999);
        }
    }

    // growth-functional envelope in the high-energy regime
    if monitors.psi.is_some() {
        let psi_pts: Vec<(f64, f64)> =
            res.trace.iter().filter_map(|s| s.psi.map(|p| (s.t, p))).collect();
        if let Some(&(t0, psi0)) = psi_pts.first() {
            if psi0 > 0.0 {
                let worst = psi_pts
                    .iter()
                    .map(|&(t, p)| p / (psi0 * (br.c * (t - t0)).exp()))
                    .fold(f64::INFINITY, f64::min);
                rep.push("compare.psi_envelope_min_ratio", worst);
                rep.push("compare.psi_envelope_holds", worst >= 0.95);
            } else {
                rep.push_absent("compare.psi_envelope_holds", "psi(0) is not positive");
            }
        }
    }

    // both conventions for the comparison functional at t = 0
    if let Some(up) = monitors.upsilon {
        let nu0 = input.norm_u0_sq;
        let q0 = input.norm_u0_sq + input.grad_u0_sq;
        let full =
            functionals::upsilon_value(nu0, 0.0, q0, 0.0, up.t_star, up.rho, up.omega);
        let display = functionals::upsilon_zero_display(
            input.norm_u0_sq,
            input.grad_u0_sq,
            up.t_star,
            up.rho,
            up.omega,
        );
        rep.push("upsilon.zero_definition", full);
        rep.push("upsilon.zero_display", display);
        rep.push("upsilon.zero_conventions_differ_by", full - display);
    }
}

fn build_report_header(pre: &Prepared) -> Report {
    let mut rep = Report::new();
    rep.push("format", 1);
    push_config_echo(&mut rep, &pre.canonical);
    rep.push("logholder.max_violation", pre.logholder.max_violation);
    rep.push("logholder.passed", pre.logholder.passed);
    push_bounds(&mut rep, "", &pre.input, &pre.bounds_report);
    if let Some(hard) = &pre.hardened {
        rep.push("safety.multiplier", pre.cfg.bounds.safety);
        push_bounds(&mut rep, "safety.", &pre.input, hard);
    }
    rep
}

pub fn simulate(text: &str) -> Result<SimOutput, CmdError> {
    let (pre, params, u0, v0) = prepare(text)?;
    let resolved = resolve_monitors(&pre.cfg, &pre.bounds_report, &pre.input);

    let mut spec: RunSpec = pre.cfg.build_run_spec(params, u0, v0)?;
    spec.monitors = resolved.monitors;
    let mut upsilon_reason = resolved.upsilon_reason;
    // the time-integral monitor needs fine sampling; auto mode drops it
    // rather than failing a config that never asked for it explicitly
    if spec.monitors.upsilon.is_some()
        && matches!(pre.cfg.monitor.upsilon, UpsilonRule::Auto)
        && spec.sample_stride as f64 * spec.dt_ceiling > spec.horizon / 1000.0
    {
        spec.monitors.upsilon = None;
        upsilon_reason = Some("sampling too coarse for the time-integral monitor".to_string());
    }
    let res = dynamics::run(&spec).map_err(|e| CmdError::Numeric(e.to_string()))?;

    let mut rep = build_report_header(&pre);
    if let Some(reason) = &upsilon_reason {
        rep.push_absent("monitor.upsilon_params", reason);
    }
    push_run_outcome(&mut rep, &res);
    push_comparison(&mut rep, &pre.bounds_report, &pre.input, &res, &spec.monitors);

    let dir = out_dir(&pre.cfg);
    let trace_path = dir.join(format!("{}.csv", pre.cfg.output.prefix));
    let report_path = dir.join(format!("{}.report.txt", pre.cfg.output.prefix));
    trace::write(&trace_path, &res.trace)?;
    // name only: the report must not depend on where the artifacts land
    rep.push("artifacts.trace", format!("{}.csv", pre.cfg.output.prefix));
    rep.write_atomic(&report_path)?;

    let exit = match res.outcome {
        Outcome::StepFloorAbort => 3,
        _ => 0,
    };
    Ok(SimOutput {
        report_text: rep.render(),
        report_path,
        trace_path: Some(trace_path),
        exit,
    })
}

pub fn bounds_only(text: &str) -> Result<SimOutput, CmdError> {
    let (pre, _, _, _) = prepare(text)?;
    let rep = build_report_header(&pre);
    let dir = out_dir(&pre.cfg);
    let report_path = dir.join(format!("{}.bounds.txt", pre.cfg.output.prefix));
    rep.write_atomic(&report_path)?;
    Ok(SimOutput { report_text: rep.render(), report_path, trace_path: None, exit: 0 })
}

pub struct SweepRow {
    pub value: String,
    pub regime: Option<String>,
    pub outcome: Option<String>,
    pub t_num: Option<f64>,
    pub error: Option<String>,
}

/// Runs one simulation per axis value, in parallel; each variant writes its
/// own artifact files (the prefix gains a `-<key>-<value>` suffix).
pub fn sweep(text: &str, axis: &str, values: &[String]) -> Result<Vec<SweepRow>, CmdError> {
    if values.is_empty() {
        return Err(CmdError::Config(vec!["sweep: the value list must not be empty".into()]));
    }
    let base = config::parse(text)?;
    // validate the axis key against the first value before spawning anything
    {
        let mut probe = base.clone();
        config::set(&mut probe, axis, &values[0])?;
    }

    let rows: Vec<Result<(String, SimOutput), (String, CmdError)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .map(|v| {
                let mut cfg = base.clone();
                let axis = axis.to_string();
                let v = v.clone();
                scope.spawn(move || {
                    config::set(&mut cfg, &axis, &v).map_err(|e| (v.clone(), e.into()))?;
                    let tag = format!("{}-{}-{}", cfg.output.prefix, axis.replace('.', "_"), v);
                    cfg.output.prefix = tag;
                    let out = simulate(&config::emit(&cfg)).map_err(|e| (v.clone(), e))?;
                    Ok((v, out))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(("?".to_string(), CmdError::Numeric("worker panicked".into())))
                })
            })
            .collect()
    });

    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        match row {
            Ok((v, sim)) => {
                let get = |k: &str| {
                    sim.report_text
                        .lines()
                        .find_map(|l| l.strip_prefix(&format!("{k} = ")).map(str::to_string))
                };
                out.push(SweepRow {
                    value: v,
                    regime: get("regime"),
                    outcome: get("run.outcome"),
                    t_num: get("run.t_num").and_then(|s| s.parse().ok()),
                    error: None,
                });
            }
            Err((v, e)) => {
                let msg = match e {
                    CmdError::Config(list) => list.join("; "),
                    CmdError::Numeric(m) => m,
                };
                out.push(SweepRow {
                    value: v,
                    regime: None,
                    outcome: None,
                    t_num: None,
                    error: Some(msg),
                });
            }
        }
    }
    Ok(out)
}

pub fn render_sweep_table(axis: &str, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    s.push_str(&format!("{:>14}  {:>22}  {:>18}  {:>12}\n", axis, "regime", "outcome", "t_num"));
    let mut prev_regime: Option<&str> = None;
    for r in rows {
        let regime = r.regime.as_deref().unwrap_or("-");
        let outcome = r.outcome.as_deref().unwrap_or_else(|| {
            if r.error.is_some() {
                "error"
            } else {
                "-"
            }
        });
        let t = r.t_num.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
        s.push_str(&format!("{:>14}  {:>22}  {:>18}  {:>12}\n", r.value, regime, outcome, t));
        if let Some(p) = prev_regime {
            if r.regime.is_some() && p != regime {
                s.push_str(&format!("  ^ regime changes at {axis} = {}\n", r.value));
            }
        }
        if r.regime.is_some() {
            prev_regime = Some(regime);
        }
        if let Some(e) = &r.error {
            s.push_str(&format!("  ! {e}\n"));
        }
    }
    s
}

/// Builds a field from a tiny spec grammar (`mode:<l2>`, `bump:<amp>@<c>/<r>`,
/// `const:<v>`) and prints its modular, norm, and the sandwich between them.
pub fn norms(f_spec: &str, p_spec: &str, n: usize, extent: f64) -> Result<String, CmdError> {
    let g = platelab::Grid::line(extent, n).map_err(|e| CmdError::Config(vec![e.to_string()]))?;
    let p = ExponentField::from_spec(g, p_spec).map_err(|e| CmdError::Config(vec![format!("--p: {e}")]))?;
    let f = parse_field(&g, f_spec).map_err(|e| CmdError::Config(vec![format!("--f: {e}")]))?;

    let modular = varexp::modular(&f, &p)?;
    let lux = varexp::luxemburg_norm(&f, &p, varexp::DEFAULT_NORM_TOL)?;
    let mut s = String::new();
    s.push_str(&format!("modular = {modular}\n"));
    s.push_str(&format!("luxemburg = {lux}\n"));
    if lux > 0.0 {
        let sw = varexp::check_sandwich(&f, &p)?;
        s.push_str(&format!(
            "sandwich = {} <= {} <= {} ({})\n",
            sw.lower,
            sw.modular,
            sw.upper,
            if sw.passed { "ok" } else { "violated" }
        ));
    }
    let lh = varexp::log_holder_check(&p, 1.0, 0.5)?;
    s.push_str(&format!(
        "logholder = max_violation {} ({})\n",
        lh.max_violation,
        if lh.passed { "ok" } else { "violated" }
    ));
    Ok(s)
}

fn parse_field(g: &platelab::Grid, spec: &str) -> platelab::Result<platelab::GridFunction> {
    use platelab::error::Error;
    if let Some(v) = spec.strip_prefix("const:") {
        let c: f64 = v
            .parse()
            .map_err(|_| Error::invalid(format!("const wants a number, got `{v}`")))?;
        return Ok(g.sample(|_| c));
    }
    if let Some(v) = spec.strip_prefix("mode:") {
        let a: f64 = v
            .parse()
            .map_err(|_| Error::invalid(format!("mode wants an L2 norm, got `{v}`")))?;
        return platelab::init::clamped_mode(g, a);
    }
    if let Some(v) = spec.strip_prefix("bump:") {
        let (amp, rest) = v
            .split_once('@')
            .ok_or_else(|| Error::invalid("bump spec is bump:<amp>@<center>/<radius>"))?;
        let (center, radius) = rest
            .split_once('/')
            .ok_or_else(|| Error::invalid("bump spec is bump:<amp>@<center>/<radius>"))?;
        let amp: f64 =
            amp.parse().map_err(|_| Error::invalid(format!("bad bump amplitude `{amp}`")))?;
        let c: f64 =
            center.parse().map_err(|_| Error::invalid(format!("bad bump center `{center}`")))?;
        let r: f64 =
            radius.parse().map_err(|_| Error::invalid(format!("bad bump radius `{radius}`")))?;
        return platelab::init::bump(g, amp, &[c], r);
    }
    Err(Error::invalid(format!(
        "unknown field spec `{spec}` (expected const:, mode:, or bump:)"
    )))
}
