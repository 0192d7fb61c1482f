//! Time integration of the semi-discrete plate system
//!
//! ```text
//! u' = v
//! v' = -L*L u + M(|grad u|^2) L u + L v - |v|^{m(x)-2}v + |u|^{p(x)-2}u
//! ```
//!
//! with `L` the Dirichlet laplacian and `M(s) = a + b s^gamma`. The scheme is
//! a linearly implicit midpoint rule: the stiff linear part is midpoint, the
//! Kirchhoff coefficient is frozen at the step start, and the nonlinear
//! damping/source are explicit with one correction pass at the predicted
//! midpoint. The fourth-order term is the laplacian applied twice, so the
//! quadratic energy pieces telescope exactly and the per-step dissipation
//! residual stays second order in dt.
//!
//! Also here: the adaptive step controller and numerical blow-up detection
//! (threshold first-passage fit).

use crate::error::{Error, Result};
use crate::functionals::{self, EnergySample, Monitors};
use crate::grid::{self, Grid, GridFunction};
use crate::solver;
use crate::varexp::{pow_abs, ExponentField};

/// Which right-hand-side terms participate; all on for the full model.
/// Switching terms off supports the linear and conservative reductions used
/// in scheme verification.
#[derive(Debug, Clone, Copy)]
pub struct TermToggles {
    pub source: bool,
    pub damping: bool,
    pub strong_damping: bool,
}

impl Default for TermToggles {
    fn default() -> Self {
        TermToggles { source: true, damping: true, strong_damping: true }
    }
}

/// Model data: Kirchhoff coefficients, exponent fields, and term switches.
#[derive(Debug, Clone)]
pub struct ModelParams {
    a: f64,
    b: f64,
    gamma: f64,
    pub m: ExponentField,
    pub p: ExponentField,
    pub toggles: TermToggles,
    strict: bool,
    /// Regularization width for sub-quadratic damping exponents in relaxed
    /// mode; unused when `m(x) >= 2`.
    pub softening_eta: f64,
}

impl ModelParams {
    /// Strict-mode constructor: enforces the well-posedness exponent ranges
    /// `2 <= m(x)` and `2 < p(x)` along with `a > 0`, `b >= 0`, `gamma >= 1`.
    pub fn new(a: f64, b: f64, gamma: f64, m: ExponentField, p: ExponentField) -> Result<Self> {
        Self::build(a, b, gamma, m, p, true)
    }

    /// Relaxed constructor for exploratory runs: damping exponents below 2
    /// are admitted and regularized near `v = 0`.
    pub fn new_relaxed(a: f64, b: f64, gamma: f64, m: ExponentField, p: ExponentField) -> Result<Self> {
        Self::build(a, b, gamma, m, p, false)
    }

    fn build(a: f64, b: f64, gamma: f64, m: ExponentField, p: ExponentField, strict: bool) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::invalid(format!("coefficient a must be positive, got {a}")));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::invalid(format!("coefficient b must be nonnegative, got {b}")));
        }
        if !(gamma >= 1.0) || !gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be at least 1, got {gamma}")));
        }
        if m.grid() != p.grid() {
            return Err(Error::invalid("damping and source exponent fields live on different grids"));
        }
        if strict {
            if m.lo() < 2.0 {
                return Err(Error::invalid(format!(
                    "strict mode requires the damping exponent to satisfy 2 <= m(x); got m- = {}",
                    m.lo()
                )));
            }
            if p.lo() <= 2.0 {
                return Err(Error::invalid(format!(
                    "strict mode requires the source exponent to satisfy 2 < p(x); got p- = {}",
                    p.lo()
                )));
            }
        }
        Ok(ModelParams { a, b, gamma, m, p, toggles: TermToggles::default(), strict, softening_eta: 1e-8 })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    /// `M(s) = a + b s^gamma`.
    pub fn kirchhoff(&self, grad_sq: f64) -> f64 {
        self.a + self.b * grad_sq.powf(self.gamma)
    }

    /// Linear damping shortcut: `|v|^{m-2} v = v` exactly when `m == 2`.
    fn damping_is_linear(&self) -> bool {
        self.toggles.damping && self.m.is_constant() && self.m.lo() == 2.0
    }

    /// Pointwise damping value `|v|^{m(x)-2} v`, regularized in relaxed mode.
    fn damping_at(&self, v: f64, mi: f64) -> f64 {
        if !self.strict && mi < 2.0 {
            (v * v + self.softening_eta * self.softening_eta).powf((mi - 2.0) / 2.0) * v
        } else {
            pow_abs(v, mi - 1.0) * v.signum()
        }
    }

    /// Pointwise source value `|u|^{p(x)-2} u`.
    fn source_at(&self, u: f64, pi: f64) -> f64 {
        pow_abs(u, pi - 1.0) * u.signum()
    }
}

/// One point of the trajectory; `dt` is the controller's current step.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: GridFunction,
    pub v: GridFunction,
    pub dt: f64,
}

impl SimState {
    pub fn new(u: GridFunction, v: GridFunction, dt: f64) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(Error::invalid("displacement and velocity live on different grids"));
        }
        Ok(SimState { t: 0.0, u, v, dt })
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// Time-dependent forcing appended to the velocity equation (used by
/// manufactured-solution studies); evaluated at the step midpoint.
pub type Forcing<'a> = &'a (dyn Fn(f64) -> GridFunction + 'a);

pub fn step(state: &SimState, params: &ModelParams, dt: f64) -> Result<SimState> {
    step_with_forcing(state, params, dt, None)
}

/// Advances one step. Overflow of the explicit terms is a blow-up signal,
/// not an error: the returned state carries non-finite values and the caller
/// decides. Errors are reserved for misuse and linear-solver breakdown.
pub fn step_with_forcing(
    state: &SimState,
    params: &ModelParams,
    dt: f64,
    forcing: Option<Forcing>,
) -> Result<SimState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("step size must be positive and finite, got {dt}")));
    }
    if !state.is_finite() {
        return Err(Error::invalid("step from a non-finite state"));
    }
    let gridv = *state.u.grid();
    if params.m.grid() != &gridv {
        return Err(Error::invalid("state and exponent fields live on different grids"));
    }
    let n = gridv.len();
    let un = state.u.values();
    let vn = state.v.values();

    let m_n = params.kirchhoff(grid::grad_norm_sq_slice(&gridv, un));
    if !m_n.is_finite() {
        return Ok(blown(state, dt));
    }

    let lin_damp = params.damping_is_linear();
    let dd = if lin_damp { dt / 2.0 } else { 0.0 };
    // A v = (1 + dd) v - lap_coeff L v + bih_coeff L^2 v, where the laplacian
    // coefficient collects implicit strong damping and the frozen Kirchhoff
    // tension acting on the midpoint displacement
    let lap_coeff = (if params.toggles.strong_damping { dt / 2.0 } else { 0.0 }) + (dt * dt / 4.0) * m_n;
    let bih_coeff = dt * dt / 4.0;

    let mut t1 = vec![0.0; n];
    let mut t2 = vec![0.0; n];
    let mut apply = |x: &[f64], out: &mut [f64]| {
        grid::laplacian_into(&gridv, x, &mut t1);
        grid::laplacian_into(&gridv, &t1, &mut t2);
        for i in 0..n {
            out[i] = (1.0 + dd) * x[i] - lap_coeff * t1[i] + bih_coeff * t2[i];
        }
    };

    // rhs base: v_n + (dt/2) [ -L^2 u_n + m_n L u_n ] + (dt/2) forcing(t_mid)
    let mut lap_u = vec![0.0; n];
    let mut bih_u = vec![0.0; n];
    grid::laplacian_into(&gridv, un, &mut lap_u);
    grid::laplacian_into(&gridv, &lap_u, &mut bih_u);
    let force = match forcing {
        Some(f) => {
            let g = f(state.t + dt / 2.0);
            if g.grid() != &gridv {
                return Err(Error::invalid("forcing sampled on a different grid"));
            }
            Some(g)
        }
        None => None,
    };
    let mut rhs_base = vec![0.0; n];
    for i in 0..n {
        rhs_base[i] = vn[i] + (dt / 2.0) * (-bih_u[i] + m_n * lap_u[i]);
        if let Some(g) = &force {
            rhs_base[i] += (dt / 2.0) * g.values()[i];
        }
    }

    let diag = jacobi_diagonal(&gridv, 1.0 + dd, lap_coeff, bih_coeff);
    let mv = params.m.values();
    let pv = params.p.values();

    let mut v_mid = vn.to_vec();
    let mut rhs = vec![0.0; n];
    let mut uhat = vec![0.0; n];
    for pass in 0..2 {
        // explicit terms at the step start, then at the predicted midpoint
        let (us, vs): (&[f64], &[f64]) = if pass == 0 {
            (un, vn)
        } else {
            for i in 0..n {
                uhat[i] = un[i] + (dt / 2.0) * v_mid[i];
            }
            (&uhat, &v_mid)
        };
        let mut finite = true;
        for i in 0..n {
            let mut nl = 0.0;
            if params.toggles.source {
                nl += params.source_at(us[i], pv[i]);
            }
            if params.toggles.damping && !lin_damp {
                nl -= params.damping_at(vs[i], mv[i]);
            }
            let r = rhs_base[i] + (dt / 2.0) * nl;
            if !r.is_finite() {
                finite = false;
                break;
            }
            rhs[i] = r;
        }
        if !finite {
            return Ok(blown(state, dt));
        }
        solver::conjugate_gradient(&mut apply, &rhs, &mut v_mid, Some(&diag), 1e-10, 10 * n + 400)?;
    }

    let mut u_next = vec![0.0; n];
    let mut v_next = vec![0.0; n];
    for i in 0..n {
        u_next[i] = un[i] + dt * v_mid[i];
        v_next[i] = 2.0 * v_mid[i] - vn[i];
    }
    Ok(SimState {
        t: state.t + dt,
        u: GridFunction::from_values(gridv, u_next)?,
        v: GridFunction::from_values(gridv, v_next)?,
        dt,
    })
}

fn blown(state: &SimState, dt: f64) -> SimState {
    let grid = *state.u.grid();
    let inf = vec![f64::INFINITY; grid.len()];
    SimState {
        t: state.t + dt,
        u: GridFunction::from_values(grid, inf.clone()).expect("grid size"),
        v: GridFunction::from_values(grid, inf).expect("grid size"),
        dt,
    }
}

fn jacobi_diagonal(grid: &Grid, id_coeff: f64, lap_coeff: f64, bih_coeff: f64) -> Vec<f64> {
    let n = grid.len();
    let mut diag = vec![0.0; n];
    match grid.dim() {
        1 => {
            let nh = grid.n_axis(0);
            let ih2 = 1.0 / (grid.h_axis(0) * grid.h_axis(0));
            for i in 0..nh {
                let nb = (i > 0) as usize + (i + 1 < nh) as usize;
                let l_ii = -2.0 * ih2;
                let l2_ii = l_ii * l_ii + nb as f64 * ih2 * ih2;
                diag[i] = id_coeff - lap_coeff * l_ii + bih_coeff * l2_ii;
            }
        }
        _ => {
            let (nx, ny) = (grid.n_axis(0), grid.n_axis(1));
            let ihx2 = 1.0 / (grid.h_axis(0) * grid.h_axis(0));
            let ihy2 = 1.0 / (grid.h_axis(1) * grid.h_axis(1));
            for iy in 0..ny {
                for ix in 0..nx {
                    let cx = (ix > 0) as usize + (ix + 1 < nx) as usize;
                    let cy = (iy > 0) as usize + (iy + 1 < ny) as usize;
                    let l_ii = -2.0 * (ihx2 + ihy2);
                    let l2_ii = l_ii * l_ii + cx as f64 * ihx2 * ihx2 + cy as f64 * ihy2 * ihy2;
                    diag[iy * nx + ix] = id_coeff - lap_coeff * l_ii + bih_coeff * l2_ii;
                }
            }
        }
    }
    diag
}

/// Step-size controller: halve on fast growth, double after a calm streak.
#[derive(Debug, Clone)]
pub struct DtController {
    pub g_max: f64,
    pub g_min: f64,
    pub dt_floor: f64,
    pub dt_ceiling: f64,
    pub calm_window: usize,
    calm: usize,
}

impl DtController {
    pub fn new(dt_floor: f64, dt_ceiling: f64) -> Self {
        DtController { g_max: 1.25, g_min: 1.01, dt_floor, dt_ceiling, calm_window: 20, calm: 0 }
    }

    /// Next step size given `growth = |u_new|_inf / |u_old|_inf`.
    pub fn adapt(&mut self, dt: f64, growth: f64) -> f64 {
        if growth > self.g_max {
            self.calm = 0;
            return (dt / 2.0).max(self.dt_floor);
        }
        if growth < self.g_min {
            self.calm += 1;
            if self.calm >= self.calm_window {
                self.calm = 0;
                return (dt * 2.0).min(self.dt_ceiling).max(self.dt_floor);
            }
        } else {
            self.calm = 0;
        }
        dt.clamp(self.dt_floor, self.dt_ceiling)
    }

    /// A rejected step breaks any calm streak.
    pub fn note_rejection(&mut self) {
        self.calm = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    CompletedHorizon,
    NumericalBlowup,
    StepFloorAbort,
}

/// Full integration request. Defaults: `dt_ceiling = h^2/4`, `dt_floor =
/// 1e-10`, `dt0 = dt_ceiling`, thresholds `1e3..1e7`, sampling every 10
/// accepted steps, no extra monitors.
pub struct RunSpec {
    pub params: ModelParams,
    pub u0: GridFunction,
    pub v0: GridFunction,
    pub horizon: f64,
    pub dt0: f64,
    pub dt_floor: f64,
    pub dt_ceiling: f64,
    pub sample_stride: usize,
    pub thresholds: Vec<f64>,
    pub monitors: Monitors,
    pub forcing: Option<Box<dyn Fn(f64) -> GridFunction + Send + Sync>>,
    /// Norm level that counts as numerical blow-up.
    pub blowup_norm_cap: f64,
}

impl RunSpec {
    pub fn new(params: ModelParams, u0: GridFunction, v0: GridFunction, horizon: f64) -> Result<Self> {
        if u0.grid() != v0.grid() || u0.grid() != params.m.grid() {
            return Err(Error::invalid("initial data and exponent fields must share one grid"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        if !u0.is_finite() || !v0.is_finite() {
            return Err(Error::invalid("initial data must be finite"));
        }
        let h = u0.grid().h_min();
        let dt_ceiling = h * h / 4.0;
        Ok(RunSpec {
            params,
            u0,
            v0,
            horizon,
            dt0: dt_ceiling,
            dt_floor: 1e-10,
            dt_ceiling,
            sample_stride: 10,
            thresholds: default_thresholds(),
            monitors: Monitors::default(),
            forcing: None,
            blowup_norm_cap: 1e8,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt_floor > 0.0 && self.dt_floor <= self.dt0 && self.dt0 <= self.dt_ceiling) {
            return Err(Error::invalid(format!(
                "need 0 < dt_floor <= dt0 <= dt_ceiling, got floor {}, dt0 {}, ceiling {}",
                self.dt_floor, self.dt0, self.dt_ceiling
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::invalid("sample stride must be at least 1"));
        }
        if self.monitors.upsilon.is_some()
            && self.sample_stride as f64 * self.dt_ceiling > self.horizon / 1000.0
        {
            return Err(Error::invalid(
                "monitoring the time-integral functional needs stride * dt_ceiling <= horizon/1000",
            ));
        }
        let mut sorted = self.thresholds.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite thresholds"));
        if sorted != self.thresholds {
            return Err(Error::invalid("blow-up thresholds must be ascending"));
        }
        Ok(())
    }
}

/// `Theta_k = 10^{2+k}, k = 1..5`.
pub fn default_thresholds() -> Vec<f64> {
    (1..=5).map(|k| 10f64.powi(2 + k)).collect()
}

#[derive(Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    /// Extrapolated blow-up time; present iff the outcome is blow-up.
    pub t_num: Option<f64>,
    pub trace: Vec<EnergySample>,
    pub final_state: SimState,
    /// `(threshold, first-passage time)` pairs recorded online.
    pub passages: Vec<(f64, f64)>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub blowup_kappa: Option<f64>,
    /// Human-readable reason when the run ended abnormally.
    pub failure: Option<String>,
}

/// Integrates to the horizon or to numerical blow-up.
///
/// Step rejection policy: a non-finite step result (or a linear-solve
/// breakdown) halves dt and retries; at the floor it becomes a terminal
/// outcome. Blow-up is declared when the solution norm exceeds the cap (or
/// goes non-finite) with dt pinned at the floor, separating real growth from
/// starvation.
pub fn run(spec: &RunSpec) -> Result<RunResult> {
    spec.validate()?;
    let params = &spec.params;
    let mut state = SimState::new(spec.u0.clone(), spec.v0.clone(), spec.dt0)?;
    let mut controller = DtController::new(spec.dt_floor, spec.dt_ceiling);

    let mut trace: Vec<EnergySample> = Vec::new();
    let mut passages: Vec<(f64, f64)> = Vec::new();
    let mut next_threshold = 0usize;
    let mut steps_accepted = 0usize;
    let mut steps_rejected = 0usize;

    // trapezoid state for the time-integral monitor
    let q_of = |s: &EnergySample| s.norm_u_2 * s.norm_u_2 + s.norm_grad_u_2 * s.norm_grad_u_2;
    let mut ups_acc = 0.0;

    let mut first = functionals::sample_state(&state, params, 0.0, &spec.monitors);
    let q0 = q_of(&first);
    if let Some(up) = &spec.monitors.upsilon {
        first.upsilon = Some(functionals::upsilon_value(
            first.norm_u_2 * first.norm_u_2,
            0.0,
            q0,
            0.0,
            up.t_star,
            up.rho,
            up.omega,
        ));
    }
    let mut prev_sample_t = 0.0;
    let mut prev_q = q0;
    trace.push(first);

    let emit = |state: &SimState,
                residual: f64,
                trace: &mut Vec<EnergySample>,
                ups_acc: &mut f64,
                prev_sample_t: &mut f64,
                prev_q: &mut f64| {
        let mut s = functionals::sample_state(state, params, residual, &spec.monitors);
        let q = q_of(&s);
        *ups_acc += (s.t - *prev_sample_t) * (q + *prev_q) / 2.0;
        *prev_sample_t = s.t;
        *prev_q = q;
        if let Some(up) = &spec.monitors.upsilon {
            s.upsilon = Some(functionals::upsilon_value(
                s.norm_u_2 * s.norm_u_2,
                *ups_acc,
                q0,
                s.t,
                up.t_star,
                up.rho,
                up.omega,
            ));
        }
        trace.push(s);
    };

    let mut residual = 0.0;
    let outcome;
    let mut t_num = None;
    let mut kappa = None;
    let mut failure = None;

    loop {
        if state.t >= spec.horizon * (1.0 - 1e-14) {
            outcome = Outcome::CompletedHorizon;
            break;
        }
        let dt_try = state.dt.min(spec.horizon - state.t);
        let attempt = if let Some(f) = &spec.forcing {
            let fr: &dyn Fn(f64) -> GridFunction = f.as_ref();
            step_with_forcing(&state, params, dt_try, Some(fr))
        } else {
            step_with_forcing(&state, params, dt_try, None)
        };
        let next = match attempt {
            Ok(s) => s,
            Err(e) => {
                // solver breakdown behaves like a rejected step
                if state.dt > spec.dt_floor * (1.0 + 1e-12) {
                    state.dt = (state.dt / 2.0).max(spec.dt_floor);
                    controller.note_rejection();
                    steps_rejected += 1;
                    continue;
                }
                outcome = Outcome::StepFloorAbort;
                failure = Some(format!("linear solve failed at the step floor: {e}"));
                break;
            }
        };
        if !next.is_finite() {
            if state.dt > spec.dt_floor * (1.0 + 1e-12) {
                state.dt = (state.dt / 2.0).max(spec.dt_floor);
                controller.note_rejection();
                steps_rejected += 1;
                continue;
            }
            // non-finite at the floor: numerical blow-up by declaration
            outcome = Outcome::NumericalBlowup;
            let fit = fit_blowup_time(&passages);
            t_num = Some(fit.as_ref().map(|f| f.t_num).unwrap_or(state.t));
            kappa = fit.map(|f| f.kappa);
            break;
        }

        let denom = state.u.linf();
        let growth = if denom > 0.0 { next.u.linf() / denom } else { 1.0 };
        residual = functionals::dissipation_residual(&state, &next, params);
        let new_dt = controller.adapt(dt_try, growth);
        state = next;
        state.dt = new_dt;
        steps_accepted += 1;

        // threshold passages, gated by the cheap modular bound: if the
        // modular is below theta^{p-}, the norm cannot exceed theta (>= 1)
        let mut lux_now = None;
        if next_threshold < spec.thresholds.len() || spec.blowup_norm_cap.is_finite() {
            let gate = if next_threshold < spec.thresholds.len() {
                spec.thresholds[next_threshold]
            } else {
                spec.blowup_norm_cap
            };
            let modular = crate::varexp::modular(&state.u, &params.p).unwrap_or(f64::INFINITY);
            if modular > gate.powf(params.p.lo()) {
                let lux = crate::varexp::luxemburg_norm(&state.u, &params.p, 1e-10).unwrap_or(f64::INFINITY);
                lux_now = Some(lux);
                while next_threshold < spec.thresholds.len() && lux >= spec.thresholds[next_threshold] {
                    passages.push((spec.thresholds[next_threshold], state.t));
                    next_threshold += 1;
                }
            }
        }
        if let Some(lux) = lux_now {
            if lux > spec.blowup_norm_cap && state.dt <= spec.dt_floor * (1.0 + 1e-12) {
                outcome = Outcome::NumericalBlowup;
                let fit = fit_blowup_time(&passages);
                t_num = Some(fit.as_ref().map(|f| f.t_num).unwrap_or(state.t));
                kappa = fit.map(|f| f.kappa);
                break;
            }
        }

        if steps_accepted.is_multiple_of(spec.sample_stride) {
            emit(&state, residual, &mut trace, &mut ups_acc, &mut prev_sample_t, &mut prev_q);
        }
    }

    // final sample if the last step was not already sampled
    if trace.last().map(|s| s.t) != Some(state.t) && state.is_finite() {
        emit(&state, residual, &mut trace, &mut ups_acc, &mut prev_sample_t, &mut prev_q);
    }

    Ok(RunResult {
        outcome,
        t_num,
        trace,
        final_state: state,
        passages,
        steps_accepted,
        steps_rejected,
        blowup_kappa: kappa,
        failure,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct BlowupFit {
    pub t_num: f64,
    pub kappa: f64,
    pub c: f64,
}

/// Fits first-passage pairs `(theta_k, t_k)` to `t_k = T - c theta_k^{-kappa}`
/// by scanning kappa and solving the linear subproblem in `(T, c)`.
/// Needs at least three passages.
pub fn fit_blowup_time(passages: &[(f64, f64)]) -> Option<BlowupFit> {
    if passages.len() < 3 {
        return None;
    }
    let thetas: Vec<f64> = passages.iter().map(|p| p.0).collect();
    let times: Vec<f64> = passages.iter().map(|p| p.1).collect();
    let t_max = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let eval = |kappa: f64| -> Option<(f64, f64, f64)> {
        let x: Vec<f64> = thetas.iter().map(|th| th.powf(-kappa)).collect();
        let (t, slope) = solver::linear_fit(&x, &times).ok()?;
        if !(slope < 0.0) || !t.is_finite() || t < t_max {
            return None;
        }
        let sse: f64 = x.iter().zip(&times).map(|(xi, ti)| (t + slope * xi - ti).powi(2)).sum();
        Some((sse, t, -slope))
    };

    let mut lo = 0.05f64;
    let mut hi = 5.0f64;
    let mut best: Option<(f64, f64, f64, f64)> = None; // (sse, T, c, kappa)
    for _ in 0..4 {
        let steps = 60;
        let ratio = (hi / lo).powf(1.0 / steps as f64);
        let mut k = lo;
        for _ in 0..=steps {
            if let Some((sse, t, c)) = eval(k) {
                if best.map(|b| sse < b.0).unwrap_or(true) {
                    best = Some((sse, t, c, k));
                }
            }
            k *= ratio;
        }
        let center = best?.3;
        lo = center / ratio.powi(2);
        hi = center * ratio.powi(2);
    }
    best.map(|(_, t, c, k)| BlowupFit { t_num: t, kappa: k, c })
}

/// Trace-level variant: first-passage times read off the sampled norms.
pub fn detect_blowup(trace: &[EnergySample], thresholds: &[f64]) -> Option<f64> {
    let mut passages = Vec::new();
    let mut idx = 0;
    for s in trace {
        while idx < thresholds.len() && s.norm_u_px >= thresholds[idx] {
            passages.push((thresholds[idx], s.t));
            idx += 1;
        }
    }
    fit_blowup_time(&passages).map(|f| f.t_num)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn small_params(grid: Grid) -> ModelParams {
        let m = ExponentField::constant(grid, 2.0).unwrap();
        let p = ExponentField::constant(grid, 4.0).unwrap();
        ModelParams::new(1.0, 0.5, 1.0, m, p).unwrap()
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let g = Grid::line(1.0, 31).unwrap();
        let state = SimState::new(g.zeros(), g.zeros(), 1e-3).unwrap();
        let next = step(&state, &small_params(g), 1e-3).unwrap();
        assert!(next.u.values().iter().all(|&v| v == 0.0));
        assert!(next.v.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_linear_step_dissipates_energy() {
        // b = 0, m = p = 2: linear damped plate; energy cannot grow
        let g = Grid::line(1.0, 63).unwrap();
        let m = ExponentField::constant(g, 2.0).unwrap();
        let p = ExponentField::new(g, vec![2.0 + 1e-12; g.len()]).unwrap();
        let mut params = ModelParams::new_relaxed(1.0, 0.0, 1.0, m, p).unwrap();
        params.toggles.source = false;
        let u0 = g.sample(|c| 0.3 * (std::f64::consts::PI * c[0]).sin());
        let v0 = g.sample(|c| 0.1 * (2.0 * std::f64::consts::PI * c[0]).sin());
        let state = SimState::new(u0, v0, 1e-4).unwrap();
        let e0 = functionals::energy(&state, &params);
        let next = step(&state, &params, 1e-4).unwrap();
        let e1 = functionals::energy(&next, &params);
        assert!(e1 <= e0, "energy grew: {e0} -> {e1}");
        assert!(e0 - e1 > 0.0, "no dissipation at all");
    }

    #[test]
    fn controller_follows_the_rules() {
        let mut c = DtController::new(1e-8, 1.0);
        assert_eq!(c.adapt(0.5, 2.0), 0.25);
        let mut dt = 0.25;
        for _ in 0..19 {
            dt = c.adapt(dt, 1.0);
            assert_eq!(dt, 0.25);
        }
        dt = c.adapt(dt, 1.0);
        assert_eq!(dt, 0.5);
        // ceiling binds
        let mut dt = 0.9;
        for _ in 0..40 {
            dt = c.adapt(dt, 1.0);
        }
        assert_eq!(dt, 1.0);
        // floor binds
        let mut dt = 3e-8;
        dt = c.adapt(dt, 10.0);
        dt = c.adapt(dt, 10.0);
        dt = c.adapt(dt, 10.0);
        assert_eq!(dt, 1e-8);
        // a middling growth resets the calm streak
        let mut c = DtController::new(1e-8, 1.0);
        for _ in 0..15 {
            assert_eq!(c.adapt(0.25, 1.0), 0.25);
        }
        assert_eq!(c.adapt(0.25, 1.1), 0.25);
        for _ in 0..19 {
            assert_eq!(c.adapt(0.25, 1.0), 0.25);
        }
        assert_eq!(c.adapt(0.25, 1.0), 0.5);
    }

    #[test]
    fn synthetic_power_law_recovers_the_blowup_time() {
        let passages: Vec<(f64, f64)> = (1..=5).map(|k| {
            let theta = 10f64.powi(2 + k);
            (theta, 2.0 - 1.0 / theta)
        }).collect();
        let fit = fit_blowup_time(&passages).unwrap();
        assert!((fit.t_num - 2.0).abs() < 1e-6, "T = {}", fit.t_num);
        assert!((fit.kappa - 1.0).abs() < 0.05, "kappa = {}", fit.kappa);
    }

    #[test]
    fn too_few_passages_yield_nothing() {
        assert!(fit_blowup_time(&[(1e3, 0.5), (1e4, 0.6)]).is_none());
    }

    #[test]
    fn zero_data_run_completes_with_flat_energy() {
        let g = Grid::line(1.0, 31).unwrap();
        let params = small_params(g);
        let mut spec = RunSpec::new(params, g.zeros(), g.zeros(), 0.01).unwrap();
        spec.sample_stride = 5;
        let r = run(&spec).unwrap();
        assert_eq!(r.outcome, Outcome::CompletedHorizon);
        assert!(r.t_num.is_none());
        assert!(r.trace.iter().all(|s| s.e == 0.0));
        assert!(r.trace.len() >= 2);
        assert!((r.final_state.t - 0.01).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_run_specs() {
        let g = Grid::line(1.0, 31).unwrap();
        let params = small_params(g);
        assert!(RunSpec::new(params.clone(), g.zeros(), g.zeros(), -1.0).is_err());
        let mut spec = RunSpec::new(params, g.zeros(), g.zeros(), 1.0).unwrap();
        spec.dt0 = spec.dt_ceiling * 2.0;
        assert!(run(&spec).is_err());
    }

    #[test]
    fn strict_mode_rejects_bad_exponents() {
        let g = Grid::line(1.0, 9).unwrap();
        let m_low = ExponentField::new(g, vec![1.5; 9]).unwrap();
        let p_ok = ExponentField::constant(g, 4.0).unwrap();
        assert!(ModelParams::new(1.0, 1.0, 1.0, m_low.clone(), p_ok.clone()).is_err());
        assert!(ModelParams::new_relaxed(1.0, 1.0, 1.0, m_low, p_ok.clone()).is_ok());
        let m_ok = ExponentField::constant(g, 2.0).unwrap();
        let p_low = ExponentField::constant(g, 2.0).unwrap();
        assert!(ModelParams::new(1.0, 1.0, 1.0, m_ok.clone(), p_low).is_err());
        assert!(ModelParams::new(0.0, 1.0, 1.0, m_ok.clone(), p_ok.clone()).is_err());
        assert!(ModelParams::new(1.0, -0.1, 1.0, m_ok.clone(), p_ok.clone()).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.5, m_ok, p_ok).is_err());
    }
}
