//! Flat `section.key = value` run configuration.
//!
//! The grammar is deliberately small: UTF-8 text, one assignment per line,
//! `#` starts a comment, keys are `section.key`, values are scalars, comma
//! lists, or small tagged strings ("constant:2", "scale:0.5"). Parsing
//! collects *every* violation instead of stopping at the first so a user can
//! fix a config in one round trip. `emit` writes the full canonical key set;
//! `parse(emit(c)) == c` holds for any config that parses.

use platelab::dynamics::{ModelParams, RunSpec};
use platelab::embedding::{AscentParams, EstimateMode};
use platelab::functionals::UpsilonParams;
use platelab::grid::{Grid, GridFunction};
use platelab::varexp::ExponentField;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub dim: usize,
    pub extent: Vec<f64>,
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub m: String,
    pub p: String,
    pub source: bool,
    pub damping: bool,
    pub strong_damping: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitKind {
    /// Lowest clamped eigenmode, scaled to `amplitude`.
    Mode,
    /// Smooth compactly supported bump at `center` with `radius`.
    Bump,
    /// Raw node values from `init.path`, one per line, used verbatim.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityRule {
    Zero,
    Copy,
    Scale(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    pub kind: InitKind,
    /// Ignored for `kind = file`; raw values are not rescaled.
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub velocity: VelocityRule,
    /// Source of node values for `kind = file`.
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub horizon: f64,
    /// `None` means "use the ceiling".
    pub dt0: Option<f64>,
    pub dt_floor: f64,
    /// `None` means the documented default h^2/4.
    pub dt_ceiling: Option<f64>,
    pub sample_stride: usize,
    pub blowup_cap: f64,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedMode {
    Numeric,
    Analytic,
    User,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSection {
    pub mode: EmbedMode,
    pub b: Option<f64>,
    pub s: Option<f64>,
    pub s_star: Option<f64>,
    pub seed: u64,
    pub starts: usize,
    pub iters: usize,
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsSection {
    pub quad_tol: f64,
    /// Multiplier applied to the sampled embedding constant when re-stating
    /// bounds that shrink as the constant grows.
    pub safety: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonitorE2 {
    Auto,
    Off,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutoOff {
    Auto,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpsilonRule {
    Auto,
    Off,
    Explicit { t_star: f64, rho: f64, omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorSection {
    pub e2: MonitorE2,
    pub psi: AutoOff,
    pub f: AutoOff,
    pub upsilon: UpsilonRule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogHolderSection {
    pub a: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub dir: String,
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub init: InitConfig,
    pub run: RunSection,
    pub embedding: EmbeddingSection,
    pub bounds: BoundsSection,
    pub monitor: MonitorSection,
    pub logholder: LogHolderSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridConfig { dim: 1, extent: vec![1.0], n: vec![200] },
            model: ModelConfig {
                a: 1.0,
                b: 0.05,
                gamma: 1.0,
                m: "constant:2".into(),
                p: "constant:5".into(),
                source: true,
                damping: true,
                strong_damping: true,
            },
            init: InitConfig {
                kind: InitKind::Mode,
                amplitude: 0.02,
                center: vec![0.5],
                radius: 0.2,
                velocity: VelocityRule::Zero,
                path: None,
            },
            run: RunSection {
                horizon: 5.0,
                dt0: None,
                dt_floor: 1e-10,
                dt_ceiling: None,
                sample_stride: 10,
                blowup_cap: 1e8,
                thresholds: vec![1e3, 1e4, 1e5, 1e6, 1e7],
            },
            embedding: EmbeddingSection {
                mode: EmbedMode::Numeric,
                b: None,
                s: None,
                s_star: None,
                seed: 7,
                starts: 6,
                iters: 300,
                slack: 0.02,
            },
            bounds: BoundsSection { quad_tol: 1e-9, safety: 1.0 },
            monitor: MonitorSection {
                e2: MonitorE2::Auto,
                psi: AutoOff::Auto,
                f: AutoOff::Auto,
                upsilon: UpsilonRule::Auto,
            },
            logholder: LogHolderSection { a: 1.0, delta: 0.5 },
            output: OutputSection { dir: "out".into(), prefix: "run".into() },
        }
    }
}

/// All the ways a config text can be rejected, reported together.
#[derive(Debug)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "config error: {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

struct Collector {
    errors: Vec<String>,
}

impl Collector {
    fn new() -> Self {
        Collector { errors: Vec::new() }
    }

    fn push(&mut self, msg: String) {
        self.errors.push(msg);
    }

    fn f64(&mut self, key: &str, raw: &str) -> Option<f64> {
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.push(format!("{key}: expected a finite number, got `{raw}`"));
                None
            }
        }
    }

    fn usize(&mut self, key: &str, raw: &str) -> Option<usize> {
        match raw.parse::<usize>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.push(format!("{key}: expected a non-negative integer, got `{raw}`"));
                None
            }
        }
    }

    fn u64(&mut self, key: &str, raw: &str) -> Option<u64> {
        match raw.parse::<u64>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.push(format!("{key}: expected a non-negative integer, got `{raw}`"));
                None
            }
        }
    }

    fn bool(&mut self, key: &str, raw: &str) -> Option<bool> {
        match raw {
            "true" => Some(true),
            "false" => Some(false),
            _ => {
                self.push(format!("{key}: expected true or false, got `{raw}`"));
                None
            }
        }
    }

    fn f64_list(&mut self, key: &str, raw: &str) -> Option<Vec<f64>> {
        let mut out = Vec::new();
        for part in raw.split(',') {
            match part.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => {
                    self.push(format!("{key}: `{part}` is not a finite number"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn usize_list(&mut self, key: &str, raw: &str) -> Option<Vec<usize>> {
        let mut out = Vec::new();
        for part in raw.split(',') {
            match part.trim().parse::<usize>() {
                Ok(v) => out.push(v),
                Err(_) => {
                    self.push(format!("{key}: `{part}` is not a non-negative integer"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn opt_f64(&mut self, key: &str, raw: &str) -> Option<Option<f64>> {
        if raw == "auto" {
            Some(None)
        } else {
            self.f64(key, raw).map(Some)
        }
    }
}

/// Parse a config text, applying defaults for every key not present.
/// Returns every violation found, not just the first.
pub fn parse(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut cfg = RunConfig::default();
    let mut col = Collector::new();
    let mut seen: Vec<String> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let stripped = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            col.push(format!("line {lineno}: expected `section.key = value`, got `{stripped}`"));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if !key.contains('.') {
            col.push(format!("line {lineno}: key `{key}` is missing its section prefix"));
            continue;
        }
        if seen.iter().any(|k| k == key) {
            col.push(format!("line {lineno}: key `{key}` assigned more than once"));
            continue;
        }
        seen.push(key.to_string());
        apply(&mut cfg, key, value, &mut col);
    }

    validate(&cfg, &mut col);

    if col.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(col.errors))
    }
}

fn apply(cfg: &mut RunConfig, key: &str, value: &str, col: &mut Collector) {
    match key {
        "grid.dim" => {
            if let Some(v) = col.usize(key, value) {
                cfg.grid.dim = v;
            }
        }
        "grid.extent" => {
            if let Some(v) = col.f64_list(key, value) {
                cfg.grid.extent = v;
            }
        }
        "grid.n" => {
            if let Some(v) = col.usize_list(key, value) {
                cfg.grid.n = v;
            }
        }
        "model.a" => {
            if let Some(v) = col.f64(key, value) {
                cfg.model.a = v;
            }
        }
        "model.b" => {
            if let Some(v) = col.f64(key, value) {
                cfg.model.b = v;
            }
        }
        "model.gamma" => {
            if let Some(v) = col.f64(key, value) {
                cfg.model.gamma = v;
            }
        }
        "model.m" => cfg.model.m = value.to_string(),
        "model.p" => cfg.model.p = value.to_string(),
        "model.source" => {
            if let Some(v) = col.bool(key, value) {
                cfg.model.source = v;
            }
        }
        "model.damping" => {
            if let Some(v) = col.bool(key, value) {
                cfg.model.damping = v;
            }
        }
        "model.strong_damping" => {
            if let Some(v) = col.bool(key, value) {
                cfg.model.strong_damping = v;
            }
        }
        "init.kind" => match value {
            "mode" => cfg.init.kind = InitKind::Mode,
            "bump" => cfg.init.kind = InitKind::Bump,
            "file" => cfg.init.kind = InitKind::File,
            _ => col.push(format!("{key}: expected mode, bump, or file, got `{value}`")),
        },
        "init.amplitude" => {
            if let Some(v) = col.f64(key, value) {
                cfg.init.amplitude = v;
            }
        }
        "init.path" => {
            cfg.init.path = if value == "none" { None } else { Some(value.to_string()) };
        }
        "init.center" => {
            if let Some(v) = col.f64_list(key, value) {
                cfg.init.center = v;
            }
        }
        "init.radius" => {
            if let Some(v) = col.f64(key, value) {
                cfg.init.radius = v;
            }
        }
        "init.velocity" => {
            if value == "zero" {
                cfg.init.velocity = VelocityRule::Zero;
            } else if value == "copy" {
                cfg.init.velocity = VelocityRule::Copy;
            } else if let Some(rest) = value.strip_prefix("scale:") {
                if let Some(c) = col.f64(key, rest) {
                    cfg.init.velocity = VelocityRule::Scale(c);
                }
            } else {
                col.push(format!("{key}: expected zero, copy, or scale:<c>, got `{value}`"));
            }
        }
        "run.horizon" => {
            if let Some(v) = col.f64(key, value) {
                cfg.run.horizon = v;
            }
        }
        "run.dt0" => {
            if let Some(v) = col.opt_f64(key, value) {
                cfg.run.dt0 = v;
            }
        }
        "run.dt_floor" => {
            if let Some(v) = col.f64(key, value) {
                cfg.run.dt_floor = v;
            }
        }
        "run.dt_ceiling" => {
            if let Some(v) = col.opt_f64(key, value) {
                cfg.run.dt_ceiling = v;
            }
        }
        "run.sample_stride" => {
            if let Some(v) = col.usize(key, value) {
                cfg.run.sample_stride = v;
            }
        }
        "run.blowup_cap" => {
            if let Some(v) = col.f64(key, value) {
                cfg.run.blowup_cap = v;
            }
        }
        "run.thresholds" => {
            if value == "none" {
                cfg.run.thresholds = Vec::new();
            } else if let Some(v) = col.f64_list(key, value) {
                cfg.run.thresholds = v;
            }
        }
        "embedding.mode" => match value {
            "numeric" => cfg.embedding.mode = EmbedMode::Numeric,
            "analytic" => cfg.embedding.mode = EmbedMode::Analytic,
            "user" => cfg.embedding.mode = EmbedMode::User,
            _ => col.push(format!("{key}: expected numeric, analytic, or user, got `{value}`")),
        },
        "embedding.b" => {
            if let Some(v) = col.opt_f64(key, value) {
                cfg.embedding.b = v;
            }
        }
        "embedding.s" => {
            if let Some(v) = col.opt_f64(key, value) {
                cfg.embedding.s = v;
            }
        }
        "embedding.s_star" => {
            if let Some(v) = col.opt_f64(key, value) {
                cfg.embedding.s_star = v;
            }
        }
        "embedding.seed" => {
            if let Some(v) = col.u64(key, value) {
                cfg.embedding.seed = v;
            }
        }
        "embedding.starts" => {
            if let Some(v) = col.usize(key, value) {
                cfg.embedding.starts = v;
            }
        }
        "embedding.iters" => {
            if let Some(v) = col.usize(key, value) {
                cfg.embedding.iters = v;
            }
        }
        "embedding.slack" => {
            if let Some(v) = col.f64(key, value) {
                cfg.embedding.slack = v;
            }
        }
        "bounds.quad_tol" => {
            if let Some(v) = col.f64(key, value) {
                cfg.bounds.quad_tol = v;
            }
        }
        "bounds.safety" => {
            if let Some(v) = col.f64(key, value) {
                cfg.bounds.safety = v;
            }
        }
        "monitor.e2" => {
            if value == "auto" {
                cfg.monitor.e2 = MonitorE2::Auto;
            } else if value == "off" {
                cfg.monitor.e2 = MonitorE2::Off;
            } else if let Some(v) = col.f64(key, value) {
                cfg.monitor.e2 = MonitorE2::Value(v);
            }
        }
        "monitor.psi" => match value {
            "auto" => cfg.monitor.psi = AutoOff::Auto,
            "off" => cfg.monitor.psi = AutoOff::Off,
            _ => col.push(format!("{key}: expected auto or off, got `{value}`")),
        },
        "monitor.f" => match value {
            "auto" => cfg.monitor.f = AutoOff::Auto,
            "off" => cfg.monitor.f = AutoOff::Off,
            _ => col.push(format!("{key}: expected auto or off, got `{value}`")),
        },
        "monitor.upsilon" => {
            if value == "auto" {
                cfg.monitor.upsilon = UpsilonRule::Auto;
            } else if value == "off" {
                cfg.monitor.upsilon = UpsilonRule::Off;
            } else if let Some(v) = col.f64_list(key, value) {
                if v.len() == 3 {
                    cfg.monitor.upsilon =
                        UpsilonRule::Explicit { t_star: v[0], rho: v[1], omega: v[2] };
                } else {
                    col.push(format!("{key}: expected auto, off, or t,rho,omega"));
                }
            }
        }
        "logholder.a" => {
            if let Some(v) = col.f64(key, value) {
                cfg.logholder.a = v;
            }
        }
        "logholder.delta" => {
            if let Some(v) = col.f64(key, value) {
                cfg.logholder.delta = v;
            }
        }
        "output.dir" => cfg.output.dir = value.to_string(),
        "output.prefix" => cfg.output.prefix = value.to_string(),
        _ => col.push(format!("unknown key `{key}`")),
    }
}

/// Overrides one key on an already-parsed config; used by the sweep path.
pub fn set(cfg: &mut RunConfig, key: &str, value: &str) -> Result<(), ConfigErrors> {
    let mut col = Collector::new();
    apply(cfg, key, value, &mut col);
    validate(cfg, &mut col);
    if col.errors.is_empty() {
        Ok(())
    } else {
        Err(ConfigErrors(col.errors))
    }
}

fn validate(cfg: &RunConfig, col: &mut Collector) {
    let d = cfg.grid.dim;
    if d != 1 && d != 2 {
        col.push(format!("grid.dim: must be 1 or 2, got {d}"));
    }
    if cfg.grid.extent.len() != d && (d == 1 || d == 2) {
        col.push(format!(
            "grid.extent: expected {d} entries, got {}",
            cfg.grid.extent.len()
        ));
    }
    if cfg.grid.n.len() != d && (d == 1 || d == 2) {
        col.push(format!("grid.n: expected {d} entries, got {}", cfg.grid.n.len()));
    }
    for &e in &cfg.grid.extent {
        if e <= 0.0 {
            col.push(format!("grid.extent: entries must be positive, got {e}"));
        }
    }
    for &n in &cfg.grid.n {
        if n < 3 {
            col.push(format!("grid.n: entries must be at least 3, got {n}"));
        }
    }
    if cfg.model.a < 0.0 {
        col.push(format!("model.a: must be non-negative, got {}", cfg.model.a));
    }
    if cfg.model.b < 0.0 {
        col.push(format!("model.b: must be non-negative, got {}", cfg.model.b));
    }
    if cfg.model.gamma <= 0.0 {
        col.push(format!("model.gamma: must be positive, got {}", cfg.model.gamma));
    }
    if cfg.init.amplitude < 0.0 {
        col.push(format!("init.amplitude: must be non-negative, got {}", cfg.init.amplitude));
    }
    if cfg.init.center.len() != d && (d == 1 || d == 2) {
        col.push(format!(
            "init.center: expected {d} entries, got {}",
            cfg.init.center.len()
        ));
    }
    if cfg.init.radius <= 0.0 {
        col.push(format!("init.radius: must be positive, got {}", cfg.init.radius));
    }
    match (cfg.init.kind, &cfg.init.path) {
        (InitKind::File, None) => {
            col.push("init.path: required when init.kind = file".to_string());
        }
        (InitKind::File, Some(p)) if p.is_empty() => {
            col.push("init.path: must not be empty".to_string());
        }
        (InitKind::Mode | InitKind::Bump, Some(_)) => {
            col.push("init.path: only meaningful when init.kind = file".to_string());
        }
        _ => {}
    }
    if cfg.run.horizon <= 0.0 {
        col.push(format!("run.horizon: must be positive, got {}", cfg.run.horizon));
    }
    if cfg.run.dt_floor <= 0.0 {
        col.push(format!("run.dt_floor: must be positive, got {}", cfg.run.dt_floor));
    }
    if let Some(c) = cfg.run.dt_ceiling {
        if c <= 0.0 {
            col.push(format!("run.dt_ceiling: must be positive, got {c}"));
        }
    }
    if let Some(t) = cfg.run.dt0 {
        if t <= 0.0 {
            col.push(format!("run.dt0: must be positive, got {t}"));
        }
    }
    if cfg.run.sample_stride == 0 {
        col.push("run.sample_stride: must be at least 1".to_string());
    }
    if cfg.run.blowup_cap <= 0.0 {
        col.push(format!("run.blowup_cap: must be positive, got {}", cfg.run.blowup_cap));
    }
    for w in cfg.run.thresholds.windows(2) {
        if w[1] <= w[0] {
            col.push("run.thresholds: must be strictly increasing".to_string());
            break;
        }
    }
    if cfg.embedding.mode == EmbedMode::User {
        for (name, v) in [
            ("embedding.b", cfg.embedding.b),
            ("embedding.s", cfg.embedding.s),
            ("embedding.s_star", cfg.embedding.s_star),
        ] {
            match v {
                None => col.push(format!("{name}: required (not auto) when embedding.mode = user")),
                Some(x) if x <= 0.0 => col.push(format!("{name}: must be positive, got {x}")),
                _ => {}
            }
        }
    }
    if cfg.embedding.starts == 0 {
        col.push("embedding.starts: must be at least 1".to_string());
    }
    if cfg.embedding.iters == 0 {
        col.push("embedding.iters: must be at least 1".to_string());
    }
    if cfg.embedding.slack < 0.0 {
        col.push(format!("embedding.slack: must be non-negative, got {}", cfg.embedding.slack));
    }
    if cfg.bounds.quad_tol <= 0.0 {
        col.push(format!("bounds.quad_tol: must be positive, got {}", cfg.bounds.quad_tol));
    }
    if cfg.bounds.safety < 1.0 {
        col.push(format!("bounds.safety: must be at least 1, got {}", cfg.bounds.safety));
    }
    if let MonitorE2::Value(v) = cfg.monitor.e2 {
        if v <= 0.0 {
            col.push(format!("monitor.e2: explicit level must be positive, got {v}"));
        }
    }
    if let UpsilonRule::Explicit { t_star, rho, omega } = cfg.monitor.upsilon {
        if t_star <= 0.0 || rho < 0.0 || omega < 0.0 {
            col.push("monitor.upsilon: need t > 0, rho >= 0, omega >= 0".to_string());
        }
    }
    if cfg.logholder.a <= 0.0 {
        col.push(format!("logholder.a: must be positive, got {}", cfg.logholder.a));
    }
    if cfg.logholder.delta <= 0.0 {
        col.push(format!("logholder.delta: must be positive, got {}", cfg.logholder.delta));
    }
    if cfg.output.dir.is_empty() {
        col.push("output.dir: must not be empty".to_string());
    }
    if cfg.output.prefix.is_empty() {
        col.push("output.prefix: must not be empty".to_string());
    }
}

/// Reads one node value per line; blank lines and `#` comments are skipped.
fn load_node_values(path: &str, grid: &Grid) -> platelab::Result<GridFunction> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| platelab::Error::invalid(format!("init.path `{path}`: {e}")))?;
    let mut values = Vec::with_capacity(grid.len());
    for (idx, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: f64 = body.parse().map_err(|_| {
            platelab::Error::invalid(format!(
                "init.path `{path}` line {}: bad number `{body}`",
                idx + 1
            ))
        })?;
        values.push(v);
    }
    if values.len() != grid.len() {
        return Err(platelab::Error::invalid(format!(
            "init.path `{path}`: {} values for a grid with {} nodes",
            values.len(),
            grid.len()
        )));
    }
    GridFunction::from_values(*grid, values)
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn join_usize(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "auto".to_string(),
    }
}

/// Canonical text form: every key, fixed order, values that reparse exactly.
pub fn emit(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    kv("grid.dim", cfg.grid.dim.to_string());
    kv("grid.extent", join_f64(&cfg.grid.extent));
    kv("grid.n", join_usize(&cfg.grid.n));
    kv("model.a", cfg.model.a.to_string());
    kv("model.b", cfg.model.b.to_string());
    kv("model.gamma", cfg.model.gamma.to_string());
    kv("model.m", cfg.model.m.clone());
    kv("model.p", cfg.model.p.clone());
    kv("model.source", cfg.model.source.to_string());
    kv("model.damping", cfg.model.damping.to_string());
    kv("model.strong_damping", cfg.model.strong_damping.to_string());
    kv(
        "init.kind",
        match cfg.init.kind {
            InitKind::Mode => "mode".to_string(),
            InitKind::Bump => "bump".to_string(),
            InitKind::File => "file".to_string(),
        },
    );
    kv("init.path", cfg.init.path.clone().unwrap_or_else(|| "none".to_string()));
    kv("init.amplitude", cfg.init.amplitude.to_string());
    kv("init.center", join_f64(&cfg.init.center));
    kv("init.radius", cfg.init.radius.to_string());
    kv(
        "init.velocity",
        match cfg.init.velocity {
            VelocityRule::Zero => "zero".to_string(),
            VelocityRule::Copy => "copy".to_string(),
            VelocityRule::Scale(c) => format!("scale:{c}"),
        },
    );
    kv("run.horizon", cfg.run.horizon.to_string());
    kv("run.dt0", opt(cfg.run.dt0));
    kv("run.dt_floor", cfg.run.dt_floor.to_string());
    kv("run.dt_ceiling", opt(cfg.run.dt_ceiling));
    kv("run.sample_stride", cfg.run.sample_stride.to_string());
    kv("run.blowup_cap", cfg.run.blowup_cap.to_string());
    kv(
        "run.thresholds",
        if cfg.run.thresholds.is_empty() {
            "none".to_string()
        } else {
            join_f64(&cfg.run.thresholds)
        },
    );
    kv(
        "embedding.mode",
        match cfg.embedding.mode {
            EmbedMode::Numeric => "numeric".to_string(),
            EmbedMode::Analytic => "analytic".to_string(),
            EmbedMode::User => "user".to_string(),
        },
    );
    kv("embedding.b", opt(cfg.embedding.b));
    kv("embedding.s", opt(cfg.embedding.s));
    kv("embedding.s_star", opt(cfg.embedding.s_star));
    kv("embedding.seed", cfg.embedding.seed.to_string());
    kv("embedding.starts", cfg.embedding.starts.to_string());
    kv("embedding.iters", cfg.embedding.iters.to_string());
    kv("embedding.slack", cfg.embedding.slack.to_string());
    kv("bounds.quad_tol", cfg.bounds.quad_tol.to_string());
    kv("bounds.safety", cfg.bounds.safety.to_string());
    kv(
        "monitor.e2",
        match cfg.monitor.e2 {
            MonitorE2::Auto => "auto".to_string(),
            MonitorE2::Off => "off".to_string(),
            MonitorE2::Value(v) => v.to_string(),
        },
    );
    kv("monitor.psi", if cfg.monitor.psi == AutoOff::Auto { "auto".into() } else { "off".into() });
    kv("monitor.f", if cfg.monitor.f == AutoOff::Auto { "auto".into() } else { "off".into() });
    kv(
        "monitor.upsilon",
        match cfg.monitor.upsilon {
            UpsilonRule::Auto => "auto".to_string(),
            UpsilonRule::Off => "off".to_string(),
            UpsilonRule::Explicit { t_star, rho, omega } => {
                format!("{t_star},{rho},{omega}")
            }
        },
    );
    kv("logholder.a", cfg.logholder.a.to_string());
    kv("logholder.delta", cfg.logholder.delta.to_string());
    kv("output.dir", cfg.output.dir.clone());
    kv("output.prefix", cfg.output.prefix.clone());
    s
}

impl RunConfig {
    pub fn build_grid(&self) -> Result<Grid, ConfigErrors> {
        let res = match self.grid.dim {
            1 => Grid::line(self.grid.extent[0], self.grid.n[0]),
            2 => Grid::rectangle(
                [self.grid.extent[0], self.grid.extent[1]],
                [self.grid.n[0], self.grid.n[1]],
            ),
            _ => unreachable!("validated"),
        };
        res.map_err(|e| ConfigErrors(vec![format!("grid: {e}")]))
    }

    pub fn build_model(&self, grid: &Grid) -> Result<ModelParams, ConfigErrors> {
        let mut errs = Vec::new();
        let m = ExponentField::from_spec(*grid, &self.model.m)
            .map_err(|e| errs.push(format!("model.m: {e}")))
            .ok();
        let p = ExponentField::from_spec(*grid, &self.model.p)
            .map_err(|e| errs.push(format!("model.p: {e}")))
            .ok();
        let (Some(m), Some(p)) = (m, p) else {
            return Err(ConfigErrors(errs));
        };
        let mut params = ModelParams::new(self.model.a, self.model.b, self.model.gamma, m, p)
            .map_err(|e| ConfigErrors(vec![format!("model: {e}")]))?;
        params.toggles.source = self.model.source;
        params.toggles.damping = self.model.damping;
        params.toggles.strong_damping = self.model.strong_damping;
        Ok(params)
    }

    /// For `mode` data the amplitude is the L2 norm of u0; for `bump` it is
    /// the peak value; `file` data is loaded verbatim.
    pub fn build_init(&self, grid: &Grid) -> Result<(GridFunction, GridFunction), ConfigErrors> {
        let u0 = match self.init.kind {
            InitKind::Mode => platelab::init::clamped_mode(grid, self.init.amplitude),
            InitKind::Bump => platelab::init::bump(
                grid,
                self.init.amplitude,
                &self.init.center,
                self.init.radius,
            ),
            InitKind::File => load_node_values(
                self.init.path.as_deref().unwrap_or_default(),
                grid,
            ),
        }
        .map_err(|e| ConfigErrors(vec![format!("init: {e}")]))?;
        let v0 = match self.init.velocity {
            VelocityRule::Zero => grid.zeros(),
            VelocityRule::Copy => u0.clone(),
            VelocityRule::Scale(c) => u0.scale(c),
        };
        Ok((u0, v0))
    }

    /// Effective ceiling: explicit value, or the documented default h^2/4.
    pub fn effective_dt_ceiling(&self, grid: &Grid) -> f64 {
        let h = grid.h_min();
        self.run.dt_ceiling.unwrap_or(h * h / 4.0)
    }

    pub fn build_run_spec(
        &self,
        params: ModelParams,
        u0: GridFunction,
        v0: GridFunction,
    ) -> Result<RunSpec, ConfigErrors> {
        let grid = *u0.grid();
        let mut spec = RunSpec::new(params, u0, v0, self.run.horizon)
            .map_err(|e| ConfigErrors(vec![format!("run: {e}")]))?;
        let ceiling = self.effective_dt_ceiling(&grid);
        spec.dt_ceiling = ceiling;
        spec.dt0 = self.run.dt0.unwrap_or(ceiling).min(ceiling);
        spec.dt_floor = self.run.dt_floor;
        spec.sample_stride = self.run.sample_stride;
        spec.blowup_norm_cap = self.run.blowup_cap;
        spec.thresholds = self.run.thresholds.clone();
        Ok(spec)
    }

    pub fn estimate_mode(&self) -> EstimateMode {
        match self.embedding.mode {
            EmbedMode::Numeric => EstimateMode::Numeric(AscentParams {
                starts: self.embedding.starts,
                iters: self.embedding.iters,
                seed: self.embedding.seed,
                slack: self.embedding.slack,
            }),
            EmbedMode::Analytic => EstimateMode::Analytic,
            EmbedMode::User => EstimateMode::UserSupplied {
                b: self.embedding.b.expect("validated"),
                s: self.embedding.s.expect("validated"),
                s_star: self.embedding.s_star.expect("validated"),
            },
        }
    }

    /// Explicit upsilon monitor parameters, when configured by hand.
    pub fn explicit_upsilon(&self) -> Option<UpsilonParams> {
        match self.monitor.upsilon {
            UpsilonRule::Explicit { t_star, rho, omega } => {
                Some(UpsilonParams { t_star, rho, omega })
            }
            _ => None,
        }
    }
}
