//! Variable-exponent Lebesgue machinery on grid functions: exponent fields,
//! the modular `A_p(f) = sum |f_i|^{p_i} * vol`, the Luxemburg norm
//! `inf{lambda > 0 : A_p(f/lambda) <= 1}`, the modular/norm sandwich, and an
//! advisory log-Holder regularity check.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

pub const DEFAULT_NORM_TOL: f64 = 1e-12;

/// Grid-sampled exponent function (a `p(x)` or `m(x)`) with cached extrema.
#[derive(Debug, Clone)]
pub struct ExponentField {
    grid: Grid,
    values: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl ExponentField {
    /// Strict constructor: every nodal exponent must be finite and > 1.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let mut field = Self::new_unchecked(grid, values)?;
        let report = validate_exponent_field(&mut field, 1.0, f64::INFINITY)?;
        if !report.passed {
            return Err(Error::invalid(format!(
                "exponent field must satisfy 1 < q(x) < inf; {} offending nodes, first at index {}",
                report.offending.len(),
                report.offending[0]
            )));
        }
        Ok(field)
    }

    /// Builds the field and caches extrema without enforcing the range
    /// invariant; pair with [`validate_exponent_field`].
    pub fn new_unchecked(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch { expected: grid.len(), got: values.len() });
        }
        if values.is_empty() {
            return Err(Error::invalid("exponent field is empty"));
        }
        let (lo, hi) = extrema(&values);
        Ok(ExponentField { grid, values, lo, hi })
    }

    pub fn constant(grid: Grid, q: f64) -> Result<Self> {
        Self::new(grid, vec![q; grid.len()])
    }

    pub fn sample(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self::new(grid, values)
    }

    /// Parses a config expression and samples it on the grid. Forms:
    /// `constant:<v>`, `piecewise:<v1>,<v2>@<x_split>` (split on the first
    /// coordinate, left-closed), `affine:<c0>+<c1>*x`.
    pub fn from_spec(grid: Grid, spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("exponent expression '{spec}' lacks a 'kind:' prefix")))?;
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad number '{s}' in exponent expression '{spec}'")))
        };
        match kind.trim() {
            "constant" => Self::constant(grid, parse(rest)?),
            "piecewise" => {
                let (vals, split) = rest
                    .split_once('@')
                    .ok_or_else(|| Error::invalid(format!("piecewise exponent '{spec}' needs '<v1>,<v2>@<x_split>'")))?;
                let (v1, v2) = vals
                    .split_once(',')
                    .ok_or_else(|| Error::invalid(format!("piecewise exponent '{spec}' needs two comma-separated values")))?;
                let (v1, v2, xs) = (parse(v1)?, parse(v2)?, parse(split)?);
                Self::sample(grid, |c| if c[0] < xs { v1 } else { v2 })
            }
            "affine" => {
                let (c0, c1x) = rest
                    .split_once('+')
                    .ok_or_else(|| Error::invalid(format!("affine exponent '{spec}' needs '<c0>+<c1>*x'")))?;
                let c1 = c1x
                    .trim()
                    .strip_suffix("*x")
                    .or_else(|| c1x.trim().strip_suffix("x"))
                    .ok_or_else(|| Error::invalid(format!("affine exponent '{spec}' must end in '*x'")))?;
                let (c0, c1) = (parse(c0)?, parse(c1)?);
                Self::sample(grid, |c| c0 + c1 * c[0])
            }
            other => Err(Error::invalid(format!("unknown exponent kind '{other}' (expected constant, piecewise, affine)"))),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cached essential infimum (p- or m-).
    pub fn lo(&self) -> f64 {
        self.lo
    }

    /// Cached essential supremum (p+ or m+).
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_constant(&self) -> bool {
        self.lo == self.hi
    }
}

fn extrema(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Result of range-checking an exponent field against a required range.
#[derive(Debug, Clone)]
pub struct ExponentValidation {
    pub passed: bool,
    /// Node indices outside `(1, inf) ∩ [required_lo, required_hi]`.
    pub offending: Vec<usize>,
    pub lo: f64,
    pub hi: f64,
    /// Whether the cached extrema had drifted from the nodal values.
    pub cache_repaired: bool,
}

/// Checks `required_lo <= q(x) <= required_hi` (and the hard `1 < q(x)` and
/// finiteness invariants) at every node, recomputing the cached extrema.
pub fn validate_exponent_field(
    field: &mut ExponentField,
    required_lo: f64,
    required_hi: f64,
) -> Result<ExponentValidation> {
    if field.values.is_empty() {
        return Err(Error::invalid("exponent field is empty"));
    }
    let (lo, hi) = extrema(&field.values);
    let cache_repaired = lo != field.lo || hi != field.hi;
    field.lo = lo;
    field.hi = hi;
    let mut offending = Vec::new();
    for (i, &q) in field.values.iter().enumerate() {
        if !q.is_finite() || q <= 1.0 || q < required_lo || q > required_hi {
            offending.push(i);
        }
    }
    Ok(ExponentValidation { passed: offending.is_empty(), offending, lo, hi, cache_repaired })
}

/// Outcome of the advisory log-Holder regularity scan.
#[derive(Debug, Clone, Copy)]
pub struct LogHolderReport {
    /// Largest `|q(x) - q(y)| * (-log|x - y|)` over scanned pairs with
    /// `0 < |x - y| < delta`.
    pub max_violation: f64,
    /// The configured constant the scan was checked against.
    pub a_estimate: f64,
    pub passed: bool,
}

/// Scans node pairs closer than `delta` for the log-Holder modulus. All pairs
/// are scanned up to a node budget; above it a deterministic stride subsample
/// is used, always keeping grid-adjacent pairs (the tightest distances).
pub fn log_holder_check(field: &ExponentField, a: f64, delta: f64) -> Result<LogHolderReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("log-Holder delta must lie in (0, 1), got {delta}")));
    }
    if !(a > 0.0) {
        return Err(Error::invalid(format!("log-Holder constant must be positive, got {a}")));
    }
    let grid = &field.grid;
    let n = grid.len();
    let q = &field.values;
    let mut max_violation: f64 = 0.0;
    let mut consider = |qi: f64, qj: f64, dist: f64| {
        if dist > 0.0 && dist < delta {
            let v = (qi - qj).abs() * (-dist.ln());
            if v > max_violation {
                max_violation = v;
            }
        }
    };

    // adjacent pairs first: smallest distances dominate the modulus
    match grid.dim() {
        1 => {
            for i in 0..n - 1 {
                consider(q[i], q[i + 1], grid.h_axis(0));
            }
        }
        _ => {
            let (nx, ny) = (grid.n_axis(0), grid.n_axis(1));
            for iy in 0..ny {
                for ix in 0..nx {
                    let i = iy * nx + ix;
                    if ix + 1 < nx {
                        consider(q[i], q[i + 1], grid.h_axis(0));
                    }
                    if iy + 1 < ny {
                        consider(q[i], q[i + nx], grid.h_axis(1));
                    }
                }
            }
        }
    }

    const NODE_BUDGET: usize = 2048;
    let stride = n.div_ceil(NODE_BUDGET).max(1);
    let picked: Vec<usize> = (0..n).step_by(stride).collect();
    for (a_pos, &i) in picked.iter().enumerate() {
        let ci = grid.coords(i);
        for &j in &picked[a_pos + 1..] {
            let cj = grid.coords(j);
            let dx = ci[0] - cj[0];
            let dy = ci[1] - cj[1];
            let dist = match grid.dim() {
                1 => dx.abs(),
                _ => (dx * dx + dy * dy).sqrt(),
            };
            consider(q[i], q[j], dist);
        }
    }

    Ok(LogHolderReport { max_violation, a_estimate: a, passed: max_violation <= a })
}

/// `|x|^p` with fast paths for the small integer exponents that dominate the
/// model configurations.
#[inline]
pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else if p == 5.0 {
        let s = a * a;
        s * s * a
    } else {
        a.powf(p)
    }
}

fn check_field_grid(f: &GridFunction, p: &ExponentField) -> Result<()> {
    if f.grid() != &p.grid {
        return Err(Error::invalid("function and exponent field live on different grids"));
    }
    Ok(())
}

/// The modular `A_p(f)`: cell-volume quadrature of `|f(x)|^{p(x)}`.
pub fn modular(f: &GridFunction, p: &ExponentField) -> Result<f64> {
    check_field_grid(f, p)?;
    Ok(modular_scaled(f.values(), p, 1.0) * f.grid().cell_volume())
}

/// Quadrature-weight-free sum of `|f_i / lambda|^{p_i}`; callers multiply by
/// the cell volume. Split out so the norm bisection avoids allocation.
pub(crate) fn modular_scaled(f: &[f64], p: &ExponentField, inv_lambda: f64) -> f64 {
    f.iter().zip(&p.values).map(|(&v, &q)| pow_abs(v * inv_lambda, q)).sum()
}

/// Luxemburg norm by bracketing plus bisection to relative tolerance `tol`.
/// Returns 0 for the zero function; equals the plain `L^q` norm when the
/// exponent is constant.
pub fn luxemburg_norm(f: &GridFunction, p: &ExponentField, tol: f64) -> Result<f64> {
    check_field_grid(f, p)?;
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("norm tolerance must be positive, got {tol}")));
    }
    if !f.is_finite() {
        return Err(Error::invalid("luxemburg norm of a non-finite function"));
    }
    let linf = f.linf();
    if linf == 0.0 {
        return Ok(0.0);
    }
    let vol = f.grid().cell_volume();
    // g(lambda) = modular(f/lambda) - 1, strictly decreasing in lambda
    let g = |lambda: f64| modular_scaled(f.values(), p, 1.0 / lambda) * vol - 1.0;
    let mut hi = linf.max(1.0) * f.grid().omega_measure().max(1.0);
    let mut lo = f64::EPSILON;
    // expand geometrically until the bracket straddles the crossing; powf
    // saturating to +inf keeps the comparisons meaningful throughout
    let mut guard = 0;
    while g(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 4096 {
            return Err(Error::numeric("luxemburg bracket expansion ran away upward"));
        }
    }
    if g(lo) < 0.0 {
        // the norm is below machine epsilon scale; chase it down
        while g(lo) < 0.0 && lo > f64::MIN_POSITIVE {
            hi = lo;
            lo *= 0.5;
            guard += 1;
            if guard > 8192 {
                break;
            }
        }
        if g(lo) < 0.0 {
            return Ok(0.0);
        }
    }
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= tol * mid {
            return Ok(mid);
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of the modular/norm sandwich check
/// `min{n^{p-}, n^{p+}} <= A_p(f) <= max{n^{p-}, n^{p+}}`.
#[derive(Debug, Clone, Copy)]
pub struct SandwichCheck {
    pub norm: f64,
    pub modular: f64,
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
}

pub fn check_sandwich(f: &GridFunction, p: &ExponentField) -> Result<SandwichCheck> {
    let norm = luxemburg_norm(f, p, DEFAULT_NORM_TOL)?;
    if norm == 0.0 {
        return Err(Error::invalid("sandwich check needs a nonzero function"));
    }
    let m = modular(f, p)?;
    let a = norm.powf(p.lo);
    let b = norm.powf(p.hi);
    let (lower, upper) = if a <= b { (a, b) } else { (b, a) };
    // slack covers the bisection tolerance on the norm
    let slack = 64.0 * DEFAULT_NORM_TOL * p.hi;
    let passed = m >= lower * (1.0 - slack) && m <= upper * (1.0 + slack);
    Ok(SandwichCheck { norm, modular: m, lower, upper, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_function(grid: Grid, rng: &mut ChaCha8Rng, scale: f64) -> GridFunction {
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
        GridFunction::from_values(grid, values).unwrap()
    }

    #[test]
    fn modular_trivial_values() {
        let g = Grid::line(1.0, 99).unwrap();
        let p = ExponentField::constant(g, 2.0).unwrap();
        assert_eq!(modular(&g.zeros(), &p).unwrap(), 0.0);
        // quadrature sees the interior mass n*h, not |Omega|
        let ones = g.sample(|_| 1.0);
        let m = modular(&ones, &p).unwrap();
        assert!((m - 0.99).abs() < 1e-12);
        let twos = g.sample(|_| 2.0);
        let m2 = modular(&twos, &p).unwrap();
        assert!((m2 - 4.0 * 0.99).abs() < 1e-12);
    }

    #[test]
    fn constant_exponent_reduces_to_lq_norm() {
        let g = Grid::line(1.3, 61).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for q in [2.0, 2.7, 4.0, 5.5] {
            let p = ExponentField::constant(g, q).unwrap();
            for _ in 0..50 {
                let f = random_function(g, &mut rng, 3.0);
                let n = luxemburg_norm(&f, &p, 1e-12).unwrap();
                let m = modular(&f, &p).unwrap();
                assert!((n - m.powf(1.0 / q)).abs() <= 1e-10 * n.max(1e-30), "q={q}");
            }
        }
    }

    #[test]
    fn norm_is_homogeneous() {
        let g = Grid::line(2.0, 47).unwrap();
        let p = ExponentField::from_spec(g, "piecewise:2,3@1").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..40 {
            let f = random_function(g, &mut rng, 2.0);
            let c: f64 = rng.gen_range(0.01..100.0);
            let n1 = luxemburg_norm(&f.scale(c), &p, 1e-13).unwrap();
            let n0 = luxemburg_norm(&f, &p, 1e-13).unwrap();
            assert!((n1 - c * n0).abs() <= 1e-10 * n1.max(1e-30));
        }
    }

    #[test]
    fn norm_scales_extreme_magnitudes() {
        let g = Grid::line(1.0, 31).unwrap();
        let p = ExponentField::from_spec(g, "affine:2+1*x").unwrap();
        let f = g.sample(|c| (c[0] * 9.0).sin());
        let n0 = luxemburg_norm(&f, &p, 1e-12).unwrap();
        for c in [1e-180_f64, 1e-30, 1e30, 1e180] {
            let n = luxemburg_norm(&f.scale(c), &p, 1e-12).unwrap();
            assert!((n / (c * n0) - 1.0).abs() < 1e-9, "c={c}: {n} vs {}", c * n0);
        }
    }

    #[test]
    fn modular_at_the_norm_is_one() {
        let g = Grid::line(2.0, 53).unwrap();
        let p = ExponentField::from_spec(g, "piecewise:2.5,4@0.8").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let f = random_function(g, &mut rng, 5.0);
            let n = luxemburg_norm(&f, &p, 1e-13).unwrap();
            let scaled = f.scale(1.0 / n);
            let m = modular(&scaled, &p).unwrap();
            assert!(m > 1.0 - 1e-9 && m < 1.0 + 1e-9, "modular at norm: {m}");
        }
    }

    #[test]
    fn piecewise_norm_matches_scalar_oracle_with_discrete_masses() {
        // p = 2 left of 1, p = 3 right of it, f = 1 on [0,2]; the discrete
        // equation is w2/l^2 + w3/l^3 = 1 with the actual nodal masses
        let g = Grid::line(2.0, 19).unwrap();
        let h = g.h_axis(0);
        let p = ExponentField::from_spec(g, "piecewise:2,3@1").unwrap();
        let f = g.sample(|_| 1.0);
        let (mut w2, mut w3) = (0.0, 0.0);
        for i in 0..g.len() {
            if g.coords(i)[0] < 1.0 {
                w2 += h;
            } else {
                w3 += h;
            }
        }
        let oracle = crate::solver::bisect(|l| w2 / (l * l) + w3 / (l * l * l) - 1.0, 0.5, 4.0, 1e-14).unwrap();
        let n = luxemburg_norm(&f, &p, 1e-13).unwrap();
        assert!((n - oracle).abs() <= 1e-10 * oracle, "{n} vs {oracle}");
    }

    #[test]
    fn piecewise_norm_converges_to_the_plastic_number() {
        // continuum limit of the previous case: lambda^3 = lambda + 1
        let plastic = 1.3247179572447460;
        let mut prev_err = f64::INFINITY;
        for n in [199, 799, 3199] {
            let g = Grid::line(2.0, n).unwrap();
            let p = ExponentField::from_spec(g, "piecewise:2,3@1").unwrap();
            let f = g.sample(|_| 1.0);
            let norm = luxemburg_norm(&f, &p, 1e-13).unwrap();
            let err = (norm - plastic).abs();
            assert!(err < prev_err, "no improvement at n={n}");
            prev_err = err;
        }
        assert!(prev_err < 2e-4, "coarsest-to-finest error {prev_err}");
    }

    #[test]
    fn sandwich_holds_on_random_fields() {
        let g = Grid::line(2.0, 41).unwrap();
        let p = ExponentField::from_spec(g, "piecewise:2,3@1").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for i in 0..1000 {
            let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
            let f = random_function(g, &mut rng, scale);
            if f.linf() == 0.0 {
                continue;
            }
            let s = check_sandwich(&f, &p).unwrap();
            assert!(s.passed, "case {i}: {s:?}");
            assert!(s.lower <= s.upper);
        }
    }

    #[test]
    fn sandwich_collapses_for_constant_exponent() {
        let g = Grid::line(1.0, 33).unwrap();
        let p = ExponentField::constant(g, 3.0).unwrap();
        let f = g.sample(|c| 1.0 + c[0]);
        let s = check_sandwich(&f, &p).unwrap();
        assert!((s.lower - s.upper).abs() <= 1e-9 * s.upper);
        assert!((s.lower - s.modular).abs() <= 1e-9 * s.modular);
    }

    #[test]
    fn embedding_monotonicity_between_nested_exponents() {
        // q(x) <= p(x) pointwise gives norm_q <= (1 + |Omega|) norm_p
        let g = Grid::line(2.0, 37).unwrap();
        let p = ExponentField::from_spec(g, "piecewise:3,4@1.2").unwrap();
        let q = ExponentField::from_spec(g, "affine:2+0.4*x").unwrap();
        let bound = 1.0 + g.omega_measure();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let f = random_function(g, &mut rng, 4.0);
            let nq = luxemburg_norm(&f, &q, 1e-12).unwrap();
            let np = luxemburg_norm(&f, &p, 1e-12).unwrap();
            assert!(nq <= bound * np * (1.0 + 1e-9), "{nq} vs {}", bound * np);
        }
    }

    #[test]
    fn validation_reports_offending_nodes_and_repairs_caches() {
        let g = Grid::line(1.0, 9).unwrap();
        let mut field = ExponentField::new_unchecked(g, vec![4.0; 9]).unwrap();
        let r = validate_exponent_field(&mut field, 2.0, 10.0).unwrap();
        assert!(r.passed && r.offending.is_empty());

        let mut vals = vec![3.0; 9];
        vals[4] = 1.0;
        let mut bad = ExponentField::new_unchecked(g, vals).unwrap();
        let r = validate_exponent_field(&mut bad, 2.0, 10.0).unwrap();
        assert!(!r.passed);
        assert_eq!(r.offending, vec![4]);
        assert!(ExponentField::new(g, bad.values().to_vec()).is_err());

        // stale caches get recomputed
        let mut drifted = ExponentField::new_unchecked(g, vec![2.5; 9]).unwrap();
        drifted.values_mut_for_tests()[0] = 2.0;
        let r = validate_exponent_field(&mut drifted, 2.0, 6.0).unwrap();
        assert!(r.cache_repaired);
        assert_eq!(r.lo, 2.0);
        assert!(r.passed);
    }

    #[test]
    fn piecewise_validation_extrema() {
        let g = Grid::line(2.0, 21).unwrap();
        let mut field = ExponentField::from_spec(g, "piecewise:2,3@1").unwrap();
        let r = validate_exponent_field(&mut field, 2.0, 6.0).unwrap();
        assert!(r.passed);
        assert_eq!(r.lo, 2.0);
        assert_eq!(r.hi, 3.0);
    }

    #[test]
    fn log_holder_scan_cases() {
        let g = Grid::line(1.0, 99).unwrap();
        let constant = ExponentField::constant(g, 4.0).unwrap();
        let r = log_holder_check(&constant, 10.0, 0.5).unwrap();
        assert_eq!(r.max_violation, 0.0);
        assert!(r.passed);

        let smooth = ExponentField::sample(g, |c| 2.0 + c[0]).unwrap();
        let r = log_holder_check(&smooth, 10.0, 0.5).unwrap();
        assert!(r.passed, "max violation {}", r.max_violation);
        // |dq| = |dx| and sup of t * -ln t on (0, 1/2) is 1/e
        assert!(r.max_violation <= 1.0 / std::f64::consts::E + 1e-12);

        let jump = ExponentField::sample(g, |c| if c[0] < 0.5 { 2.0 } else { 3.0 }).unwrap();
        let r = log_holder_check(&jump, 0.1, 0.5).unwrap();
        assert!(!r.passed);
        // adjacent pair across the jump: 1.0 * -ln(h) with h = 0.01
        assert!((r.max_violation - (-(0.01f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn spec_parsing_accepts_and_rejects() {
        let g = Grid::line(2.0, 9).unwrap();
        assert_eq!(ExponentField::from_spec(g, "constant:4").unwrap().lo(), 4.0);
        let aff = ExponentField::from_spec(g, "affine:2+0.5*x").unwrap();
        assert!(aff.lo() > 2.0 && aff.hi() < 3.0);
        assert!(ExponentField::from_spec(g, "constant:").is_err());
        assert!(ExponentField::from_spec(g, "piecewise:2,3").is_err());
        assert!(ExponentField::from_spec(g, "affine:2+0.5*y").is_err());
        assert!(ExponentField::from_spec(g, "fourier:1").is_err());
        // nodes are strictly interior, so 1 + 0.1 x stays above 1 and passes
        assert!(ExponentField::from_spec(g, "affine:1+0.1*x").is_ok());
        // sampled exponents must stay above 1
        assert!(ExponentField::from_spec(g, "affine:0.9+0.01*x").is_err());
        assert!(ExponentField::from_spec(g, "constant:1").is_err());
    }

    impl ExponentField {
        fn values_mut_for_tests(&mut self) -> &mut [f64] {
            &mut self.values
        }
    }
}
