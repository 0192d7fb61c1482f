//! Shared numeric kernels: preconditioned conjugate gradients, smallest
//! eigenvalue solvers (inverse iteration and a dense fallback), scalar root
//! bracketing, adaptive Simpson quadrature, and small least-squares fits.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Conjugate gradients on an SPD operator given as a matrix-free apply.
/// `diag` is the Jacobi preconditioner (pass `None` for identity).
/// Converges when `||r|| <= tol * ||b||`; the zero right-hand side returns
/// zero immediately.
pub fn conjugate_gradient(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    diag: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = b.len();
    assert_eq!(x.len(), n);
    let dot = |a: &[f64], c: &[f64]| -> f64 { a.iter().zip(c).map(|(p, q)| p * q).sum() };
    let norm_b = dot(b, b).sqrt();
    if norm_b == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let precond = |r: &[f64], z: &mut [f64]| match diag {
        Some(d) => {
            for i in 0..r.len() {
                z[i] = r[i] / d[i];
            }
        }
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let target = tol * norm_b;
    for it in 0..max_iter {
        if dot(&r, &r).sqrt() <= target {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return Err(Error::numeric(format!("conjugate gradients lost positive definiteness (pAp = {pap})")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if dot(&r, &r).sqrt() <= target {
        Ok(max_iter)
    } else {
        Err(Error::numeric(format!("conjugate gradients failed to converge in {max_iter} iterations")))
    }
}

/// Smallest eigenvalue of an SPD operator by inverse power iteration with CG
/// inner solves. Returns `(lambda, eigenvector)`; the vector is normalized in
/// the Euclidean sense. Deterministic for a fixed start vector.
pub fn smallest_eigenvalue_inverse_iteration(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    n: usize,
    start: Option<&[f64]>,
    tol: f64,
    max_outer: usize,
) -> Result<(f64, Vec<f64>)> {
    let mut x: Vec<f64> = match start {
        Some(s) => s.to_vec(),
        // deterministic non-degenerate default start
        None => (0..n).map(|i| 1.0 + ((i * 2654435761) % 1000) as f64 * 1e-4).collect(),
    };
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..max_outer {
        y.copy_from_slice(&x);
        conjugate_gradient(apply, &x, &mut y, None, 1e-12, 40 * n + 200)?;
        let ny = norm(&y);
        if !(ny > 0.0) {
            return Err(Error::numeric("inverse iteration collapsed to zero"));
        }
        for i in 0..n {
            x[i] = y[i] / ny;
        }
        apply(&x, &mut ax);
        lambda = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let mut res = 0.0;
        for i in 0..n {
            let d = ax[i] - lambda * x[i];
            res += d * d;
        }
        if res.sqrt() <= tol * lambda.abs().max(f64::MIN_POSITIVE) {
            return Ok((lambda, x));
        }
    }
    Err(Error::numeric(format!("inverse iteration did not converge (last lambda = {lambda})")))
}

/// Smallest eigenvalue through dense symmetric assembly. Intended for
/// operators whose CG conditioning is poor (the clamped biharmonic); capped
/// so that the O(n^3) solve stays cheap.
pub fn smallest_eigenvalue_dense(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    n: usize,
    cap: usize,
) -> Result<f64> {
    if n > cap {
        return Err(Error::numeric(format!("dense eigensolve capped at {cap} unknowns, got {n}")));
    }
    let mut col = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        apply(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    // symmetrize away roundoff before the eigensolve
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    let eig = m.symmetric_eigenvalues();
    Ok(eig.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Bisection for a continuous scalar function with a sign change on `[lo, hi]`.
/// Runs to relative interval width `rel_tol` and returns the midpoint.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::invalid(format!("bisection bracket [{lo}, {hi}] has no sign change")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Adaptive Simpson quadrature with an absolute tolerance budget.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        // The halves agree to roundoff: further splitting cannot observably
        // improve the estimate even if the halved budget is stricter.
        if delta.abs() <= f64::EPSILON * (left.abs() + right.abs()) {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::numeric("adaptive quadrature recursion limit reached"));
        }
        let l = rec(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)?;
        let r = rec(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }
    if !(b > a) {
        return Err(Error::invalid(format!("quadrature interval [{a}, {b}] is empty")));
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    rec(f, a, fa, b, fb, fm, whole, tol, 64)
}

/// Ordinary least squares for `y ~ intercept + slope * x`.
/// Returns `(intercept, slope)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("linear fit needs at least two points"));
    }
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    if det.abs() <= f64::EPSILON * n * sxx.abs().max(1.0) {
        return Err(Error::numeric("degenerate least-squares system"));
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    Ok((intercept, slope))
}

/// Observed convergence order between two error levels at a mesh ratio of 2.
pub fn observed_order(coarse_err: f64, fine_err: f64) -> f64 {
    (coarse_err / fine_err).log2()
}
