//! Uniform interior grids on an interval or a rectangle, plus the discrete
//! operators used everywhere else: Dirichlet laplacian, clamped biharmonic,
//! gradient quadratic form, and the cell-volume quadrature.
//!
//! Conventions: with `n` interior nodes per axis the spacing is
//! `h = extent / (n + 1)` and node `i` sits at `(i + 1) h`, so boundary values
//! live off the stored vector. The laplacian extends by zero (Dirichlet);
//! the biharmonic composes two laplacians with clamped ghost nodes, where the
//! ghost value mirrors the first interior value across the boundary.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 2;

/// Uniform tensor grid of interior nodes. Cheap to copy; functions carry one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; MAX_DIM],
    extent: [f64; MAX_DIM],
    h: [f64; MAX_DIM],
}

impl Grid {
    pub fn line(extent: f64, n: usize) -> Result<Self> {
        Self::new(1, [extent, 1.0], [n, 1])
    }

    pub fn rectangle(extent: [f64; 2], n: [usize; 2]) -> Result<Self> {
        Self::new(2, extent, n)
    }

    fn new(dim: usize, extent: [f64; 2], n: [usize; 2]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::invalid(format!("grid dim must be 1 or 2, got {dim}")));
        }
        let mut h = [0.0; MAX_DIM];
        for a in 0..dim {
            if !(extent[a] > 0.0) || !extent[a].is_finite() {
                return Err(Error::invalid(format!("axis {a}: extent must be positive, got {}", extent[a])));
            }
            if n[a] < 3 {
                return Err(Error::invalid(format!("axis {a}: need at least 3 interior nodes, got {}", n[a])));
            }
            h[a] = extent[a] / (n[a] + 1) as f64;
        }
        let mut n = n;
        let mut extent = extent;
        for a in dim..MAX_DIM {
            n[a] = 1;
            extent[a] = 1.0;
            h[a] = 1.0;
        }
        Ok(Grid { dim, n, extent, h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Interior nodes along axis `a`.
    pub fn n_axis(&self, a: usize) -> usize {
        self.n[a]
    }

    pub fn extent_axis(&self, a: usize) -> f64 {
        self.extent[a]
    }

    pub fn h_axis(&self, a: usize) -> f64 {
        self.h[a]
    }

    pub fn h_min(&self) -> f64 {
        (0..self.dim).map(|a| self.h[a]).fold(f64::INFINITY, f64::min)
    }

    /// Total interior node count.
    pub fn len(&self) -> usize {
        (0..self.dim).map(|a| self.n[a]).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of the cell owned by each node; the quadrature weight.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.h[a]).product()
    }

    /// |Omega| = product of extents.
    pub fn omega_measure(&self) -> f64 {
        (0..self.dim).map(|a| self.extent[a]).product()
    }

    /// Coordinates of node `idx`; x varies fastest in 2D.
    pub fn coords(&self, idx: usize) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        match self.dim {
            1 => c[0] = (idx + 1) as f64 * self.h[0],
            _ => {
                let nx = self.n[0];
                let ix = idx % nx;
                let iy = idx / nx;
                c[0] = (ix + 1) as f64 * self.h[0];
                c[1] = (iy + 1) as f64 * self.h[1];
            }
        }
        c
    }

    /// Samples a scalar field at the interior nodes.
    pub fn sample(&self, f: impl Fn([f64; MAX_DIM]) -> f64) -> GridFunction {
        let values = (0..self.len()).map(|i| f(self.coords(i))).collect();
        GridFunction { grid: *self, values }
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction { grid: *self, values: vec![0.0; self.len()] }
    }
}

/// Nodal values over a grid's interior.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        GridFunction { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }
}

fn check_same_grid(u: &GridFunction, v: &GridFunction) -> Result<()> {
    if u.grid != v.grid {
        return Err(Error::invalid("grid functions live on different grids"));
    }
    Ok(())
}

/// Weighted inner product `sum u_i v_i * cell_volume`, the discrete L2 pairing.
pub fn l2_inner(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    check_same_grid(u, v)?;
    let s: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    Ok(s * u.grid.cell_volume())
}

pub fn l2_norm_sq(u: &GridFunction) -> f64 {
    let s: f64 = u.values.iter().map(|a| a * a).sum();
    s * u.grid.cell_volume()
}

/// Second-order Dirichlet laplacian: 3-point (1D) / 5-point (2D) stencil with
/// zero extension past the boundary.
pub fn laplacian(u: &GridFunction) -> GridFunction {
    let mut out = vec![0.0; u.values.len()];
    laplacian_into(&u.grid, &u.values, &mut out);
    GridFunction { grid: u.grid, values: out }
}

pub(crate) fn laplacian_into(grid: &Grid, u: &[f64], out: &mut [f64]) {
    match grid.dim {
        1 => {
            let n = grid.n[0];
            let ih2 = 1.0 / (grid.h[0] * grid.h[0]);
            for i in 0..n {
                let l = if i > 0 { u[i - 1] } else { 0.0 };
                let r = if i + 1 < n { u[i + 1] } else { 0.0 };
                out[i] = (l - 2.0 * u[i] + r) * ih2;
            }
        }
        _ => {
            let (nx, ny) = (grid.n[0], grid.n[1]);
            let ihx2 = 1.0 / (grid.h[0] * grid.h[0]);
            let ihy2 = 1.0 / (grid.h[1] * grid.h[1]);
            for iy in 0..ny {
                let row = iy * nx;
                for ix in 0..nx {
                    let c = u[row + ix];
                    let xl = if ix > 0 { u[row + ix - 1] } else { 0.0 };
                    let xr = if ix + 1 < nx { u[row + ix + 1] } else { 0.0 };
                    let yl = if iy > 0 { u[row + ix - nx] } else { 0.0 };
                    let yr = if iy + 1 < ny { u[row + ix + nx] } else { 0.0 };
                    out[row + ix] = (xl - 2.0 * c + xr) * ihx2 + (yl - 2.0 * c + yr) * ihy2;
                }
            }
        }
    }
}

/// Clamped-plate biharmonic: laplacian composed with itself on a padded array
/// whose boundary ring is zero and whose ghost ring mirrors the first interior
/// value (discrete `u = du/dnu = 0`). 5-point stencil in 1D, 13-point in 2D.
pub fn biharmonic(u: &GridFunction) -> GridFunction {
    let grid = u.grid;
    let values = match grid.dim {
        1 => biharmonic_1d(&grid, &u.values),
        _ => biharmonic_2d(&grid, &u.values),
    };
    GridFunction { grid, values }
}

fn biharmonic_1d(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let n = grid.n[0];
    let ih2 = 1.0 / (grid.h[0] * grid.h[0]);
    // pad positions: 0 ghost, 1 boundary, 2..n+2 interior, n+2 boundary, n+3 ghost
    let mut pad = vec![0.0; n + 4];
    pad[2..n + 2].copy_from_slice(u);
    pad[0] = u[0];
    pad[n + 3] = u[n - 1];
    let mut w = vec![0.0; n + 4];
    for p in 1..=n + 2 {
        w[p] = (pad[p - 1] - 2.0 * pad[p] + pad[p + 1]) * ih2;
    }
    let mut out = vec![0.0; n];
    for i in 0..n {
        let p = i + 2;
        out[i] = (w[p - 1] - 2.0 * w[p] + w[p + 1]) * ih2;
    }
    out
}

fn biharmonic_2d(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let (nx, ny) = (grid.n[0], grid.n[1]);
    let ihx2 = 1.0 / (grid.h[0] * grid.h[0]);
    let ihy2 = 1.0 / (grid.h[1] * grid.h[1]);
    let (px, py) = (nx + 4, ny + 4);
    let at = |ix: usize, iy: usize| iy * px + ix;
    let mut pad = vec![0.0; px * py];
    for iy in 0..ny {
        for ix in 0..nx {
            pad[at(ix + 2, iy + 2)] = u[iy * nx + ix];
        }
    }
    // ghost rows mirror the first interior row, then ghost columns mirror the
    // first interior column (corners resolve by the double mirror)
    for ix in 0..px {
        pad[at(ix, 0)] = pad[at(ix, 2)];
        pad[at(ix, py - 1)] = pad[at(ix, py - 3)];
    }
    for iy in 0..py {
        pad[at(0, iy)] = pad[at(2, iy)];
        pad[at(px - 1, iy)] = pad[at(px - 3, iy)];
    }
    let mut w = vec![0.0; px * py];
    for iy in 1..=ny + 2 {
        for ix in 1..=nx + 2 {
            let c = pad[at(ix, iy)];
            w[at(ix, iy)] = (pad[at(ix - 1, iy)] - 2.0 * c + pad[at(ix + 1, iy)]) * ihx2
                + (pad[at(ix, iy - 1)] - 2.0 * c + pad[at(ix, iy + 1)]) * ihy2;
        }
    }
    let mut out = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let (qx, qy) = (ix + 2, iy + 2);
            let c = w[at(qx, qy)];
            out[iy * nx + ix] = (w[at(qx - 1, qy)] - 2.0 * c + w[at(qx + 1, qy)]) * ihx2
                + (w[at(qx, qy - 1)] - 2.0 * c + w[at(qx, qy + 1)]) * ihy2;
        }
    }
    out
}

/// Discrete `int |grad u|^2` by forward differences over every gap, boundary
/// gaps included with zero extension. Coincides exactly with
/// `l2_inner(-laplacian(u), u)`.
pub fn grad_norm_sq(u: &GridFunction) -> f64 {
    grad_norm_sq_slice(&u.grid, &u.values)
}

pub(crate) fn grad_norm_sq_slice(grid: &Grid, u: &[f64]) -> f64 {
    let vol = grid.cell_volume();
    match grid.dim {
        1 => {
            let n = grid.n[0];
            let mut s = u[0] * u[0] + u[n - 1] * u[n - 1];
            for i in 0..n - 1 {
                let d = u[i + 1] - u[i];
                s += d * d;
            }
            s * vol / (grid.h[0] * grid.h[0])
        }
        _ => {
            let (nx, ny) = (grid.n[0], grid.n[1]);
            let mut sx = 0.0;
            for iy in 0..ny {
                let row = iy * nx;
                sx += u[row] * u[row] + u[row + nx - 1] * u[row + nx - 1];
                for ix in 0..nx - 1 {
                    let d = u[row + ix + 1] - u[row + ix];
                    sx += d * d;
                }
            }
            let mut sy = 0.0;
            for ix in 0..nx {
                sy += u[ix] * u[ix] + u[(ny - 1) * nx + ix] * u[(ny - 1) * nx + ix];
                for iy in 0..ny - 1 {
                    let d = u[(iy + 1) * nx + ix] - u[iy * nx + ix];
                    sy += d * d;
                }
            }
            sx * vol / (grid.h[0] * grid.h[0]) + sy * vol / (grid.h[1] * grid.h[1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_of_ones_matches_interior_mass() {
        let g = Grid::line(1.0, 99).unwrap();
        let one = g.sample(|_| 1.0);
        let m = l2_inner(&one, &one).unwrap();
        assert!((m - 0.99).abs() < 1e-12, "got {m}");
    }

    #[test]
    fn laplacian_of_parabola_is_minus_two_everywhere() {
        // x(1-x) vanishes at the boundary, so the zero extension is exact.
        let g = Grid::line(1.0, 57).unwrap();
        let u = g.sample(|c| c[0] * (1.0 - c[0]));
        let lu = laplacian(&u);
        for (i, v) in lu.values().iter().enumerate() {
            assert!((v + 2.0).abs() < 1e-9, "node {i}: {v}");
        }
    }

    #[test]
    fn laplacian_is_symmetric() {
        let g = Grid::rectangle([1.0, 1.3], [7, 5]).unwrap();
        let u = g.sample(|c| (3.1 * c[0]).sin() + c[1] * c[1]);
        let v = g.sample(|c| (2.2 * c[1]).cos() - c[0]);
        let a = l2_inner(&laplacian(&u), &v).unwrap();
        let b = l2_inner(&u, &laplacian(&v)).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
    }

    #[test]
    fn grad_form_matches_laplacian_quadratic_form() {
        for g in [Grid::line(1.0, 41).unwrap(), Grid::rectangle([1.0, 0.7], [9, 11]).unwrap()] {
            let u = g.sample(|c| (7.0 * c[0]).sin() * (1.0 + c[1]));
            let gn = grad_norm_sq(&u);
            let form = -l2_inner(&laplacian(&u), &u).unwrap();
            assert!((gn - form).abs() <= 1e-12 * gn.abs().max(1.0), "{gn} vs {form}");
        }
    }

    #[test]
    fn biharmonic_first_row_matches_clamped_stencil() {
        // with the ghost mirror the leading 1D row is (7, -4, 1)/h^4
        let g = Grid::line(1.0, 9).unwrap();
        let h4 = g.h_axis(0).powi(4);
        let mut e0 = g.zeros();
        e0.values_mut()[0] = 1.0;
        let b = biharmonic(&e0);
        assert!((b.values()[0] * h4 - 7.0).abs() < 1e-10);
        assert!((b.values()[1] * h4 + 4.0).abs() < 1e-10);
        assert!((b.values()[2] * h4 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn biharmonic_kills_quadratics_in_the_deep_interior() {
        let g = Grid::line(1.0, 50).unwrap();
        let u = g.sample(|c| 1.0 + 2.0 * c[0] + 3.0 * c[0] * c[0]);
        let b = biharmonic(&u);
        for i in 2..g.len() - 2 {
            assert!(b.values()[i].abs() < 1e-6, "node {i}: {}", b.values()[i]);
        }
        let g2 = Grid::rectangle([1.0, 1.0], [20, 20]).unwrap();
        let u2 = g2.sample(|c| c[0] * c[0] - 0.5 * c[1] * c[1] + c[0] * c[1]);
        let b2 = biharmonic(&u2);
        for iy in 2..18 {
            for ix in 2..18 {
                let v = b2.values()[iy * 20 + ix];
                assert!(v.abs() < 1e-6, "({ix},{iy}): {v}");
            }
        }
    }

    #[test]
    fn biharmonic_is_symmetric_positive_definite() {
        let g = Grid::line(1.0, 23).unwrap();
        let u = g.sample(|c| (3.0 * c[0]).sin());
        let v = g.sample(|c| c[0] * (1.0 - c[0]));
        let a = l2_inner(&biharmonic(&u), &v).unwrap();
        let b = l2_inner(&u, &biharmonic(&v)).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        let q = l2_inner(&biharmonic(&u), &u).unwrap();
        assert!(q > 0.0);
    }

    #[test]
    fn rejects_mismatched_grids() {
        let a = Grid::line(1.0, 9).unwrap().zeros();
        let b = Grid::line(1.0, 11).unwrap().zeros();
        assert!(l2_inner(&a, &b).is_err());
    }

    #[test]
    fn rejects_bad_grid_parameters() {
        assert!(Grid::line(0.0, 9).is_err());
        assert!(Grid::line(1.0, 2).is_err());
        assert!(GridFunction::from_values(Grid::line(1.0, 9).unwrap(), vec![0.0; 3]).is_err());
    }
}
