//! Initial-data families: the first clamped-beam eigenmode (compatible with
//! the clamped boundary conditions to machine precision at the ends) and a
//! smooth compactly supported bump. Both are deterministic in the grid.

use crate::embedding::CLAMPED_BEAM_K1;
use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction};

/// First eigenmode of the clamped beam on [0, 1]:
/// `w(s) = cosh(ks) - cos(ks) - sigma (sinh(ks) - sin(ks))` with
/// `sigma = (cosh k - cos k)/(sinh k - sin k)`; vanishes with its first
/// derivative at both ends.
fn beam_profile(s: f64) -> f64 {
    let k = CLAMPED_BEAM_K1;
    let sigma = (k.cosh() - k.cos()) / (k.sinh() - k.sin());
    let ks = k * s;
    ks.cosh() - ks.cos() - sigma * (ks.sinh() - ks.sin())
}

/// Clamped-beam mode scaled to the requested discrete L2 norm; tensor
/// product of the 1D profile in two dimensions.
pub fn clamped_mode(grid: &Grid, l2_norm: f64) -> Result<GridFunction> {
    if !(l2_norm >= 0.0) || !l2_norm.is_finite() {
        return Err(Error::invalid(format!("mode norm must be nonnegative, got {l2_norm}")));
    }
    let f = grid.sample(|c| {
        let mut w = beam_profile(c[0] / grid.extent_axis(0));
        if grid.dim() == 2 {
            w *= beam_profile(c[1] / grid.extent_axis(1));
        }
        w
    });
    scale_to_l2(f, l2_norm)
}

/// Smooth bump `(1 - s^2)^3` supported on the ball of the given radius
/// around `center`, scaled so the peak value is `amplitude`.
pub fn bump(grid: &Grid, amplitude: f64, center: &[f64], radius: f64) -> Result<GridFunction> {
    if center.len() != grid.dim() {
        return Err(Error::invalid(format!(
            "bump center has {} coordinates on a {}-d grid",
            center.len(),
            grid.dim()
        )));
    }
    if !(radius > 0.0) || !radius.is_finite() || !amplitude.is_finite() {
        return Err(Error::invalid(format!(
            "bump needs a positive radius and finite amplitude; got {radius}, {amplitude}"
        )));
    }
    let center = center.to_vec();
    Ok(grid.sample(|c| {
        let mut d2 = 0.0;
        for (ci, xi) in center.iter().zip(c) {
            d2 += (xi - ci) * (xi - ci);
        }
        let s2 = d2 / (radius * radius);
        if s2 < 1.0 {
            amplitude * (1.0 - s2).powi(3)
        } else {
            0.0
        }
    }))
}

/// Rescales a nonzero grid function to the requested discrete L2 norm.
pub fn scale_to_l2(f: GridFunction, l2_norm: f64) -> Result<GridFunction> {
    let current = grid::l2_norm_sq(&f).sqrt();
    if current == 0.0 {
        if l2_norm == 0.0 {
            return Ok(f);
        }
        return Err(Error::invalid("cannot rescale the zero function to a nonzero norm"));
    }
    Ok(f.scale(l2_norm / current))
}
