//! Cross-checks of the variable-exponent machinery against independent
//! scalar solves and the structural inequalities the rest of the crate
//! leans on.

use platelab::grid::{Grid, GridFunction};
use platelab::varexp::{self, ExponentField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Piecewise exponent 2/3 with a constant function reduces the norm to a
/// one-variable cubic the bisection knows nothing about: with region masses
/// m2 and m3, the norm solves t^3 = m2 t + m3.
#[test]
fn piecewise_norm_agrees_with_a_scalar_cubic() {
    let n = 1999;
    let g = Grid::line(2.0, n).unwrap();
    let p = ExponentField::sample(g.clone(), |c| if c[0] < 1.0 { 2.0 } else { 3.0 }).unwrap();
    let f = g.sample(|_| 1.0);
    let h = g.h_axis(0);
    let m2 = p.values().iter().filter(|&&q| q == 2.0).count() as f64 * h;
    let m3 = p.values().iter().filter(|&&q| q == 3.0).count() as f64 * h;

    // Newton from the right of the root; the cubic is convex there
    let mut t = 1.5;
    for _ in 0..60 {
        let ft = t * t * t - m2 * t - m3;
        let dft = 3.0 * t * t - m2;
        let step = ft / dft;
        t -= step;
        if step.abs() <= 1e-15 * t {
            break;
        }
    }

    let lux = varexp::luxemburg_norm(&f, &p, 1e-12).unwrap();
    assert!((lux - t).abs() <= 1e-11 * t, "norm {lux} vs cubic root {t}");

    // in the continuum limit both masses are 1 and the root is the plastic
    // number; the discrete masses differ from 1 by O(h)
    let plastic = 1.324_717_957_244_746;
    assert!((lux - plastic).abs() < 2e-3, "norm {lux} vs plastic {plastic}");
}

#[test]
fn smaller_exponents_embed_with_the_volume_factor() {
    // |f|_q <= (1 + |Omega|) |f|_p whenever q <= p pointwise
    let g = Grid::line(2.0, 499).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for round in 0..20 {
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let f = GridFunction::from_values(g.clone(), vals).unwrap();
        let lo = rng.gen_range(1.5..2.5);
        let gap = rng.gen_range(0.0..2.0);
        let q = ExponentField::sample(g.clone(), |c| lo + 0.2 * c[0]).unwrap();
        let p = ExponentField::sample(g.clone(), |c| lo + gap + 0.2 * c[0]).unwrap();
        let nq = varexp::luxemburg_norm(&f, &q, 1e-12).unwrap();
        let np = varexp::luxemburg_norm(&f, &p, 1e-12).unwrap();
        let bound = (1.0 + g.omega_measure()) * np;
        assert!(nq <= bound * (1.0 + 1e-10), "round {round}: {nq} > {bound}");
    }
}

#[test]
fn log_holder_passes_smooth_fields_and_flags_jumps() {
    let g = Grid::line(1.0, 999).unwrap();
    let smooth = ExponentField::sample(g.clone(), |c| 2.0 + 0.5 * c[0]).unwrap();
    let r = varexp::log_holder_check(&smooth, 2.0, 0.5).unwrap();
    assert!(r.passed, "smooth field violated by {}", r.max_violation);

    let steep = ExponentField::sample(g, |c| if c[0] < 0.5 { 2.0 } else { 3.0 }).unwrap();
    let r = varexp::log_holder_check(&steep, 0.05, 0.5).unwrap();
    assert!(!r.passed);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_is_homogeneous_and_sandwiched(seed in 0u64..500, c in 0.05f64..20.0) {
        let g = Grid::line(1.0, 63).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let p = ExponentField::sample(g.clone(), |x| 2.0 + x[0]).unwrap();
        let f = GridFunction::from_values(g, vals).unwrap();

        let lux = varexp::luxemburg_norm(&f, &p, 1e-12).unwrap();
        let lux_c = varexp::luxemburg_norm(&f.scale(c), &p, 1e-12).unwrap();
        prop_assert!((lux_c - c * lux).abs() <= 1e-9 * (1.0 + c * lux));

        // unit-ball characterization: the modular of f / |f| is exactly one
        let unit = varexp::modular(&f.scale(1.0 / lux), &p).unwrap();
        prop_assert!((unit - 1.0).abs() < 1e-9, "unit modular {}", unit);

        let s = varexp::check_sandwich(&f, &p).unwrap();
        prop_assert!(s.passed, "modular {} outside [{}, {}]", s.modular, s.lower, s.upper);
    }
}
