//! Values measured on the reference fixtures, frozen against regressions.

use std::f64::consts::FRAC_PI_3;

use approx::assert_relative_eq;
use capvar::analysis::{calibrate_lambda, geometric_grid, smoothed_density_curve};
use capvar::curvature::mass_comparability;
use capvar::fixtures::{make_plane_pair, make_spherical_cap, FlatParams};
use capvar::varifold::{capillary_residual, tangential_battery};
use capvar::Vector;

#[test]
fn cap_lambda_calibrates_at_the_bottom_of_the_grid() {
    let h = 0.02;
    let f = make_spherical_cap(FRAC_PI_3, 2, h).unwrap();
    let x0 = Vector::from_column_slice(&[FRAC_PI_3.sin(), 0.0, 0.0]);
    let c = smoothed_density_curve(&f.v, &x0, &geometric_grid(0.05, 1.0, 30), 0.1).unwrap();
    let cal = calibrate_lambda(&c, 4.0, 5.0 * h).unwrap();
    assert_eq!(cal.exponent, -10);
    assert!(cal.max_drop <= 5.0 * h);
}

#[test]
fn cap_mass_comparability() {
    let f = make_spherical_cap(FRAC_PI_3, 2, 0.02).unwrap();
    let mc = mass_comparability(&f.v, &f.curvature, &f.gamma, 1.0).unwrap();
    assert_relative_eq!(mc.c1, 0.26796, max_relative = 1e-4);
    assert_relative_eq!(mc.c2, 0.57729, max_relative = 1e-4);
}

#[test]
fn plane_pair_mass_comparability() {
    let f = make_plane_pair(FlatParams::new(FRAC_PI_3, 2, 2)).unwrap();
    for p in [1.0, 2.0] {
        let mc = mass_comparability(&f.v, &f.curvature, &f.gamma, p).unwrap();
        assert_eq!(mc.curvature_norm_pow, 0.0);
        assert_relative_eq!(mc.c1, mc.mass / mc.boundary_mass, max_relative = 1e-15);
        assert_relative_eq!(mc.c1 * mc.c2, 1.0, max_relative = 1e-12);
    }
}

#[test]
fn cap_residual_converges_at_second_order() {
    let res = |h: f64| {
        let f = make_spherical_cap(FRAC_PI_3, 2, h).unwrap();
        let bat = tangential_battery(f.gamma.container(), 3, 20).unwrap();
        capillary_residual(&f.v, &f.gamma, &f.dec.h, &bat).unwrap().max_absolute
    };
    let (a, b) = (res(0.04), res(0.02));
    assert_relative_eq!(a, 1.16e-3, max_relative = 0.02);
    assert_relative_eq!(b, 3.0e-4, max_relative = 0.02);
    assert!(a / b >= 3.5, "{}", a / b);
}
