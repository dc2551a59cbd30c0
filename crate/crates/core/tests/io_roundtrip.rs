use std::f64::consts::FRAC_PI_3;

use capvar::fixtures::{make_distinct_pair, make_spherical_cap, FlatParams};
use capvar::io::{load, read_boundary, read_varifold, save, write_boundary, write_varifold};

#[test]
fn flat_fixture_round_trips_through_files() {
    let f = make_distinct_pair(FlatParams::new(FRAC_PI_3, 2, 2).with_h(0.2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let vp = dir.path().join("varifold.txt");
    let bp = dir.path().join("boundary.txt");
    save(&vp, &write_varifold(&f.v, Some(&f.curvature)).unwrap()).unwrap();
    save(&bp, &write_boundary(&f.gamma).unwrap()).unwrap();
    let (v, b) = read_varifold(&load(&vp).unwrap()).unwrap();
    let g = read_boundary(&load(&bp).unwrap()).unwrap();
    assert_eq!(v, f.v);
    assert_eq!(b.unwrap(), f.curvature);
    assert_eq!(g.atoms(), f.gamma.atoms());
    assert_eq!(write_boundary(&g).unwrap(), load(&bp).unwrap());
}

#[test]
fn curved_fixture_round_trips_exactly() {
    let f = make_spherical_cap(FRAC_PI_3, 2, 0.1).unwrap();
    let text = write_varifold(&f.v, Some(&f.curvature)).unwrap();
    let (v, b) = read_varifold(&text).unwrap();
    assert_eq!(v, f.v);
    assert_eq!(b.as_ref(), Some(&f.curvature));
    assert_eq!(write_varifold(&v, b.as_ref()).unwrap(), text);
    let btext = write_boundary(&f.gamma).unwrap();
    let g = read_boundary(&btext).unwrap();
    assert_eq!(g.atoms(), f.gamma.atoms());
    assert_eq!(write_boundary(&g).unwrap(), btext);
}

#[test]
fn truncated_file_is_rejected() {
    let f = make_distinct_pair(FlatParams::new(FRAC_PI_3, 2, 2).with_h(0.5)).unwrap();
    let text = write_varifold(&f.v, None).unwrap();
    let cut: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
    assert!(read_varifold(&cut).is_err());
}
