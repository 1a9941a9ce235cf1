//! Limit spectra against Bessel zeros and the independently computed root of
//! the spectral function.

use bloch_series::geometry::Inclusion;
use bloch_series::lattice_green::QuasiMomentum;
use bloch_series::limit_spectrum::*;
use std::f64::consts::PI;

// Frozen from scipy: Bessel zeros and the first root of
// S(ν) = ν Σ a_k²/(ν − δ_k) − 1 for the 0.3-disk (converged in the zero count).
const J01: f64 = 2.404_825_557_695_772_4;
const J02: f64 = 5.520_078_110_286_311;
const J11: f64 = 3.831_705_970_207_512_5;
const NU1: f64 = 79.615_270_400_422_56;

#[test]
fn nonzero_alpha_limit_is_inverse_dirichlet() {
    let spec = disk_dirichlet_for_limit(0.3, 4).unwrap();
    let lim = limit_spectrum(QuasiMomentum::new(PI, 0.0).unwrap(), &spec, 4).unwrap();
    assert!((lim.values[0].value - (0.3 / J01).powi(2)).abs() < 1e-14);
    assert!((lim.values[1].value - (0.3 / J11).powi(2)).abs() < 1e-14);
    assert_eq!(lim.values[1].multiplicity, 2);
    assert_eq!(lim.values[0].provenance.label(), "dirichlet");
    for w in lim.values.windows(2) {
        assert!(w[0].value >= w[1].value);
    }
}

#[test]
fn periodic_limit_contains_spectral_root() {
    let spec = disk_dirichlet_for_limit(0.3, 4).unwrap();
    let roots = spectral_roots(&spec).unwrap();
    assert!((roots[0] - NU1).abs() < 1e-7 * NU1, "{}", roots[0]);
    assert!(roots[0] > (J01 / 0.3).powi(2) && roots[0] < (J02 / 0.3).powi(2));
    let s = spectral_function(roots[0], &spec).unwrap();
    assert!(s.value.abs() < 1e-8, "{}", s.value);
    let lim = limit_spectrum(QuasiMomentum::zero(), &spec, 3).unwrap();
    assert!((lim.values[0].value - 1.0 / NU1).abs() < 1e-9 / NU1);
    assert_eq!(lim.values[0].provenance.label(), "spectral_root_1");
    // The mean-zero n = 1 pair follows.
    assert!((lim.values[1].value - (0.3 / J11).powi(2)).abs() < 1e-14);
}

#[test]
fn spectral_function_is_decreasing_between_poles() {
    let spec = disk_dirichlet_for_limit(0.3, 2).unwrap();
    let lo = (J01 / 0.3).powi(2);
    let hi = (J02 / 0.3).powi(2);
    let mut prev = f64::INFINITY;
    for i in 1..50 {
        let nu = lo + (hi - lo) * i as f64 / 50.0;
        let v = spectral_function(nu, &spec).unwrap().value;
        assert!(v < prev);
        prev = v;
    }
}

#[test]
fn finite_differences_approach_disk_values() {
    let disk = Inclusion::disk([0.5, 0.5], 0.3).unwrap();
    let fd = fd_dirichlet(&disk, 1.0 / 64.0, 3).unwrap();
    let exact = (J01 / 0.3).powi(2);
    let rel = (fd.modes[0].eigenvalue - exact).abs() / exact;
    assert!(rel < 5e-3, "relative error {rel}");
    assert!(!fd.modes[0].mean_zero);
    assert!(fd.modes[1].mean_zero);
}

#[test]
fn square_dirichlet_value() {
    let sq = Inclusion::square([0.5, 0.5], 0.4).unwrap();
    let fd = fd_dirichlet(&sq, 1.0 / 80.0, 2).unwrap();
    let exact = 2.0 * PI * PI / 0.16;
    assert!((fd.modes[0].eigenvalue - exact).abs() < 1e-3 * exact);
}
