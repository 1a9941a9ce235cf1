//! Certificate constants against independently computed values, and the
//! monotonicity properties of the radius and the truncation bound.

use bloch_series::certificates::*;
use bloch_series::lattice_green::QuasiMomentum;
use bloch_series::limit_spectrum::{disk_dirichlet_for_limit, limit_spectrum};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

// Frozen from an independent scipy evaluation (Bessel zeros j_{0,1}, j_{1,1}).
const D_DISK: f64 = 0.004_716_194_454_191_97;
const R_STAR_DISK: f64 = 0.008_627_003_415_879_428;

fn alpha_x() -> QuasiMomentum {
    QuasiMomentum::new(PI, 0.0).unwrap()
}

#[test]
fn buffered_disk_constants() {
    let theta = theta_disks(0.3, 0.45).unwrap();
    assert!((theta - 0.384_615_384_615_384_64).abs() < 1e-12);
    let mu = mu_minus_from_theta(theta).unwrap();
    assert!((mu + 0.307_692_307_692_307_7).abs() < 1e-12);
    let zs = z_star(mu).unwrap();
    assert!((zs + 0.238_095_238_095_238_08).abs() < 1e-12);
    let r = radius(alpha_x(), D_DISK, mu, zs).unwrap();
    assert!((r - R_STAR_DISK).abs() < 1e-12);
    assert!((theta_disks(1.0, 2.0).unwrap() - 0.6).abs() < 1e-15);
    assert!((mu_minus_from_theta(0.5).unwrap() + 0.25).abs() < 1e-15);
    assert!((z_star(0.0).unwrap() + 1.0).abs() < 1e-15);
}

#[test]
fn gap_from_limit_spectrum_matches_bessel_value() {
    let spec = disk_dirichlet_for_limit(0.3, 4).unwrap();
    let lim = limit_spectrum(alpha_x(), &spec, 4).unwrap();
    let d = gap_d(&lim, 0).unwrap();
    assert!((d - D_DISK).abs() < 1e-14, "{d}");
    // The n = 1 pair is one distinct value; its gap is measured to other values.
    let distinct = lim.distinct();
    assert_eq!(distinct[1].1, 2);
    let d1 = gap_d(&lim, 1).unwrap();
    let expect = 0.5 * (distinct[1].0 - distinct[2].0).min(distinct[0].0 - distinct[1].0);
    assert!((d1 - expect).abs() < 1e-15);
}

#[test]
fn periodic_radius_uses_four_pi_squared() {
    let mu = -0.307_692_307_692_307_7;
    let zs = z_star(mu).unwrap();
    let r0 = radius(QuasiMomentum::zero(), D_DISK, mu, zs).unwrap();
    let c = 4.0 * PI * PI * D_DISK;
    assert!((r0 - c * zs.abs() / (1.0 / (0.5 - mu) + c)).abs() < 1e-15);
}

#[test]
fn separation_is_strict_and_complex() {
    let cert = Certificate::buffered_disks(alpha_x(), D_DISK, 0.3, 0.45).unwrap();
    let r = cert.r_star;
    assert!(cert.check(C64::new(r / 2.0, 0.0)).is_certified());
    assert!(!cert.check(C64::new(r, 0.0)).is_certified());
    assert!(cert.check(C64::new(-r / 3.0, 0.0)).is_certified());
    assert!(cert.check(C64::new(0.0, 0.9 * r)).is_certified());
    assert!(cert.bound(3, C64::new(r, 0.0)).is_err());
    assert_eq!(cert.bound(3, C64::new(0.0, 0.0)).unwrap(), 0.0);
    for p in 1..=6 {
        let b = cert.bound(p, C64::new(r / 2.0, 0.0)).unwrap();
        assert!((b - D_DISK / 2f64.powi(p as i32)).abs() < 1e-15);
    }
}

#[test]
fn invalid_constants_are_rejected() {
    assert!(theta_disks(0.45, 0.3).is_err());
    assert!(z_star(0.5).is_err());
    assert!(radius(alpha_x(), 0.0, -0.3, -0.2).is_err());
    assert!(Certificate::new(alpha_x(), D_DISK, 0.1, Source::User).is_err());
    assert!(Certificate::new(alpha_x(), D_DISK, -0.5, Source::User).is_err());
}

#[test]
fn best_of_prefers_the_larger_resonance_bound() {
    let a = alpha_x();
    let c = Certificate::best_of(a, D_DISK, Some((0.3, 0.45)), Some(-0.15)).unwrap();
    assert_eq!(c.mu_minus_source, Source::ComputedNp);
    assert!(c.note.is_some());
    let c = Certificate::best_of(a, D_DISK, Some((0.3, 0.45)), Some(-0.4)).unwrap();
    assert_eq!(c.mu_minus_source, Source::ClosedFormDisk);
    assert!((c.r_star - R_STAR_DISK).abs() < 1e-12);
}

proptest! {
    #[test]
    fn radius_is_below_pole_bound_and_monotone(
        d in 1e-4f64..0.1, mu in -0.49f64..-0.01, ax in 0.05f64..PI, ay in 0.0f64..PI, f in 1.01f64..3.0
    ) {
        let a = QuasiMomentum::new(ax, ay).unwrap();
        let zs = z_star(mu).unwrap();
        prop_assert!((-1.0..0.0).contains(&zs));
        let r = radius(a, d, mu, zs).unwrap();
        prop_assert!(r > 0.0 && r < zs.abs());
        prop_assert!(radius(a, d * f, mu, zs).unwrap() > r);
        let mu2 = (mu + 0.005).min(-0.001);
        let zs2 = z_star(mu2).unwrap();
        prop_assert!(radius(a, d, mu2, zs2).unwrap() >= r);
    }

    #[test]
    fn truncation_bound_monotone(t in 0.01f64..0.95, s in 0.01f64..0.95, p in 1usize..6) {
        let cert = Certificate::buffered_disks(alpha_x(), D_DISK, 0.3, 0.45).unwrap();
        let (lo, hi) = if t < s { (t, s) } else { (s, t) };
        let r = cert.r_star;
        let b_lo = cert.bound(p, C64::new(lo * r, 0.0)).unwrap();
        let b_hi = cert.bound(p, C64::new(hi * r, 0.0)).unwrap();
        prop_assert!(b_lo <= b_hi);
        prop_assert!(cert.bound(p + 1, C64::new(hi * r, 0.0)).unwrap() < b_hi);
        // Depends on |z| only.
        let rot = C64::from_polar(hi * r, 1.234);
        prop_assert!((cert.bound(p, rot).unwrap() - b_hi).abs() <= 1e-12 * b_hi);
    }
}
