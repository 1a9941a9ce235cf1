//! Layer operators and the Neumann–Poincaré spectrum of quasi-periodic disks.

use bloch_series::certificates::{mu_minus_from_theta, theta_disks};
use bloch_series::geometry::{build_mesh, InclusionSet};
use bloch_series::lattice_green::{GreenEvaluator, QuasiMomentum};
use bloch_series::linalg;
use bloch_series::np_spectrum::*;
use std::f64::consts::PI;

fn operators(set: &InclusionSet, alpha: QuasiMomentum, n: usize) -> LayerOperators {
    let mesh = build_mesh(set, n).unwrap();
    assert_eq!(mesh.len(), n * set.len());
    assemble(&mesh, &GreenEvaluator::new(alpha)).unwrap()
}

#[test]
fn disk_spectrum_lies_in_the_closed_half_interval() {
    let set = InclusionSet::single_disk([0.5, 0.5], 0.3, None).unwrap();
    for (ax, ay) in [(PI, 0.0), (PI, PI), (0.5, 0.5)] {
        let ops = operators(&set, QuasiMomentum::new(ax, ay).unwrap(), 128);
        let sp = resonance_spectrum(&ops).unwrap();
        assert!(sp.mu.iter().all(|&m| (-0.5 - 1e-6..=0.5 + 1e-6).contains(&m)));
        let top = *sp.mu.last().unwrap();
        assert!((top - 0.5).abs() < 1e-6, "top eigenvalue {top}");
        assert!(sp.slack < 1e-6);
        assert!(sp.imag_residue < 1e-6, "{}", sp.imag_residue);
        assert!(ops.plemelj_residual() < 1e-8, "{}", ops.plemelj_residual());
    }
}

#[test]
fn buffered_disk_resonances_respect_the_closed_form_bound() {
    let set = InclusionSet::single_disk([0.5, 0.5], 0.3, Some(0.45)).unwrap();
    let bound = mu_minus_from_theta(theta_disks(0.3, 0.45).unwrap()).unwrap();
    for (ax, ay) in [(PI, 0.0), (PI, PI), (0.7, 0.2), (0.1, 0.0)] {
        let ops = operators(&set, QuasiMomentum::new(ax, ay).unwrap(), 64);
        let sp = resonance_spectrum(&ops).unwrap();
        assert!(sp.mu_minus >= bound - 1e-4, "mu_minus {} at ({ax},{ay})", sp.mu_minus);
        assert!(sp.mu_plus < 0.5);
    }
}

#[test]
fn periodic_case_removes_the_total_charge() {
    let set = InclusionSet::single_disk([0.5, 0.5], 0.3, None).unwrap();
    let ops = operators(&set, QuasiMomentum::zero(), 64);
    assert_eq!(ops.half_densities.ncols(), 0);
    let q = ops.density_basis();
    assert_eq!(q.ncols(), 63);
    let sp = resonance_spectrum(&ops).unwrap();
    assert_eq!(sp.mu.len(), 63);
    // A single disk has no ½ resonance at α = 0.
    let top = *sp.mu.last().unwrap();
    assert!(top < 0.5 - 1e-3, "top {top} {:?}", &sp.mu[sp.mu.len() - 4..]);
    // The periodic kernel solves ΔG = δ − 1, so on charge-free densities the
    // symmetrization identity holds up to a constant function, removed here
    // by the projection `I − 1 wᵀ/Σw`.
    let n = ops.len();
    let total: f64 = ops.weights.iter().sum();
    let strip = linalg::CMat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        linalg::zero() + (id - ops.weights[j] / total)
    });
    let sk = &ops.s * &ops.kstar;
    let ks = &ops.k * &ops.s;
    let restricted = linalg::frobenius(&(&strip * &(&(&sk - &ks) * &q))) / linalg::frobenius(&(&ops.s * &q));
    assert!(restricted < 1e-8, "{restricted}");
}

#[test]
fn projector_is_idempotent_and_kills_the_half_space() {
    let set = InclusionSet::single_disk([0.5, 0.5], 0.3, None).unwrap();
    let ops = operators(&set, QuasiMomentum::new(PI, 0.0).unwrap(), 64);
    let p = ops.w3_projector().unwrap();
    let p2 = &p * &p;
    assert!(linalg::frobenius(&(&p2 - &p)) < 1e-12 * linalg::frobenius(&p));
    assert_eq!(ops.half_densities.ncols(), 1);
    let half = linalg::col_vec(&ops.half_densities, 0);
    let out = ops.project_w3_density(&half).unwrap();
    assert!(linalg::norm(&out) < 1e-10 * linalg::norm(&half));
    // The half-space density is an eigenvector of K* with eigenvalue ½.
    let k = linalg::matvec(&ops.kstar, &half);
    let diff: Vec<_> = k.iter().zip(&half).map(|(a, b)| a - 0.5 * b).collect();
    assert!(linalg::norm(&diff) < 1e-8 * linalg::norm(&half));
}

#[test]
fn single_layer_is_hermitian_in_the_quadrature_inner_product() {
    let set = InclusionSet::single_disk([0.45, 0.55], 0.25, None).unwrap();
    let ops = operators(&set, QuasiMomentum::new(1.1, -0.4).unwrap(), 64);
    let g = ops.gram();
    assert!(linalg::hermitian_defect(&g) < 1e-10);
    assert!(ops.project_w3_density(&[linalg::zero(); 3]).is_err());
}
