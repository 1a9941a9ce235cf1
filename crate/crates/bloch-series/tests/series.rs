//! Series coefficients: agreement of the recursion, the contour formula and
//! the boundary-integral corrector, structural properties of the model
//! matrices, and evaluation with certificates.

use bloch_series::certificates::Certificate;
use bloch_series::geometry::{build_mesh, InclusionSet};
use bloch_series::lattice_green::{GreenEvaluator, QuasiMomentum};
use bloch_series::linalg::{self, CMat};
use bloch_series::np_spectrum::{assemble, resonance_spectrum};
use bloch_series::series::chain::{
    coefficient_beta1, coefficient_beta1_group, corrector, inverse_laplacian_of_eigenfunction, DiskMode,
    OperatorChain,
};
use bloch_series::series::*;
use bloch_series::{Error, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

// Frozen from scipy: j_{0,1}, j_{1,1} and the gap of the 0.3-disk at α = (π, 0).
const J01: f64 = 2.404_825_557_695_772_4;
const J11: f64 = 3.831_705_970_207_512_5;
const D_DISK: f64 = 0.004_716_194_454_191_97;
const J21: f64 = 5.135_622_301_840_683;

/// Gap of the `n = 1` pair: half the distance to the `n = 2` value below it.
fn pair_gap() -> f64 {
    0.5 * ((0.3 / J11).powi(2) - (0.3 / J21).powi(2))
}

fn disk() -> InclusionSet {
    InclusionSet::single_disk([0.5, 0.5], 0.3, None).unwrap()
}

fn alpha_x() -> QuasiMomentum {
    QuasiMomentum::new(PI, 0.0).unwrap()
}

fn model_x() -> SeriesModel {
    build_model(&disk(), alpha_x(), &ModelOptions::default()).unwrap()
}

#[test]
fn model_matrices_are_hermitian_and_a0_diagonal() {
    let m = model_x();
    assert_eq!(m.dim(), m.dims.iter().sum::<usize>());
    for a in &m.a_hat {
        let scale = linalg::max_abs(a).max(1e-300);
        assert!(linalg::hermitian_defect(a) < 1e-12 * scale.max(1.0), "{}", linalg::hermitian_defect(a));
    }
    let a0 = &m.a_hat[0];
    for i in 0..m.dim() {
        assert!((a0[(i, i)].re - m.diagonal[i]).abs() < 1e-15);
        for j in 0..m.dim() {
            if i != j {
                assert_eq!(a0[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }
    let top = m.nearest((0.3 / J01).powi(2), 1)[0];
    assert!((m.diagonal[top] - (0.3 / J01).powi(2)).abs() < 1e-14);
}

#[test]
fn recursion_and_contour_agree_for_the_simple_branch() {
    let m = model_x();
    let b0 = (0.3 / J01).powi(2);
    let exp = expand_group(&m, b0, 1, D_DISK, &ExpandOptions::default()).unwrap();
    assert_eq!(exp.method_tags, vec![MethodTag::LayerRs, MethodTag::ContourTrace]);
    assert!(exp.cross_check.unwrap() < 1e-10, "{:?}", exp.cross_check);
    assert!(exp.contour_residual.unwrap() < 1e-10);
    assert!(exp.imag_residues.iter().all(|v| v.abs() < 1e-10));
    assert!((exp.beta0 - b0).abs() < 1e-14);
    assert!(exp.coeffs[1] > 0.0);
}

#[test]
fn first_coefficient_matches_the_corrector_energy() {
    let set = disk();
    let mesh = build_mesh(&set, 128).unwrap();
    let ops = assemble(&mesh, &GreenEvaluator::new(alpha_x())).unwrap();
    let np = resonance_spectrum(&ops).unwrap();
    let mode = DiskMode::new(0, &set.inclusions()[0], 0, 1).unwrap();
    let chain = OperatorChain::new(&ops, &np, mode).unwrap();
    let c = corrector(&chain).unwrap();
    assert!(c.energy > 0.0);
    assert!(c.energy_imag.abs() < 1e-10 * c.energy);
    assert!(c.neumann_residual < 1e-8, "{}", c.neumann_residual);
    let b1 = coefficient_beta1(&chain).unwrap();
    let m = model_x();
    let rs = layer_rs(&m.a_hat, m.nearest(chain.beta0, 1)[0], 1).unwrap();
    assert!((rs[1] - b1).abs() < 1e-6 * b1, "model {} corrector {}", rs[1], b1);
}

#[test]
fn degenerate_pair_needs_the_contour_and_is_basis_independent() {
    let set = disk();
    let m = model_x();
    let b0 = (0.3 / J11).powi(2);
    let idx = m.nearest(b0, 2);
    assert!(matches!(layer_rs(&m.a_hat, idx[0], 2), Err(Error::Multiplicity { .. })));
    let opts = ExpandOptions::default();
    let lone = ExpandOptions {
        methods: vec![MethodTag::LayerRs],
        ..opts.clone()
    };
    assert!(expand_group(&m, b0, 2, pair_gap(), &lone).is_err());
    let exp = expand_group(&m, b0, 2, pair_gap(), &opts).unwrap();
    assert_eq!(exp.method_tags, vec![MethodTag::ContourTrace]);
    assert_eq!(exp.m, 2);

    // A unitary change of basis inside the degenerate eigenspace of `Â_0`
    // leaves the group coefficients unchanged.
    let n = m.dim();
    let (c, sn) = (0.6f64, 0.8f64);
    let phase = C64::from_polar(1.0, 0.7);
    let mut u = linalg::identity(n);
    u[(idx[0], idx[0])] = C64::new(c, 0.0);
    u[(idx[0], idx[1])] = -phase.conj() * sn;
    u[(idx[1], idx[0])] = phase * sn;
    u[(idx[1], idx[1])] = C64::new(c, 0.0);
    assert!(linalg::frobenius(&(&(u.adjoint() * &u) - &linalg::identity(n))) < 1e-14);
    let rotated: Vec<CMat> = m.a_hat.iter().map(|a| u.adjoint() * a * &u).collect();
    let copts = ContourOptions {
        center: b0,
        radius: pair_gap(),
        nodes: 64,
    };
    let direct = contour_coefficients(&m.a_hat, 3, 2, &copts).unwrap();
    let turned = contour_coefficients(&rotated, 3, 2, &copts).unwrap();
    for (a, b) in direct.beta.iter().zip(&turned.beta) {
        assert!((a - b).abs() < 1e-9 * a.abs().max(1e-3), "{a} vs {b}");
    }
    for (a, b) in direct.beta.iter().zip(&exp.coeffs) {
        assert!((a - b).abs() < 1e-14);
    }

    // The boundary-integral group average agrees with the contour mean.
    let mesh = build_mesh(&set, 128).unwrap();
    let ops = assemble(&mesh, &GreenEvaluator::new(alpha_x())).unwrap();
    let np = resonance_spectrum(&ops).unwrap();
    let chains: Vec<_> = [1, -1]
        .iter()
        .map(|&l| OperatorChain::new(&ops, &np, DiskMode::new(0, &set.inclusions()[0], l, 1).unwrap()).unwrap())
        .collect();
    let g = coefficient_beta1_group(&chains).unwrap();
    assert!((g - exp.coeffs[1]).abs() < 1e-5 * g, "group {g} contour {}", exp.coeffs[1]);
}

#[test]
fn riesz_projection_is_idempotent() {
    let m = model_x();
    let b0 = (0.3 / J11).powi(2);
    let copts = ContourOptions {
        center: b0,
        radius: pair_gap(),
        nodes: 64,
    };
    let r = contour_coefficients(&m.a_hat, 2, 2, &copts).unwrap();
    assert_eq!(r.rank, 2);
    let p = &r.p0;
    let p2 = p * p;
    assert!(linalg::frobenius(&(&p2 - p)) < 1e-10);
    assert!(linalg::hermitian_defect(p) < 1e-10);
    let trace: C64 = (0..p.nrows()).map(|i| p[(i, i)]).sum();
    assert!((trace.re - 2.0).abs() < 1e-10 && trace.im.abs() < 1e-10);
}

#[test]
fn contour_rejects_an_eigenvalue_on_the_circle() {
    let m = model_x();
    let b0 = (0.3 / J01).powi(2);
    let copts = ContourOptions {
        center: b0 + D_DISK,
        radius: D_DISK,
        nodes: 64,
    };
    assert!(matches!(contour_coefficients(&m.a_hat, 2, 1, &copts), Err(Error::Contour { .. })));
    let copts = ContourOptions {
        center: b0,
        radius: D_DISK,
        nodes: 64,
    };
    assert!(matches!(contour_coefficients(&m.a_hat, 2, 2, &copts), Err(Error::Multiplicity { .. })));
}

#[test]
fn inverse_laplacian_split_matches_the_fourier_series() {
    let set = disk();
    let alpha = alpha_x();
    let mesh = build_mesh(&set, 64).unwrap();
    let ev = GreenEvaluator::new(alpha);
    let ops = assemble(&mesh, &ev).unwrap();
    let np = resonance_spectrum(&ops).unwrap();
    for (l, k) in [(0, 1), (1, 1), (-2, 1)] {
        let mode = DiskMode::new(0, &set.inclusions()[0], l, k).unwrap();
        let chain = OperatorChain::new(&ops, &np, mode).unwrap();
        let split = inverse_laplacian_of_eigenfunction(&chain).unwrap();
        // Fourier coefficients of the mode decay like |ξ|^{-5/2}, so the
        // series with |m|_∞ ≤ 120 is accurate to ~1e-8 relative.
        let cutoff = 120i64;
        let mut coeffs = Vec::new();
        for m1 in -cutoff..=cutoff {
            for m2 in -cutoff..=cutoff {
                let xi = [2.0 * PI * m1 as f64 + alpha.x(), 2.0 * PI * m2 as f64 + alpha.y()];
                let q2 = xi[0] * xi[0] + xi[1] * xi[1];
                coeffs.push((xi, mode.fourier_coefficient(xi) / q2));
            }
        }
        let mut scale = 0.0f64;
        let mut worst = 0.0f64;
        for x in [[0.5, 0.5], [0.62, 0.41], [0.79, 0.5], [0.9, 0.1], [0.05, 0.95], [0.3, 0.75]] {
            let series: C64 = coeffs
                .iter()
                .map(|(xi, c)| c * C64::from_polar(1.0, xi[0] * x[0] + xi[1] * x[1]))
                .sum();
            let split_value = split.evaluate(&ev, x);
            scale = scale.max(series.norm());
            worst = worst.max((series - split_value).norm());
        }
        assert!(worst < 1e-6 * scale, "mode ({l},{k}): residual {worst:.3e}, scale {scale:.3e}");
    }
}

#[test]
fn evaluation_and_export() {
    let m = model_x();
    let b0 = (0.3 / J01).powi(2);
    let mut exp = expand_group(&m, b0, 1, D_DISK, &ExpandOptions::default()).unwrap();
    let p = evaluate_series(&exp, 0.0).unwrap();
    assert_eq!(p.beta_hat, exp.beta0);
    assert!((p.beta_hat - b0).abs() < 1e-15);
    assert!(!p.certified && p.error_bound.is_nan());
    let cert = Certificate::buffered_disks(alpha_x(), D_DISK, 0.3, 0.45).unwrap();
    let r = cert.r_star;
    exp.certificate = Some(cert);
    let p = evaluate_series(&exp, 0.0).unwrap();
    assert!(p.certified && p.error_bound == 0.0);
    let p = evaluate_series(&exp, r / 2.0).unwrap();
    assert!(p.certified);
    assert!((p.error_bound - D_DISK / 8.0).abs() < 1e-15);
    assert!((p.lambda_hat - 1.0 / p.beta_hat).abs() < 1e-12 * p.lambda_hat);
    assert!(p.lambda_error > 0.0);
    let p = evaluate_series(&exp, 2.0 * r).unwrap();
    assert!(!p.certified && p.error_bound.is_nan());
    assert!(evaluate_series(&exp, -1.0).is_err());

    let json = exp.to_json();
    let obj = json.as_object().unwrap();
    let mut keys: Vec<_> = obj.keys().cloned().collect();
    keys.sort();
    assert_eq!(keys, ["alpha", "beta0", "coeffs", "d", "m", "method_tags", "r_star", "z_star"]);
    assert_eq!(obj["coeffs"].as_array().unwrap().len(), 4);
    assert_eq!(obj["method_tags"][0], "layer_rs");
    assert_eq!(obj["method_tags"][1], "contour_trace");
}

#[test]
fn order_is_limited_by_the_model() {
    let m = model_x();
    let opts = ExpandOptions {
        order: 7,
        ..ExpandOptions::default()
    };
    assert!(expand_group(&m, (0.3 / J01).powi(2), 1, D_DISK, &opts).is_err());
}

fn random_pencil(seed: u64, n: usize, order: usize) -> Vec<CMat> {
    let mut rng = seed | 1;
    let mut next = move || {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        (rng >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut out = vec![CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(1.0 / (i + 1) as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })];
    for _ in 0..order {
        let h = CMat::from_fn(n, n, |_, _| C64::new(0.05 * next(), 0.05 * next()));
        out.push(linalg::hermitian_part(&h));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn recursion_matches_contour_on_random_pencils(seed in any::<u64>(), n in 3usize..8, i0 in 0usize..3) {
        let a = random_pencil(seed, n, 3);
        let center = 1.0 / (i0 + 1) as f64;
        let gap = if i0 == 0 { 0.25 } else { center - 1.0 / (i0 + 2) as f64 };
        let rs = layer_rs(&a, i0, 3).unwrap();
        let opts = ContourOptions { center, radius: 0.5 * gap, nodes: 64 };
        let ct = contour_coefficients(&a, 3, 1, &opts).unwrap();
        for (x, y) in rs.iter().zip(&ct.beta) {
            prop_assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
        }
    }

    #[test]
    fn density_multipliers_are_geometric(mu in -0.49f64..0.49, n in 1usize..8) {
        let ratio = (mu - 0.5) / (mu + 0.5);
        let c = model::density_multiplier(mu, n);
        let c1 = model::density_multiplier(mu, n + 1);
        prop_assert!((c1 - c * ratio).abs() <= 1e-12 * c.abs().max(1.0));
        prop_assert_eq!(model::density_multiplier(mu, 0), 0.0);
    }
}
