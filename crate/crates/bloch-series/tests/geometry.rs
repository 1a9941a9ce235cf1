//! Inclusion validation, separations and boundary quadrature.

use bloch_series::geometry::*;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn disks_must_stay_inside_the_cell_and_apart() {
    assert!(InclusionSet::single_disk([0.5, 0.5], 0.3, None).is_ok());
    assert!(InclusionSet::single_disk([0.5, 0.5], 0.5, None).is_err());
    assert!(InclusionSet::single_disk([0.1, 0.5], 0.2, None).is_err());
    assert!(Inclusion::disk([0.5, 0.5], -0.1).is_err());
    let a = Inclusion::disk([0.3, 0.5], 0.15).unwrap();
    let b = Inclusion::disk([0.7, 0.5], 0.15).unwrap();
    let c = Inclusion::disk([0.55, 0.5], 0.15).unwrap();
    assert!(InclusionSet::new(vec![a.clone(), b.clone()], None).is_ok());
    assert!(InclusionSet::new(vec![a, c], None).is_err());
}

#[test]
fn buffer_radius_is_validated() {
    assert!(InclusionSet::single_disk([0.5, 0.5], 0.3, Some(0.45)).is_ok());
    assert!(InclusionSet::single_disk([0.5, 0.5], 0.3, Some(0.25)).is_err());
    assert!(InclusionSet::single_disk([0.5, 0.5], 0.3, Some(0.5)).is_err());
    let sq = Inclusion::square([0.5, 0.5], 0.4).unwrap();
    assert!(InclusionSet::new(vec![sq], Some(0.45)).is_err());
}

#[test]
fn separation_of_two_disks() {
    let a = Inclusion::disk([0.3, 0.5], 0.1).unwrap();
    let b = Inclusion::disk([0.7, 0.5], 0.15).unwrap();
    let set = InclusionSet::new(vec![a, b], None).unwrap();
    let sep = min_separation(&set);
    assert!((sep.distance - 0.15).abs() < 1e-12);
    assert_eq!(sep.pair, Some((0, 1)));
    let single = InclusionSet::single_disk([0.5, 0.5], 0.3, None).unwrap();
    let s = min_separation(&single);
    assert!(s.is_no_pair());
    assert!(s.distance.is_infinite());
}

#[test]
fn curve_area_and_mesh_perimeter() {
    let ellipse = ParametricCurve::from_fn(|t| [0.5 + 0.3 * t.cos(), 0.5 + 0.2 * t.sin()], 64).unwrap();
    let inc = Inclusion::Curve(ellipse);
    assert!((inc.area() - PI * 0.3 * 0.2).abs() < 1e-10);
    let set = InclusionSet::new(vec![inc], None).unwrap();
    let mesh = build_mesh(&set, 128).unwrap();
    // Ramanujan's second approximation is accurate to ~1e-10 at this eccentricity.
    let (a, b) = (0.3f64, 0.2f64);
    let h = ((a - b) / (a + b)).powi(2);
    let per = PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
    assert!((mesh.perimeters()[0] - per).abs() < 1e-8);
}

#[test]
fn polygons_are_rejected_by_the_boundary_mesh() {
    let set = InclusionSet::new(vec![Inclusion::square([0.5, 0.5], 0.4).unwrap()], None).unwrap();
    assert!(build_mesh(&set, 64).is_err());
    assert!((set.area() - 0.16).abs() < 1e-15);
}

#[test]
fn brillouin_zone_wrapping() {
    let w = PeriodCell::wrap_to_brillouin_zone([3.0 * PI / 2.0, -PI / 2.0]);
    assert!((w[0] + PI / 2.0).abs() < 1e-12 && (w[1] + PI / 2.0).abs() < 1e-12);
    assert!(PeriodCell::in_brillouin_zone(w));
}

proptest! {
    #[test]
    fn disk_mesh_is_consistent(cx in 0.35f64..0.65, cy in 0.35f64..0.65, a in 0.05f64..0.3, half in 8usize..64) {
        let n = 2 * half;
        let set = InclusionSet::single_disk([cx, cy], a, None).unwrap();
        let mesh = build_mesh(&set, n).unwrap();
        prop_assert_eq!(mesh.len(), n);
        prop_assert!((mesh.perimeters()[0] - 2.0 * PI * a).abs() < 1e-12);
        for j in 0..n {
            let p = mesh.nodes[j];
            let nu = mesh.normals[j];
            prop_assert!(((p[0] - cx).hypot(p[1] - cy) - a).abs() < 1e-12);
            prop_assert!((nu[0].hypot(nu[1]) - 1.0).abs() < 1e-12);
            // Outward: the normal points away from the center.
            prop_assert!(nu[0] * (p[0] - cx) + nu[1] * (p[1] - cy) > 0.0);
            prop_assert!((mesh.curvature[j] - 1.0 / a).abs() < 1e-9 / a);
            prop_assert_eq!(mesh.owner(j), 0);
        }
    }

    #[test]
    fn containment_matches_distance(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let disk = Inclusion::disk([0.5, 0.5], 0.3).unwrap();
        let r = (x - 0.5).hypot(y - 0.5);
        prop_assume!((r - 0.3).abs() > 1e-9);
        prop_assert_eq!(disk.contains([x, y]), r < 0.3);
        let sq = Inclusion::square([0.5, 0.5], 0.4).unwrap();
        prop_assume!(((x - 0.5).abs() - 0.2).abs() > 1e-9 && ((y - 0.5).abs() - 0.2).abs() > 1e-9);
        prop_assert_eq!(sq.contains([x, y]), (x - 0.5).abs() < 0.2 && (y - 0.5).abs() < 0.2);
    }
}
