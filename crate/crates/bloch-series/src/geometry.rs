//! Period cell, inclusion shapes, separation and buffer checks, and boundary
//! quadrature meshes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The unit period cell `Y = (0,1]²` and its Brillouin zone `(−π,π]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodCell;

impl PeriodCell {
    pub const DIMENSION: usize = 2;
    pub const SIDE: f64 = 1.0;

    /// Whether `p` lies in the open cell `(0,1)²`.
    pub fn contains_open(p: [f64; 2]) -> bool {
        p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0
    }

    /// Distance from `p` to the cell boundary (negative outside).
    pub fn distance_to_boundary(p: [f64; 2]) -> f64 {
        p[0].min(1.0 - p[0]).min(p[1]).min(1.0 - p[1])
    }

    /// Whether `α` lies in the Brillouin zone `(−π,π]²`.
    pub fn in_brillouin_zone(alpha: [f64; 2]) -> bool {
        alpha.iter().all(|&a| a > -PI && a <= PI)
    }

    /// Maps a wave vector into `(−π,π]²` by subtracting a reciprocal lattice vector.
    pub fn wrap_to_brillouin_zone(alpha: [f64; 2]) -> [f64; 2] {
        alpha.map(|a| {
            let mut w = a - 2.0 * PI * (a / (2.0 * PI)).round();
            if w <= -PI {
                w += 2.0 * PI;
            }
            if w > PI {
                w -= 2.0 * PI;
            }
            w
        })
    }
}

/// A smooth closed curve stored by equispaced samples of its parametrization
/// on `[0, 2π)` and evaluated by trigonometric interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricCurve {
    samples: Vec<[f64; 2]>,
    coeffs: Vec<(i64, [f64; 2], [f64; 2])>,
}

impl ParametricCurve {
    /// Builds a curve from samples `x(2πj/m)`, `j = 0..m`.
    ///
    /// The curve must be simple and positively oriented; it is interpolated by
    /// the unique trigonometric polynomial through the samples, so the sample
    /// count should resolve the shape.
    pub fn from_samples(samples: Vec<[f64; 2]>) -> Result<Self> {
        if samples.len() < 8 {
            return Err(Error::Config(format!(
                "parametric curve needs at least 8 samples, got {}",
                samples.len()
            )));
        }
        let m = samples.len();
        let half = (m / 2) as i64;
        let mut coeffs = Vec::with_capacity(m);
        for l in -half..=half {
            if m % 2 == 0 && l == half {
                // The Nyquist mode is split evenly between ±m/2; dropping it
                // keeps the interpolant real and smooth.
                continue;
            }
            let (mut cx, mut sx, mut cy, mut sy) = (0.0, 0.0, 0.0, 0.0);
            for (j, p) in samples.iter().enumerate() {
                let t = 2.0 * PI * j as f64 / m as f64 * l as f64;
                cx += p[0] * t.cos();
                sx -= p[0] * t.sin();
                cy += p[1] * t.cos();
                sy -= p[1] * t.sin();
            }
            let s = 1.0 / m as f64;
            coeffs.push((l, [cx * s, sx * s], [cy * s, sy * s]));
        }
        let curve = ParametricCurve { samples, coeffs };
        curve.validate()?;
        Ok(curve)
    }

    /// Samples `f` at `m` equispaced parameters in `[0, 2π)`.
    pub fn from_fn(f: impl Fn(f64) -> [f64; 2], m: usize) -> Result<Self> {
        let samples = (0..m).map(|j| f(2.0 * PI * j as f64 / m as f64)).collect();
        Self::from_samples(samples)
    }

    pub fn samples(&self) -> &[[f64; 2]] {
        &self.samples
    }

    /// Position, first and second derivative at parameter `t`.
    pub fn eval(&self, t: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let mut x = [0.0; 2];
        let mut d1 = [0.0; 2];
        let mut d2 = [0.0; 2];
        for &(l, cx, cy) in &self.coeffs {
            let lf = l as f64;
            let (s, co) = (lf * t).sin_cos();
            // Real part of (a + ib) e^{ilt} and its derivatives.
            for (k, cc) in [cx, cy].iter().enumerate() {
                let re = cc[0] * co - cc[1] * s;
                let im = cc[0] * s + cc[1] * co;
                x[k] += re;
                d1[k] += -lf * im;
                d2[k] += -lf * lf * re;
            }
        }
        (x, d1, d2)
    }

    fn polyline(&self, m: usize) -> Vec<[f64; 2]> {
        (0..m)
            .map(|j| self.eval(2.0 * PI * j as f64 / m as f64).0)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let poly = self.polyline(4 * self.samples.len().max(64));
        if signed_area(&poly) <= 0.0 {
            return Err(Error::Config(
                "parametric curve must be positively oriented".into(),
            ));
        }
        if polyline_self_intersects(&poly) {
            return Err(Error::Config("parametric curve is not simple".into()));
        }
        Ok(())
    }
}

fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn polyline_self_intersects(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0];
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    d[0].hypot(d[1])
}

/// One inclusion `D_i` inside the period cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Inclusion {
    /// Disk with the given center and radius `a`.
    Disk { center: [f64; 2], radius: f64 },
    /// Smooth closed curve bounding the inclusion.
    Curve(ParametricCurve),
    /// Polygon with counter-clockwise vertices. Polygons are not smooth, so
    /// they are accepted by the finite-difference and plane-wave solvers but
    /// not by the boundary-integral mesh.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Inclusion {
    /// Disk constructor with validation of the radius.
    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Inclusion::Disk { center, radius })
    }

    /// Axis-aligned square as a polygon.
    pub fn square(center: [f64; 2], side: f64) -> Result<Self> {
        if !(side > 0.0) {
            return Err(Error::Config(format!("square side must be positive, got {side}")));
        }
        let h = 0.5 * side;
        Ok(Inclusion::Polygon {
            vertices: vec![
                [center[0] - h, center[1] - h],
                [center[0] + h, center[1] - h],
                [center[0] + h, center[1] + h],
                [center[0] - h, center[1] + h],
            ],
        })
    }

    /// Whether `p` lies in the open inclusion.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Inclusion::Disk { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) < *radius
            }
            Inclusion::Curve(c) => point_in_polygon(p, &c.polyline(1024)),
            Inclusion::Polygon { vertices } => point_in_polygon(p, vertices),
        }
    }

    /// Area `|D_i|`.
    pub fn area(&self) -> f64 {
        match self {
            Inclusion::Disk { radius, .. } => PI * radius * radius,
            Inclusion::Curve(c) => {
                // Trapezoid rule on ½∮(x y' − y x') dt is spectrally accurate.
                let m = 4 * c.samples.len().max(64);
                (0..m)
                    .map(|j| {
                        let (x, d, _) = c.eval(2.0 * PI * j as f64 / m as f64);
                        x[0] * d[1] - x[1] * d[0]
                    })
                    .sum::<f64>()
                    * 0.5
                    * (2.0 * PI / m as f64)
            }
            Inclusion::Polygon { vertices } => signed_area(vertices),
        }
    }

    /// Dense sample of boundary points, used for separation checks.
    pub fn boundary_samples(&self, m: usize) -> Vec<[f64; 2]> {
        match self {
            Inclusion::Disk { center, radius } => (0..m)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / m as f64;
                    [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                })
                .collect(),
            Inclusion::Curve(c) => c.polyline(m),
            Inclusion::Polygon { vertices } => {
                let n = vertices.len();
                let per = (m / n).max(2);
                let mut out = Vec::with_capacity(per * n);
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    for s in 0..per {
                        let t = s as f64 / per as f64;
                        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    }
                }
                out
            }
        }
    }

    /// Point on the boundary at a normalized parameter `s ∈ [0,1)`.
    fn boundary_point(&self, s: f64) -> [f64; 2] {
        let s = s.rem_euclid(1.0);
        match self {
            Inclusion::Disk { center, radius } => {
                let t = 2.0 * PI * s;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            }
            Inclusion::Curve(c) => c.eval(2.0 * PI * s).0,
            Inclusion::Polygon { vertices } => {
                let n = vertices.len();
                let u = s * n as f64;
                let i = (u.floor() as usize).min(n - 1);
                let t = u - i as f64;
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            }
        }
    }

    /// Minimum distance from the inclusion boundary to `∂Y`.
    pub fn distance_to_cell_boundary(&self) -> f64 {
        match self {
            Inclusion::Disk { center, radius } => {
                PeriodCell::distance_to_boundary(*center) - radius
            }
            _ => self
                .boundary_samples(2048)
                .into_iter()
                .map(PeriodCell::distance_to_boundary)
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Inclusion::Disk { radius, .. } if !(*radius > 0.0) => {
                Err(Error::Config(format!("disk radius must be positive, got {radius}")))
            }
            Inclusion::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::Config("polygon needs at least 3 vertices".into()));
                }
                if signed_area(vertices) <= 0.0 {
                    return Err(Error::Config(
                        "polygon vertices must be counter-clockwise".into(),
                    ));
                }
                if polyline_self_intersects(vertices) {
                    return Err(Error::Config("polygon is not simple".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Result of [`min_separation`]: the smallest boundary-to-boundary distance
/// `t_d` and the pair that attains it, or the "no pair" sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    /// `t_d`, or `+∞` when there is no pair.
    pub distance: f64,
    pub pair: Option<(usize, usize)>,
}

impl Separation {
    pub fn is_no_pair(&self) -> bool {
        self.pair.is_none()
    }
}

/// The inclusions of the crystal and an optional common buffer radius `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionSet {
    inclusions: Vec<Inclusion>,
    buffer_outer_radius: Option<f64>,
}

impl InclusionSet {
    /// Validates and builds the set: every inclusion strictly inside `Y`,
    /// closures pairwise disjoint, and the buffer (disks only) feasible.
    pub fn new(inclusions: Vec<Inclusion>, buffer_outer_radius: Option<f64>) -> Result<Self> {
        for (i, inc) in inclusions.iter().enumerate() {
            inc.validate().map_err(|e| e.context(format!("inclusion {i}")))?;
            let d = inc.distance_to_cell_boundary();
            if !(d > 0.0) || !inc_center_inside(inc) {
                return Err(Error::Config(format!(
                    "inclusion {i} is not strictly inside the unit cell (distance to boundary {d:.3e})"
                )));
            }
        }
        for i in 0..inclusions.len() {
            for j in (i + 1)..inclusions.len() {
                let d = pair_distance(&inclusions[i], &inclusions[j]);
                let overlap = d <= 0.0
                    || inclusions[i].contains(inclusions[j].boundary_point(0.0))
                    || inclusions[j].contains(inclusions[i].boundary_point(0.0));
                if overlap {
                    return Err(Error::Config(format!(
                        "inclusions {i} and {j} overlap or touch (boundary distance {d:.3e})"
                    )));
                }
            }
        }
        let set = InclusionSet {
            inclusions,
            buffer_outer_radius,
        };
        if let Some(b) = buffer_outer_radius {
            set.validate_buffer(b)?;
        }
        Ok(set)
    }

    /// A single disk, the standard testbed.
    pub fn single_disk(center: [f64; 2], radius: f64, buffer: Option<f64>) -> Result<Self> {
        Self::new(vec![Inclusion::disk(center, radius)?], buffer)
    }

    fn validate_buffer(&self, b: f64) -> Result<()> {
        for (i, inc) in self.inclusions.iter().enumerate() {
            let Inclusion::Disk { center, radius } = inc else {
                return Err(Error::Config(format!(
                    "buffer radius requires disk inclusions; inclusion {i} is not a disk"
                )));
            };
            if !(b > *radius) {
                return Err(Error::Config(format!(
                    "buffer radius b={b} must exceed the radius a={radius} of inclusion {i}"
                )));
            }
            if PeriodCell::distance_to_boundary(*center) - b <= 0.0 {
                return Err(Error::Config(format!(
                    "buffered disk {i} (radius {b}) leaves the unit cell"
                )));
            }
        }
        for i in 0..self.inclusions.len() {
            for j in (i + 1)..self.inclusions.len() {
                if let (Inclusion::Disk { center: ci, .. }, Inclusion::Disk { center: cj, .. }) =
                    (&self.inclusions[i], &self.inclusions[j])
                {
                    let dc = (ci[0] - cj[0]).hypot(ci[1] - cj[1]);
                    if dc - 2.0 * b <= 0.0 {
                        return Err(Error::Config(format!(
                            "buffered disks {i} and {j} overlap (b={b} exceeds half the center distance)"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn inclusions(&self) -> &[Inclusion] {
        &self.inclusions
    }

    pub fn buffer_outer_radius(&self) -> Option<f64> {
        self.buffer_outer_radius
    }

    pub fn len(&self) -> usize {
        self.inclusions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inclusions.is_empty()
    }

    /// Whether every inclusion is a disk.
    pub fn all_disks(&self) -> bool {
        self.inclusions
            .iter()
            .all(|i| matches!(i, Inclusion::Disk { .. }))
    }

    /// Whether `p` lies in `D = ∪ D_i`.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.inclusions.iter().any(|i| i.contains(p))
    }

    /// Total inclusion area `|D|`.
    pub fn area(&self) -> f64 {
        self.inclusions.iter().map(Inclusion::area).sum()
    }
}

fn inc_center_inside(inc: &Inclusion) -> bool {
    match inc {
        Inclusion::Disk { center, .. } => PeriodCell::contains_open(*center),
        _ => inc
            .boundary_samples(256)
            .into_iter()
            .all(PeriodCell::contains_open),
    }
}

/// Boundary-to-boundary distance between two inclusions (disks exactly,
/// other shapes by sampling plus local refinement to 1e-8).
fn pair_distance(a: &Inclusion, b: &Inclusion) -> f64 {
    match (a, b) {
        (
            Inclusion::Disk {
                center: c1,
                radius: r1,
            },
            Inclusion::Disk {
                center: c2,
                radius: r2,
            },
        ) => (c1[0] - c2[0]).hypot(c1[1] - c2[1]) - r1 - r2,
        (Inclusion::Polygon { vertices: va }, Inclusion::Polygon { vertices: vb }) => {
            let mut best = f64::INFINITY;
            for (p, q) in [(va, vb), (vb, va)] {
                for &v in p.iter() {
                    for k in 0..q.len() {
                        best = best.min(point_segment_distance(v, q[k], q[(k + 1) % q.len()]));
                    }
                }
            }
            best
        }
        _ => refined_distance(a, b),
    }
}

fn refined_distance(a: &Inclusion, b: &Inclusion) -> f64 {
    let m = 512;
    let pa = a.boundary_samples(m);
    let pb = b.boundary_samples(m);
    let (mut si, mut sj, mut best) = (0usize, 0usize, f64::INFINITY);
    for (i, p) in pa.iter().enumerate() {
        for (j, q) in pb.iter().enumerate() {
            let d = (p[0] - q[0]).hypot(p[1] - q[1]);
            if d < best {
                best = d;
                si = i;
                sj = j;
            }
        }
    }
    let mut s = si as f64 / pa.len() as f64;
    let mut t = sj as f64 / pb.len() as f64;
    let dist = |s: f64, t: f64| {
        let p = a.boundary_point(s);
        let q = b.boundary_point(t);
        (p[0] - q[0]).hypot(p[1] - q[1])
    };
    let mut width = 2.0 / m as f64;
    // Alternating golden-section minimization in each boundary parameter.
    for _ in 0..60 {
        s = golden_min(|u| dist(u, t), s - width, s + width);
        t = golden_min(|u| dist(s, u), t - width, t + width);
        width *= 0.5;
        if width < 1e-12 {
            break;
        }
    }
    best.min(dist(s, t))
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest boundary distance `t_d` between any two inclusions.
pub fn min_separation(set: &InclusionSet) -> Separation {
    let mut out = Separation {
        distance: f64::INFINITY,
        pair: None,
    };
    let inc = set.inclusions();
    for i in 0..inc.len() {
        for j in (i + 1)..inc.len() {
            let d = pair_distance(&inc[i], &inc[j]);
            if d < out.distance {
                out = Separation {
                    distance: d,
                    pair: Some((i, j)),
                };
            }
        }
    }
    out
}

/// Nyström quadrature data on `∂D`: nodes equispaced in each inclusion's
/// parameter `t ∈ [0, 2π)`, outward normals (from `D` into `Y∖D`),
/// trapezoid weights `|x'(t)| 2π/n` and curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMesh {
    pub nodes: Vec<[f64; 2]>,
    pub normals: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Speed `|x'(t)|` at each node.
    pub speed: Vec<f64>,
    /// Signed curvature (positive for convex parts).
    pub curvature: Vec<f64>,
    /// Parameter value of each node.
    pub param: Vec<f64>,
    /// Start index of each inclusion's nodes; the last entry is the total.
    pub offsets: Vec<usize>,
}

impl BoundaryMesh {
    /// Total node count `n_q`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn inclusion_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Node index range of inclusion `i`.
    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Index of the inclusion owning node `j`.
    pub fn owner(&self, j: usize) -> usize {
        self.offsets.partition_point(|&o| o <= j) - 1
    }

    /// Quadrature approximation of each inclusion's perimeter.
    pub fn perimeters(&self) -> Vec<f64> {
        (0..self.inclusion_count())
            .map(|i| self.weights[self.range(i)].iter().sum())
            .collect()
    }
}

/// Builds the boundary quadrature mesh with `nodes_per_inclusion` nodes on
/// every inclusion.
pub fn build_mesh(set: &InclusionSet, nodes_per_inclusion: usize) -> Result<BoundaryMesh> {
    let n = nodes_per_inclusion;
    if n < 16 || n % 2 != 0 {
        return Err(Error::Contract(format!(
            "nodes_per_inclusion must be even and at least 16, got {n}"
        )));
    }
    let mut mesh = BoundaryMesh {
        nodes: Vec::new(),
        normals: Vec::new(),
        weights: Vec::new(),
        speed: Vec::new(),
        curvature: Vec::new(),
        param: Vec::new(),
        offsets: vec![0],
    };
    let h = 2.0 * PI / n as f64;
    for (i, inc) in set.inclusions().iter().enumerate() {
        for j in 0..n {
            let t = h * j as f64;
            let (x, d1, d2) = match inc {
                Inclusion::Disk { center, radius } => {
                    let (s, c) = t.sin_cos();
                    (
                        [center[0] + radius * c, center[1] + radius * s],
                        [-radius * s, radius * c],
                        [-radius * c, -radius * s],
                    )
                }
                Inclusion::Curve(curve) => curve.eval(t),
                Inclusion::Polygon { .. } => {
                    return Err(Error::Config(format!(
                        "inclusion {i} is a polygon; boundary meshes need smooth curves"
                    )))
                }
            };
            let sp = d1[0].hypot(d1[1]);
            if !(sp > 0.0) {
                return Err(Error::Config(format!(
                    "inclusion {i} has a degenerate parametrization at t={t}"
                )));
            }
            mesh.nodes.push(x);
            mesh.normals.push([d1[1] / sp, -d1[0] / sp]);
            mesh.speed.push(sp);
            mesh.weights.push(sp * h);
            mesh.curvature.push((d1[0] * d2[1] - d1[1] * d2[0]) / (sp * sp * sp));
            mesh.param.push(t);
        }
        mesh.offsets.push(mesh.nodes.len());
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mesh_lies_on_circle() {
        let set = InclusionSet::single_disk([0.5, 0.5], 0.3, None).unwrap();
        let mesh = build_mesh(&set, 64).unwrap();
        assert_eq!(mesh.len(), 64);
        for p in &mesh.nodes {
            assert!(((p[0] - 0.5).hypot(p[1] - 0.5) - 0.3).abs() < 1e-14);
        }
        assert!((mesh.perimeters()[0] - 2.0 * PI * 0.3).abs() < 1e-10);
    }

    #[test]
    fn wrapping_into_zone() {
        let w = PeriodCell::wrap_to_brillouin_zone([3.0 * PI, -PI]);
        assert!((w[0] - PI).abs() < 1e-12 && (w[1] - PI).abs() < 1e-12);
    }

    #[test]
    fn curve_interpolates_ellipse() {
        let c = ParametricCurve::from_fn(|t| [0.5 + 0.2 * t.cos(), 0.5 + 0.1 * t.sin()], 32)
            .unwrap();
        let (x, d, dd) = c.eval(0.3);
        assert!((x[0] - (0.5 + 0.2 * 0.3f64.cos())).abs() < 1e-13);
        assert!((d[1] - 0.1 * 0.3f64.cos()).abs() < 1e-13);
        assert!((dd[0] + 0.2 * 0.3f64.cos()).abs() < 1e-13);
        assert!((Inclusion::Curve(c).area() - PI * 0.02).abs() < 1e-12);
    }
}
