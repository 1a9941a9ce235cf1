//! The `z → 0` limit spectrum: Dirichlet eigenvalues of `−Δ` on `D`, the
//! spectral function `S(ν)` and its roots, and their assembly into the limit
//! values `β(0)` for `α ≠ 0` and `α = 0`.

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Inclusion;
use crate::lattice_green::QuasiMomentum;
use crate::special::{bessel_j, bessel_zero, bessel_zeros};

/// How a Dirichlet spectrum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirichletSource {
    BesselClosedForm,
    FiniteDifference,
}

/// One Dirichlet eigenvalue (with its multiplicity) of `−Δ` on an inclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletMode {
    /// `δ_j > 0`.
    pub eigenvalue: f64,
    pub multiplicity: usize,
    /// Whether every eigenfunction of this eigenvalue has zero mean on `D`.
    pub mean_zero: bool,
    /// `a_j = |∫_D ψ_j|` for the non-mean-zero eigenfunction (0 otherwise).
    pub average: f64,
    /// Bessel order `n` and zero index `k` for disk modes.
    pub bessel: Option<(u32, usize)>,
    /// Inclusion this mode lives on.
    pub inclusion: usize,
    /// Estimated absolute discretization error (0 for closed forms).
    pub error_estimate: f64,
}

/// Finite-difference eigenvectors on the interior grid points of an inclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct GridModes {
    pub h: f64,
    /// Interior grid points.
    pub points: Vec<[f64; 2]>,
    /// Eigenvectors normalized to `h² Σ ψ² = 1`, one per listed mode.
    pub vectors: Vec<Vec<f64>>,
}

/// Dirichlet eigenvalues of `−Δ` on `D`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSpectrum {
    pub modes: Vec<DirichletMode>,
    /// Total inclusion area `|D|`.
    pub area: f64,
    pub source: DirichletSource,
    /// Eigenvalues below this bound are all present in `modes`.
    pub complete_below: f64,
    /// Grid eigenfunctions for finite-difference spectra.
    pub grid: Option<GridModes>,
}

impl DirichletSpectrum {
    /// Lowest eigenvalue `δ_1`.
    pub fn lowest(&self) -> f64 {
        self.modes[0].eigenvalue
    }

    /// Merges spectra of separate inclusions (eigenvalues re-sorted).
    pub fn merge(parts: Vec<DirichletSpectrum>) -> Result<DirichletSpectrum> {
        if parts.is_empty() {
            return Err(Error::Contract("no spectra to merge".into()));
        }
        let source = parts[0].source;
        let area = parts.iter().map(|p| p.area).sum();
        let complete_below = parts
            .iter()
            .map(|p| p.complete_below)
            .fold(f64::INFINITY, f64::min);
        let mut modes: Vec<DirichletMode> = parts
            .into_iter()
            .enumerate()
            .flat_map(|(i, p)| {
                p.modes.into_iter().map(move |mut m| {
                    m.inclusion = i;
                    m
                })
            })
            .collect();
        modes.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
        Ok(DirichletSpectrum {
            modes,
            area,
            source,
            complete_below,
            grid: None,
        })
    }
}

/// Closed-form Dirichlet spectrum of a disk of radius `a`:
/// `δ = (η_{n,k}/a)²` for `0 ≤ n ≤ n_max`, `1 ≤ k ≤ k_max`.
pub fn disk_dirichlet(a: f64, n_max: u32, k_max: usize) -> Result<DirichletSpectrum> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("disk radius must be positive, got {a}")));
    }
    if k_max == 0 {
        return Err(Error::Contract("k_max must be at least 1".into()));
    }
    let mut modes = Vec::new();
    let mut next_zero = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let zeros = bessel_zeros(n, k_max + 1)?;
        next_zero.push(zeros[k_max]);
        for (ki, &eta) in zeros[..k_max].iter().enumerate() {
            let k = ki + 1;
            let average = if n == 0 {
                2.0 * PI.sqrt() * a / eta
            } else {
                0.0
            };
            modes.push(DirichletMode {
                eigenvalue: (eta / a).powi(2),
                multiplicity: if n == 0 { 1 } else { 2 },
                mean_zero: n != 0,
                average,
                bessel: Some((n, k)),
                inclusion: 0,
                error_estimate: 0.0,
            });
        }
    }
    modes.sort_by(|x, y| x.eigenvalue.total_cmp(&y.eigenvalue));
    // Smallest eigenvalue not generated: next order or next zero of any order.
    let mut bound = (bessel_zero(n_max + 1, 1)? / a).powi(2);
    for z in next_zero {
        bound = bound.min((z / a).powi(2));
    }
    Ok(DirichletSpectrum {
        modes,
        area: PI * a * a,
        source: DirichletSource::BesselClosedForm,
        complete_below: bound,
        grid: None,
    })
}

/// Disk spectrum with enough radial modes that the unaccounted mass
/// `πa² − Σ a_k²` is below `1e-3·πa²` and enough orders for `count` values.
pub fn disk_dirichlet_for_limit(a: f64, count: usize) -> Result<DirichletSpectrum> {
    // Σ_{k>K} 4/η_{0,k}² ≈ 4/(π² K); K = 420 leaves < 1e-3 of the mass.
    let k_max = 420;
    let n_max = (count as u32 + 2).max(4);
    disk_dirichlet(a, n_max, k_max)
}

/// Value of the truncated spectral function and a bound on the truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// Distinct non-mean-zero eigenvalues `δ*_i` with their summed masses `a_i²`.
pub fn spectral_poles(spec: &DirichletSpectrum) -> Vec<(f64, f64)> {
    let mut poles: Vec<(f64, f64)> = Vec::new();
    for m in spec.modes.iter().filter(|m| !m.mean_zero) {
        match poles.last_mut() {
            Some(last) if (last.0 - m.eigenvalue).abs() <= 1e-12 * m.eigenvalue => {
                last.1 += m.average * m.average
            }
            _ => poles.push((m.eigenvalue, m.average * m.average)),
        }
    }
    poles
}

/// `S(ν) = ν Σ a_i²/(ν − δ*_i) − 1` truncated to the resolved modes.
pub fn spectral_function(nu: f64, spec: &DirichletSpectrum) -> Result<SpectralValue> {
    let poles = spectral_poles(spec);
    if poles.is_empty() {
        return Err(Error::Resolution("spectrum has no non-mean-zero modes".into()));
    }
    let mut value = -1.0;
    let mut mass = 0.0;
    for &(d, a2) in &poles {
        if (nu - d).abs() <= 1e-13 * d {
            return Err(Error::Domain(format!("nu = {nu} is a pole of the spectral function")));
        }
        value += nu * a2 / (nu - d);
        mass += a2;
    }
    let last = poles.last().expect("nonempty").0;
    let missing = (spec.area - mass).max(0.0);
    let tail_bound = missing * nu.abs() / (last - nu).abs().max(f64::MIN_POSITIVE);
    Ok(SpectralValue { value, tail_bound })
}

fn spectral_derivative(nu: f64, poles: &[(f64, f64)]) -> f64 {
    poles.iter().map(|&(d, a2)| -a2 * d / (nu - d).powi(2)).sum()
}

/// Roots `ν_j` of `S`, one in each interval `(δ*_j, δ*_{j+1})` between
/// consecutive resolved poles.
pub fn spectral_roots(spec: &DirichletSpectrum) -> Result<Vec<f64>> {
    let poles = spectral_poles(spec);
    let f = |nu: f64| -> f64 {
        -1.0 + poles.iter().map(|&(d, a2)| nu * a2 / (nu - d)).sum::<f64>()
    };
    let mut roots = Vec::new();
    for w in poles.windows(2) {
        let (lo0, hi0) = (w[0].0, w[1].0);
        let gap = hi0 - lo0;
        let mut lo = lo0 + 1e-12 * gap;
        let mut hi = hi0 - 1e-12 * gap;
        let (flo, fhi) = (f(lo), f(hi));
        if !(flo > 0.0 && fhi < 0.0) {
            return Err(Error::Numerical(format!(
                "no sign change of S between poles {lo0} and {hi0}"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        let mut nu = 0.5 * (lo + hi);
        let d = spectral_derivative(nu, &poles);
        if d != 0.0 {
            let cand = nu - f(nu) / d;
            if cand > lo0 && cand < hi0 && f(cand).abs() <= f(nu).abs() {
                nu = cand;
            }
        }
        roots.push(nu);
    }
    Ok(roots)
}

/// Where a limit value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    /// `1/δ_j` of a Dirichlet eigenvalue (all modes for `α ≠ 0`, mean-zero
    /// modes `δ'_j` for `α = 0`).
    Dirichlet { delta: f64 },
    /// `1/ν_j` of the `j`-th root of the spectral function (`α = 0`).
    SpectralRoot { nu: f64, index: usize },
}

impl Provenance {
    pub fn label(&self) -> String {
        match self {
            Provenance::Dirichlet { .. } => "dirichlet".into(),
            Provenance::SpectralRoot { index, .. } => format!("spectral_root_{index}"),
        }
    }

    /// The eigenvalue `λ = 1/β(0)`.
    pub fn eigenvalue(&self) -> f64 {
        match *self {
            Provenance::Dirichlet { delta } => delta,
            Provenance::SpectralRoot { nu, .. } => nu,
        }
    }
}

/// One limit value `β(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitValue {
    pub value: f64,
    pub provenance: Provenance,
    pub multiplicity: usize,
}

/// The spectrum of `A^α(0)`, largest values first.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSpectrum {
    pub alpha: QuasiMomentum,
    pub values: Vec<LimitValue>,
}

impl LimitSpectrum {
    /// Distinct values with multiplicities summed, largest first.
    pub fn distinct(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for v in &self.values {
            match out.last_mut() {
                Some(last) if (last.0 - v.value).abs() <= 1e-10 * v.value => last.1 += v.multiplicity,
                _ => out.push((v.value, v.multiplicity)),
            }
        }
        out
    }
}

/// Limit spectrum at `α`: `{1/δ_j}` for `α ≠ 0`, and `{1/δ'_j} ∪ {1/ν_j}` at `α = 0`.
pub fn limit_spectrum(
    alpha: QuasiMomentum,
    spec: &DirichletSpectrum,
    count: usize,
) -> Result<LimitSpectrum> {
    let mut values = Vec::new();
    let cutoff;
    if alpha.is_zero() {
        let poles = spectral_poles(spec);
        let roots = spectral_roots(spec)?;
        let last_pole = poles.last().map(|p| p.0).unwrap_or(0.0);
        cutoff = last_pole.min(spec.complete_below);
        for m in spec.modes.iter().filter(|m| m.mean_zero) {
            values.push(LimitValue {
                value: 1.0 / m.eigenvalue,
                provenance: Provenance::Dirichlet {
                    delta: m.eigenvalue,
                },
                multiplicity: m.multiplicity,
            });
        }
        for (j, &nu) in roots.iter().enumerate() {
            values.push(LimitValue {
                value: 1.0 / nu,
                provenance: Provenance::SpectralRoot { nu, index: j + 1 },
                multiplicity: 1,
            });
        }
        // A non-mean-zero eigenvalue of multiplicity > 1 leaves its
        // orthogonal complement in the limit spectrum as a Dirichlet value.
        for m in spec.modes.iter().filter(|m| !m.mean_zero && m.multiplicity > 1) {
            values.push(LimitValue {
                value: 1.0 / m.eigenvalue,
                provenance: Provenance::Dirichlet {
                    delta: m.eigenvalue,
                },
                multiplicity: m.multiplicity - 1,
            });
        }
    } else {
        cutoff = spec.complete_below;
        for m in &spec.modes {
            values.push(LimitValue {
                value: 1.0 / m.eigenvalue,
                provenance: Provenance::Dirichlet {
                    delta: m.eigenvalue,
                },
                multiplicity: m.multiplicity,
            });
        }
    }
    values.retain(|v| v.provenance.eigenvalue() < cutoff);
    values.sort_by(|a, b| b.value.total_cmp(&a.value));
    if values.len() < count {
        return Err(Error::Resolution(format!(
            "only {} limit values resolved below eigenvalue {cutoff:.6}, {count} requested; increase k_max or n_max",
            values.len()
        )));
    }
    values.truncate(count);
    Ok(LimitSpectrum { alpha, values })
}

/// Builds the symmetric cut-cell 5-point Dirichlet Laplacian on the grid
/// points of `inclusion` and returns its lowest `count` eigenpairs.
fn fd_solve(inclusion: &Inclusion, h: f64, count: usize) -> Result<(Vec<f64>, GridModes)> {
    let samples = inclusion.boundary_samples(2048);
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &samples {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    let i0 = (xmin / h).floor() as i64 - 1;
    let i1 = (xmax / h).ceil() as i64 + 1;
    let j0 = (ymin / h).floor() as i64 - 1;
    let j1 = (ymax / h).ceil() as i64 + 1;
    let nx = (i1 - i0 + 1) as usize;
    let ny = (j1 - j0 + 1) as usize;
    let mut index = vec![usize::MAX; nx * ny];
    let mut points = Vec::new();
    for a in 0..nx {
        for b in 0..ny {
            let p = [(i0 + a as i64) as f64 * h, (j0 + b as i64) as f64 * h];
            if inclusion.contains(p) {
                index[a * ny + b] = points.len();
                points.push(p);
            }
        }
    }
    let n = points.len();
    if n < 100 {
        return Err(Error::Resolution(format!(
            "grid spacing {h} leaves only {n} interior points (need at least 100)"
        )));
    }
    if count + 8 > n {
        return Err(Error::Resolution(format!("{count} modes requested on {n} grid points")));
    }
    let inv_h2 = 1.0 / (h * h);
    let mut trip = Vec::with_capacity(5 * n);
    for a in 0..nx {
        for b in 0..ny {
            let id = index[a * ny + b];
            if id == usize::MAX {
                continue;
            }
            let p = points[id];
            let mut diag = 0.0;
            for (da, db) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let (na, nb) = (a as i64 + da, b as i64 + db);
                let nid = index[(na as usize) * ny + nb as usize];
                if nid != usize::MAX {
                    diag += inv_h2;
                    trip.push(Triplet::new(id, nid, -inv_h2));
                } else {
                    // Boundary crossing along the arm at fraction θ of h.
                    let dir = [da as f64 * h, db as f64 * h];
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..50 {
                        let mid = 0.5 * (lo + hi);
                        if inclusion.contains([p[0] + mid * dir[0], p[1] + mid * dir[1]]) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let theta = (0.5 * (lo + hi)).max(1e-3);
                    diag += inv_h2 / theta;
                }
            }
            trip.push(Triplet::new(id, id, diag));
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
    let llt = a
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Numerical(format!("sparse Cholesky failed: {e:?}")))?;
    let apply = |x: &Mat<f64>| -> Mat<f64> { &a * x };

    // Inverse subspace iteration with Rayleigh–Ritz.
    let p = count + 8;
    let mut x = Mat::<f64>::from_fn(n, p, |i, j| {
        let q = points[i];
        ((j as f64 + 1.0) * 3.1 * q[0] + (j as f64 * 1.7 + 0.3) * q[1] + 0.1 * j as f64).sin()
            + 1.0
    });
    let mut prev = vec![f64::INFINITY; count];
    let mut vals = vec![0.0; p];
    let mut converged = false;
    for _ in 0..500 {
        llt.solve_in_place(x.as_mut());
        let q = x.qr().compute_thin_Q();
        let aq = apply(&q);
        let t = q.transpose() * &aq;
        let tsym = Mat::<f64>::from_fn(p, p, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
        let evd = tsym
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("Ritz eigensolve failed: {e:?}")))?;
        for (i, v) in vals.iter_mut().enumerate() {
            *v = evd.S()[i];
        }
        x = &q * evd.U();
        let change = (0..count)
            .map(|i| ((vals[i] - prev[i]) / vals[i]).abs())
            .fold(0.0, f64::max);
        prev.copy_from_slice(&vals[..count]);
        if change < 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("subspace iteration did not converge".into()));
    }
    let norm = 1.0 / h;
    let vectors = (0..count)
        .map(|j| (0..n).map(|i| x[(i, j)] * norm).collect())
        .collect();
    Ok((
        vals[..count].to_vec(),
        GridModes { h, points, vectors },
    ))
}

/// Lowest `count` Dirichlet eigenvalues of a general inclusion from a
/// cut-cell finite-difference Laplacian with spacing `h`, with an error
/// estimate from a second solve at spacing `2h`.
pub fn fd_dirichlet(inclusion: &Inclusion, grid_h: f64, count: usize) -> Result<DirichletSpectrum> {
    if !(grid_h > 0.0) {
        return Err(Error::Contract(format!("grid spacing must be positive, got {grid_h}")));
    }
    let (fine, grid) = fd_solve(inclusion, grid_h, count)?;
    let coarse = fd_solve(inclusion, 2.0 * grid_h, count).ok().map(|c| c.0);
    let area = inclusion.area();
    let tol = 1e-6 * area.sqrt();
    let h2 = grid_h * grid_h;
    let mut modes = Vec::with_capacity(count);
    for (j, &lam) in fine.iter().enumerate() {
        let mean: f64 = grid.vectors[j].iter().sum::<f64>() * h2;
        let err = coarse
            .as_ref()
            .map(|c| (lam - c[j]).abs() / 3.0)
            .unwrap_or(f64::NAN);
        modes.push(DirichletMode {
            eigenvalue: lam,
            multiplicity: 1,
            mean_zero: mean.abs() < tol,
            average: if mean.abs() < tol { 0.0 } else { mean.abs() },
            bessel: None,
            inclusion: 0,
            error_estimate: err,
        });
    }
    let complete_below = fine.last().copied().unwrap_or(0.0) * (1.0 + 1e-9);
    Ok(DirichletSpectrum {
        modes,
        area,
        source: DirichletSource::FiniteDifference,
        complete_below,
        grid: Some(grid),
    })
}

/// Closed-form normalized disk eigenfunction
/// `ψ_{n,k}(r,θ) = J_n(η r/a) e^{inθ} / (√π a |J_{n+1}(η)|)`
/// for signed angular order `l` (so `n = |l|`), relative to the disk center.
pub fn disk_mode_value(a: f64, l: i32, eta: f64, p: [f64; 2]) -> num_complex::Complex64 {
    let r = p[0].hypot(p[1]);
    if r >= a {
        return num_complex::Complex64::new(0.0, 0.0);
    }
    let n = l.unsigned_abs() as i32;
    let norm = PI.sqrt() * a * bessel_j(n + 1, eta).abs();
    let th = p[1].atan2(p[0]);
    num_complex::Complex64::from_polar(bessel_j(n, eta * r / a) / norm, l as f64 * th)
}
