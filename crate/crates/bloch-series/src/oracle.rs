//! Independent plane-wave Galerkin solver for the finite-contrast Bloch
//! problem `−∇·(a∇h) = ω² h` with `a = k` in `Y∖D` and `a = 1` in `D`.
//!
//! The solver only uses the Fourier coefficients of `χ_D` and shares no code
//! with the boundary-integral modules.

use std::f64::consts::PI;

use faer::linalg::solvers::DenseSolveCore;
use faer::Side;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Inclusion, InclusionSet};
use crate::lattice_green::QuasiMomentum;
use crate::linalg::{self, CMat};
use crate::special::bessel_j;
use crate::C64;

/// Largest admissible plane-wave basis.
pub const MAX_BASIS: usize = 100_000;

/// Plane waves `e^{i(2πn+α)·x}`, `|n|_∞ ≤ M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveBasis {
    pub alpha: QuasiMomentum,
    pub cutoff: usize,
    /// Lattice indices `n`, row-major in `(n_x, n_y)`.
    pub modes: Vec<[i64; 2]>,
}

impl PlaneWaveBasis {
    pub fn new(alpha: QuasiMomentum, cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::Contract("plane-wave cutoff must be at least 1".into()));
        }
        let side = 2 * cutoff + 1;
        if side * side > MAX_BASIS {
            return Err(Error::Resolution(format!(
                "plane-wave basis of size {} exceeds the limit {MAX_BASIS}",
                side * side
            )));
        }
        let m = cutoff as i64;
        let modes = (-m..=m)
            .flat_map(|i| (-m..=m).map(move |j| [i, j]))
            .collect();
        Ok(PlaneWaveBasis {
            alpha,
            cutoff,
            modes,
        })
    }

    /// Basis size `(2M+1)²`.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Wave vector `2πn + α` of mode `i`.
    pub fn wave_vector(&self, i: usize) -> [f64; 2] {
        self.alpha.shifted(self.modes[i])
    }
}

/// How the discontinuous coefficient enters the Galerkin matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorizationRule {
    /// `G = K^H (z I + (1−z)[χ̂_D])^{-1} K` with `z = 1/k`: the Toeplitz
    /// matrix of `1/a` is inverted. Converges at high contrast.
    Inverse,
    /// `G = K^H (k I − (k−1)[χ̂_D]) K`: the Toeplitz matrix of `a`.
    Laurent,
}

/// Solver options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub cutoff: usize,
    pub rule: FactorizationRule,
    /// Also solve with cutoff `2M` and extrapolate.
    pub richardson: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            cutoff: 12,
            rule: FactorizationRule::Inverse,
            richardson: false,
        }
    }
}

/// Lowest Bloch eigenvalues at one `(α, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub alpha: [f64; 2],
    pub contrast: f64,
    /// Eigenvalues `ω²`, ascending, at the base cutoff.
    pub omega2: Vec<f64>,
    /// `‖G x − ω² x‖ / ‖G‖_max` for each eigenpair.
    pub residuals: Vec<f64>,
    pub cutoff: usize,
    pub rule: FactorizationRule,
    /// First-order extrapolation `2ω²(2M) − ω²(M)` when requested.
    pub extrapolated: Option<Vec<f64>>,
    /// `|ω²(2M) − ω²(M)|`, an estimate of the discretization error of the
    /// extrapolated value.
    pub error_estimate: Option<Vec<f64>>,
}

impl OracleResult {
    /// Best available eigenvalues: extrapolated if present.
    pub fn best(&self) -> &[f64] {
        self.extrapolated.as_deref().unwrap_or(&self.omega2)
    }
}

/// `χ̂_D(n) = ∫_{D_i} e^{−i2πn·x} dx` for one inclusion.
pub fn chi_fourier(inclusion: &Inclusion, n: [i64; 2]) -> C64 {
    let q = [2.0 * PI * n[0] as f64, 2.0 * PI * n[1] as f64];
    let qn = q[0].hypot(q[1]);
    match inclusion {
        Inclusion::Disk { center, radius } => {
            let a = *radius;
            let mag = if qn == 0.0 {
                PI * a * a
            } else {
                2.0 * PI * a * bessel_j(1, qn * a) / qn
            };
            C64::from_polar(mag, -(q[0] * center[0] + q[1] * center[1]))
        }
        Inclusion::Polygon { vertices } => {
            if qn == 0.0 {
                return C64::new(inclusion.area(), 0.0);
            }
            // ∫_D e^{−iq·x} = ∮ (i q·ν/|q|²) e^{−iq·x} ds, exact on each edge.
            let m = vertices.len();
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..m {
                let p0 = vertices[i];
                let p1 = vertices[(i + 1) % m];
                let e = [p1[0] - p0[0], p1[1] - p0[1]];
                // Outward normal times edge length for counter-clockwise order.
                let nu_len = [e[1], -e[0]];
                let beta = q[0] * e[0] + q[1] * e[1];
                let base = C64::from_polar(1.0, -(q[0] * p0[0] + q[1] * p0[1]));
                let seg = if beta.abs() < 1e-12 {
                    C64::new(1.0 - 0.5 * beta * beta / 3.0, -0.5 * beta)
                } else {
                    (C64::new(1.0, 0.0) - C64::from_polar(1.0, -beta)) / C64::new(0.0, beta)
                };
                acc += base * seg * (q[0] * nu_len[0] + q[1] * nu_len[1]);
            }
            acc * C64::new(0.0, 1.0 / (qn * qn))
        }
        Inclusion::Curve(c) => {
            if qn == 0.0 {
                return C64::new(inclusion.area(), 0.0);
            }
            // Same boundary identity with the trapezoid rule in the curve
            // parameter, doubled until it settles to 1e-10.
            let eval = |m: usize| -> C64 {
                let h = 2.0 * PI / m as f64;
                (0..m)
                    .map(|j| {
                        let (x, d, _) = c.eval(h * j as f64);
                        // ν ds = (y', −x') dt for positive orientation.
                        let qn_ds = q[0] * d[1] - q[1] * d[0];
                        C64::from_polar(qn_ds, -(q[0] * x[0] + q[1] * x[1]))
                    })
                    .sum::<C64>()
                    * h
                    * C64::new(0.0, 1.0 / (qn * qn))
            };
            let mut m = 64.max(4 * c.samples().len());
            let mut prev = eval(m);
            for _ in 0..12 {
                m *= 2;
                let next = eval(m);
                if (next - prev).norm() < 1e-10 {
                    return next;
                }
                prev = next;
            }
            prev
        }
    }
}

/// `χ̂_D(n)` summed over all inclusions.
pub fn chi_fourier_set(set: &InclusionSet, n: [i64; 2]) -> C64 {
    set.inclusions().iter().map(|inc| chi_fourier(inc, n)).sum()
}

fn toeplitz_chi(set: &InclusionSet, basis: &PlaneWaveBasis) -> CMat {
    let m = basis.cutoff as i64;
    let side = (4 * m + 1) as usize;
    let table: Vec<C64> = (-2 * m..=2 * m)
        .flat_map(|i| (-2 * m..=2 * m).map(move |j| [i, j]))
        .map(|d| chi_fourier_set(set, d))
        .collect();
    let idx = |d: [i64; 2]| ((d[0] + 2 * m) as usize) * side + (d[1] + 2 * m) as usize;
    let n = basis.len();
    CMat::from_fn(n, n, |r, c| {
        let a = basis.modes[r];
        let b = basis.modes[c];
        table[idx([a[0] - b[0], a[1] - b[1]])]
    })
}

/// Galerkin matrix of the form `B_k` on the trial modes (the constant mode
/// is excluded at `α = 0`).
fn galerkin_matrix(
    basis: &PlaneWaveBasis,
    set: &InclusionSet,
    k: f64,
    rule: FactorizationRule,
) -> Result<(CMat, Vec<usize>)> {
    let n = basis.len();
    let chi = toeplitz_chi(set, basis);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| !(basis.alpha.is_zero() && basis.modes[i] == [0, 0]))
        .collect();
    let core = match rule {
        FactorizationRule::Inverse => {
            let z = 1.0 / k;
            let t = CMat::from_fn(n, n, |i, j| {
                let d = if i == j { z } else { 0.0 };
                C64::new(d, 0.0) + (1.0 - z) * chi[(i, j)]
            });
            let t = linalg::hermitian_part(&t);
            let llt = t.llt(Side::Lower).map_err(|e| {
                Error::Numerical(format!("flux matrix is not positive definite: {e:?}"))
            })?;
            llt.inverse()
        }
        FactorizationRule::Laurent => CMat::from_fn(n, n, |i, j| {
            let d = if i == j { k } else { 0.0 };
            C64::new(d, 0.0) - (k - 1.0) * chi[(i, j)]
        }),
    };
    let kv: Vec<[f64; 2]> = keep.iter().map(|&i| basis.wave_vector(i)).collect();
    let g = CMat::from_fn(keep.len(), keep.len(), |r, c| {
        let dotk = kv[r][0] * kv[c][0] + kv[r][1] * kv[c][1];
        core[(keep[r], keep[c])] * dotk
    });
    Ok((linalg::hermitian_part(&g), keep))
}

/// Lowest `q` eigenpairs of a Hermitian positive-definite matrix by inverse
/// subspace iteration with Rayleigh–Ritz steps.
fn lowest_eigenpairs(g: &CMat, q: usize) -> Result<(Vec<f64>, CMat)> {
    let n = g.nrows();
    if n <= 400 || q + 8 >= n {
        let (vals, vecs) = linalg::hermitian_eigen(g)?;
        let q = q.min(n);
        return Ok((vals[..q].to_vec(), vecs.subcols(0, q).to_owned()));
    }
    let llt = g
        .llt(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Galerkin matrix is not positive definite: {e:?}")))?;
    let l = llt.L().to_owned();
    let p = q + 8;
    // Deterministic start: the lowest-|k| modes carry the low eigenvectors.
    let diag: Vec<f64> = (0..n).map(|i| g[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let mut x = CMat::zeros(n, p);
    for (j, &i) in order.iter().take(p).enumerate() {
        x[(i, j)] = C64::new(1.0, 0.0);
        // A small spread avoids invariant coordinate subspaces.
        for r in 0..n {
            x[(r, j)] += C64::new(1e-3 * ((r * 7 + j * 13) % 17) as f64 / 17.0, 0.0);
        }
    }
    let mut prev = vec![f64::INFINITY; q];
    let mut vals = vec![0.0; p];
    for _ in 0..1000 {
        linalg::solve_lower(&l, &mut x);
        linalg::solve_lower_adjoint(&l, &mut x);
        let qm = x.qr().compute_thin_Q();
        let t = qm.adjoint() * g * &qm;
        let (tv, tu) = linalg::hermitian_eigen(&t)?;
        vals.copy_from_slice(&tv);
        x = &qm * &tu;
        let change = (0..q)
            .map(|i| ((vals[i] - prev[i]) / vals[i]).abs())
            .fold(0.0, f64::max);
        prev.copy_from_slice(&vals[..q]);
        if change < 1e-10 {
            return Ok((vals[..q].to_vec(), x.subcols(0, q).to_owned()));
        }
    }
    Err(Error::Numerical(
        "subspace iteration for the Bloch eigenvalues did not converge".into(),
    ))
}

fn solve_once(
    basis: &PlaneWaveBasis,
    set: &InclusionSet,
    k: f64,
    q: usize,
    rule: FactorizationRule,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (g, _) = galerkin_matrix(basis, set, k, rule)?;
    let (vals, vecs) = lowest_eigenpairs(&g, q)?;
    let scale = linalg::max_abs(&g);
    let gx = &g * &vecs;
    let residuals = (0..vals.len())
        .map(|j| {
            let r: f64 = (0..g.nrows())
                .map(|i| (gx[(i, j)] - vecs[(i, j)] * vals[j]).norm_sqr())
                .sum();
            r.sqrt() / scale
        })
        .collect();
    Ok((vals, residuals))
}

/// Lowest `q` Bloch eigenvalues `ω²` at contrast `k`.
pub fn bloch_solve(
    basis: &PlaneWaveBasis,
    set: &InclusionSet,
    k: f64,
    q: usize,
    rule: FactorizationRule,
) -> Result<OracleResult> {
    if !(k > 0.0) {
        return Err(Error::Contract(format!("contrast must be positive, got {k}")));
    }
    if q == 0 || q > 20 {
        return Err(Error::Contract(format!("eigenvalue count must be in 1..=20, got {q}")));
    }
    let (omega2, residuals) = solve_once(basis, set, k, q, rule)?;
    Ok(OracleResult {
        alpha: basis.alpha.as_array(),
        contrast: k,
        omega2,
        residuals,
        cutoff: basis.cutoff,
        rule,
        extrapolated: None,
        error_estimate: None,
    })
}

/// [`bloch_solve`] with the options' cutoff, plus an extrapolation from the
/// `2M` solve when requested.
pub fn bloch_solve_with(
    set: &InclusionSet,
    alpha: QuasiMomentum,
    k: f64,
    q: usize,
    options: &OracleOptions,
) -> Result<OracleResult> {
    let basis = PlaneWaveBasis::new(alpha, options.cutoff)?;
    let mut result = bloch_solve(&basis, set, k, q, options.rule)?;
    if options.richardson {
        let fine = PlaneWaveBasis::new(alpha, 2 * options.cutoff)?;
        let (w2, _) = solve_once(&fine, set, k, q, options.rule)?;
        let ex = result
            .omega2
            .iter()
            .zip(&w2)
            .map(|(a, b)| 2.0 * b - a)
            .collect();
        let est = result
            .omega2
            .iter()
            .zip(&w2)
            .map(|(a, b)| (b - a).abs())
            .collect();
        result.extrapolated = Some(ex);
        result.error_estimate = Some(est);
    }
    Ok(result)
}

/// Oracle value of the series variable: `β_j(z) = 1/ω²_j` at `k = 1/z`,
/// with the extrapolation error mapped to `β` when available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBeta {
    pub beta: f64,
    pub error_estimate: Option<f64>,
}

/// `β_j(z) = 1/ω²_j(1/z)` for the `j`-th eigenvalue (0-based).
pub fn beta_of_z_oracle(
    set: &InclusionSet,
    alpha: QuasiMomentum,
    z: f64,
    j: usize,
    options: &OracleOptions,
) -> Result<OracleBeta> {
    if !(z > 0.0) {
        return Err(Error::Contract(format!(
            "the oracle needs finite contrast: z must be positive, got {z}"
        )));
    }
    let res = bloch_solve_with(set, alpha, 1.0 / z, j + 1, options)?;
    let w = res.best()[j];
    let err = res.error_estimate.as_ref().map(|e| e[j] / (w * w));
    Ok(OracleBeta {
        beta: 1.0 / w,
        error_estimate: err,
    })
}

/// First-order Richardson extrapolation `2 f(h/2) − f(h)` of values computed
/// at step `h` and `h/2`.
pub fn richardson_first_order(coarse: f64, fine: f64) -> f64 {
    2.0 * fine - coarse
}
