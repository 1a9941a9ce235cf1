//! Discrete single-layer and Neumann–Poincaré operators on `∂D`, the
//! quasi-periodic resonance spectrum `{μ_i}`, and the density projection
//! removing the `μ = ½` eigenspace.
//!
//! Self-interaction blocks use Kress's logarithmic product quadrature, so the
//! Nyström discretization converges spectrally for smooth boundaries.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::BoundaryMesh;
use crate::lattice_green::{GreenEvaluator, QuasiMomentum};
use crate::linalg::{self, CMat};
use crate::C64;

/// Discrete layer operators on a boundary mesh at one quasimomentum.
#[derive(Debug, Clone)]
pub struct LayerOperators {
    pub mesh: BoundaryMesh,
    pub alpha: QuasiMomentum,
    /// Single layer `S_{∂D}`: `(Sρ)_i ≈ ∫ G^α(x_i − y) ρ(y) dσ(y)`.
    pub s: CMat,
    /// Adjoint double layer `K*`: `(K*ρ)_i ≈ p.v.∫ ν(x_i)·∇G^α(x_i − y) ρ(y) dσ(y)`.
    pub kstar: CMat,
    /// Double layer `K`: `(Kφ)_i ≈ p.v.∫ ν(y)·∇_y G^α(x_i − y) φ(y) dσ(y)`.
    pub k: CMat,
    /// Quadrature weights.
    pub weights: Vec<f64>,
    /// Densities spanning the `μ = ½` eigenspace (one per inclusion for
    /// `α ≠ 0`; one fewer at `α = 0`), as columns.
    pub half_densities: CMat,
}

/// Kress weights `R_j` for `∫_0^{2π} ln(4 sin²((t_i−s)/2)) f(s) ds ≈ Σ_j R_{|i−j|} f(s_j)`.
pub fn kress_weights(n: usize) -> Vec<f64> {
    let m = n / 2;
    (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            let s: f64 = (1..m).map(|k| (k as f64 * t).cos() / k as f64).sum();
            -(2.0 * PI / m as f64) * s - PI / (m * m) as f64 * (m as f64 * t).cos()
        })
        .collect()
}

/// Assembles `S`, `K*` and `K` for the mesh with the evaluator's quasimomentum.
pub fn assemble(mesh: &BoundaryMesh, ev: &GreenEvaluator) -> Result<LayerOperators> {
    let n = mesh.len();
    if n == 0 {
        return Err(Error::Contract("empty boundary mesh".into()));
    }
    let counts: Vec<usize> = (0..mesh.inclusion_count())
        .map(|i| mesh.range(i).len())
        .collect();
    let kress: Vec<Vec<f64>> = counts.iter().map(|&c| kress_weights(c)).collect();
    let h0 = ev.smooth_part_and_gradient([0.0, 0.0]);

    let rows: Vec<Result<(Vec<C64>, Vec<C64>, Vec<C64>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = mesh.nodes[i];
            let nui = mesh.normals[i];
            let own = mesh.owner(i);
            let range = mesh.range(own);
            let nloc = range.len();
            let mut srow = vec![C64::new(0.0, 0.0); n];
            let mut ksrow = vec![C64::new(0.0, 0.0); n];
            let mut krow = vec![C64::new(0.0, 0.0); n];
            for j in 0..n {
                let yj = mesh.nodes[j];
                let nuj = mesh.normals[j];
                let wj = mesh.weights[j];
                let r = [xi[0] - yj[0], xi[1] - yj[1]];
                if i == j {
                    let (h, gh) = h0;
                    let hq = 2.0 * PI / nloc as f64;
                    let l2 = mesh.speed[i].ln();
                    srow[j] = (kress[own][0] / (4.0 * PI) + hq * (l2 / (2.0 * PI) + h))
                        * mesh.speed[j];
                    let kap = mesh.curvature[i] / (4.0 * PI);
                    let ngi = gh[0] * nui[0] + gh[1] * nui[1];
                    ksrow[j] = (kap + ngi) * wj;
                    krow[j] = (kap - ngi) * wj;
                    continue;
                }
                let rho2 = r[0] * r[0] + r[1] * r[1];
                let (h, gh) = ev.smooth_part_and_gradient(r);
                let grad = [
                    gh[0] + r[0] / (2.0 * PI * rho2),
                    gh[1] + r[1] / (2.0 * PI * rho2),
                ];
                ksrow[j] = (grad[0] * nui[0] + grad[1] * nui[1]) * wj;
                krow[j] = -(grad[0] * nuj[0] + grad[1] * nuj[1]) * wj;
                if mesh.owner(j) == own {
                    let li = i - range.start;
                    let lj = j - range.start;
                    let diff = (li as isize - lj as isize).unsigned_abs();
                    let dt = mesh.param[i] - mesh.param[j];
                    let l2 = 0.5 * rho2.ln() - 0.5 * (4.0 * (0.5 * dt).sin().powi(2)).ln();
                    let hq = 2.0 * PI / nloc as f64;
                    srow[j] = (kress[own][diff] / (4.0 * PI) + hq * (l2 / (2.0 * PI) + h))
                        * mesh.speed[j];
                } else {
                    srow[j] = (h + 0.5 * rho2.ln() / (2.0 * PI)) * wj;
                }
            }
            if srow.iter().chain(&ksrow).any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite layer-potential entry in row {i}"
                )));
            }
            Ok((srow, ksrow, krow))
        })
        .collect();
    let mut s = CMat::zeros(n, n);
    let mut kstar = CMat::zeros(n, n);
    let mut k = CMat::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        let (sr, ksr, kr) = row?;
        for j in 0..n {
            s[(i, j)] = sr[j];
            kstar[(i, j)] = ksr[j];
            k[(i, j)] = kr[j];
        }
    }
    let alpha = ev.alpha();
    let half_densities = half_space_densities(&s, mesh, alpha)?;
    Ok(LayerOperators {
        mesh: mesh.clone(),
        alpha,
        s,
        kstar,
        k,
        weights: mesh.weights.clone(),
        half_densities,
    })
}

/// Densities `σ` whose single layers are constant on each inclusion: these
/// span the `μ = ½` eigenspace of `K*`.
fn half_space_densities(s: &CMat, mesh: &BoundaryMesh, alpha: QuasiMomentum) -> Result<CMat> {
    let n = mesh.len();
    let m = mesh.inclusion_count();
    if !alpha.is_zero() {
        let rhs = CMat::from_fn(n, m, |i, j| {
            if mesh.owner(i) == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        return Ok(linalg::solve(s, &rhs));
    }
    // At α = 0 the potentials are defined up to constants: solve the
    // bordered system S σ + c = e_i, Σ w σ = 0, for all but one inclusion.
    let mut a = CMat::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = s[(i, j)];
        }
        a[(i, n)] = C64::new(1.0, 0.0);
        a[(n, i)] = C64::new(mesh.weights[i], 0.0);
    }
    let rhs = CMat::from_fn(n + 1, m.saturating_sub(1), |i, j| {
        if i < n && mesh.owner(i) == j {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let sol = linalg::solve(&a, &rhs);
    Ok(CMat::from_fn(n, m.saturating_sub(1), |i, j| sol[(i, j)]))
}

impl LayerOperators {
    /// Node count `n_q`.
    pub fn len(&self) -> usize {
        self.s.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.s.nrows() == 0
    }

    /// Metric of the `(−S)`-inner product on densities, `−W S` made Hermitian.
    pub fn gram(&self) -> CMat {
        let w = &self.weights;
        let g = CMat::from_fn(self.len(), self.len(), |i, j| -w[i] * self.s[(i, j)]);
        linalg::hermitian_part(&g)
    }

    /// `‖S K* − K S‖_F / ‖S‖_F`. At `α = 0` the kernel solves `ΔG = δ − 1`
    /// and the identity holds only on charge-free densities, up to constants.
    pub fn plemelj_residual(&self) -> f64 {
        let lhs = &self.s * &self.kstar;
        let rhs = &self.k * &self.s;
        linalg::frobenius(&(&lhs - &rhs)) / linalg::frobenius(&self.s)
    }

    /// Orthonormal basis of the admissible density space: all densities for
    /// `α ≠ 0`, densities with zero total charge `Σ w_j ρ_j = 0` at `α = 0`.
    pub fn density_basis(&self) -> CMat {
        if self.alpha.is_zero() {
            linalg::orthogonal_complement(&self.weights)
        } else {
            linalg::identity(self.len())
        }
    }

    /// Matrix of the projection onto the complement of the `μ = ½`
    /// eigenspace, orthogonal in the `(−S)`-inner product.
    pub fn w3_projector(&self) -> Result<CMat> {
        let n = self.len();
        let p = &self.half_densities;
        if p.ncols() == 0 {
            return Ok(linalg::identity(n));
        }
        let g = self.gram();
        let gp = &g * p;
        let m = p.adjoint() * &gp;
        let minv = linalg::inverse(&m);
        // P = I − Π (Π^H G Π)^{-1} Π^H G
        let corr = p * &minv * gp.adjoint();
        Ok(&linalg::identity(n) - &corr)
    }

    /// Removes the `μ = ½` component of a density.
    pub fn project_w3_density(&self, rho: &[C64]) -> Result<Vec<C64>> {
        if rho.len() != self.len() {
            return Err(Error::Contract(format!(
                "density has {} entries, mesh has {}",
                rho.len(),
                self.len()
            )));
        }
        Ok(linalg::matvec(&self.w3_projector()?, rho))
    }
}

/// Quasi-periodic resonances and eigendensities at one quasimomentum.
#[derive(Debug, Clone)]
pub struct NPSpectrum {
    pub alpha: QuasiMomentum,
    /// Eigenvalues `μ_i`, ascending.
    pub mu: Vec<f64>,
    /// Eigendensities (columns), orthonormal in the `(−S)`-inner product.
    pub densities: CMat,
    /// `μ⁻(α) = min μ_i`.
    pub mu_minus: f64,
    /// Largest `μ_i` strictly below `½` (eigenvalues within
    /// [`HALF_TOLERANCE`] of `½` are treated as the `½` eigenspace).
    pub mu_plus: f64,
    /// Discretization slack `ε_d`: distance of the top eigenvalue from `½`.
    pub slack: f64,
    /// Relative non-Hermitian part of the symmetrized operator before symmetrization.
    pub imag_residue: f64,
}

/// Eigenvalues this close to `½` are attributed to the `½` eigenspace.
pub const HALF_TOLERANCE: f64 = 1e-6;

/// Generalized Hermitian eigensolve of `K*` in the `(−S)`-inner product.
pub fn resonance_spectrum(ops: &LayerOperators) -> Result<NPSpectrum> {
    let n = ops.len();
    let w = &ops.weights;
    let g = ops.gram();
    let sk = &ops.s * &ops.kstar;
    let b_raw = CMat::from_fn(n, n, |i, j| -w[i] * sk[(i, j)]);
    let imag_residue = linalg::hermitian_defect(&b_raw);
    let b = linalg::hermitian_part(&b_raw);
    let q = ops.density_basis();
    let (gq, bq) = if ops.alpha.is_zero() {
        (q.adjoint() * &g * &q, q.adjoint() * &b * &q)
    } else {
        (g, b)
    };
    let (mu, x, _) = linalg::generalized_hermitian_eigen(&bq, &gq).map_err(|e| {
        e.context(format!(
            "resonance spectrum at alpha = ({}, {})",
            ops.alpha.x(),
            ops.alpha.y()
        ))
    })?;
    let densities = if ops.alpha.is_zero() { &q * &x } else { x };
    let mu_minus = mu[0];
    let top = *mu.last().expect("nonempty spectrum");
    let mu_plus = mu
        .iter()
        .copied()
        .filter(|&m| m < 0.5 - HALF_TOLERANCE)
        .fold(f64::NEG_INFINITY, f64::max);
    let slack = if ops.half_densities.ncols() > 0 {
        (top - 0.5).abs()
    } else {
        (top - 0.5).max(0.0)
    };
    Ok(NPSpectrum {
        alpha: ops.alpha,
        mu,
        densities,
        mu_minus,
        mu_plus,
        slack,
        imag_residue,
    })
}
