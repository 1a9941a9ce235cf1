//! Galerkin realization of the operators `A_n^α` for disk inclusions.
//!
//! The trial space is `W_2h ⊕ W_3h ⊕ W_1h`:
//! * `W_2h`: Dirichlet eigenfunctions of each disk (minus their cell mean at
//!   `α = 0`),
//! * `W_3h`: single layers `S_D σ` of nodal boundary densities (densities
//!   of zero total charge at `α = 0`),
//! * `W_1h`: plane waves restricted to `Y∖D` and made to vanish on `∂D` by
//!   subtracting their harmonic extensions (constrained to zero cell mean at
//!   `α = 0`).
//!
//! With the `L²(Y)` mass matrix `M = L L^H` and the block-diagonal inverse
//! energy operators `C_n`, the matrices `Â_n = L^H C_n L` represent `A_n` in
//! an orthonormal basis, and `Â_0` is diagonal.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{build_mesh, Inclusion, InclusionSet};
use crate::lattice_green::{GreenEvaluator, QuasiMomentum};
use crate::linalg::{self, CMat};
use crate::np_spectrum::{assemble, kress_weights, resonance_spectrum, LayerOperators, NPSpectrum};
use crate::series::chain::DiskMode;
use crate::special::{bessel_j_seq, bessel_zeros_below};
use crate::C64;

/// Discretization parameters of the Galerkin model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    /// Boundary nodes per disk.
    pub nodes_per_inclusion: usize,
    /// Dirichlet modes with `η_{n,k} <` this value are kept on every disk.
    pub bessel_cutoff: f64,
    /// Plane waves `|n|_∞ ≤` this value span `W_1h`.
    pub plane_wave_cutoff: usize,
    /// Highest order `n` of `Â_n`.
    pub max_order: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            nodes_per_inclusion: 64,
            bessel_cutoff: 30.0,
            plane_wave_cutoff: 4,
            max_order: 6,
        }
    }
}

/// The matrices `Â_0, …, Â_N` at one quasimomentum.
#[derive(Debug, Clone)]
pub struct SeriesModel {
    pub alpha: QuasiMomentum,
    /// `Â_n`, Hermitian, in an orthonormal basis of the trial space.
    pub a_hat: Vec<CMat>,
    /// Diagonal of `Â_0` (which is diagonal).
    pub diagonal: Vec<f64>,
    /// Dirichlet modes spanning `W_2h` (the first coordinates for `α ≠ 0`;
    /// at `α = 0` those coordinates are rotated to diagonalize `Â_0`).
    pub modes: Vec<DiskMode>,
    /// Dimensions of `W_2h`, `W_3h`, `W_1h`.
    pub dims: [usize; 3],
    /// Resonances used in the density block.
    pub resonances: Vec<f64>,
    /// Largest off-diagonal entry of `Â_0` before it was zeroed.
    pub offdiag_residual: f64,
}

/// `c_n(μ) = (½+μ)^{-1} ((μ−½)/(μ+½))^{n−1}`: the density-block multiplier of
/// `A_n` on a resonance eigendensity.
pub fn density_multiplier(mu: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    ((mu - 0.5) / (mu + 0.5)).powi(n as i32 - 1) / (mu + 0.5)
}

/// Assembles the boundary operators and builds the model.
pub fn build_model(set: &InclusionSet, alpha: QuasiMomentum, opts: &ModelOptions) -> Result<SeriesModel> {
    let mesh = build_mesh(set, opts.nodes_per_inclusion)?;
    let ev = GreenEvaluator::new(alpha);
    let ops = assemble(&mesh, &ev)?;
    let spectrum = resonance_spectrum(&ops)?;
    build_model_from(set, &ops, &spectrum, opts)
}

struct Disk {
    center: [f64; 2],
    radius: f64,
}

/// Builds the model from already assembled layer operators.
pub fn build_model_from(
    set: &InclusionSet,
    ops: &LayerOperators,
    spectrum: &NPSpectrum,
    opts: &ModelOptions,
) -> Result<SeriesModel> {
    let disks: Vec<Disk> = set
        .inclusions()
        .iter()
        .map(|inc| match *inc {
            Inclusion::Disk { center, radius } => Ok(Disk { center, radius }),
            _ => Err(Error::Contract(
                "the series model is implemented for disk inclusions only".into(),
            )),
        })
        .collect::<Result<_>>()?;
    let alpha = ops.alpha;
    let zero = alpha.is_zero();
    let mesh = &ops.mesh;
    let n = mesh.len();
    let w = &ops.weights;
    let ev = GreenEvaluator::new(alpha);

    // W_2h: Dirichlet modes of every disk.
    let mut modes = Vec::new();
    for (i, d) in disks.iter().enumerate() {
        let half = (mesh.range(i).len() / 2) as i32;
        for l in -(half - 1)..half {
            for (k, eta) in bessel_zeros_below(l.unsigned_abs(), opts.bessel_cutoff)?
                .into_iter()
                .enumerate()
            {
                modes.push(DiskMode {
                    inclusion: i,
                    center: d.center,
                    radius: d.radius,
                    l,
                    k: k + 1,
                    eta,
                });
            }
        }
    }
    modes.sort_by(|a, b| {
        a.eigenvalue()
            .total_cmp(&b.eigenvalue())
            .then(a.inclusion.cmp(&b.inclusion))
            .then(a.l.cmp(&b.l))
    });
    let j2 = modes.len();

    // W_3h density coordinates.
    let b3 = ops.density_basis();
    let n3 = b3.ncols();

    // W_1h plane waves and their harmonic extensions.
    let lc = opts.plane_wave_cutoff as i64;
    let mut kpw = Vec::new();
    for i in -lc..=lc {
        for j in -lc..=lc {
            if zero && i == 0 && j == 0 {
                continue;
            }
            kpw.push(alpha.shifted([i, j]));
        }
    }
    let npw = kpw.len();
    let epw = CMat::from_fn(n, npw, |r, c| {
        let x = mesh.nodes[r];
        C64::from_polar(1.0, kpw[c][0] * x[0] + kpw[c][1] * x[1])
    });
    let (sig_pw, consts) = harmonic_extensions(ops, &epw);

    // All single-layer columns: W_3h coordinates then plane-wave extensions.
    let ncols = n3 + npw;
    let sig = CMat::from_fn(n, ncols, |r, c| {
        if c < n3 {
            b3[(r, c)]
        } else {
            sig_pw[(r, c - n3)]
        }
    });
    let trace = &ops.s * &sig;

    // Fourier coefficients g_l of the boundary trace on each disk, which
    // determine the harmonic interior extension Σ g_l (r/a)^{|l|} e^{ilθ}.
    let mut coeffs: Vec<(Vec<i32>, CMat)> = Vec::with_capacity(disks.len());
    for (i, d) in disks.iter().enumerate() {
        let range = mesh.range(i);
        let ni = range.len();
        let ls: Vec<i32> = (0..ni as i32)
            .map(|q| if q < ni as i32 / 2 { q } else { q - ni as i32 })
            .collect();
        let g = CMat::from_fn(ni, ncols, |li, c| {
            let l = ls[li] as f64;
            let mut acc = C64::new(0.0, 0.0);
            for j in range.clone() {
                let p = mesh.nodes[j];
                let th = (p[1] - d.center[1]).atan2(p[0] - d.center[0]);
                acc += trace[(j, c)] * C64::from_polar(1.0, -l * th);
            }
            acc / ni as f64
        });
        coeffs.push((ls, g));
    }

    // Gram matrices over D of single layers.
    let mut gd_ss = CMat::zeros(ncols, ncols);
    for ((ls, g), d) in coeffs.iter().zip(&disks) {
        let scale: Vec<f64> = ls
            .iter()
            .map(|l| PI * d.radius * d.radius / (l.abs() as f64 + 1.0))
            .collect();
        let sg = CMat::from_fn(g.nrows(), ncols, |r, c| g[(r, c)] * scale[r]);
        gd_ss += g.adjoint() * &sg;
    }

    // Gram over Y of single layers through the biharmonic kernel.
    let s2 = biharmonic_matrix(ops, &ev);
    let wsig = CMat::from_fn(n, ncols, |r, c| sig[(r, c)] * w[r]);
    let gy_ss = linalg::hermitian_part(&(wsig.adjoint() * (&s2 * &sig)));

    // Plane wave against single layer, over Y and over D.
    let gy_ps = CMat::from_fn(npw, ncols, |p, c| {
        let k = kpw[p];
        let k2 = k[0] * k[0] + k[1] * k[1];
        let mut hat = C64::new(0.0, 0.0);
        for j in 0..n {
            let x = mesh.nodes[j];
            hat += C64::from_polar(w[j], -(k[0] * x[0] + k[1] * x[1])) * sig[(j, c)];
        }
        -hat / k2
    });
    let mut gd_ps = CMat::zeros(npw, ncols);
    for ((ls, g), d) in coeffs.iter().zip(&disks) {
        let lmax = ls.iter().map(|l| l.unsigned_abs()).max().unwrap_or(0) as usize;
        let f = CMat::from_fn(npw, ls.len(), |p, li| {
            let k = kpw[p];
            let q = k[0].hypot(k[1]);
            let thk = k[1].atan2(k[0]);
            let l = ls[li];
            let jn = bessel_j_seq(lmax + 2, q * d.radius);
            let phase = C64::from_polar(1.0, -(k[0] * d.center[0] + k[1] * d.center[1]));
            phase
                * C64::new(0.0, -1.0).powi(l.abs())
                * C64::from_polar(1.0, l as f64 * thk)
                * (2.0 * PI * d.radius * jn[l.unsigned_abs() as usize + 1] / q)
        });
        gd_ps += &f * g;
    }
    let gd_pp = CMat::from_fn(npw, npw, |r, c| {
        let q = [kpw[c][0] - kpw[r][0], kpw[c][1] - kpw[r][1]];
        disks
            .iter()
            .map(|d| disk_transform(d, q))
            .sum::<C64>()
    });

    // Dirichlet mode against single layer (over D).
    let coeff_row = |i: usize, l: i32| -> usize {
        let ni = mesh.range(i).len() as i32;
        (if l >= 0 { l } else { l + ni }) as usize
    };
    let g_ds = CMat::from_fn(j2, ncols, |r, c| {
        let m = &modes[r];
        let (_, g) = &coeffs[m.inclusion];
        g[(coeff_row(m.inclusion, m.l), c)] * (2.0 * PI.sqrt() * m.radius / m.eta)
    });

    // Exterior Grams.
    let ge_ss = &gy_ss - &gd_ss;
    let ge_ps = &gy_ps - &gd_ps;
    let ge_pp = CMat::from_fn(npw, npw, |r, c| {
        let d = if r == c { 1.0 } else { 0.0 };
        C64::new(d, 0.0) - gd_pp[(r, c)]
    });

    // W_1h at α = 0: combinations whose additive constants cancel.
    let z = if zero {
        linalg::orthogonal_complement_of(&consts)
    } else {
        linalg::identity(npw)
    };
    let n1 = z.ncols();

    let m31_raw = CMat::from_fn(n3, npw, |r, c| ge_ps[(c, r)].conj() - ge_ss[(r, n3 + c)]);
    let m11_raw = CMat::from_fn(npw, npw, |r, c| {
        ge_pp[(r, c)] - ge_ps[(r, n3 + c)] - ge_ps[(c, n3 + r)].conj() + ge_ss[(n3 + r, n3 + c)]
    });
    let m31 = &m31_raw * &z;
    let m11 = z.adjoint() * &m11_raw * &z;

    let dim = j2 + n3 + n1;
    let mut mass = CMat::zeros(dim, dim);
    let means: Vec<f64> = modes.iter().map(|m| if zero { m.mean() } else { 0.0 }).collect();
    for r in 0..j2 {
        for c in 0..j2 {
            let d = if r == c { 1.0 } else { 0.0 };
            mass[(r, c)] = C64::new(d - means[r] * means[c], 0.0);
        }
        for c in 0..n3 {
            mass[(r, j2 + c)] = g_ds[(r, c)];
            mass[(j2 + c, r)] = g_ds[(r, c)].conj();
        }
    }
    for r in 0..n3 {
        for c in 0..n3 {
            mass[(j2 + r, j2 + c)] = gy_ss[(r, c)];
        }
        for c in 0..n1 {
            mass[(j2 + r, j2 + n3 + c)] = m31[(r, c)];
            mass[(j2 + n3 + c, j2 + r)] = m31[(r, c)].conj();
        }
    }
    for r in 0..n1 {
        for c in 0..n1 {
            mass[(j2 + n3 + r, j2 + n3 + c)] = m11[(r, c)];
        }
    }
    let mass = linalg::hermitian_part(&mass);
    let l = linalg::cholesky_lower(&mass, "the model mass matrix")?;

    // Inverse energies. Density block from the resonance eigenpairs,
    // expressed in W_3h coordinates.
    let rmat = b3.adjoint() * &spectrum.densities;
    let mu = spectrum.mu.clone();
    // Exterior block: E11 = (k_n·k_m)(δ − χ̂) + ∫ ē_n (½ + K*) σ_m.
    let mut kp = ops.kstar.clone();
    for i in 0..n {
        kp[(i, i)] += C64::new(0.5, 0.0);
    }
    let flux = &kp * &sig_pw;
    let e11_raw = CMat::from_fn(npw, npw, |r, c| {
        let dotk = kpw[r][0] * kpw[c][0] + kpw[r][1] * kpw[c][1];
        let mut acc = ge_pp[(r, c)] * dotk;
        for j in 0..n {
            acc += epw[(j, r)].conj() * w[j] * flux[(j, c)];
        }
        acc
    });
    let e11 = linalg::hermitian_part(&(z.adjoint() * &e11_raw * &z));
    let c11 = linalg::hermitian_part(&linalg::inverse(&e11));

    let rows2 = l.subrows(0, j2).to_owned();
    let rows3 = l.subrows(j2, n3).to_owned();
    let rows1 = l.subrows(j2 + n3, n1).to_owned();
    let c0: Vec<f64> = modes.iter().map(|m| m.beta0()).collect();
    let l3r = rmat.adjoint() * &rows3;

    let mut a_hat: Vec<CMat> = (0..=opts.max_order)
        .into_par_iter()
        .map(|order| {
            if order == 0 {
                let scaled = CMat::from_fn(j2, dim, |r, c| rows2[(r, c)] * c0[r]);
                return linalg::hermitian_part(&(rows2.adjoint() * scaled));
            }
            let cm: Vec<f64> = mu.iter().map(|&m| density_multiplier(m, order)).collect();
            let scaled = CMat::from_fn(l3r.nrows(), dim, |r, c| l3r[(r, c)] * cm[r]);
            let mut a = l3r.adjoint() * scaled;
            if order == 1 {
                a += rows1.adjoint() * (&c11 * &rows1);
            }
            linalg::hermitian_part(&a)
        })
        .collect();

    // At α = 0 the W_2h block of Â_0 is diagonalized by a rotation.
    if zero {
        let block = a_hat[0].subrows(0, j2).subcols(0, j2).to_owned();
        let (_, u) = linalg::hermitian_eigen(&block)?;
        let mut v = linalg::identity(dim);
        for r in 0..j2 {
            for c in 0..j2 {
                v[(r, c)] = u[(r, c)];
            }
        }
        for a in a_hat.iter_mut() {
            *a = linalg::hermitian_part(&(v.adjoint() * &*a * &v));
        }
    }
    let a0 = &mut a_hat[0];
    let mut offdiag = 0.0f64;
    let diagonal: Vec<f64> = (0..dim).map(|i| a0[(i, i)].re).collect();
    for r in 0..dim {
        for c in 0..dim {
            if r != c {
                offdiag = offdiag.max(a0[(r, c)].norm());
                a0[(r, c)] = C64::new(0.0, 0.0);
            } else {
                a0[(r, c)] = C64::new(diagonal[r], 0.0);
            }
        }
    }
    Ok(SeriesModel {
        alpha,
        a_hat,
        diagonal,
        modes,
        dims: [j2, n3, n1],
        resonances: mu,
        offdiag_residual: offdiag,
    })
}

/// `∫_{disk} e^{i q·x} dx`.
fn disk_transform(d: &Disk, q: [f64; 2]) -> C64 {
    let qn = q[0].hypot(q[1]);
    let mag = if qn == 0.0 {
        PI * d.radius * d.radius
    } else {
        2.0 * PI * d.radius * bessel_j_seq(1, qn * d.radius)[1] / qn
    };
    C64::from_polar(mag, q[0] * d.center[0] + q[1] * d.center[1])
}

/// Densities `σ` with `S σ = f` on `∂D` for each column `f`; at `α = 0`
/// the bordered system `S σ + c = f`, `Σ w σ = 0` is solved and the
/// constants `c` are returned as well.
fn harmonic_extensions(ops: &LayerOperators, f: &CMat) -> (CMat, Vec<C64>) {
    let n = ops.len();
    if !ops.alpha.is_zero() {
        return (linalg::solve(&ops.s, f), vec![C64::new(0.0, 0.0); f.ncols()]);
    }
    let mut a = CMat::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = ops.s[(i, j)];
        }
        a[(i, n)] = C64::new(1.0, 0.0);
        a[(n, i)] = C64::new(ops.weights[i], 0.0);
    }
    let rhs = CMat::from_fn(n + 1, f.ncols(), |i, j| if i < n { f[(i, j)] } else { C64::new(0.0, 0.0) });
    let sol = linalg::solve(&a, &rhs);
    let sig = CMat::from_fn(n, f.ncols(), |i, j| sol[(i, j)]);
    let consts = (0..f.ncols()).map(|j| sol[(n, j)]).collect();
    (sig, consts)
}

/// Nyström matrix of `σ ↦ ∫_{∂D} G₂^α(x − y) σ(y) dσ(y)` at the nodes, with
/// the `|r|² ln|r|` part of the self-interaction integrated by Kress weights.
fn biharmonic_matrix(ops: &LayerOperators, ev: &GreenEvaluator) -> CMat {
    let mesh = &ops.mesh;
    let n = mesh.len();
    let kress: Vec<Vec<f64>> = (0..mesh.inclusion_count())
        .map(|i| kress_weights(mesh.range(i).len()))
        .collect();
    let h0 = ev.biharmonic_smooth([0.0, 0.0]);
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = mesh.owner(i);
            let range = mesh.range(own);
            let nloc = range.len();
            let hq = 2.0 * PI / nloc as f64;
            let xi = mesh.nodes[i];
            (0..n)
                .map(|j| {
                    let yj = mesh.nodes[j];
                    let r = [xi[0] - yj[0], xi[1] - yj[1]];
                    if mesh.owner(j) != own {
                        return ev.biharmonic(r) * mesh.weights[j];
                    }
                    if i == j {
                        return h0 * hq * mesh.speed[j];
                    }
                    let rho2 = r[0] * r[0] + r[1] * r[1];
                    let diff = (i as isize - j as isize).unsigned_abs();
                    let dt = mesh.param[i] - mesh.param[j];
                    let l2 = 0.5 * rho2.ln() - 0.5 * (4.0 * (0.5 * dt).sin().powi(2)).ln();
                    (kress[own][diff] * rho2 / (16.0 * PI)
                        + hq * (rho2 * l2 / (8.0 * PI) + ev.biharmonic_smooth(r)))
                        * mesh.speed[j]
                })
                .collect()
        })
        .collect();
    CMat::from_fn(n, n, |i, j| rows[i][j])
}

impl SeriesModel {
    /// Total dimension of the trial space.
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Indices whose `Â_0` entries lie strictly inside the circle of radius
    /// `radius` around `center`.
    pub fn indices_inside(&self, center: f64, radius: f64) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| (self.diagonal[i] - center).abs() < radius)
            .collect()
    }

    /// The `m` indices with `Â_0` entries nearest `target`.
    pub fn nearest(&self, target: f64, m: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| {
            (self.diagonal[a] - target)
                .abs()
                .total_cmp(&(self.diagonal[b] - target).abs())
        });
        idx.truncate(m);
        idx.sort_unstable();
        idx
    }
}
