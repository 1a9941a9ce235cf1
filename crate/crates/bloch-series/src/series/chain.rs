//! Boundary-integral ingredients of the first-order coefficient for disk
//! inclusions: Dirichlet eigenmodes, the single-layer split of
//! `(−Δ_α)^{-1}φ`, and the corrector `v = S_D (K* + ½)^{-1}[∂_νφ]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Inclusion;
use crate::lattice_green::GreenEvaluator;
use crate::linalg::{self, CMat};
use crate::np_spectrum::{LayerOperators, NPSpectrum};
use crate::special::{bessel_j, bessel_zero};
use crate::C64;

/// Dirichlet eigenfunction of `−Δ` on one disk,
/// `ψ(r,θ) = J_n(η r/a) e^{ilθ} / (√π a J_{n+1}(η))` with `n = |l|`,
/// normalized in `L²(D)`; polar coordinates are relative to the disk center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskMode {
    pub inclusion: usize,
    pub center: [f64; 2],
    pub radius: f64,
    /// Signed angular order `l`.
    pub l: i32,
    /// Radial index `k ≥ 1`.
    pub k: usize,
    /// `η_{|l|,k}`.
    pub eta: f64,
}

impl DiskMode {
    pub fn new(inclusion: usize, disk: &Inclusion, l: i32, k: usize) -> Result<Self> {
        let Inclusion::Disk { center, radius } = *disk else {
            return Err(Error::Contract(format!(
                "inclusion {inclusion} is not a disk; closed-form modes need disks"
            )));
        };
        Ok(DiskMode {
            inclusion,
            center,
            radius,
            l,
            k,
            eta: bessel_zero(l.unsigned_abs(), k)?,
        })
    }

    pub fn order(&self) -> u32 {
        self.l.unsigned_abs()
    }

    /// `δ = (η/a)²`.
    pub fn eigenvalue(&self) -> f64 {
        (self.eta / self.radius).powi(2)
    }

    /// `β_0 = 1/δ`.
    pub fn beta0(&self) -> f64 {
        (self.radius / self.eta).powi(2)
    }

    fn normalization(&self) -> f64 {
        PI.sqrt() * self.radius * bessel_j(self.order() as i32 + 1, self.eta)
    }

    /// `∫_D ψ`: nonzero only for `l = 0`.
    pub fn mean(&self) -> f64 {
        if self.l == 0 {
            2.0 * PI.sqrt() * self.radius / self.eta
        } else {
            0.0
        }
    }

    /// `ψ(x)`, zero outside the disk.
    pub fn value(&self, x: [f64; 2]) -> C64 {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let r = d[0].hypot(d[1]);
        if r >= self.radius {
            return C64::new(0.0, 0.0);
        }
        let th = d[1].atan2(d[0]);
        let n = self.order() as i32;
        C64::from_polar(
            bessel_j(n, self.eta * r / self.radius) / self.normalization(),
            self.l as f64 * th,
        )
    }

    /// Interior normal derivative `∂_νψ|₋ = −η/(√π a²) e^{ilθ}` at boundary angle `θ`.
    pub fn normal_derivative(&self, theta: f64) -> C64 {
        C64::from_polar(
            -self.eta / (PI.sqrt() * self.radius * self.radius),
            self.l as f64 * theta,
        )
    }

    /// `ψ̂(k) = ∫_D ψ e^{−ik·x}`.
    pub fn fourier_coefficient(&self, k: [f64; 2]) -> C64 {
        let q = k[0].hypot(k[1]);
        let n = self.order() as i32;
        let p = self.eta / self.radius;
        let thk = if q > 0.0 { k[1].atan2(k[0]) } else { 0.0 };
        let shift = C64::from_polar(1.0, -(k[0] * self.center[0] + k[1] * self.center[1]));
        let ang = C64::new(0.0, -1.0).powi(n) * C64::from_polar(1.0, self.l as f64 * thk);
        let radial = if (q - p).abs() <= 1e-9 * p {
            PI.sqrt() * self.radius * bessel_j(n + 1, self.eta)
        } else {
            2.0 * PI.sqrt() * p * bessel_j(n, q * self.radius) / (p * p - q * q)
        };
        shift * ang * radial
    }
}

/// Handles for one disk eigenfunction `φ` on a discretized boundary.
#[derive(Debug, Clone)]
pub struct OperatorChain<'a> {
    pub ops: &'a LayerOperators,
    pub mode: DiskMode,
    /// `β_0 = 1/δ`.
    pub beta0: f64,
    /// `∂_νφ|₋` at every mesh node (zero off the mode's inclusion).
    pub trace: Vec<C64>,
    /// `min_i |μ_i + ½|`: distance of `−½` from the resonance spectrum,
    /// which bounds the conditioning of `K* + ½`.
    pub kplus_gap: f64,
}

impl<'a> OperatorChain<'a> {
    pub fn new(ops: &'a LayerOperators, spectrum: &NPSpectrum, mode: DiskMode) -> Result<Self> {
        let mesh = &ops.mesh;
        if mode.inclusion >= mesh.inclusion_count() {
            return Err(Error::Contract(format!(
                "mode lives on inclusion {} but the mesh has {}",
                mode.inclusion,
                mesh.inclusion_count()
            )));
        }
        let range = mesh.range(mode.inclusion);
        let trace = (0..mesh.len())
            .map(|j| {
                if range.contains(&j) {
                    let p = mesh.nodes[j];
                    mode.normal_derivative((p[1] - mode.center[1]).atan2(p[0] - mode.center[0]))
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        let kplus_gap = spectrum
            .mu
            .iter()
            .map(|m| (m + 0.5).abs())
            .fold(f64::INFINITY, f64::min);
        Ok(OperatorChain {
            ops,
            mode,
            beta0: mode.beta0(),
            trace,
            kplus_gap,
        })
    }

    /// `(K* + ½) ρ`.
    pub fn apply_kplus(&self, rho: &[C64]) -> Vec<C64> {
        let mut out = linalg::matvec(&self.ops.kstar, rho);
        for (o, r) in out.iter_mut().zip(rho) {
            *o += 0.5 * r;
        }
        out
    }

    /// Solves `(K* + ½) ψ = f`.
    pub fn solve_kplus(&self, f: &[C64]) -> Result<Vec<C64>> {
        if self.kplus_gap < 1e-10 {
            return Err(Error::Numerical(format!(
                "K* + 1/2 is numerically singular (min |mu + 1/2| = {:.3e})",
                self.kplus_gap
            )));
        }
        let n = self.ops.len();
        let mut a = self.ops.kstar.clone();
        for i in 0..n {
            a[(i, i)] += C64::new(0.5, 0.0);
        }
        let rhs = CMat::from_fn(n, 1, |i, _| f[i]);
        Ok(linalg::col_vec(&linalg::solve(&a, &rhs), 0))
    }
}

/// `(−Δ_α)^{-1}φ = β_0 (φ + S_D[∂_νφ|₋])`: the single-layer density and the
/// interior term of the split.
#[derive(Debug, Clone)]
pub struct InverseLaplacianSplit {
    pub beta0: f64,
    /// Single-layer density `∂_νφ|₋` at the mesh nodes.
    pub density: Vec<C64>,
    pub mode: DiskMode,
}

/// Splits `(−Δ_α)^{-1}φ` into a single layer and an interior part.
pub fn inverse_laplacian_of_eigenfunction(chain: &OperatorChain) -> Result<InverseLaplacianSplit> {
    let flux: C64 = chain
        .trace
        .iter()
        .zip(&chain.ops.weights)
        .map(|(t, w)| t * *w)
        .sum();
    if chain.ops.alpha.is_zero() && flux.norm() > 1e-10 {
        return Err(Error::Contract(
            "at alpha = 0 the split needs a mean-zero eigenfunction".into(),
        ));
    }
    Ok(InverseLaplacianSplit {
        beta0: chain.beta0,
        density: chain.trace.clone(),
        mode: chain.mode,
    })
}

impl InverseLaplacianSplit {
    /// Single layer `S_D[∂_νφ](x)`: the logarithmic part of the kernel is
    /// integrated exactly for the circle, the smooth lattice remainder by
    /// the trapezoid rule, so the value is accurate up to `∂D`.
    pub fn single_layer(&self, ev: &GreenEvaluator, x: [f64; 2]) -> C64 {
        let m = &self.mode;
        let d = [x[0] - m.center[0], x[1] - m.center[1]];
        let r = d[0].hypot(d[1]);
        let th = d[1].atan2(d[0]);
        let amp = -m.eta / (PI.sqrt() * m.radius * m.radius);
        let a = m.radius;
        let log_part = if m.l == 0 {
            amp * a * r.max(a).ln()
        } else {
            let n = m.order() as f64;
            let ratio = if r < a { r / a } else { a / r };
            -amp * a / (2.0 * n) * ratio.powf(n)
        };
        let mut acc = C64::from_polar(log_part, m.l as f64 * th);
        // Smooth remainder by the (spectrally accurate) trapezoid rule.
        let nq = 256;
        let h = 2.0 * PI / nq as f64;
        for j in 0..nq {
            let t = h * j as f64;
            let y = [m.center[0] + a * t.cos(), m.center[1] + a * t.sin()];
            let hv = ev.smooth_part([x[0] - y[0], x[1] - y[1]]);
            acc += hv * m.normal_derivative(t) * (a * h);
        }
        acc
    }

    /// `β_0 (φ(x) + S_D[∂_νφ](x))`.
    pub fn evaluate(&self, ev: &GreenEvaluator, x: [f64; 2]) -> C64 {
        self.beta0 * (self.mode.value(x) + self.single_layer(ev, x))
    }
}

/// Corrector density and exterior energy.
#[derive(Debug, Clone)]
pub struct Corrector {
    /// `ψ = (K* + ½)^{-1} ∂_νφ|₋`.
    pub density: Vec<C64>,
    /// `v = S ψ` at the nodes.
    pub trace: Vec<C64>,
    /// `E = ∫_{Y∖D} |∇v|² = −∫_{∂D} ∂_ν v|₊ v̄`.
    pub energy: f64,
    /// Imaginary part of the quadrature value of `E`.
    pub energy_imag: f64,
    /// Relative boundary-L² residual of `∂_ν v|₊ = ∂_νφ|₋`.
    pub neumann_residual: f64,
    /// Distance of `−½` from the resonance spectrum.
    pub kplus_gap: f64,
}

/// Solves for the corrector `v = S_D (K* + ½)^{-1}[∂_νφ|₋]` and its energy.
pub fn corrector(chain: &OperatorChain) -> Result<Corrector> {
    let w = &chain.ops.weights;
    let psi = chain.solve_kplus(&chain.trace)?;
    let v = linalg::matvec(&chain.ops.s, &psi);
    let flux = chain.apply_kplus(&psi);
    let e: C64 = -v
        .iter()
        .zip(&chain.trace)
        .zip(w)
        .map(|((vi, ti), wi)| vi.conj() * ti * *wi)
        .sum::<C64>();
    let num: f64 = flux
        .iter()
        .zip(&chain.trace)
        .zip(w)
        .map(|((f, t), wi)| (f - t).norm_sqr() * wi)
        .sum();
    let den: f64 = chain.trace.iter().zip(w).map(|(t, wi)| t.norm_sqr() * wi).sum();
    Ok(Corrector {
        density: psi,
        trace: v,
        energy: e.re,
        energy_imag: e.im,
        neumann_residual: (num / den).sqrt(),
        kplus_gap: chain.kplus_gap,
    })
}

/// `β_1 = β_0² E` for a simple eigenvalue.
pub fn coefficient_beta1(chain: &OperatorChain) -> Result<f64> {
    if chain.ops.alpha.is_zero() && chain.mode.l == 0 {
        return Err(Error::Contract(
            "at alpha = 0 the corrector formula applies to mean-zero modes only".into(),
        ));
    }
    let c = corrector(chain)?;
    Ok(chain.beta0 * chain.beta0 * c.energy)
}

/// Group average `(1/m) Σ β_0² E_k` over an orthonormal basis of a
/// degenerate Dirichlet eigenspace.
pub fn coefficient_beta1_group(chains: &[OperatorChain]) -> Result<f64> {
    let Some(first) = chains.first() else {
        return Err(Error::Contract("empty eigenvalue group".into()));
    };
    for (i, a) in chains.iter().enumerate() {
        if (a.beta0 - first.beta0).abs() > 1e-12 * first.beta0 {
            return Err(Error::Contract(format!(
                "group member {i} has beta0 = {} but the group value is {}",
                a.beta0, first.beta0
            )));
        }
        for b in &chains[..i] {
            let same = a.mode.inclusion == b.mode.inclusion && a.mode.l == b.mode.l && a.mode.k == b.mode.k;
            if same {
                return Err(Error::Contract(
                    "group basis is not orthonormal: repeated mode".into(),
                ));
            }
        }
    }
    let mut sum = 0.0;
    for c in chains {
        sum += coefficient_beta1(c)?;
    }
    Ok(sum / chains.len() as f64)
}
