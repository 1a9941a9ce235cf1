//! Quasi-periodic Green's function of the Laplacian on the unit lattice,
//! its gradient, the associated biharmonic kernel, and the Fourier-diagonal
//! inverse Laplacian.
//!
//! `G^α(r) = −Σ_n e^{i k_n·r}/|k_n|²` with `k_n = 2πn + α`; at `α = 0` the
//! `n = 0` term is omitted. Away from the reference path, the kernel is
//! evaluated by Ewald summation and split as `G = (1/2π) ln|r| + H`, with a
//! smooth lattice remainder `H`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::special::{ein, expint_e1, expint_e2, EULER_GAMMA};

/// Bloch quasimomentum `α ∈ (−π,π]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiMomentum {
    v: [f64; 2],
}

impl QuasiMomentum {
    /// Validates that both components lie in `(−π, π]`.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        for c in [x, y] {
            if !(c > -PI && c <= PI) {
                return Err(Error::Domain(format!(
                    "quasimomentum component {c} outside (-pi, pi]"
                )));
            }
        }
        Ok(QuasiMomentum { v: [x, y] })
    }

    pub fn zero() -> Self {
        QuasiMomentum { v: [0.0, 0.0] }
    }

    pub fn x(&self) -> f64 {
        self.v[0]
    }

    pub fn y(&self) -> f64 {
        self.v[1]
    }

    pub fn as_array(&self) -> [f64; 2] {
        self.v
    }

    /// Exactly `α = (0, 0)`: the periodic branch.
    pub fn is_zero(&self) -> bool {
        self.v[0] == 0.0 && self.v[1] == 0.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.v[0] * self.v[0] + self.v[1] * self.v[1]
    }

    /// Reciprocal lattice vector `2πn + α`.
    pub fn shifted(&self, n: [i64; 2]) -> [f64; 2] {
        [
            2.0 * PI * n[0] as f64 + self.v[0],
            2.0 * PI * n[1] as f64 + self.v[1],
        ]
    }
}

/// Evaluation strategy for the lattice sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenMode {
    /// Truncated Fourier series over `|n|_∞ ≤ M`; slow reference path.
    DirectSum,
    /// Ewald split into spectral and real-space Gaussian-damped sums.
    Ewald,
}

#[derive(Debug, Clone)]
struct SpectralTerm {
    k: [f64; 2],
    /// `e^{−|k|²/4η²}/|k|²`
    w: f64,
    /// `e^{−s}(1+s)/|k|⁴` with `s = |k|²/4η²`
    w2: f64,
}

/// Real-space lattice shifts `|p|_∞ ≤ 4` cover arguments in `(−1,1)²`.
const REAL_SHIFTS: i64 = 4;

/// Evaluator of `G^α` and related kernels at a fixed quasimomentum.
#[derive(Debug, Clone)]
pub struct GreenEvaluator {
    alpha: QuasiMomentum,
    cutoff: usize,
    eta: f64,
    mode: GreenMode,
    /// Ewald-weighted spectral terms.
    spectral: Vec<SpectralTerm>,
    /// Undamped terms `1/|k|²` over `|n|_∞ ≤ M`, filled in direct-sum mode only.
    direct: Vec<SpectralTerm>,
    shifts: Vec<([f64; 2], C64)>,
}

impl GreenEvaluator {
    /// Ewald evaluator with `η = √π` and spectral cutoff `M = 8`.
    pub fn new(alpha: QuasiMomentum) -> Self {
        Self::with_options(alpha, GreenMode::Ewald, 8, PI.sqrt()).expect("valid defaults")
    }

    /// Fully specified evaluator; requires `M ≥ 8` and `η > 0`.
    pub fn with_options(
        alpha: QuasiMomentum,
        mode: GreenMode,
        cutoff: usize,
        eta: f64,
    ) -> Result<Self> {
        if cutoff < 8 {
            return Err(Error::Contract(format!("Fourier cutoff must be at least 8, got {cutoff}")));
        }
        if !(eta > 0.0) {
            return Err(Error::Contract(format!("Ewald parameter must be positive, got {eta}")));
        }
        let mut spectral = Vec::new();
        let mut direct = Vec::new();
        let m = cutoff as i64;
        for n1 in -m..=m {
            for n2 in -m..=m {
                let k = alpha.shifted([n1, n2]);
                let k2 = k[0] * k[0] + k[1] * k[1];
                if k2 == 0.0 {
                    continue;
                }
                if mode == GreenMode::DirectSum {
                    direct.push(SpectralTerm {
                        k,
                        w: 1.0 / k2,
                        w2: 1.0 / (k2 * k2),
                    });
                }
                let s = k2 / (4.0 * eta * eta);
                if s > 60.0 {
                    continue;
                }
                let e = (-s).exp();
                spectral.push(SpectralTerm {
                    k,
                    w: e / k2,
                    w2: e * (1.0 + s) / (k2 * k2),
                });
            }
        }
        let mut shifts = Vec::new();
        for p1 in -REAL_SHIFTS..=REAL_SHIFTS {
            for p2 in -REAL_SHIFTS..=REAL_SHIFTS {
                let p = [p1 as f64, p2 as f64];
                let phase = C64::from_polar(1.0, -(alpha.x() * p[0] + alpha.y() * p[1]));
                shifts.push((p, phase));
            }
        }
        Ok(GreenEvaluator {
            alpha,
            cutoff,
            eta,
            mode,
            spectral,
            direct,
            shifts,
        })
    }

    pub fn alpha(&self) -> QuasiMomentum {
        self.alpha
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mode(&self) -> GreenMode {
        self.mode
    }

    /// Splits `r = r' + p0` with `r' ∈ [−½,½)²` and returns `(r', e^{iα·p0})`.
    fn reduce(&self, r: [f64; 2]) -> ([f64; 2], C64) {
        let p0 = [r[0].round(), r[1].round()];
        let rr = [r[0] - p0[0], r[1] - p0[1]];
        let phase = C64::from_polar(1.0, self.alpha.x() * p0[0] + self.alpha.y() * p0[1]);
        (rr, phase)
    }

    fn check_regular(&self, r: [f64; 2]) -> Result<()> {
        let (rr, _) = self.reduce(r);
        if rr[0].hypot(rr[1]) < 1e-14 {
            Err(Error::Domain(format!(
                "Green's function is singular at lattice point r = ({}, {})",
                r[0], r[1]
            )))
        } else {
            Ok(())
        }
    }

    /// `G^α(r)` for `r = x − y`.
    pub fn green(&self, r: [f64; 2]) -> Result<C64> {
        self.check_regular(r)?;
        match self.mode {
            GreenMode::DirectSum => Ok(-self
                .direct
                .iter()
                .map(|t| t.w * C64::from_polar(1.0, t.k[0] * r[0] + t.k[1] * r[1]))
                .sum::<C64>()),
            GreenMode::Ewald => {
                let (rr, phase) = self.reduce(r);
                let rho = rr[0].hypot(rr[1]);
                Ok(phase * (self.smooth_part(rr) + rho.ln() / (2.0 * PI)))
            }
        }
    }

    /// Smooth remainder `H(r) = G^α(r) − (1/2π) ln|r|` for `r ∈ (−1,1)²`,
    /// including `r = 0`. Always evaluated by Ewald summation.
    pub fn smooth_part(&self, r: [f64; 2]) -> C64 {
        let eta2 = self.eta * self.eta;
        let mut acc = C64::new(0.0, 0.0);
        for t in &self.spectral {
            acc -= t.w * C64::from_polar(1.0, t.k[0] * r[0] + t.k[1] * r[1]);
        }
        for &(p, phase) in &self.shifts {
            let d = [r[0] + p[0], r[1] + p[1]];
            let c = eta2 * (d[0] * d[0] + d[1] * d[1]);
            if p == [0.0, 0.0] {
                acc += (EULER_GAMMA + 2.0 * self.eta.ln() - ein(c)) / (4.0 * PI);
            } else {
                acc -= phase * expint_e1(c) / (4.0 * PI);
            }
        }
        if self.alpha.is_zero() {
            acc += 1.0 / (4.0 * eta2);
        }
        acc
    }

    /// `(H(r), ∇H(r))` in one pass over the lattice sums.
    pub fn smooth_part_and_gradient(&self, r: [f64; 2]) -> (C64, [C64; 2]) {
        let eta2 = self.eta * self.eta;
        let mut h = C64::new(0.0, 0.0);
        let mut g = [C64::new(0.0, 0.0); 2];
        for t in &self.spectral {
            let e = C64::from_polar(1.0, t.k[0] * r[0] + t.k[1] * r[1]) * t.w;
            h -= e;
            g[0] -= C64::new(0.0, t.k[0]) * e;
            g[1] -= C64::new(0.0, t.k[1]) * e;
        }
        for &(p, phase) in &self.shifts {
            let d = [r[0] + p[0], r[1] + p[1]];
            let rho2 = d[0] * d[0] + d[1] * d[1];
            let c = eta2 * rho2;
            let f = if p == [0.0, 0.0] {
                h += (EULER_GAMMA + 2.0 * self.eta.ln() - ein(c)) / (4.0 * PI);
                if c < 1e-8 {
                    -eta2 * (1.0 - 0.5 * c)
                } else {
                    (-c).exp_m1() / rho2
                }
            } else {
                if c > 40.0 {
                    continue;
                }
                h -= phase * expint_e1(c) / (4.0 * PI);
                (-c).exp() / rho2
            };
            let s = phase * f / (2.0 * PI);
            g[0] += s * d[0];
            g[1] += s * d[1];
        }
        if self.alpha.is_zero() {
            h += 1.0 / (4.0 * eta2);
        }
        (h, g)
    }

    /// `∇G^α(r)`.
    pub fn gradient(&self, r: [f64; 2]) -> Result<[C64; 2]> {
        self.check_regular(r)?;
        match self.mode {
            GreenMode::DirectSum => {
                let mut g = [C64::new(0.0, 0.0); 2];
                for t in &self.direct {
                    let e = C64::from_polar(1.0, t.k[0] * r[0] + t.k[1] * r[1]) * t.w;
                    g[0] -= C64::new(0.0, t.k[0]) * e;
                    g[1] -= C64::new(0.0, t.k[1]) * e;
                }
                Ok(g)
            }
            GreenMode::Ewald => {
                let (rr, phase) = self.reduce(r);
                let h = self.smooth_gradient(rr);
                let rho2 = rr[0] * rr[0] + rr[1] * rr[1];
                Ok([
                    phase * (h[0] + rr[0] / (2.0 * PI * rho2)),
                    phase * (h[1] + rr[1] / (2.0 * PI * rho2)),
                ])
            }
        }
    }

    /// `∇H(r) = ∇G^α(r) − r/(2π|r|²)`, smooth near `r = 0`.
    pub fn smooth_gradient(&self, r: [f64; 2]) -> [C64; 2] {
        let eta2 = self.eta * self.eta;
        let mut g = [C64::new(0.0, 0.0); 2];
        for t in &self.spectral {
            let e = C64::from_polar(1.0, t.k[0] * r[0] + t.k[1] * r[1]) * t.w;
            g[0] -= C64::new(0.0, t.k[0]) * e;
            g[1] -= C64::new(0.0, t.k[1]) * e;
        }
        for &(p, phase) in &self.shifts {
            let d = [r[0] + p[0], r[1] + p[1]];
            let rho2 = d[0] * d[0] + d[1] * d[1];
            let c = eta2 * rho2;
            let f = if p == [0.0, 0.0] {
                // (e^{−c} − 1)/ρ², finite at ρ = 0.
                if c < 1e-8 {
                    -eta2 * (1.0 - 0.5 * c)
                } else {
                    (-c).exp_m1() / rho2
                }
            } else {
                (-c).exp() / rho2
            };
            let s = phase * f / (2.0 * PI);
            g[0] += s * d[0];
            g[1] += s * d[1];
        }
        g
    }

    /// Biharmonic lattice kernel `G₂^α(r) = Σ_n e^{i k_n·r}/|k_n|⁴`
    /// (`n = 0` omitted at `α = 0`), the kernel of `(−Δ_α)^{-2}`.
    pub fn biharmonic(&self, r: [f64; 2]) -> C64 {
        let (rr, phase) = self.reduce(r);
        let rho2 = rr[0] * rr[0] + rr[1] * rr[1];
        let log_term = if rho2 > 0.0 {
            rho2 * rho2.sqrt().ln() / (8.0 * PI)
        } else {
            0.0
        };
        phase * (self.biharmonic_smooth(rr) + log_term)
    }

    /// `G₂^α(r) − |r|² ln|r|/(8π)` for `r ∈ (−1,1)²`.
    pub fn biharmonic_smooth(&self, r: [f64; 2]) -> C64 {
        let eta2 = self.eta * self.eta;
        let mut acc = C64::new(0.0, 0.0);
        for t in &self.spectral {
            acc += t.w2 * C64::from_polar(1.0, t.k[0] * r[0] + t.k[1] * r[1]);
        }
        let scale = 1.0 / (16.0 * PI * eta2);
        for &(p, phase) in &self.shifts {
            let d = [r[0] + p[0], r[1] + p[1]];
            let c = eta2 * (d[0] * d[0] + d[1] * d[1]);
            if p == [0.0, 0.0] {
                acc += scale * ((-c).exp() + c * (EULER_GAMMA + 2.0 * self.eta.ln() - ein(c)));
            } else {
                acc += phase * scale * expint_e2(c);
            }
        }
        if self.alpha.is_zero() {
            acc -= 1.0 / (32.0 * eta2 * eta2);
        }
        acc
    }

    /// Adjoint double-layer kernel `ν(x)·∇_x G^α(x − y)`.
    pub fn adjoint_dl_kernel(&self, x: [f64; 2], nu_x: [f64; 2], y: [f64; 2]) -> Result<C64> {
        let g = self.gradient([x[0] - y[0], x[1] - y[1]])?;
        Ok(g[0] * nu_x[0] + g[1] * nu_x[1])
    }
}

/// Samples of a function on the uniform grid `x_{ij} = (i/n, j/n)` of `Y`,
/// stored row-major in `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub n: usize,
    pub values: Vec<C64>,
}

impl GridFunction {
    pub fn from_fn(n: usize, f: impl Fn([f64; 2]) -> C64) -> Self {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f([i as f64 / n as f64, j as f64 / n as f64]));
            }
        }
        GridFunction { n, values }
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 / self.n as f64, j as f64 / self.n as f64]
    }

    /// Discrete `L²(Y)` norm (the cell has unit area).
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    /// Discrete `L²(Y)` inner product `∫ f conj(g)`.
    pub fn inner(&self, other: &GridFunction) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<C64>()
            / self.values.len() as f64
    }
}

fn fft2(values: &mut [C64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for row in values.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = values[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            values[i * n + j] = col[i];
        }
    }
}

fn signed_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Applies `(−Δ_α)^{-1}` to an α-quasi-periodic grid function: each
/// coefficient of `e^{i(2πm+α)·x}` with `|m|_∞ ≤ cutoff` is divided by
/// `|2πm+α|²`; higher modes are discarded. At `α = 0` the input must have
/// zero mean and the zero mode is annihilated.
pub fn apply_inverse_laplacian(
    alpha: QuasiMomentum,
    f: &GridFunction,
    cutoff: usize,
) -> Result<GridFunction> {
    let n = f.n;
    let phase = |p: [f64; 2]| C64::from_polar(1.0, alpha.x() * p[0] + alpha.y() * p[1]);
    let mut vals: Vec<C64> = (0..n * n)
        .map(|idx| f.values[idx] * phase(f.point(idx / n, idx % n)).conj())
        .collect();
    fft2(&mut vals, n, false);
    let scale = 1.0 / (n * n) as f64;
    if alpha.is_zero() {
        let mean = vals[0] * scale;
        let size = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if mean.norm() > 1e-10 * size.max(1e-300) {
            return Err(Error::Contract(format!(
                "inverse Laplacian at alpha = 0 needs a zero-mean input, mean is {mean}"
            )));
        }
    }
    for i in 0..n {
        for j in 0..n {
            let m = [signed_index(i, n), signed_index(j, n)];
            let idx = i * n + j;
            if m[0].unsigned_abs() as usize > cutoff || m[1].unsigned_abs() as usize > cutoff {
                vals[idx] = C64::new(0.0, 0.0);
                continue;
            }
            let k = alpha.shifted(m);
            let k2 = k[0] * k[0] + k[1] * k[1];
            vals[idx] = if k2 == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                vals[idx] * scale / k2
            };
        }
    }
    fft2(&mut vals, n, true);
    let values = (0..n * n)
        .map(|idx| vals[idx] * phase(f.point(idx / n, idx % n)))
        .collect();
    Ok(GridFunction { n, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ewald_matches_direct_sum() {
        let alpha = QuasiMomentum::new(1.0, 0.3).unwrap();
        let ew = GreenEvaluator::new(alpha);
        let ds = GreenEvaluator::with_options(alpha, GreenMode::DirectSum, 300, PI.sqrt()).unwrap();
        for r in [[0.3, 0.1], [0.5, -0.4], [1.7, 0.2]] {
            let a = ew.green(r).unwrap();
            let b = ds.green(r).unwrap();
            assert!((a - b).norm() < 2e-5, "{r:?}: {a} vs {b}");
        }
    }

    #[test]
    fn remainder_is_continuous_at_zero() {
        let ev = GreenEvaluator::new(QuasiMomentum::new(PI, 0.0).unwrap());
        let h0 = ev.smooth_part([0.0, 0.0]);
        let h1 = ev.smooth_part([1e-6, 0.0]);
        assert!((h0 - h1).norm() < 1e-6);
        let g = ev.smooth_gradient([0.0, 0.0]);
        let g1 = ev.smooth_gradient([1e-7, 1e-7]);
        assert!((g[0] - g1[0]).norm() < 1e-5);
    }

    #[test]
    fn biharmonic_matches_fourier() {
        let alpha = QuasiMomentum::new(PI, 0.0).unwrap();
        let ev = GreenEvaluator::new(alpha);
        let r = [0.1, 0.05];
        let m = 300i64;
        let mut s = C64::new(0.0, 0.0);
        for n1 in -m..=m {
            for n2 in -m..=m {
                let k = alpha.shifted([n1, n2]);
                let k2 = k[0] * k[0] + k[1] * k[1];
                s += C64::from_polar(1.0, k[0] * r[0] + k[1] * r[1]) / (k2 * k2);
            }
        }
        assert!((ev.biharmonic(r) - s).norm() < 1e-9);
    }
}
