//! Closed-form convergence constants: the buffered-geometry constant `θ`,
//! the resonance bound `μ⁻`, the pole bound `z*`, the spectral gap `d`, the
//! convergence radius `r*` and the truncation-error bound of the series.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_green::QuasiMomentum;
use crate::limit_spectrum::LimitSpectrum;

/// Where a certificate constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Closed-form buffered-disk formula.
    ClosedFormDisk,
    /// Minimum of the discretized Neumann–Poincaré spectrum.
    ComputedNp,
    /// Supplied by the caller.
    User,
}

/// Convergence certificate for one eigenvalue group at one quasimomentum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub alpha: [f64; 2],
    /// Spectral gap: radius of the contour around `β_0`.
    pub d: f64,
    pub mu_minus: f64,
    pub mu_minus_source: Source,
    pub z_star: f64,
    pub r_star: f64,
    pub theta: Option<f64>,
    pub theta_source: Option<Source>,
    /// Free-form remark, e.g. when closed-form and computed `μ⁻` differ.
    pub note: Option<String>,
}

/// Whether a contrast point lies inside the certified disk `|z| < r*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    Certified,
    Uncertified,
}

impl Certification {
    pub fn is_certified(self) -> bool {
        self == Certification::Certified
    }
}

/// `θ = (b² − a²)/(b² + a²)` for a disk of radius `a` buffered to radius `b`.
pub fn theta_disks(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a < b) {
        return Err(Error::Domain(format!(
            "buffer requires 0 < a < b, got a = {a}, b = {b}"
        )));
    }
    Ok((b * b - a * a) / (b * b + a * a))
}

/// `μ⁻ = ρ − ½` with `ρ = min(½, θ/2)`.
pub fn mu_minus_from_theta(theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    Ok((0.5f64).min(theta / 2.0) - 0.5)
}

/// `z* = (μ⁻ + ½)/(μ⁻ − ½)`.
pub fn z_star(mu_minus: f64) -> Result<f64> {
    if !(mu_minus > -0.5 && mu_minus < 0.5) {
        return Err(Error::Domain(format!(
            "mu_minus must lie in (-1/2, 1/2), got {mu_minus}"
        )));
    }
    Ok((mu_minus + 0.5) / (mu_minus - 0.5))
}

/// Pole `z_i = (μ_i + ½)/(μ_i − ½)` of the resolvent associated with a resonance.
pub fn resonance_pole(mu: f64) -> f64 {
    (mu + 0.5) / (mu - 0.5)
}

/// Half the distance from the `j`-th distinct limit value (largest first) to
/// the nearest other distinct limit value.
pub fn gap_d(limit: &LimitSpectrum, j: usize) -> Result<f64> {
    let distinct = limit.distinct();
    if j + 1 >= distinct.len() {
        return Err(Error::Resolution(format!(
            "limit value {j} has no resolved lower neighbour ({} distinct values)",
            distinct.len()
        )));
    }
    let target = distinct[j].0;
    let below = (target - distinct[j + 1].0).abs();
    let above = if j > 0 {
        (distinct[j - 1].0 - target).abs()
    } else {
        f64::INFINITY
    };
    Ok(0.5 * below.min(above))
}

/// Convergence radius
/// `r* = c d |z*| / (1/(½ − μ⁻) + c d)` with `c = |α|²` for `α ≠ 0` and
/// `c = 4π²` for `α = 0`.
pub fn radius(alpha: QuasiMomentum, d: f64, mu_minus: f64, z_star: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("gap d must be positive, got {d}")));
    }
    if !(mu_minus < 0.5) {
        return Err(Error::Domain(format!("mu_minus must be below 1/2, got {mu_minus}")));
    }
    let c = if alpha.is_zero() {
        4.0 * PI * PI
    } else {
        alpha.norm_sq()
    };
    let cd = c * d;
    Ok(cd * z_star.abs() / (1.0 / (0.5 - mu_minus) + cd))
}

/// `|z| < r*`.
pub fn separation_check(cert: &Certificate, z: C64) -> Certification {
    if z.norm() < cert.r_star {
        Certification::Certified
    } else {
        Certification::Uncertified
    }
}

/// Truncation-error bound `d |z|^{p+1} / ((r*)^p (r* − |z|))` for the
/// partial sum through order `p`.
pub fn truncation_bound(cert: &Certificate, p: usize, z: C64) -> Result<f64> {
    let r = z.norm();
    if r >= cert.r_star {
        return Err(Error::Domain(format!(
            "|z| = {r} is outside the certified radius {}",
            cert.r_star
        )));
    }
    let q = r / cert.r_star;
    Ok(cert.d * r * q.powi(p as i32) / (cert.r_star - r))
}

impl Certificate {
    /// Builds a certificate from a gap and a resonance bound.
    pub fn new(alpha: QuasiMomentum, d: f64, mu_minus: f64, mu_minus_source: Source) -> Result<Self> {
        if !(mu_minus > -0.5 && mu_minus < 0.0) {
            return Err(Error::Domain(format!(
                "certification requires -1/2 < mu_minus < 0, got {mu_minus}"
            )));
        }
        let zs = z_star(mu_minus)?;
        let r_star = radius(alpha, d, mu_minus, zs)?;
        Ok(Certificate {
            alpha: alpha.as_array(),
            d,
            mu_minus,
            mu_minus_source,
            z_star: zs,
            r_star,
            theta: None,
            theta_source: None,
            note: None,
        })
    }

    /// Certificate for buffered disks of radius `a` inside radius `b`.
    pub fn buffered_disks(alpha: QuasiMomentum, d: f64, a: f64, b: f64) -> Result<Self> {
        let theta = theta_disks(a, b)?;
        let mu = mu_minus_from_theta(theta)?;
        let mut cert = Certificate::new(alpha, d, mu, Source::ClosedFormDisk)?;
        cert.theta = Some(theta);
        cert.theta_source = Some(Source::ClosedFormDisk);
        Ok(cert)
    }

    /// Chooses between a closed-form and a computed resonance bound: the
    /// larger (less negative) value gives the larger radius. The choice is
    /// recorded in `note` when both are available.
    pub fn best_of(
        alpha: QuasiMomentum,
        d: f64,
        closed_form: Option<(f64, f64)>,
        computed_mu_minus: Option<f64>,
    ) -> Result<Self> {
        match (closed_form, computed_mu_minus) {
            (Some((a, b)), None) => Certificate::buffered_disks(alpha, d, a, b),
            (None, Some(mu)) => Certificate::new(alpha, d, mu, Source::ComputedNp),
            (Some((a, b)), Some(mu)) => {
                let closed = Certificate::buffered_disks(alpha, d, a, b)?;
                if mu > closed.mu_minus {
                    let mut cert = Certificate::new(alpha, d, mu, Source::ComputedNp)?;
                    cert.theta = closed.theta;
                    cert.theta_source = closed.theta_source;
                    cert.note = Some(format!(
                        "computed mu_minus {mu:.6} exceeds closed-form {:.6}; computed value used",
                        closed.mu_minus
                    ));
                    Ok(cert)
                } else {
                    let mut cert = closed;
                    cert.note = Some(format!(
                        "computed mu_minus {mu:.6} does not exceed closed-form {:.6}",
                        cert.mu_minus
                    ));
                    Ok(cert)
                }
            }
            (None, None) => Err(Error::Contract(
                "a certificate needs a closed-form or computed mu_minus".into(),
            )),
        }
    }

    pub fn check(&self, z: C64) -> Certification {
        separation_check(self, z)
    }

    pub fn bound(&self, p: usize, z: C64) -> Result<f64> {
        truncation_bound(self, p, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_substituted_disk_constants() {
        let theta = theta_disks(0.3, 0.45).unwrap();
        assert!((theta - 0.1125 / 0.2925).abs() < 1e-15);
        let mu = mu_minus_from_theta(theta).unwrap();
        assert!((mu + 0.09 / 0.2925).abs() < 1e-15);
        let zs = z_star(mu).unwrap();
        assert!((zs + 0.238_095_238_095_238_1).abs() < 1e-12);
        assert!((theta_disks(1.0, 2.0).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(mu_minus_from_theta(0.5).unwrap(), -0.25);
        assert_eq!(z_star(0.0).unwrap(), -1.0);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(theta_disks(0.3, 0.3).is_err());
        assert!(z_star(0.5).is_err());
        let alpha = QuasiMomentum::new(PI, 0.0).unwrap();
        assert!(radius(alpha, 0.0, -0.3, -0.2).is_err());
    }

    #[test]
    fn bound_at_half_radius() {
        let alpha = QuasiMomentum::new(PI, 0.0).unwrap();
        let cert = Certificate::buffered_disks(alpha, 0.004_716_55, 0.3, 0.45).unwrap();
        let z = C64::new(cert.r_star / 2.0, 0.0);
        for p in 0..6 {
            let b = cert.bound(p, z).unwrap();
            assert!((b - cert.d / 2f64.powi(p as i32)).abs() < 1e-15);
        }
        assert_eq!(cert.bound(3, C64::new(0.0, 0.0)).unwrap(), 0.0);
        assert!(cert.check(C64::new(cert.r_star, 0.0)) == Certification::Uncertified);
        assert!(cert.check(C64::new(-cert.r_star / 2.0, 0.0)).is_certified());
    }
}
