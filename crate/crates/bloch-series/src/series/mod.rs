//! Coefficients `β_n` of the eigenvalue series `β(z) = Σ β_n z^n`,
//! `λ(k) = 1/β(1/k)`, and their evaluation with certified error bounds.
//!
//! [`model`] realizes the operators `A_n^α` as Hermitian matrices; the
//! coefficients follow from the Rayleigh–Schrödinger recursion in [`rs`]
//! (simple eigenvalues) or from the contour trace formula in [`contour`]
//! (groups of any size). [`chain`] provides an independent boundary-integral
//! value of `β_1` for simple disk modes.

pub mod chain;
pub mod contour;
pub mod model;
pub mod rs;

use serde::{Deserialize, Serialize};

use crate::certificates::{Certificate, Certification};
use crate::error::{Error, Result};
use crate::C64;

pub use contour::{contour_coefficients, ContourOptions, ContourResult};
pub use model::{build_model, build_model_from, ModelOptions, SeriesModel};
pub use rs::layer_rs;

/// Method that produced (or confirmed) the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    /// Rayleigh–Schrödinger recursion on the Galerkin matrices.
    LayerRs,
    /// Contour trace formula for the group mean.
    ContourTrace,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::LayerRs => "layer_rs",
            MethodTag::ContourTrace => "contour_trace",
        }
    }
}

/// Settings of [`expand_group`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandOptions {
    /// Highest coefficient index `N`.
    pub order: usize,
    /// Contour quadrature nodes.
    pub contour_nodes: usize,
    /// Methods to run; the first applicable one supplies the coefficients.
    pub methods: Vec<MethodTag>,
}

impl Default for ExpandOptions {
    fn default() -> Self {
        ExpandOptions {
            order: 3,
            contour_nodes: 64,
            methods: vec![MethodTag::LayerRs, MethodTag::ContourTrace],
        }
    }
}

/// Truncated series for one eigenvalue group.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesExpansion {
    pub alpha: [f64; 2],
    /// Group size.
    pub m: usize,
    /// `β_0`, the limit value.
    pub beta0: f64,
    /// `β_0, β_1, …, β_N` (group means when `m > 1`).
    pub coeffs: Vec<f64>,
    /// Imaginary parts left by the contour quadrature, per coefficient.
    pub imag_residues: Vec<f64>,
    pub method_tags: Vec<MethodTag>,
    pub certificate: Option<Certificate>,
    /// `max_n |β_n^{rs} − β_n^{contour}|` when both methods ran.
    pub cross_check: Option<f64>,
    /// Change of the contour coefficients under node doubling.
    pub contour_residual: Option<f64>,
}

/// Value of the truncated series at one contrast point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub z: f64,
    pub beta_hat: f64,
    /// `1/β̂`.
    pub lambda_hat: f64,
    /// Certified bound on `|β(z) − β̂|`, or `NaN` outside `|z| < r*`.
    pub error_bound: f64,
    /// Bound on `|λ(k) − λ̂|` implied by `error_bound`.
    pub lambda_error: f64,
    pub certified: bool,
}

impl SeriesExpansion {
    /// Highest coefficient index.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `Σ_{n ≤ p} β_n z^n`.
    pub fn partial_sum(&self, z: f64, p: usize) -> f64 {
        self.coeffs
            .iter()
            .take(p + 1)
            .rev()
            .fold(0.0, |acc, &b| acc * z + b)
    }

    /// JSON export with keys
    /// `alpha, m, beta0, coeffs, r_star, z_star, d, method_tags`.
    pub fn to_json(&self) -> serde_json::Value {
        let cert = self.certificate.as_ref();
        serde_json::json!({
            "alpha": self.alpha,
            "m": self.m,
            "beta0": self.beta0,
            "coeffs": self.coeffs,
            "r_star": cert.map(|c| c.r_star),
            "z_star": cert.map(|c| c.z_star),
            "d": cert.map(|c| c.d),
            "method_tags": self.method_tags.iter().map(|t| t.as_str()).collect::<Vec<_>>(),
        })
    }
}

/// Evaluates the series at `z = 1/k` with the truncation bound of its
/// certificate.
pub fn evaluate_series(exp: &SeriesExpansion, z: f64) -> Result<SeriesPoint> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::Domain(format!("z must be finite and non-negative, got {z}")));
    }
    let p = exp.order();
    let beta_hat = exp.partial_sum(z, p);
    let (certified, error_bound) = match &exp.certificate {
        Some(cert) if cert.check(C64::new(z, 0.0)) == Certification::Certified => {
            (true, cert.bound(p, C64::new(z, 0.0))?)
        }
        _ => (false, f64::NAN),
    };
    let lambda_error = if certified && error_bound < beta_hat {
        error_bound / (beta_hat * (beta_hat - error_bound))
    } else {
        f64::NAN
    };
    Ok(SeriesPoint {
        z,
        beta_hat,
        lambda_hat: 1.0 / beta_hat,
        error_bound,
        lambda_error,
        certified,
    })
}

/// Expands the group of `m` eigenvalues of `Â_0` nearest `center` (the
/// limit value), using a contour of radius `d` (the spectral gap).
pub fn expand_group(
    model: &SeriesModel,
    center: f64,
    m: usize,
    d: f64,
    opts: &ExpandOptions,
) -> Result<SeriesExpansion> {
    if m == 0 {
        return Err(Error::Contract("group size must be positive".into()));
    }
    if opts.order >= model.a_hat.len() {
        return Err(Error::Contract(format!(
            "order {} exceeds the model's highest operator index {}",
            opts.order,
            model.a_hat.len() - 1
        )));
    }
    if opts.methods.is_empty() {
        return Err(Error::Contract("no expansion method selected".into()));
    }
    let group = model.nearest(center, m);
    let mut rs_coeffs = None;
    let mut contour = None;
    let mut tags = Vec::new();
    for &method in &opts.methods {
        match method {
            MethodTag::LayerRs if m == 1 => {
                rs_coeffs = Some(layer_rs(&model.a_hat, group[0], opts.order)?);
                tags.push(method);
            }
            MethodTag::LayerRs => {}
            MethodTag::ContourTrace => {
                let copts = ContourOptions {
                    center,
                    radius: d,
                    nodes: opts.contour_nodes,
                };
                contour = Some(contour_coefficients(&model.a_hat, opts.order, m, &copts)?);
                tags.push(method);
            }
        }
    }
    let (coeffs, imag_residues) = match (&rs_coeffs, &contour) {
        (Some(rs), Some(ct)) => (rs.clone(), ct.imag.clone()),
        (Some(rs), None) => (rs.clone(), vec![0.0; rs.len()]),
        (None, Some(ct)) => (ct.beta.clone(), ct.imag.clone()),
        (None, None) => {
            return Err(Error::Contract(format!(
                "the recursion needs a simple eigenvalue but the group has size {m}; select the contour method"
            )))
        }
    };
    let cross_check = match (&rs_coeffs, &contour) {
        (Some(rs), Some(ct)) => Some(
            rs.iter()
                .zip(&ct.beta)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        ),
        _ => None,
    };
    Ok(SeriesExpansion {
        alpha: model.alpha.as_array(),
        m,
        beta0: coeffs[0],
        coeffs,
        imag_residues,
        method_tags: tags,
        certificate: None,
        cross_check,
        contour_residual: contour.map(|c| c.residual),
    })
}
