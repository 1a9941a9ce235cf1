//! Configuration, band sweeps, oracle comparison and result files.
//!
//! A [`CrystalConfig`] is read from TOML (unknown keys are rejected),
//! validated into a [`Problem`], and processed one quasimomentum at a time:
//! limit spectrum, resonance spectrum, certificate, Galerkin model and series
//! per eigenvalue group. Quasimomenta are processed in parallel and written
//! in path order, so files do not depend on the number of workers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{gap_d, Certificate};
use crate::error::{Error, Result};
use crate::geometry::{build_mesh, Inclusion, InclusionSet, ParametricCurve};
use crate::lattice_green::{GreenEvaluator, QuasiMomentum};
use crate::limit_spectrum::{
    disk_dirichlet_for_limit, fd_dirichlet, limit_spectrum, DirichletSpectrum, LimitSpectrum,
};
use crate::np_spectrum::{assemble, resonance_spectrum, LayerOperators, NPSpectrum};
use crate::oracle::{bloch_solve_with, FactorizationRule, OracleOptions, OracleResult};
use crate::series::{
    build_model_from, evaluate_series, expand_group, ExpandOptions, MethodTag, ModelOptions,
    SeriesExpansion,
};

/// Header of the band CSV.
pub const BAND_COLUMNS: [&str; 12] = [
    "alpha_x",
    "alpha_y",
    "k",
    "z",
    "branch",
    "lambda_series",
    "lambda_oracle",
    "error_bound",
    "certified",
    "r_star",
    "d",
    "mu_minus",
];

/// Header of the comparison CSV.
pub const COMPARE_COLUMNS: [&str; 13] = [
    "alpha_x",
    "alpha_y",
    "k",
    "z",
    "branch",
    "order",
    "beta_series",
    "beta_oracle",
    "observed",
    "bound",
    "slack",
    "certified",
    "status",
];

/// Header of the resonance CSV.
pub const NP_COLUMNS: [&str; 4] = ["alpha_x", "alpha_y", "index", "mu"];

/// Header of the limit-spectrum CSV.
pub const LIMIT_COLUMNS: [&str; 5] = ["alpha_x", "alpha_y", "value", "provenance", "multiplicity"];

/// Header of the oracle CSV.
pub const ORACLE_COLUMNS: [&str; 6] = ["alpha_x", "alpha_y", "k", "index", "omega2", "residual"];

/// Named discretization levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Coarse,
    #[default]
    Default,
    Fine,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(Preset::Coarse),
            "default" => Ok(Preset::Default),
            "fine" => Ok(Preset::Fine),
            other => Err(Error::Config(format!(
                "unknown resolution preset '{other}' (expected coarse, default or fine)"
            ))),
        }
    }
}

/// One inclusion as written in the config. Disk coordinates are in cell
/// units; `b` is the optional buffer radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InclusionConfig {
    Disk {
        center: [f64; 2],
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
    },
    Curve {
        samples: Vec<[f64; 2]>,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

/// Brillouin-zone path. Coordinates are multiples of `π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    /// Vertices of the polygonal path (default `Γ → X → M → Γ`).
    #[serde(default = "default_vertices")]
    pub vertices: Vec<[f64; 2]>,
    /// Samples per leg; each leg contributes its start point and
    /// `samples_per_leg − 1` interior points.
    #[serde(default = "default_samples")]
    pub samples_per_leg: usize,
    /// Explicit sample points, used instead of the vertices when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
}

fn default_vertices() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 0.0]]
}

fn default_samples() -> usize {
    16
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            vertices: default_vertices(),
            samples_per_leg: default_samples(),
            points: None,
        }
    }
}

/// Discretization settings; unset fields come from the preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionConfig {
    #[serde(default)]
    pub preset: Preset,
    pub nodes_per_inclusion: Option<usize>,
    pub bessel_cutoff: Option<f64>,
    pub plane_wave_cutoff: Option<usize>,
    pub contour_nodes: Option<usize>,
    pub fd_grid: Option<f64>,
    pub oracle_cutoff: Option<usize>,
}

/// Oracle settings. Present in the config when the oracle is requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Plane-wave cutoff `M` (default from the resolution preset).
    pub cutoff: Option<usize>,
    /// Extrapolate from cutoffs `M` and `2M`.
    #[serde(default = "yes")]
    pub richardson: bool,
}

fn yes() -> bool {
    true
}

/// The declarative problem statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalConfig {
    pub inclusions: Vec<InclusionConfig>,
    /// Contrast `k`; exclusive with `z_list`.
    pub contrast: Option<f64>,
    /// Values of `z = 1/k`; exclusive with `contrast`.
    pub z_list: Option<Vec<f64>>,
    /// Series order `N`.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Number of eigenvalue groups, largest limit value first.
    #[serde(default = "default_branches")]
    pub branches: usize,
    #[serde(default)]
    pub path: PathConfig,
    #[serde(default)]
    pub resolution: ResolutionConfig,
    pub oracle: Option<OracleConfig>,
    pub output_dir: Option<PathBuf>,
}

fn default_order() -> usize {
    3
}

fn default_branches() -> usize {
    1
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub order: Option<usize>,
    pub contrast: Option<f64>,
    pub out: Option<PathBuf>,
    pub resolution: Option<Preset>,
}

/// Resolved discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub nodes_per_inclusion: usize,
    pub bessel_cutoff: f64,
    pub plane_wave_cutoff: usize,
    pub contour_nodes: usize,
    pub fd_grid: f64,
    pub oracle_cutoff: usize,
}

impl Resolution {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Coarse => Resolution {
                nodes_per_inclusion: 32,
                bessel_cutoff: 20.0,
                plane_wave_cutoff: 3,
                contour_nodes: 32,
                fd_grid: 1.0 / 64.0,
                oracle_cutoff: 8,
            },
            Preset::Default => Resolution {
                nodes_per_inclusion: 64,
                bessel_cutoff: 30.0,
                plane_wave_cutoff: 4,
                contour_nodes: 64,
                fd_grid: 1.0 / 128.0,
                oracle_cutoff: 12,
            },
            Preset::Fine => Resolution {
                nodes_per_inclusion: 128,
                bessel_cutoff: 40.0,
                plane_wave_cutoff: 6,
                contour_nodes: 128,
                fd_grid: 1.0 / 256.0,
                oracle_cutoff: 16,
            },
        }
    }
}

impl CrystalConfig {
    /// Parses TOML; unknown keys are reported by name.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| e.context(path.display()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.order {
            self.order = n;
        }
        if let Some(k) = o.contrast {
            self.contrast = Some(k);
            self.z_list = None;
        }
        if let Some(out) = &o.out {
            self.output_dir = Some(out.clone());
        }
        if let Some(p) = o.resolution {
            self.resolution.preset = p;
        }
    }

    pub fn resolution(&self) -> Resolution {
        let r = &self.resolution;
        let mut out = Resolution::preset(r.preset);
        if let Some(v) = r.nodes_per_inclusion {
            out.nodes_per_inclusion = v;
        }
        if let Some(v) = r.bessel_cutoff {
            out.bessel_cutoff = v;
        }
        if let Some(v) = r.plane_wave_cutoff {
            out.plane_wave_cutoff = v;
        }
        if let Some(v) = r.contour_nodes {
            out.contour_nodes = v;
        }
        if let Some(v) = r.fd_grid {
            out.fd_grid = v;
        }
        if let Some(v) = r.oracle_cutoff {
            out.oracle_cutoff = v;
        }
        out
    }

    /// Validates the config and builds the geometry.
    pub fn problem(&self) -> Result<Problem> {
        if self.inclusions.is_empty() {
            return Err(Error::Config("at least one inclusion is required".into()));
        }
        if !(1..=6).contains(&self.order) {
            return Err(Error::Config(format!("order must be in 1..=6, got {}", self.order)));
        }
        if self.branches == 0 {
            return Err(Error::Config("branches must be at least 1".into()));
        }
        let mut incs = Vec::new();
        let mut buffers = Vec::new();
        for (i, c) in self.inclusions.iter().enumerate() {
            let inc = match c {
                InclusionConfig::Disk { center, a, b } => {
                    buffers.push(*b);
                    Inclusion::disk(*center, *a)
                }
                InclusionConfig::Curve { samples } => {
                    buffers.push(None);
                    ParametricCurve::from_samples(samples.clone()).map(Inclusion::Curve)
                }
                InclusionConfig::Polygon { vertices } => {
                    buffers.push(None);
                    Ok(Inclusion::Polygon {
                        vertices: vertices.clone(),
                    })
                }
            };
            incs.push(inc.map_err(|e| e.context(format!("inclusion {i}")))?);
        }
        let buffer = if buffers.iter().all(Option::is_some) {
            let b0 = buffers[0].unwrap_or_default();
            if buffers.iter().any(|b| *b != Some(b0)) {
                return Err(Error::Config(
                    "all disks must share one buffer radius b".into(),
                ));
            }
            Some(b0)
        } else if buffers.iter().any(Option::is_some) {
            return Err(Error::Config(
                "a buffer radius b must be given for every inclusion or for none".into(),
            ));
        } else {
            None
        };
        let set = InclusionSet::new(incs, buffer)?;
        let zs = match (self.contrast, &self.z_list) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either contrast or z_list, not both".into()))
            }
            (Some(k), None) => vec![1.0 / k],
            (None, Some(zs)) => zs.clone(),
            (None, None) => Vec::new(),
        };
        for &z in &zs {
            if !(z > 0.0 && z <= 1.0) {
                return Err(Error::Config(format!(
                    "z = 1/k must lie in (0, 1] (contrast k ≥ 1), got {z}"
                )));
            }
        }
        let alphas = self.path.samples()?;
        Ok(Problem {
            set,
            zs,
            alphas,
            order: self.order,
            branches: self.branches,
            resolution: self.resolution(),
            oracle: self.oracle.clone(),
        })
    }
}

impl PathConfig {
    /// Sampled quasimomenta in path order.
    pub fn samples(&self) -> Result<Vec<QuasiMomentum>> {
        let to_alpha = |p: &[f64; 2]| QuasiMomentum::new(p[0] * PI, p[1] * PI);
        if let Some(points) = &self.points {
            if points.is_empty() {
                return Err(Error::Config("path.points is empty".into()));
            }
            return points.iter().map(to_alpha).collect();
        }
        match self.vertices.len() {
            0 => Err(Error::Config("path needs at least one vertex".into())),
            1 => Ok(vec![to_alpha(&self.vertices[0])?]),
            _ => {
                if self.samples_per_leg == 0 {
                    return Err(Error::Config("samples_per_leg must be positive".into()));
                }
                let mut out = Vec::new();
                for leg in self.vertices.windows(2) {
                    for s in 0..self.samples_per_leg {
                        let t = s as f64 / self.samples_per_leg as f64;
                        let p = [
                            leg[0][0] + t * (leg[1][0] - leg[0][0]),
                            leg[0][1] + t * (leg[1][1] - leg[0][1]),
                        ];
                        out.push(to_alpha(&p)?);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// A validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub set: InclusionSet,
    /// Contrast points `z = 1/k`.
    pub zs: Vec<f64>,
    pub alphas: Vec<QuasiMomentum>,
    pub order: usize,
    pub branches: usize,
    pub resolution: Resolution,
    pub oracle: Option<OracleConfig>,
}

impl Problem {
    fn model_options(&self) -> ModelOptions {
        ModelOptions {
            nodes_per_inclusion: self.resolution.nodes_per_inclusion,
            bessel_cutoff: self.resolution.bessel_cutoff,
            plane_wave_cutoff: self.resolution.plane_wave_cutoff,
            max_order: self.order,
        }
    }

    fn oracle_options(&self) -> Result<OracleOptions> {
        let Some(o) = &self.oracle else {
            return Err(Error::Config("the config has no [oracle] section".into()));
        };
        Ok(OracleOptions {
            cutoff: o.cutoff.unwrap_or(self.resolution.oracle_cutoff),
            rule: FactorizationRule::Inverse,
            richardson: o.richardson,
        })
    }

    /// Dirichlet spectrum of all inclusions: closed form for disks, finite
    /// differences otherwise.
    pub fn dirichlet(&self, count: usize) -> Result<DirichletSpectrum> {
        let parts = self
            .set
            .inclusions()
            .iter()
            .map(|inc| match *inc {
                Inclusion::Disk { radius, .. } => disk_dirichlet_for_limit(radius, count),
                _ => fd_dirichlet(inc, self.resolution.fd_grid, count + 4),
            })
            .collect::<Result<Vec<_>>>()?;
        DirichletSpectrum::merge(parts)
    }

    /// Limit spectrum with enough values to resolve the gaps of all branches.
    pub fn limit(&self, alpha: QuasiMomentum, spec: &DirichletSpectrum) -> Result<LimitSpectrum> {
        let count = (self.branches + 1) * self.set.len();
        limit_spectrum(alpha, spec, count)
    }

    /// Layer operators and resonances at `alpha`.
    pub fn resonances(&self, alpha: QuasiMomentum) -> Result<(LayerOperators, NPSpectrum)> {
        let mesh = build_mesh(&self.set, self.resolution.nodes_per_inclusion)?;
        let ops = assemble(&mesh, &GreenEvaluator::new(alpha))?;
        let spec = resonance_spectrum(&ops)?;
        Ok((ops, spec))
    }

    /// Closed-form buffer data `(a, b)` of the disk with the smallest `θ`.
    fn closed_form(&self) -> Option<(f64, f64)> {
        let b = self.set.buffer_outer_radius()?;
        self.set
            .inclusions()
            .iter()
            .filter_map(|inc| match *inc {
                Inclusion::Disk { radius, .. } => Some(radius),
                _ => None,
            })
            .max_by(|x, y| x.total_cmp(y))
            .map(|a| (a, b))
    }

    /// Certificate for gap `d`: closed form and computed `μ⁻(α)` when both
    /// are available, whichever is valid otherwise, and `None` if neither
    /// yields `−½ < μ⁻ < 0`.
    pub fn certificate(&self, alpha: QuasiMomentum, d: f64, computed_mu: f64) -> Option<Certificate> {
        let closed = self.closed_form();
        let computed = (computed_mu > -0.5 && computed_mu < 0.0).then_some(computed_mu);
        if closed.is_none() && computed.is_none() {
            return None;
        }
        Certificate::best_of(alpha, d, closed, computed).ok()
    }
}

/// One eigenvalue group at one quasimomentum.
#[derive(Debug, Clone)]
pub struct Branch {
    pub index: usize,
    /// Limit value `β_0` from the limit spectrum.
    pub limit: f64,
    pub multiplicity: usize,
    pub d: f64,
    pub certificate: Option<Certificate>,
}

/// Everything computed at one quasimomentum.
#[derive(Debug, Clone)]
pub struct AlphaAnalysis {
    pub alpha: QuasiMomentum,
    pub limit: LimitSpectrum,
    pub mu: Vec<f64>,
    pub mu_minus: f64,
    pub branches: Vec<Branch>,
    pub expansions: Vec<SeriesExpansion>,
}

fn branches_at(problem: &Problem, alpha: QuasiMomentum, limit: &LimitSpectrum, mu_minus: f64) -> Result<Vec<Branch>> {
    let distinct = limit.distinct();
    (0..problem.branches)
        .map(|j| {
            let (value, m) = *distinct.get(j).ok_or_else(|| {
                Error::Resolution(format!("branch {j} is not resolved by the limit spectrum"))
            })?;
            let d = gap_d(limit, j)?;
            Ok(Branch {
                index: j,
                limit: value,
                multiplicity: m,
                d,
                certificate: problem.certificate(alpha, d, mu_minus),
            })
        })
        .collect()
}

fn alpha_context(alpha: QuasiMomentum) -> String {
    format!("alpha = ({:.6}, {:.6})", alpha.x(), alpha.y())
}

/// Limit spectrum, resonances, certificates and series at one quasimomentum.
pub fn analyze_alpha(problem: &Problem, spec: &DirichletSpectrum, alpha: QuasiMomentum, series: bool) -> Result<AlphaAnalysis> {
    let ctx = alpha_context(alpha);
    let limit = problem.limit(alpha, spec).map_err(|e| e.context(&ctx))?;
    let (ops, np) = problem.resonances(alpha).map_err(|e| e.context(&ctx))?;
    let branches = branches_at(problem, alpha, &limit, np.mu_minus).map_err(|e| e.context(&ctx))?;
    let mut expansions = Vec::new();
    if series {
        let model = build_model_from(&problem.set, &ops, &np, &problem.model_options())
            .map_err(|e| e.context(&ctx))?;
        for b in &branches {
            let methods = if b.multiplicity == 1 {
                vec![MethodTag::LayerRs, MethodTag::ContourTrace]
            } else {
                vec![MethodTag::ContourTrace]
            };
            let opts = ExpandOptions {
                order: problem.order,
                contour_nodes: problem.resolution.contour_nodes,
                methods,
            };
            let mut exp = expand_group(&model, b.limit, b.multiplicity, b.d, &opts)
                .map_err(|e| e.context(format!("{ctx}, branch {}", b.index)))?;
            exp.certificate = b.certificate.clone();
            expansions.push(exp);
        }
    }
    Ok(AlphaAnalysis {
        alpha,
        limit,
        mu: np.mu,
        mu_minus: np.mu_minus,
        branches,
        expansions,
    })
}

/// Runs `f` over the path samples on `jobs` workers, in path order.
fn par_alphas<T: Send>(
    alphas: &[QuasiMomentum],
    jobs: Option<usize>,
    f: impl Fn(QuasiMomentum) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| alphas.par_iter().map(|&a| f(a)).collect())
}

/// One row of the band CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRow {
    pub alpha: [f64; 2],
    pub k: f64,
    pub z: f64,
    pub branch: usize,
    pub lambda_series: f64,
    pub lambda_oracle: f64,
    /// Bound on `|λ − λ_series|` propagated from the series bound.
    pub error_bound: f64,
    pub certified: bool,
    pub r_star: f64,
    pub d: f64,
    pub mu_minus: f64,
}

/// Output of [`run_band`].
#[derive(Debug, Clone)]
pub struct BandResult {
    pub rows: Vec<BandRow>,
    pub expansions: Vec<SeriesExpansion>,
}

/// `β` of a group from oracle eigenvalues: mean of `1/ω²` over the group's
/// positions, with the mean of the mapped error estimates.
fn oracle_group(res: &OracleResult, start: usize, m: usize) -> (f64, f64) {
    let w = res.best();
    let beta = (start..start + m).map(|i| 1.0 / w[i]).sum::<f64>() / m as f64;
    let slack = match &res.error_estimate {
        Some(e) => (start..start + m).map(|i| e[i] / (w[i] * w[i])).sum::<f64>() / m as f64,
        None => 0.0,
    };
    (beta, slack)
}

fn oracle_count(branches: &[Branch]) -> Result<usize> {
    let q: usize = branches.iter().map(|b| b.multiplicity).sum();
    if q > 20 {
        return Err(Error::Config(format!(
            "the requested branches need {q} oracle eigenvalues; at most 20 are supported"
        )));
    }
    Ok(q)
}

/// Band sweep: series at every path sample and contrast, with oracle values
/// when the config requests them.
pub fn run_band(config: &CrystalConfig, jobs: Option<usize>) -> Result<BandResult> {
    let problem = config.problem()?;
    if problem.zs.is_empty() {
        return Err(Error::Config("band needs contrast or z_list".into()));
    }
    let spec = problem.dirichlet((problem.branches + 1) * problem.set.len())?;
    let oracle = problem.oracle.as_ref().map(|_| problem.oracle_options()).transpose()?;
    let per_alpha = par_alphas(&problem.alphas, jobs, |alpha| {
        let an = analyze_alpha(&problem, &spec, alpha, true)?;
        let mut rows = Vec::new();
        for &z in &problem.zs {
            let k = 1.0 / z;
            let oracle_res = match &oracle {
                Some(o) => Some(
                    bloch_solve_with(&problem.set, alpha, k, oracle_count(&an.branches)?, o)
                        .map_err(|e| e.context(alpha_context(alpha)))?,
                ),
                None => None,
            };
            let mut start = 0;
            for (b, exp) in an.branches.iter().zip(&an.expansions) {
                let pt = evaluate_series(exp, z)?;
                let lambda_oracle = oracle_res
                    .as_ref()
                    .map(|r| 1.0 / oracle_group(r, start, b.multiplicity).0)
                    .unwrap_or(f64::NAN);
                start += b.multiplicity;
                let cert = b.certificate.as_ref();
                rows.push(BandRow {
                    alpha: alpha.as_array(),
                    k,
                    z,
                    branch: b.index,
                    lambda_series: pt.lambda_hat,
                    lambda_oracle,
                    error_bound: pt.lambda_error,
                    certified: pt.certified,
                    r_star: cert.map_or(f64::NAN, |c| c.r_star),
                    d: b.d,
                    mu_minus: cert.map_or(an.mu_minus, |c| c.mu_minus),
                });
            }
        }
        Ok((rows, an.expansions))
    })?;
    let mut rows = Vec::new();
    let mut expansions = Vec::new();
    for (r, e) in per_alpha {
        rows.extend(r);
        expansions.extend(e);
    }
    Ok(BandResult { rows, expansions })
}

/// One row of the conformance report.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub alpha: [f64; 2],
    pub k: f64,
    pub z: f64,
    pub branch: usize,
    /// Truncation order `p`.
    pub order: usize,
    pub beta_series: f64,
    pub beta_oracle: f64,
    /// `|β_oracle − β_series|`.
    pub observed: f64,
    /// Truncation bound `d|z|^{p+1}/((r*)^p (r* − |z|))`.
    pub bound: f64,
    /// Oracle refinement estimate.
    pub slack: f64,
    pub certified: bool,
    pub status: RowStatus,
}

/// Conformance verdict of one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowStatus {
    Pass,
    Fail,
    /// `|z| ≥ r*` or no certificate: excluded from the verdict.
    Uncertified,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Pass => "PASS",
            RowStatus::Fail => "FAIL",
            RowStatus::Uncertified => "UNCERTIFIED",
        }
    }
}

/// Output of [`run_compare`].
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    /// No certified row fails.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != RowStatus::Fail)
    }

    /// Human-readable table.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>9} {:>9} {:>10} {:>6} {:>3} {:>12} {:>12} {:>12} {:>12}  status",
            "alpha_x", "alpha_y", "k", "branch", "p", "beta_oracle", "observed", "bound", "slack"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>9.5} {:>9.5} {:>10.4e} {:>6} {:>3} {:>12.6e} {:>12.3e} {:>12.3e} {:>12.3e}  {}",
                r.alpha[0],
                r.alpha[1],
                r.k,
                r.branch,
                r.order,
                r.beta_oracle,
                r.observed,
                r.bound,
                r.slack,
                r.status.as_str()
            );
        }
        s
    }
}

/// Series against oracle: observed error per truncation order against the
/// certified bound plus the oracle's refinement slack.
pub fn run_compare(config: &CrystalConfig, jobs: Option<usize>) -> Result<CompareReport> {
    let problem = config.problem()?;
    let oracle = problem.oracle_options()?;
    if problem.zs.is_empty() {
        return Err(Error::Config("compare needs contrast or z_list".into()));
    }
    let spec = problem.dirichlet((problem.branches + 1) * problem.set.len())?;
    let per_alpha = par_alphas(&problem.alphas, jobs, |alpha| {
        let an = analyze_alpha(&problem, &spec, alpha, true)?;
        let q = oracle_count(&an.branches)?;
        let mut rows = Vec::new();
        for &z in &problem.zs {
            let k = 1.0 / z;
            let res = bloch_solve_with(&problem.set, alpha, k, q, &oracle)
                .map_err(|e| e.context(alpha_context(alpha)))?;
            let mut start = 0;
            for (b, exp) in an.branches.iter().zip(&an.expansions) {
                let (beta_oracle, slack) = oracle_group(&res, start, b.multiplicity);
                start += b.multiplicity;
                for p in 1..=exp.order() {
                    let beta_series = exp.partial_sum(z, p);
                    let observed = (beta_oracle - beta_series).abs();
                    let bound = match &exp.certificate {
                        Some(c) if c.check(z.into()).is_certified() => Some(c.bound(p, z.into())?),
                        _ => None,
                    };
                    let status = match bound {
                        None => RowStatus::Uncertified,
                        Some(bd) if observed <= bd + slack => RowStatus::Pass,
                        Some(_) => RowStatus::Fail,
                    };
                    rows.push(CompareRow {
                        alpha: alpha.as_array(),
                        k,
                        z,
                        branch: b.index,
                        order: p,
                        beta_series,
                        beta_oracle,
                        observed,
                        bound: bound.unwrap_or(f64::NAN),
                        slack,
                        certified: bound.is_some(),
                        status,
                    });
                }
            }
        }
        Ok(rows)
    })?;
    Ok(CompareReport {
        rows: per_alpha.into_iter().flatten().collect(),
    })
}

/// Certificates for every path sample and branch.
pub fn run_certify(config: &CrystalConfig, jobs: Option<usize>) -> Result<Vec<AlphaAnalysis>> {
    let problem = config.problem()?;
    let spec = problem.dirichlet((problem.branches + 1) * problem.set.len())?;
    par_alphas(&problem.alphas, jobs, |alpha| analyze_alpha(&problem, &spec, alpha, false))
}

/// Human-readable certificate table.
pub fn certificate_table(analyses: &[AlphaAnalysis]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>9} {:>9} {:>6} {:>3} {:>12} {:>12} {:>11} {:>16} {:>11} {:>12} {:>9}",
        "alpha_x", "alpha_y", "branch", "m", "beta0", "d", "mu_minus", "source", "z_star", "r_star", "theta"
    );
    for an in analyses {
        for b in &an.branches {
            match &b.certificate {
                Some(c) => {
                    let source = serde_json::to_value(c.mu_minus_source)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned))
                        .unwrap_or_default();
                    let theta = c.theta.map_or("-".to_string(), |t| format!("{t:.6}"));
                    let _ = writeln!(
                        s,
                        "{:>9.5} {:>9.5} {:>6} {:>3} {:>12.6e} {:>12.6e} {:>11.6} {:>16} {:>11.6} {:>12.6e} {:>9}",
                        an.alpha.x(),
                        an.alpha.y(),
                        b.index,
                        b.multiplicity,
                        b.limit,
                        b.d,
                        c.mu_minus,
                        source,
                        c.z_star,
                        c.r_star,
                        theta
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        "{:>9.5} {:>9.5} {:>6} {:>3} {:>12.6e} {:>12.6e} {:>11.6} {:>16}",
                        an.alpha.x(),
                        an.alpha.y(),
                        b.index,
                        b.multiplicity,
                        b.limit,
                        b.d,
                        an.mu_minus,
                        "uncertified"
                    );
                }
            }
        }
    }
    s
}

/// Resonances at every path sample.
pub fn run_np_spectrum(config: &CrystalConfig, jobs: Option<usize>) -> Result<Vec<(QuasiMomentum, Vec<f64>)>> {
    let problem = config.problem()?;
    par_alphas(&problem.alphas, jobs, |alpha| {
        let (_, np) = problem.resonances(alpha).map_err(|e| e.context(alpha_context(alpha)))?;
        Ok((alpha, np.mu))
    })
}

/// Limit spectra at every path sample.
pub fn run_limit(config: &CrystalConfig, jobs: Option<usize>) -> Result<Vec<LimitSpectrum>> {
    let problem = config.problem()?;
    let spec = problem.dirichlet((problem.branches + 1) * problem.set.len())?;
    par_alphas(&problem.alphas, jobs, |alpha| {
        problem.limit(alpha, &spec).map_err(|e| e.context(alpha_context(alpha)))
    })
}

/// Oracle eigenvalues at every path sample and contrast.
pub fn run_oracle(config: &CrystalConfig, jobs: Option<usize>, count: usize) -> Result<Vec<OracleResult>> {
    let problem = config.problem()?;
    let mut oracle = match problem.oracle {
        Some(_) => problem.oracle_options()?,
        None => OracleOptions {
            cutoff: problem.resolution.oracle_cutoff,
            ..OracleOptions::default()
        },
    };
    oracle.cutoff = oracle.cutoff.max(8);
    if problem.zs.is_empty() {
        return Err(Error::Config("oracle needs contrast or z_list".into()));
    }
    let per_alpha = par_alphas(&problem.alphas, jobs, |alpha| {
        problem
            .zs
            .iter()
            .map(|&z| {
                bloch_solve_with(&problem.set, alpha, 1.0 / z, count, &oracle)
                    .map_err(|e| e.context(alpha_context(alpha)))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_alpha.into_iter().flatten().collect())
}

/// Fixed 17-significant-digit float format; `NaN` for missing values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn band_csv(rows: &[BandRow]) -> String {
    csv(
        &BAND_COLUMNS,
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.alpha[0]),
                fmt_f64(r.alpha[1]),
                fmt_f64(r.k),
                fmt_f64(r.z),
                r.branch.to_string(),
                fmt_f64(r.lambda_series),
                fmt_f64(r.lambda_oracle),
                fmt_f64(r.error_bound),
                r.certified.to_string(),
                fmt_f64(r.r_star),
                fmt_f64(r.d),
                fmt_f64(r.mu_minus),
            ]
        }),
    )
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    csv(
        &COMPARE_COLUMNS,
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.alpha[0]),
                fmt_f64(r.alpha[1]),
                fmt_f64(r.k),
                fmt_f64(r.z),
                r.branch.to_string(),
                r.order.to_string(),
                fmt_f64(r.beta_series),
                fmt_f64(r.beta_oracle),
                fmt_f64(r.observed),
                fmt_f64(r.bound),
                fmt_f64(r.slack),
                r.certified.to_string(),
                r.status.as_str().to_string(),
            ]
        }),
    )
}

pub fn np_csv(spectra: &[(QuasiMomentum, Vec<f64>)]) -> String {
    csv(
        &NP_COLUMNS,
        spectra.iter().flat_map(|(a, mu)| {
            mu.iter().enumerate().map(move |(i, m)| {
                vec![fmt_f64(a.x()), fmt_f64(a.y()), i.to_string(), fmt_f64(*m)]
            })
        }),
    )
}

pub fn limit_csv(spectra: &[LimitSpectrum]) -> String {
    csv(
        &LIMIT_COLUMNS,
        spectra.iter().flat_map(|s| {
            s.values.iter().map(move |v| {
                vec![
                    fmt_f64(s.alpha.x()),
                    fmt_f64(s.alpha.y()),
                    fmt_f64(v.value),
                    v.provenance.label(),
                    v.multiplicity.to_string(),
                ]
            })
        }),
    )
}

pub fn oracle_csv(results: &[OracleResult]) -> String {
    csv(
        &ORACLE_COLUMNS,
        results.iter().flat_map(|r| {
            r.best().iter().zip(&r.residuals).enumerate().map(move |(i, (w, res))| {
                vec![
                    fmt_f64(r.alpha[0]),
                    fmt_f64(r.alpha[1]),
                    fmt_f64(r.contrast),
                    i.to_string(),
                    fmt_f64(*w),
                    fmt_f64(*res),
                ]
            })
        }),
    )
}

/// JSON array of series exports.
pub fn series_json(expansions: &[SeriesExpansion]) -> Result<String> {
    let v: Vec<serde_json::Value> = expansions.iter().map(SeriesExpansion::to_json).collect();
    Ok(serde_json::to_string_pretty(&v)?)
}

/// Writes `text` to `dir/name`, creating `dir`.
pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Which kind of result a CSV holds, judged by its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    Band,
    Compare,
}

fn csv_kind(header: &str) -> Result<CsvKind> {
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols == BAND_COLUMNS {
        Ok(CsvKind::Band)
    } else if cols == COMPARE_COLUMNS {
        Ok(CsvKind::Compare)
    } else {
        Err(Error::Config(format!(
            "cannot plot a CSV with header '{}' (expected band or compare columns)",
            header.trim()
        )))
    }
}

const BAND_PLOT: &str = r#"import csv
import io
import math

import matplotlib.pyplot as plt

rows = list(csv.DictReader(io.StringIO(DATA)))
points = []
for r in rows:
    key = (float(r["alpha_x"]), float(r["alpha_y"]))
    if not points or points[-1] != key:
        points.append(key)
coord = {}
s = 0.0
for i, p in enumerate(points):
    if i > 0:
        q = points[i - 1]
        s += math.hypot(p[0] - q[0], p[1] - q[1])
    coord[p] = s

fig, ax = plt.subplots()
branches = sorted({(r["branch"], r["k"]) for r in rows})
for branch, k in branches:
    sel = [r for r in rows if r["branch"] == branch and r["k"] == k]
    x = [coord[(float(r["alpha_x"]), float(r["alpha_y"]))] for r in sel]
    y = [float(r["lambda_series"]) for r in sel]
    ax.plot(x, y, "-", label=f"series, branch {branch}, k={float(k):.4g}")
    yo = [float(r["lambda_oracle"]) for r in sel]
    if any(not math.isnan(v) for v in yo):
        ax.plot(x, yo, "o", mfc="none", label=f"oracle, branch {branch}")
ax.set_xlabel("path coordinate |alpha|")
ax.set_ylabel("lambda = omega^2")
ax.set_title("Bloch band diagram")
if rows:
    ax.legend()
fig.savefig(OUTPUT, dpi=150)
"#;

const COMPARE_PLOT: &str = r#"import csv
import io

import matplotlib.pyplot as plt

rows = list(csv.DictReader(io.StringIO(DATA)))
fig, ax = plt.subplots()
groups = sorted({(r["alpha_x"], r["alpha_y"], r["k"], r["branch"]) for r in rows})
for g in groups:
    sel = [r for r in rows if (r["alpha_x"], r["alpha_y"], r["k"], r["branch"]) == g]
    p = [int(r["order"]) for r in sel]
    ax.semilogy(p, [float(r["observed"]) for r in sel], "o-", label=f"observed, k={float(g[2]):.4g}")
    if any(r["certified"] == "true" for r in sel):
        ax.semilogy(p, [float(r["bound"]) for r in sel], "s--", label=f"bound, k={float(g[2]):.4g}")
ax.set_xlabel("truncation order p")
ax.set_ylabel("|beta_oracle - partial sum|")
ax.set_title("Series error against truncation order")
if rows:
    ax.legend()
fig.savefig(OUTPUT, dpi=150)
"#;

/// Writes a self-contained plotting script (data embedded) next to the CSV
/// and returns its path: a dispersion figure for band files, an
/// error-decay figure for comparison files.
pub fn emit_plots(csv_path: &Path) -> Result<PathBuf> {
    let text = std::fs::read_to_string(csv_path)?;
    let header = text.lines().next().unwrap_or("");
    let kind = csv_kind(header)?;
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("result")
        .to_string();
    let rows = text.lines().count().saturating_sub(1);
    let mut script = String::new();
    script.push_str("#!/usr/bin/env python3\n");
    let _ = writeln!(script, "# Plot script for {stem}.csv; the data are embedded below.");
    if rows == 0 {
        script.push_str("# warning: the CSV has no data rows; the figure will be empty.\n");
    }
    let _ = writeln!(script, "OUTPUT = {:?}", format!("{stem}.png"));
    let _ = writeln!(script, "DATA = \"\"\"{}\"\"\"", text);
    script.push_str(match kind {
        CsvKind::Band => BAND_PLOT,
        CsvKind::Compare => COMPARE_PLOT,
    });
    let out = csv_path.with_file_name(format!("{stem}_plot.py"));
    std::fs::write(&out, script)?;
    Ok(out)
}

/// Files written by [`write_band`].
#[derive(Debug, Clone)]
pub struct BandFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub plot: PathBuf,
}

/// Writes `band.csv`, `series.json` and `band_plot.py`.
pub fn write_band(result: &BandResult, dir: &Path) -> Result<BandFiles> {
    let csv = write_file(dir, "band.csv", &band_csv(&result.rows))?;
    let json = write_file(dir, "series.json", &series_json(&result.expansions)?)?;
    let plot = emit_plots(&csv)?;
    Ok(BandFiles { csv, json, plot })
}

/// Writes `compare.csv` and `compare_plot.py`.
pub fn write_compare(report: &CompareReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let csv = write_file(dir, "compare.csv", &compare_csv(&report.rows))?;
    let plot = emit_plots(&csv)?;
    Ok((csv, plot))
}

/// Certificates as JSON keyed by path position and branch.
pub fn certificates_json(analyses: &[AlphaAnalysis]) -> Result<String> {
    let mut out = Vec::new();
    for (i, an) in analyses.iter().enumerate() {
        for b in &an.branches {
            let mut entry = BTreeMap::new();
            entry.insert("sample", serde_json::json!(i));
            entry.insert("alpha", serde_json::json!(an.alpha.as_array()));
            entry.insert("branch", serde_json::json!(b.index));
            entry.insert("m", serde_json::json!(b.multiplicity));
            entry.insert("beta0", serde_json::json!(b.limit));
            entry.insert("d", serde_json::json!(b.d));
            entry.insert("certificate", serde_json::to_value(&b.certificate)?);
            out.push(entry);
        }
    }
    Ok(serde_json::to_string_pretty(&out)?)
}
