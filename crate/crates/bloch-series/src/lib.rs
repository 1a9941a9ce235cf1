//! Bloch band structure of two-dimensional high-contrast periodic media from
//! convergent power series in the inverse contrast `z = 1/k`.
//!
//! The crate provides
//! * [`geometry`]: the period cell, inclusions and boundary meshes,
//! * [`lattice_green`]: quasi-periodic Green's functions,
//! * [`np_spectrum`]: layer potentials and the Neumann–Poincaré spectrum,
//! * [`limit_spectrum`]: the `z → 0` limit spectrum,
//! * [`series`]: coefficients of the eigenvalue series and their evaluation,
//! * [`certificates`]: convergence radii and truncation-error bounds,
//! * [`oracle`]: an independent plane-wave solver at finite contrast,
//! * [`pipeline`]: configuration, band sweeps and result files.

pub mod certificates;
pub mod error;
pub mod geometry;
pub mod lattice_green;
pub mod limit_spectrum;
pub mod linalg;
pub mod np_spectrum;
pub mod oracle;
pub mod pipeline;
pub mod series;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
