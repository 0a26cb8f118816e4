//! Pseudo-spectral solver for Riesz-modified Navier-Stokes models on the
//! periodic torus [0, 2π)³, with runtime checks of the operator identities
//! and energy laws that govern them.
//!
//! The evolution integrated for every model is
//! `dû_k/dt = N̂_k(u) − |k|² û_k`, where the nonlinear term `N` is one of
//!
//! * `−R×(v×ω)`, the Riesz-modified system ([`ModelKind::Mns`]),
//! * `P(v×ω)` or `−P((v·∇)v)`, Navier-Stokes in rotational or convective
//!   form ([`ModelKind::NsRotational`], [`ModelKind::NsConvective`]),
//! * `−∇×(B×(∇×B))`, the reduced Hall equation ([`ModelKind::Hall`]).

pub mod diagnostics;
pub mod error;
pub mod initial;
pub mod integrator;
pub mod models;
pub mod multipliers;
pub mod spectral;

pub use error::{Error, Result};
pub use models::{Model, ModelKind};
pub use multipliers::RieszSign;
pub use spectral::{Grid, PhysicalScalarField, PhysicalVectorField, SpectralScalarField, SpectralVectorField};
