//! Nonlinear terms of the four evolution systems.
//!
//! Products are formed pointwise at the collocation points and the result is
//! truncated by the 2/3 rule before any multiplier is applied. With dealiased
//! inputs this makes the discrete energy cancellations exact up to rounding.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipliers::{curl_vec, leray_project, relative_divergence, RieszSign};
use crate::spectral::field::inverse_real;
use crate::spectral::{pointwise_cross, PhysicalVectorField, SpectralVectorField};

/// Inputs whose relative divergence exceeds this are rejected.
pub const SOLENOIDAL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// `v_t + R×(v×ω) = Δv`
    Mns,
    /// Navier-Stokes as `v_t = P(v×ω) + Δv`
    NsRotational,
    /// Navier-Stokes as `v_t = −P((v·∇)v) + Δv`
    NsConvective,
    /// `B_t + ∇×(B×(∇×B)) = ΔB`
    Hall,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Mns, ModelKind::NsRotational, ModelKind::NsConvective, ModelKind::Hall];

    /// Identifier written to snapshot headers.
    pub fn id(self) -> u32 {
        match self {
            ModelKind::Mns => 0,
            ModelKind::NsRotational => 1,
            ModelKind::NsConvective => 2,
            ModelKind::Hall => 3,
        }
    }

    pub fn from_id(id: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mns => "mns",
            ModelKind::NsRotational => "ns_rotational",
            ModelKind::NsConvective => "ns_convective",
            ModelKind::Hall => "hall",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s.trim()).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown model '{}', expected one of mns, ns_rotational, ns_convective, hall",
                s.trim()
            ))
        })
    }
}

/// A model together with the Riesz sign its nonlinearity uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub sign: RieszSign,
}

/// Nonlinear term together with `max_x |u(x)|`, which falls out of the
/// physical-space evaluation for free.
#[derive(Clone, Debug)]
pub struct NonlinearTerm {
    pub term: SpectralVectorField,
    pub max_speed: f64,
}

impl Model {
    pub fn new(kind: ModelKind, sign: RieszSign) -> Self {
        Model { kind, sign }
    }

    /// Dispatch to the model's nonlinear term (the non-stiff right-hand side).
    pub fn rhs_nonstiff(&self, u: &SpectralVectorField) -> Result<NonlinearTerm> {
        check_solenoidal(u)?;
        Ok(self.rhs_unchecked(u))
    }

    /// [`Model::rhs_nonstiff`] without the solenoidality check, for stage
    /// values built from already checked states.
    pub(crate) fn rhs_unchecked(&self, u: &SpectralVectorField) -> NonlinearTerm {
        match self.kind {
            ModelKind::Mns => mns(u, self.sign),
            ModelKind::NsRotational => ns_rotational(u),
            ModelKind::NsConvective => ns_convective(u),
            ModelKind::Hall => hall(u),
        }
    }

    pub fn nonlinear(&self, u: &SpectralVectorField) -> Result<SpectralVectorField> {
        self.rhs_nonstiff(u).map(|n| n.term)
    }
}

/// `N(v) = −R×(v×ω)`.
pub fn nonlinear_mns(v: &SpectralVectorField, sign: RieszSign) -> Result<SpectralVectorField> {
    Model::new(ModelKind::Mns, sign).nonlinear(v)
}

/// `N(v) = P(v×ω)`.
pub fn nonlinear_ns_rotational(v: &SpectralVectorField) -> Result<SpectralVectorField> {
    Model::new(ModelKind::NsRotational, RieszSign::Plus).nonlinear(v)
}

/// `N(v) = −P((v·∇)v)`.
pub fn nonlinear_ns_convective(v: &SpectralVectorField) -> Result<SpectralVectorField> {
    Model::new(ModelKind::NsConvective, RieszSign::Plus).nonlinear(v)
}

/// `N(B) = −∇×(B×(∇×B))`.
pub fn nonlinear_hall(b: &SpectralVectorField) -> Result<SpectralVectorField> {
    Model::new(ModelKind::Hall, RieszSign::Plus).nonlinear(b)
}

fn check_solenoidal(u: &SpectralVectorField) -> Result<()> {
    let relative = relative_divergence(u);
    if relative > SOLENOIDAL_TOLERANCE {
        return Err(Error::NotSolenoidal { relative });
    }
    Ok(())
}

/// Physical samples of `u` and `curl u` from one batch of packed transforms.
fn with_curl(u: &SpectralVectorField) -> (PhysicalVectorField, PhysicalVectorField) {
    let grid = u.grid();
    let w = curl_vec(u);
    let fields: Vec<&[Complex64]> = u.components().iter().chain(w.components().iter()).map(|c| c.as_slice()).collect();
    let mut phys = inverse_real(grid, &fields).into_iter();
    let mut take = || {
        let comps = std::array::from_fn(|_| phys.next().expect("six fields"));
        PhysicalVectorField::from_components(grid, comps).expect("grid-sized samples")
    };
    let a = take();
    let b = take();
    (a, b)
}

/// Dealiased forward transform of a pointwise product.
fn product_to_spectral(p: &PhysicalVectorField) -> SpectralVectorField {
    let mut s = p.to_spectral(true);
    s.clear_mean();
    s
}

fn mns(v: &SpectralVectorField, sign: RieszSign) -> NonlinearTerm {
    let (vp, wp) = with_curl(v);
    let cross = pointwise_cross(&vp, &wp).expect("same grid");
    let x = product_to_spectral(&cross);
    let sigma = -sign.value();
    let term = x.map_modes(|k, u| {
        let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if kk == 0.0 {
            return [Complex64::new(0.0, 0.0); 3];
        }
        let s = sigma / kk.sqrt();
        let c = [u[2] * k[1] - u[1] * k[2], u[0] * k[2] - u[2] * k[0], u[1] * k[0] - u[0] * k[1]];
        c.map(|z| Complex64::new(-z.im * s, z.re * s))
    });
    NonlinearTerm { term, max_speed: vp.max_magnitude() }
}

fn ns_rotational(v: &SpectralVectorField) -> NonlinearTerm {
    let (vp, wp) = with_curl(v);
    let cross = pointwise_cross(&vp, &wp).expect("same grid");
    let term = leray_project(&product_to_spectral(&cross));
    NonlinearTerm { term, max_speed: vp.max_magnitude() }
}

fn ns_convective(v: &SpectralVectorField) -> NonlinearTerm {
    let grid = v.grid();
    let grads: Vec<SpectralVectorField> = (0..3).map(|j| crate::multipliers::partial(v, j)).collect();
    let fields: Vec<&[Complex64]> =
        v.components().iter().chain(grads.iter().flat_map(|g| g.components().iter())).map(|c| c.as_slice()).collect();
    let mut phys = inverse_real(grid, &fields).into_iter();
    let mut take = || {
        let comps = std::array::from_fn(|_| phys.next().expect("twelve fields"));
        PhysicalVectorField::from_components(grid, comps).expect("grid-sized samples")
    };
    let vp = take();
    let grad = [take(), take(), take()];
    let adv = crate::spectral::advective_product(&vp, &grad).expect("same grid");
    let term = leray_project(&product_to_spectral(&adv)).scale(-1.0);
    NonlinearTerm { term, max_speed: vp.max_magnitude() }
}

fn hall(b: &SpectralVectorField) -> NonlinearTerm {
    let (bp, jp) = with_curl(b);
    let cross = pointwise_cross(&bp, &jp).expect("same grid");
    let term = curl_vec(&product_to_spectral(&cross)).scale(-1.0);
    NonlinearTerm { term, max_speed: bp.max_magnitude() }
}
