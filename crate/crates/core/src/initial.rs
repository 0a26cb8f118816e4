//! Reproducible solenoidal initial data.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipliers::leray_project;
use crate::spectral::{Grid, SpectralVectorField};

/// Name of the pseudo-random generator behind [`random_solenoidal`], recorded
/// in run metadata.
pub const GENERATOR_NAME: &str = "ChaCha20Rng::seed_from_u64 (rand_chacha 0.9) + StandardNormal (rand_distr 0.5)";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    TaylorGreen { amplitude: f64 },
    Abc { a: f64, b: f64, c: f64 },
    Random { seed: u64, peak: f64, target_l2: f64 },
}

impl InitialCondition {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match *self {
            InitialCondition::TaylorGreen { amplitude } => {
                if !(amplitude > 0.0 && amplitude.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "taylor_green amplitude must be > 0, got {amplitude}"
                    )));
                }
            }
            InitialCondition::Abc { a, b, c } => {
                if ![a, b, c].iter().all(|x| x.is_finite()) || (a == 0.0 && b == 0.0 && c == 0.0) {
                    return Err(Error::InvalidParameter("abc coefficients must be finite and not all zero".into()));
                }
            }
            InitialCondition::Random { peak, target_l2, .. } => {
                let kmax = grid.cutoff() as f64 - 1.0;
                if !(1.0..=kmax).contains(&peak) {
                    return Err(Error::InvalidParameter(format!(
                        "random peak wavenumber must lie in [1, {kmax}], got {peak}"
                    )));
                }
                if !(target_l2 > 0.0 && target_l2.is_finite()) {
                    return Err(Error::InvalidParameter(format!("random target L2 norm must be > 0, got {target_l2}")));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self, grid: &Arc<Grid>) -> Result<SpectralVectorField> {
        self.validate(grid)?;
        match *self {
            InitialCondition::TaylorGreen { amplitude } => taylor_green(grid, amplitude),
            InitialCondition::Abc { a, b, c } => abc_flow(grid, a, b, c),
            InitialCondition::Random { seed, peak, target_l2 } => random_solenoidal(grid, seed, peak, target_l2),
        }
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::TaylorGreen { amplitude } => write!(f, "taylor_green:{amplitude}"),
            InitialCondition::Abc { a, b, c } => write!(f, "abc:{a},{b},{c}"),
            InitialCondition::Random { seed, peak, target_l2 } => {
                write!(f, "random:{seed},{peak},{target_l2}")
            }
        }
    }
}

/// Parses `taylor_green:A`, `abc:A,B,C` and `random:SEED,K0,TARGET`.
impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let nums = |expected: usize| -> Result<Vec<&str>> {
            let parts: Vec<&str> = args.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
            if parts.len() != expected {
                return Err(Error::InvalidParameter(format!(
                    "ic '{kind}' takes {expected} comma-separated values, got '{args}'"
                )));
            }
            Ok(parts)
        };
        let float = |v: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("ic value '{v}' is not a number")))
        };
        match kind {
            "taylor_green" => {
                let p = nums(1)?;
                Ok(InitialCondition::TaylorGreen { amplitude: float(p[0])? })
            }
            "abc" => {
                let p = nums(3)?;
                Ok(InitialCondition::Abc { a: float(p[0])?, b: float(p[1])?, c: float(p[2])? })
            }
            "random" => {
                let p = nums(3)?;
                let seed = p[0]
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidParameter(format!("ic seed '{}' is not a u64", p[0])))?;
                Ok(InitialCondition::Random { seed, peak: float(p[1])?, target_l2: float(p[2])? })
            }
            other => {
                Err(Error::InvalidParameter(format!("unknown ic kind '{other}', expected taylor_green, abc or random")))
            }
        }
    }
}

/// `v = a (sin x cos y cos z, −cos x sin y cos z, 0)`, set mode by mode.
pub fn taylor_green(grid: &Arc<Grid>, amplitude: f64) -> Result<SpectralVectorField> {
    let mut v = SpectralVectorField::zeros(grid);
    let eighth = amplitude / 8.0;
    for s0 in [-1i64, 1] {
        for s1 in [-1i64, 1] {
            for s2 in [-1i64, 1] {
                let i = grid.index_of([s0, s1, s2]).expect("n >= 8");
                // sin(θ) = (e^{iθ} − e^{−iθ})/(2i), cos(θ) = (e^{iθ} + e^{−iθ})/2
                v.component_mut(0)[i] = Complex64::new(0.0, -(s0 as f64) * eighth);
                v.component_mut(1)[i] = Complex64::new(0.0, s1 as f64 * eighth);
            }
        }
    }
    Ok(v)
}

/// Beltrami flow `v = (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)`,
/// which satisfies `∇×v = v`.
pub fn abc_flow(grid: &Arc<Grid>, a: f64, b: f64, c: f64) -> Result<SpectralVectorField> {
    let mut v = SpectralVectorField::zeros(grid);
    let sine = |amp: f64| Complex64::new(0.0, -amp / 2.0);
    let cosine = |amp: f64| Complex64::new(amp / 2.0, 0.0);
    let unit = |axis: usize| {
        let mut k = [0i64; 3];
        k[axis] = 1;
        k
    };
    v.set_hermitian_pair(0, unit(2), sine(a))?;
    v.set_hermitian_pair(0, unit(1), cosine(c))?;
    v.set_hermitian_pair(1, unit(0), sine(b))?;
    v.set_hermitian_pair(1, unit(2), cosine(a))?;
    v.set_hermitian_pair(2, unit(1), sine(c))?;
    v.set_hermitian_pair(2, unit(0), cosine(b))?;
    Ok(v)
}

/// Gaussian random solenoidal field with shell spectrum `E(k) ∝ k⁴ e^{−2(k/k₀)²}`,
/// rescaled to the requested L² norm.
///
/// Each in-band mode draws three complex normals from [`GENERATOR_NAME`] in
/// flat index order; the draw is Hermitian-symmetrized, Leray-projected and
/// dealiased before rescaling.
pub fn random_solenoidal(grid: &Arc<Grid>, seed: u64, peak: f64, target_l2: f64) -> Result<SpectralVectorField> {
    InitialCondition::Random { seed, peak, target_l2 }.validate(grid)?;
    const ATTEMPTS: u64 = 8;
    for attempt in 0..ATTEMPTS {
        let v = draw(grid, seed.wrapping_add(attempt), peak);
        let norm = v.norm_l2();
        if norm > 0.0 && norm.is_finite() {
            return Ok(v.scale(target_l2 / norm));
        }
    }
    Err(Error::InvalidParameter(format!("random draw degenerate after {ATTEMPTS} attempts (seed {seed})")))
}

fn draw(grid: &Arc<Grid>, seed: u64, peak: f64) -> SpectralVectorField {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut raw = SpectralVectorField::zeros(grid);
    for i in 0..grid.len() {
        if !grid.in_band(i) || i == 0 {
            continue;
        }
        let k = grid.mode(i);
        let kmag = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
        // Per-mode amplitude √(E(k) / 4πk²) up to a constant.
        let amp = kmag * (-(kmag / peak).powi(2)).exp() / (4.0 * PI).sqrt();
        for c in 0..3 {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            raw.component_mut(c)[i] = Complex64::new(re, im) * amp;
        }
    }
    let mut sym = SpectralVectorField::zeros(grid);
    for c in 0..3 {
        let src = raw.component(c);
        let dst = sym.component_mut(c);
        for i in 0..grid.len() {
            dst[i] = (src[i] + src[grid.conjugate_index(i)].conj()) * 0.5;
        }
    }
    leray_project(&sym).dealias()
}

/// The scaled field `λ u(λx)` for an integer dilation `λ`, mode `k ↦ λk`.
/// Fails if a scaled mode does not fit on the grid.
pub fn dilate(u: &SpectralVectorField, factor: usize, amplitude: f64) -> Result<SpectralVectorField> {
    let grid = u.grid();
    let mut out = SpectralVectorField::zeros(grid);
    let f = factor as i64;
    for i in 0..grid.len() {
        let k = grid.mode(i);
        let values: [Complex64; 3] = std::array::from_fn(|c| u.component(c)[i]);
        if values.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            continue;
        }
        let target = grid
            .index_of([k[0] * f, k[1] * f, k[2] * f])
            .ok_or_else(|| Error::InvalidParameter(format!("mode {k:?} leaves the grid under dilation by {factor}")))?;
        for (c, z) in values.into_iter().enumerate() {
            out.component_mut(c)[target] = z * amplitude;
        }
    }
    Ok(out)
}

/// Inverse of [`dilate`]: keeps modes on the `λ`-lattice, mapping `λk ↦ k`.
/// Modes off the lattice are reported through the returned energy fraction.
pub fn contract(u: &SpectralVectorField, factor: usize, amplitude: f64) -> (SpectralVectorField, f64) {
    let grid = u.grid();
    let mut out = SpectralVectorField::zeros(grid);
    let f = factor as i64;
    let mut dropped = 0.0;
    for i in 0..grid.len() {
        let k = grid.mode(i);
        let e: f64 = (0..3).map(|c| u.component(c)[i].norm_sqr()).sum();
        if e == 0.0 {
            continue;
        }
        if k.iter().all(|kj| kj % f == 0) {
            let target = grid.index_of([k[0] / f, k[1] / f, k[2] / f]).expect("smaller mode fits");
            for c in 0..3 {
                out.component_mut(c)[target] = u.component(c)[i] * amplitude;
            }
        } else {
            dropped += e;
        }
    }
    let total = u.coefficient_energy();
    (out, if total == 0.0 { 0.0 } else { dropped / total })
}
