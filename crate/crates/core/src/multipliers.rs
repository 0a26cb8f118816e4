//! Exact Fourier-multiplier operators.
//!
//! Every operator is diagonal in the Fourier basis. Symbols carrying `|k|⁻¹`
//! are defined as zero at `k = 0`. Inputs are not truncated here; model code
//! dealiases before calling in.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, SpectralScalarField, SpectralVectorField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sign of the Riesz symbol `σ i k_j/|k|`. The `+1` choice matches the
/// transform convention `e^{+2πi x·ξ}`; the opposite convention flips it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RieszSign {
    #[default]
    Plus,
    Minus,
}

impl RieszSign {
    pub fn value(self) -> f64 {
        match self {
            RieszSign::Plus => 1.0,
            RieszSign::Minus => -1.0,
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            RieszSign::Plus => 1,
            RieszSign::Minus => -1,
        }
    }

    pub fn from_i32(v: i32) -> Option<Self> {
        match v {
            1 => Some(RieszSign::Plus),
            -1 => Some(RieszSign::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for RieszSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.as_i32())
    }
}

impl FromStr for RieszSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "+1" | "+" => Ok(RieszSign::Plus),
            "-1" | "-" => Ok(RieszSign::Minus),
            other => Err(Error::InvalidParameter(format!("riesz sign must be +1 or -1, got '{other}'"))),
        }
    }
}

fn norm_sq(k: [f64; 3]) -> f64 {
    k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
}

/// `i k × û` for real `k`.
fn ik_cross(k: [f64; 3], u: [Complex64; 3]) -> [Complex64; 3] {
    let w = [u[2] * k[1] - u[1] * k[2], u[0] * k[2] - u[2] * k[0], u[1] * k[0] - u[0] * k[1]];
    w.map(|z| I * z)
}

/// `Λ^a = (−Δ)^{a/2}`: `û_k ↦ |k|^a û_k`, zero at `k = 0`.
pub fn lambda_pow<const C: usize>(s: &SpectralField<C>, a: f64) -> SpectralField<C> {
    s.map_modes(|k, u| {
        let kk = norm_sq(k);
        if kk == 0.0 {
            return [ZERO; C];
        }
        let w = if a == 1.0 { kk.sqrt() } else { kk.powf(0.5 * a) };
        u.map(|z| z * w)
    })
}

/// Riesz transform `R_j`: `û_k ↦ σ i (k_j/|k|) û_k`, zero at `k = 0`.
pub fn riesz<const C: usize>(s: &SpectralField<C>, axis: usize, sign: RieszSign) -> SpectralField<C> {
    assert!(axis < 3, "axis out of range");
    let sigma = sign.value();
    s.map_modes(|k, u| {
        let kk = norm_sq(k);
        if kk == 0.0 {
            return [ZERO; C];
        }
        let m = I * (sigma * k[axis] / kk.sqrt());
        u.map(|z| z * m)
    })
}

/// `∂_j`: `û_k ↦ i k_j û_k`.
pub fn partial<const C: usize>(s: &SpectralField<C>, axis: usize) -> SpectralField<C> {
    assert!(axis < 3, "axis out of range");
    s.map_modes(|k, u| u.map(|z| I * (z * k[axis])))
}

pub fn gradient(s: &SpectralScalarField) -> SpectralVectorField {
    s.map_modes(|k, [u]| k.map(|kj| I * (u * kj)))
}

pub fn divergence(s: &SpectralVectorField) -> SpectralScalarField {
    s.map_modes(|k, u| [I * (u[0] * k[0] + u[1] * k[1] + u[2] * k[2])])
}

/// `∇×`: `û_k ↦ i k × û_k`.
pub fn curl_vec(s: &SpectralVectorField) -> SpectralVectorField {
    s.map_modes(ik_cross)
}

/// `R×`: `û_k ↦ σ (i k/|k|) × û_k`, zero at `k = 0`.
pub fn riesz_cross(s: &SpectralVectorField, sign: RieszSign) -> SpectralVectorField {
    let sigma = sign.value();
    s.map_modes(|k, u| {
        let kk = norm_sq(k);
        if kk == 0.0 {
            return [ZERO; 3];
        }
        let scale = sigma / kk.sqrt();
        ik_cross(k, u).map(|z| z * scale)
    })
}

/// Leray projector `I − k kᵀ/|k|²`, zero at `k = 0`.
pub fn leray_project(s: &SpectralVectorField) -> SpectralVectorField {
    s.map_modes(|k, u| {
        let kk = norm_sq(k);
        if kk == 0.0 {
            return [ZERO; 3];
        }
        let kdotu = (u[0] * k[0] + u[1] * k[1] + u[2] * k[2]) / kk;
        [u[0] - kdotu * k[0], u[1] - kdotu * k[1], u[2] - kdotu * k[2]]
    })
}

/// Heat semigroup `e^{τΔ}`: `û_k ↦ e^{−|k|²τ} û_k`.
pub fn heat_factor<const C: usize>(s: &SpectralField<C>, tau: f64) -> Result<SpectralField<C>> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::NegativeTime(tau));
    }
    Ok(s.map_modes(|k, u| {
        let f = (-norm_sq(k) * tau).exp();
        u.map(|z| z * f)
    }))
}

/// Largest `|k·û_k|` over all modes.
pub fn divergence_defect(s: &SpectralVectorField) -> f64 {
    divergence_extremes(s).0
}

/// `(max_k |k·û_k|, max_k |k| |û_k|)` in one pass.
fn divergence_extremes(s: &SpectralVectorField) -> (f64, f64) {
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    let n = s.grid().n();
    let w: Vec<f64> = s.grid().wavenumbers().iter().map(|&k| k as f64).collect();
    let zero = |z: &Complex64| z.re == 0.0 && z.im == 0.0;
    let lines = s.component(0).chunks_exact(n).zip(s.component(1).chunks_exact(n)).zip(s.component(2).chunks_exact(n));
    for (line, ((u0, u1), u2)) in lines.enumerate() {
        if u0.iter().all(zero) && u1.iter().all(zero) && u2.iter().all(zero) {
            continue;
        }
        let (k1, k2) = (w[line % n], w[line / n]);
        for (i, &k0) in w.iter().enumerate() {
            let d = u0[i] * k0 + u1[i] * k1 + u2[i] * k2;
            worst = worst.max(d.norm_sqr());
            let kk = k0 * k0 + k1 * k1 + k2 * k2;
            scale = scale.max(kk * (u0[i].norm_sqr() + u1[i].norm_sqr() + u2[i].norm_sqr()));
        }
    }
    (worst.sqrt(), scale.sqrt())
}

/// [`divergence_defect`] relative to `max_k |k| |û_k|`; zero for the zero field.
pub fn relative_divergence(s: &SpectralVectorField) -> f64 {
    let (defect, scale) = divergence_extremes(s);
    if scale == 0.0 {
        0.0
    } else {
        defect / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, PhysicalScalarField, PhysicalVectorField};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed ^ 0x9E37_79B9_7F4A_7C15;
        move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        }
    }

    /// Random real, zero-mean, dealiased field (not solenoidal).
    fn random_field<const C: usize>(grid: &Arc<Grid>, seed: u64) -> SpectralField<C> {
        let mut next = lcg(seed);
        let mut f = SpectralField::<C>::zeros(grid);
        for c in 0..C {
            for i in 0..grid.len() {
                let j = grid.conjugate_index(i);
                if j <= i || !grid.in_band(i) {
                    continue;
                }
                let z = Complex64::new(next(), next());
                f.component_mut(c)[i] = z;
                f.component_mut(c)[j] = z.conj();
            }
        }
        f.dealias()
    }

    fn rel_err<const C: usize>(a: &SpectralField<C>, b: &SpectralField<C>) -> f64 {
        let d = a.sub(b).unwrap().coefficient_energy().sqrt();
        let s = a.coefficient_energy().sqrt().max(b.coefficient_energy().sqrt());
        if s == 0.0 {
            d
        } else {
            d / s
        }
    }

    fn sine_x(grid: &Arc<Grid>, freq: i64) -> SpectralScalarField {
        let mut s = SpectralScalarField::zeros(grid);
        s.set_hermitian_pair(0, [freq, 0, 0], Complex64::new(0.0, -0.5)).unwrap();
        s
    }

    #[test]
    fn lambda_on_single_shell() {
        let g = Grid::new(16).unwrap();
        let s = sine_x(&g, 1);
        for a in [-1.0, 0.5, 1.0, 3.0] {
            assert!(rel_err(&lambda_pow(&s, a), &s) < 1e-15);
        }
        let s2 = sine_x(&g, 2);
        assert!(rel_err(&lambda_pow(&s2, 1.0), &s2.scale(2.0)) < 1e-15);
    }

    #[test]
    fn riesz_of_sine_is_cosine() {
        let g = Grid::new(16).unwrap();
        let r = riesz(&sine_x(&g, 1), 0, RieszSign::Plus);
        let cos = PhysicalScalarField::from_fn(&g, |x| [x[0].cos()]).forward_transform().unwrap().dealias();
        assert!(rel_err(&r, &cos) < 1e-15);
        let r = riesz(&sine_x(&g, 1), 0, RieszSign::Minus);
        assert!(rel_err(&r, &cos.scale(-1.0)) < 1e-15);
    }

    #[test]
    fn riesz_of_constant_is_zero() {
        let g = Grid::new(8).unwrap();
        let c = PhysicalScalarField::from_fn(&g, |_| [2.0]).forward_transform().unwrap();
        assert_eq!(riesz(&c, 1, RieszSign::Plus).max_abs_coefficient(), 0.0);
    }

    #[test]
    fn riesz_cross_single_mode() {
        let g = Grid::new(8).unwrap();
        let mut v = SpectralVectorField::zeros(&g);
        let a = Complex64::new(0.3, -0.2);
        let b = Complex64::new(-0.1, 0.4);
        v.set_hermitian_pair(0, [0, 0, 1], a).unwrap();
        v.set_hermitian_pair(1, [0, 0, 1], b).unwrap();
        for sign in [RieszSign::Plus, RieszSign::Minus] {
            let r = riesz_cross(&v, sign);
            // σ (i e₃) × (a, b, 0) = σ i (−b, a, 0)
            let s = sign.value();
            assert_eq!(r.coefficient(0, [0, 0, 1]), I * (-b) * s);
            assert_eq!(r.coefficient(1, [0, 0, 1]), I * a * s);
            assert_eq!(r.coefficient(2, [0, 0, 1]), ZERO);
        }
    }

    #[test]
    fn curl_of_taylor_green_matches_hand_derivative() {
        let g = Grid::new(16).unwrap();
        let v = PhysicalVectorField::from_fn(&g, |x| {
            [x[0].sin() * x[1].cos() * x[2].cos(), -x[0].cos() * x[1].sin() * x[2].cos(), 0.0]
        })
        .forward_transform()
        .unwrap();
        let w = curl_vec(&v).inverse_transform().unwrap();
        for i in 0..g.len() {
            let [x, y, z] = g.point(i);
            let expected =
                [-x.cos() * y.sin() * z.sin(), -x.sin() * y.cos() * z.sin(), 2.0 * x.sin() * y.sin() * z.cos()];
            for c in 0..3 {
                assert!((w.component(c)[i] - expected[c]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn curl_of_abc_is_abc() {
        let g = Grid::new(16).unwrap();
        let v = PhysicalVectorField::from_fn(&g, |x| {
            [x[2].sin() + x[1].cos(), x[0].sin() + x[2].cos(), x[1].sin() + x[0].cos()]
        })
        .forward_transform()
        .unwrap();
        assert!(rel_err(&curl_vec(&v), &v) < 1e-14);
    }

    #[test]
    fn leray_annihilates_gradients_and_fixes_taylor_green() {
        let g = Grid::new(16).unwrap();
        let phi: SpectralScalarField = random_field(&g, 4);
        let p = leray_project(&gradient(&phi));
        assert!(p.coefficient_energy().sqrt() <= 1e-15 * gradient(&phi).coefficient_energy().sqrt());
        let tg = PhysicalVectorField::from_fn(&g, |x| {
            [x[0].sin() * x[1].cos() * x[2].cos(), -x[0].cos() * x[1].sin() * x[2].cos(), 0.0]
        })
        .forward_transform()
        .unwrap();
        assert!(rel_err(&leray_project(&tg), &tg) < 1e-15);
    }

    #[test]
    fn heat_factor_cases() {
        let g = Grid::new(16).unwrap();
        let s = sine_x(&g, 1);
        assert_eq!(heat_factor(&s, 0.0).unwrap().component(0), s.component(0));
        let t = 0.7;
        assert!(rel_err(&heat_factor(&s, t).unwrap(), &s.scale((-t).exp())) < 1e-15);
        assert!(matches!(heat_factor(&s, -1e-3), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn sign_parsing() {
        assert_eq!("+1".parse::<RieszSign>().unwrap(), RieszSign::Plus);
        assert_eq!("-1".parse::<RieszSign>().unwrap(), RieszSign::Minus);
        assert!("2".parse::<RieszSign>().is_err());
        assert_eq!(RieszSign::Minus.to_string(), "-1");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn riesz_squares_sum_to_minus_identity(seed in any::<u64>()) {
            let g = Grid::new(16).unwrap();
            let u: SpectralScalarField = random_field(&g, seed);
            let mut acc = SpectralScalarField::zeros(&g);
            for j in 0..3 {
                let r = riesz(&riesz(&u, j, RieszSign::Plus), j, RieszSign::Plus);
                acc.axpy(1.0, &r).unwrap();
            }
            prop_assert!(rel_err(&acc, &u.scale(-1.0)) <= 1e-13);
        }

        #[test]
        fn riesz_cross_twice_is_leray(seed in any::<u64>(), minus in any::<bool>()) {
            let sign = if minus { RieszSign::Minus } else { RieszSign::Plus };
            let g = Grid::new(16).unwrap();
            let u: SpectralVectorField = random_field(&g, seed);
            let twice = riesz_cross(&riesz_cross(&u, sign), sign);
            prop_assert!(rel_err(&twice, &leray_project(&u)) <= 1e-13);
        }

        #[test]
        fn lambda_riesz_cross_is_signed_curl(seed in any::<u64>(), minus in any::<bool>()) {
            let sign = if minus { RieszSign::Minus } else { RieszSign::Plus };
            let g = Grid::new(16).unwrap();
            let u: SpectralVectorField = random_field(&g, seed);
            let lhs = lambda_pow(&riesz_cross(&u, sign), 1.0);
            let rhs = curl_vec(&u).scale(sign.value());
            prop_assert!(rel_err(&lhs, &rhs) <= 1e-13);
        }

        #[test]
        fn divergence_free_outputs(seed in any::<u64>()) {
            let g = Grid::new(16).unwrap();
            let u: SpectralVectorField = random_field(&g, seed);
            for out in [riesz_cross(&u, RieszSign::Plus), curl_vec(&u), leray_project(&u)] {
                let d = divergence(&out).coefficient_energy().sqrt();
                let scale = lambda_pow(&out, 1.0).coefficient_energy().sqrt();
                prop_assert!(d <= 1e-14 * scale);
            }
        }

        #[test]
        fn lambda_composition(seed in any::<u64>()) {
            let g = Grid::new(16).unwrap();
            let u: SpectralScalarField = random_field(&g, seed);
            let half = lambda_pow(&lambda_pow(&u, 0.5), 0.5);
            prop_assert!(rel_err(&half, &lambda_pow(&u, 1.0)) <= 1e-13);
            let back = lambda_pow(&lambda_pow(&u, -1.0), 1.0);
            prop_assert!(rel_err(&back, &u) <= 1e-13);
        }

        #[test]
        fn heat_semigroup_and_contraction(seed in any::<u64>()) {
            let g = Grid::new(16).unwrap();
            let u: SpectralVectorField = random_field(&g, seed);
            let two = heat_factor(&heat_factor(&u, 0.3).unwrap(), 0.7).unwrap();
            let one = heat_factor(&u, 1.0).unwrap();
            prop_assert!(rel_err(&two, &one) <= 1e-14);
            prop_assert!(one.norm_l2() <= u.norm_l2());
        }

        #[test]
        fn leray_idempotent(seed in any::<u64>()) {
            let g = Grid::new(16).unwrap();
            let u: SpectralVectorField = random_field(&g, seed);
            let p = leray_project(&u);
            prop_assert!(rel_err(&leray_project(&p), &p) <= 1e-15);
        }

        #[test]
        fn multipliers_commute(seed in any::<u64>()) {
            let g = Grid::new(16).unwrap();
            let u: SpectralVectorField = random_field(&g, seed);
            let s = RieszSign::Plus;
            let a = leray_project(&lambda_pow(&riesz_cross(&heat_factor(&u, 0.1).unwrap(), s), 0.5));
            let b = heat_factor(&riesz_cross(&lambda_pow(&leray_project(&u), 0.5), s), 0.1).unwrap();
            prop_assert!(rel_err(&a, &b) <= 1e-13);
            let c = curl_vec(&riesz(&u, 2, s));
            let d = riesz(&curl_vec(&u), 2, s);
            prop_assert!(rel_err(&c, &d) <= 1e-13);
        }
    }
}
