use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::fft::Direction;
use crate::spectral::grid::{Grid, BOX_VOLUME};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative tolerance for the Hermitian-symmetry check on inverse transforms.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Fourier coefficients of a real field with `C` components.
///
/// Coefficients follow `û_k = n⁻³ Σ_x u(x) e^{-i k·x}`, so that
/// `u(x) = Σ_k û_k e^{i k·x}`.
#[derive(Clone, Debug)]
pub struct SpectralField<const C: usize> {
    grid: Arc<Grid>,
    comps: [Vec<Complex64>; C],
}

pub type SpectralScalarField = SpectralField<1>;
pub type SpectralVectorField = SpectralField<3>;

/// Real collocation samples of a field with `C` components, first axis fastest.
#[derive(Clone, Debug)]
pub struct PhysicalField<const C: usize> {
    grid: Arc<Grid>,
    comps: [Vec<f64>; C],
}

pub type PhysicalScalarField = PhysicalField<1>;
pub type PhysicalVectorField = PhysicalField<3>;

impl<const C: usize> SpectralField<C> {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        SpectralField { grid: Arc::clone(grid), comps: std::array::from_fn(|_| vec![ZERO; grid.len()]) }
    }

    pub fn from_components(grid: &Arc<Grid>, comps: [Vec<Complex64>; C]) -> Result<Self> {
        for c in comps.iter() {
            if c.len() != grid.len() {
                return Err(Error::Length { expected: grid.len(), actual: c.len() });
            }
        }
        Ok(SpectralField { grid: Arc::clone(grid), comps })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>; C] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<Complex64>; C] {
        self.comps
    }

    /// Coefficient of component `c` at wavenumber `k` (zero if not stored).
    pub fn coefficient(&self, c: usize, k: [i64; 3]) -> Complex64 {
        self.grid.index_of(k).map_or(ZERO, |i| self.comps[c][i])
    }

    /// Set the coefficient at `k` and its conjugate partner at `-k`.
    pub fn set_hermitian_pair(&mut self, c: usize, k: [i64; 3], value: Complex64) -> Result<()> {
        let i = self.grid.index_of(k).ok_or_else(|| {
            Error::InvalidParameter(format!("wavenumber {k:?} not representable on n={}", self.grid.n()))
        })?;
        let j = self.grid.conjugate_index(i);
        if i == j && value.im != 0.0 {
            return Err(Error::InvalidParameter(format!("self-conjugate mode {k:?} must carry a real coefficient")));
        }
        self.comps[c][i] = value;
        self.comps[c][j] = value.conj();
        Ok(())
    }

    /// 2/3-rule truncation: zero every mode with some `|k_j| > K`, and the mean.
    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        let mask = self.grid.band_mask();
        for comp in self.comps.iter_mut() {
            for (z, &keep) in comp.iter_mut().zip(mask) {
                if !keep {
                    *z = ZERO;
                }
            }
            comp[0] = ZERO;
        }
    }

    pub(crate) fn clear_mean(&mut self) {
        for comp in self.comps.iter_mut() {
            comp[0] = ZERO;
        }
    }

    /// Zero every mode with some `|k_j| > kmax` (and the mean).
    pub fn band_limited(&self, kmax: usize) -> Self {
        let mut out = self.clone();
        let grid = Arc::clone(&self.grid);
        for comp in out.comps.iter_mut() {
            for (flat, z) in comp.iter_mut().enumerate() {
                if grid.mode(flat).iter().any(|k| k.unsigned_abs() as usize > kmax) {
                    *z = ZERO;
                }
            }
            comp[0] = ZERO;
        }
        out
    }

    /// `⟨a, b⟩ = (2π)³ Σ_k Σ_c â_k · conj(b̂_k)`; the real part, which is the
    /// whole value for Hermitian fields.
    pub fn l2_inner(&self, other: &Self) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        let mut acc = 0.0;
        for (a, b) in self.comps.iter().zip(other.comps.iter()) {
            acc += a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum::<f64>();
        }
        Ok(BOX_VOLUME * acc)
    }

    /// Sum of squared coefficient moduli, i.e. the mean square `n⁻³ Σ_x |u|²`.
    pub fn coefficient_energy(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        (BOX_VOLUME * self.coefficient_energy()).sqrt()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).fold(0.0f64, |m, z| m.max(z.norm_sqr())).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flat_map(|c| c.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest `|û_k − conj(û_{−k})|` over modes and components.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for comp in self.comps.iter() {
            for (i, z) in comp.iter().enumerate() {
                let j = self.grid.conjugate_index(i);
                worst = worst.max((z - comp[j].conj()).norm_sqr());
            }
        }
        worst.sqrt()
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.comps.iter_mut().flat_map(|c| c.iter_mut()).for_each(|z| *z *= factor);
        out
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Self) -> Result<()> {
        self.grid.same_as(&other.grid)?;
        for (x, y) in self.comps.iter_mut().zip(other.comps.iter()) {
            x.iter_mut().zip(y.iter()).for_each(|(p, q)| *p += q * a);
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Apply a linear per-mode map from `C` coefficients to `D` coefficients.
    /// The closure sees the wavenumber as floats; zero modes stay zero
    /// without calling it.
    pub(crate) fn map_modes<const D: usize>(
        &self,
        f: impl Fn([f64; 3], [Complex64; C]) -> [Complex64; D],
    ) -> SpectralField<D> {
        let n = self.grid.n();
        let w: Vec<f64> = self.grid.wavenumbers().iter().map(|&k| k as f64).collect();
        let mut out = SpectralField::<D>::zeros(&self.grid);
        let is_zero = |z: &Complex64| z.re == 0.0 && z.im == 0.0;
        for (line, base) in (0..n * n).map(|l| (l, l * n)) {
            let src: [&[Complex64]; C] = std::array::from_fn(|c| &self.comps[c][base..base + n]);
            if src.iter().all(|s| s.iter().all(is_zero)) {
                continue;
            }
            let (k1, k2) = (w[line % n], w[line / n]);
            let mut rest = out.comps.iter_mut();
            let dst: [&mut [Complex64]; D] =
                std::array::from_fn(|_| &mut rest.next().expect("D outputs")[base..base + n]);
            for (i0, &k0) in w.iter().enumerate() {
                let input: [Complex64; C] = std::array::from_fn(|c| src[c][i0]);
                if input.iter().all(is_zero) {
                    continue;
                }
                for (d, v) in f([k0, k1, k2], input).into_iter().enumerate() {
                    dst[d][i0] = v;
                }
            }
        }
        out
    }

    /// Inverse transform to physical space. Rejects coefficients that are not
    /// Hermitian-symmetric, since those do not describe a real field.
    pub fn inverse_transform(&self) -> Result<PhysicalField<C>> {
        let scale = self.max_abs_coefficient();
        let defect = self.hermitian_defect();
        let tolerance = HERMITIAN_TOLERANCE * scale;
        if defect > tolerance {
            return Err(Error::NotHermitian { defect, tolerance });
        }
        Ok(self.to_physical())
    }

    /// Inverse transform without the symmetry check.
    pub(crate) fn to_physical(&self) -> PhysicalField<C> {
        let refs: Vec<&[Complex64]> = self.comps.iter().map(|c| c.as_slice()).collect();
        let mut values = inverse_real(&self.grid, &refs).into_iter();
        PhysicalField {
            grid: Arc::clone(&self.grid),
            comps: std::array::from_fn(|_| values.next().expect("one output per component")),
        }
    }
}

impl<const C: usize> PhysicalField<C> {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        PhysicalField { grid: Arc::clone(grid), comps: std::array::from_fn(|_| vec![0.0; grid.len()]) }
    }

    pub fn from_components(grid: &Arc<Grid>, comps: [Vec<f64>; C]) -> Result<Self> {
        for c in comps.iter() {
            if c.len() != grid.len() {
                return Err(Error::Length { expected: grid.len(), actual: c.len() });
            }
        }
        Ok(PhysicalField { grid: Arc::clone(grid), comps })
    }

    /// Sample `f` at every collocation point.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 3]) -> [f64; C]) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..grid.len() {
            let v = f(grid.point(i));
            for (c, x) in v.into_iter().enumerate() {
                out.comps[c][i] = x;
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>; C] {
        &self.comps
    }

    pub(crate) fn components_mut(&mut self) -> &mut [Vec<f64>; C] {
        &mut self.comps
    }

    pub fn into_components(self) -> [Vec<f64>; C] {
        self.comps
    }

    /// Euclidean magnitude of the value at flat index `i`.
    pub fn magnitude_at(&self, i: usize) -> f64 {
        self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()
    }

    /// `max_x |u(x)|`, Euclidean over components.
    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid.len()).fold(0.0, |m, i| m.max(self.magnitude_at(i)))
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.comps.iter().find_map(|c| c.iter().position(|x| !x.is_finite()))
    }

    /// Forward transform. Rejects non-finite samples.
    pub fn forward_transform(&self) -> Result<SpectralField<C>> {
        if let Some(index) = self.first_non_finite() {
            return Err(Error::NonFinite { what: "physical samples", index });
        }
        Ok(self.to_spectral(false))
    }

    /// Forward transform; with `truncate` only in-band modes are computed, which
    /// equals the full transform followed by [`SpectralField::dealias`] apart
    /// from the mean, which is left in place.
    pub(crate) fn to_spectral(&self, truncate: bool) -> SpectralField<C> {
        let refs: Vec<&[f64]> = self.comps.iter().map(|c| c.as_slice()).collect();
        let mut coeffs = forward_real(&self.grid, &refs, truncate).into_iter();
        SpectralField {
            grid: Arc::clone(&self.grid),
            comps: std::array::from_fn(|_| coeffs.next().expect("one output per component")),
        }
    }
}

/// Inverse-transform real fields, two per complex FFT.
pub(crate) fn inverse_real(grid: &Grid, fields: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        let mut z: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(x, y)| Complex64::new(x.re - y.im, x.im + y.re)).collect(),
            [a] => a.to_vec(),
            _ => unreachable!(),
        };
        grid.fft.transform_in_place(&mut z, Direction::Inverse, None);
        out.push(z.iter().map(|v| v.re).collect());
        if pair.len() == 2 {
            out.push(z.iter().map(|v| v.im).collect());
        }
    }
    out
}

/// Forward-transform real fields, two per complex FFT. The unpacking makes
/// the coefficients exactly Hermitian-symmetric.
pub(crate) fn forward_real(grid: &Grid, fields: &[&[f64]], truncate: bool) -> Vec<Vec<Complex64>> {
    let len = grid.len();
    let norm = 1.0 / len as f64;
    let band: Vec<bool> = (0..grid.n()).map(|i| grid.axis_in_band(i)).collect();
    let band = truncate.then_some(band.as_slice());
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        let mut z: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect(),
            [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            _ => unreachable!(),
        };
        grid.fft.transform_in_place(&mut z, Direction::Forward, band);
        let mut first = vec![ZERO; len];
        let mut second = vec![ZERO; len];
        let mut unpack = |i: usize| {
            let zk = z[i];
            let zm = z[grid.conjugate_index(i)].conj();
            first[i] = (zk + zm) * (0.5 * norm);
            let d = (zk - zm) * (0.5 * norm);
            // d / i
            second[i] = Complex64::new(d.im, -d.re);
        };
        if truncate {
            grid.for_each_mode_in_band(|i, _| unpack(i));
        } else {
            (0..len).for_each(&mut unpack);
        }
        out.push(first);
        if pair.len() == 2 {
            out.push(second);
        }
    }
    out
}
