use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::fft::FftEngine;

/// Volume of the periodic box [0, 2π)³.
pub const BOX_VOLUME: f64 = 8.0 * PI * PI * PI;

/// Cubic collocation grid on the torus [0, 2π)³.
///
/// Flat storage order is `i0 + n * (i1 + n * i2)`, first axis fastest, for
/// both physical samples and Fourier coefficients. Index `i` along an axis
/// carries the wavenumber `i` for `i < n/2` and `i - n` otherwise.
pub struct Grid {
    n: usize,
    cutoff: usize,
    wavenumbers: Vec<i64>,
    in_band: Vec<bool>,
    /// Flat index of `-k` for every flat index.
    conjugate: Vec<u32>,
    /// Band membership for every flat index.
    band_mask: Vec<bool>,
    pub(crate) fft: FftEngine,
}

impl Grid {
    pub fn new(n: usize) -> Result<Arc<Grid>> {
        if n < 8 || n % 2 != 0 || n > 1024 {
            return Err(Error::InvalidGrid(format!("n must be even and in [8, 1024], got {n}")));
        }
        let cutoff = n / 3;
        let half = n as i64 / 2;
        let wavenumbers: Vec<i64> = (0..n as i64).map(|i| if i < half { i } else { i - n as i64 }).collect();
        let in_band: Vec<bool> = wavenumbers.iter().map(|k| k.unsigned_abs() as usize <= cutoff).collect();
        let len = n * n * n;
        let mut conjugate = Vec::with_capacity(len);
        let mut band_mask = Vec::with_capacity(len);
        let neg = |i: usize| (n - i) % n;
        for i2 in 0..n {
            for i1 in 0..n {
                for i0 in 0..n {
                    conjugate.push((neg(i0) + n * (neg(i1) + n * neg(i2))) as u32);
                    band_mask.push(in_band[i0] && in_band[i1] && in_band[i2]);
                }
            }
        }
        Ok(Arc::new(Grid { n, cutoff, wavenumbers, in_band, conjugate, band_mask, fft: FftEngine::new(n) }))
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dealias cutoff `K = floor(n/3)`: modes with any `|k_j| > K` are discarded.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of points (or modes) per component, `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `2π/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn flat_index(&self, i: [usize; 3]) -> usize {
        i[0] + self.n * (i[1] + self.n * i[2])
    }

    pub fn axis_indices(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        [flat % n, (flat / n) % n, flat / (n * n)]
    }

    /// Integer wavenumber of axis index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        self.wavenumbers[i]
    }

    pub fn wavenumbers(&self) -> &[i64] {
        &self.wavenumbers
    }

    /// Wavenumber triple stored at a flat index.
    pub fn mode(&self, flat: usize) -> [i64; 3] {
        let [a, b, c] = self.axis_indices(flat);
        [self.wavenumbers[a], self.wavenumbers[b], self.wavenumbers[c]]
    }

    /// Flat index storing wavenumber `k`, if representable on this grid.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let mut idx = [0usize; 3];
        for (slot, &kj) in idx.iter_mut().zip(k.iter()) {
            if kj < -n / 2 || kj >= n / 2 {
                return None;
            }
            *slot = kj.rem_euclid(n) as usize;
        }
        Some(self.flat_index(idx))
    }

    /// Flat index of the mode `-k` modulo `n` (the Hermitian partner).
    pub fn conjugate_index(&self, flat: usize) -> usize {
        self.conjugate[flat] as usize
    }

    /// Whether axis index `i` survives the 2/3-rule truncation.
    pub fn axis_in_band(&self, i: usize) -> bool {
        self.in_band[i]
    }

    pub fn in_band(&self, flat: usize) -> bool {
        self.band_mask[flat]
    }

    /// Band membership of every flat index.
    pub(crate) fn band_mask(&self) -> &[bool] {
        &self.band_mask
    }

    /// Collocation point `2π (i0, i1, i2) / n`.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let h = self.spacing();
        let [a, b, c] = self.axis_indices(flat);
        [a as f64 * h, b as f64 * h, c as f64 * h]
    }

    pub(crate) fn same_as(&self, other: &Grid) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::GridMismatch { left: self.n, right: other.n })
        }
    }

    /// Visit in-band modes in flat order with `|k|²`.
    pub(crate) fn for_each_mode_in_band(&self, mut f: impl FnMut(usize, f64)) {
        let n = self.n;
        let w = &self.wavenumbers;
        for i2 in (0..n).filter(|&i| self.in_band[i]) {
            for i1 in (0..n).filter(|&i| self.in_band[i]) {
                let base = n * (i1 + n * i2);
                let k12 = (w[i1] * w[i1] + w[i2] * w[i2]) as f64;
                for i0 in (0..n).filter(|&i| self.in_band[i]) {
                    f(base + i0, k12 + (w[i0] * w[i0]) as f64);
                }
            }
        }
    }

    /// Visit every stored mode in flat order with its wavenumber as floats.
    pub(crate) fn for_each_mode(&self, mut f: impl FnMut(usize, [f64; 3])) {
        let n = self.n;
        let w = &self.wavenumbers;
        let mut idx = 0;
        for i2 in 0..n {
            let k2 = w[i2] as f64;
            for i1 in 0..n {
                let k1 = w[i1] as f64;
                for &k0 in w.iter() {
                    f(idx, [k0 as f64, k1, k2]);
                    idx += 1;
                }
            }
        }
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).field("cutoff", &self.cutoff).finish()
    }
}
