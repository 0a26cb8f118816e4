//! Serial 3-D complex FFT built from 1-D line transforms.
//!
//! Axis 0 lines are contiguous and transformed in place. Lines along axes 1
//! and 2 are gathered into a small slab, transformed together and scattered
//! back, which keeps every access inside one plane. Lines that are identically
//! zero are skipped, which makes inverse transforms of band-limited data
//! markedly cheaper.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct FftEngine {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    // Reused across calls; a fresh cube-sized buffer per transform costs more
    // in page faults than the transposes it holds.
    static COLUMNS: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

fn is_zero(line: &[Complex64]) -> bool {
    line.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

/// Transform the length-`n` lines of `data` selected by `live`, batching
/// consecutive live lines into one call.
fn run_lines(
    fft: &dyn Fft<f64>,
    data: &mut [Complex64],
    n: usize,
    scratch: &mut [Complex64],
    live: impl Fn(usize, &[Complex64]) -> bool,
) {
    let lines = data.len() / n;
    let mut j = 0;
    while j < lines {
        if !live(j, &data[j * n..(j + 1) * n]) {
            j += 1;
            continue;
        }
        let start = j;
        while j < lines && live(j, &data[j * n..(j + 1) * n]) {
            j += 1;
        }
        fft.process_with_scratch(&mut data[start * n..j * n], scratch);
    }
}

impl FftEngine {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftEngine { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    #[cfg(test)]
    pub(crate) fn transform(&self, data: &[Complex64], direction: Direction, band: Option<&[bool]>) -> Vec<Complex64> {
        let mut buf = data.to_vec();
        self.transform_in_place(&mut buf, direction, band);
        buf
    }

    /// Unnormalized 3-D transform, overwriting `buf`. With `band` set, only
    /// output modes whose axis indices all satisfy `band[i]` are computed; the
    /// others are zero.
    pub(crate) fn transform_in_place(&self, buf: &mut [Complex64], direction: Direction, band: Option<&[bool]>) {
        let fft = match direction {
            Direction::Forward => self.forward.as_ref(),
            Direction::Inverse => self.inverse.as_ref(),
        };
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        let keep = |a: usize| band.is_none_or(|b| b[a]);
        let mut scratch = vec![zero; fft.get_inplace_scratch_len()];
        let mut slab = vec![zero; n * n];

        run_lines(fft, buf, n, &mut scratch, |_, line| !is_zero(line));

        // Axis 1: transpose each a2 plane so its lines are contiguous.
        for plane in buf.chunks_exact_mut(n * n) {
            transpose::transpose(plane, &mut slab, n, n);
            run_lines(fft, &mut slab, n, &mut scratch, |a0, line| keep(a0) && !is_zero(line));
            transpose::transpose(&slab, plane, n, n);
        }

        // Axis 2: view the cube as n rows of n² and transpose it whole.
        COLUMNS.with_borrow_mut(|cols| {
            cols.resize(n * n * n, zero);
            transpose::transpose(buf, cols, n * n, n);
            run_lines(fft, cols, n, &mut scratch, |j, line| keep(j % n) && keep(j / n) && !is_zero(line));
            transpose::transpose(cols, buf, n, n * n);
        });

        if let Some(band) = band {
            for (line, row) in buf.chunks_exact_mut(n).enumerate() {
                if band[line % n] && band[line / n] {
                    row.iter_mut().zip(band).filter(|(_, &b)| !b).for_each(|(z, _)| *z = zero);
                } else {
                    row.fill(zero);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_dft(data: &[Complex64], n: usize, sign: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n * n * n];
        for k2 in 0..n {
            for k1 in 0..n {
                for k0 in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for x2 in 0..n {
                        for x1 in 0..n {
                            for x0 in 0..n {
                                let phase = sign * 2.0 * PI * ((k0 * x0 + k1 * x1 + k2 * x2) % n) as f64 / n as f64;
                                acc += data[x0 + n * (x1 + n * x2)] * Complex64::from_polar(1.0, phase);
                            }
                        }
                    }
                    out[k0 + n * (k1 + n * k2)] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft_both_directions() {
        let n = 8;
        let data: Vec<Complex64> =
            (0..n * n * n).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let engine = FftEngine::new(n);
        for (dir, sign) in [(Direction::Forward, -1.0), (Direction::Inverse, 1.0)] {
            let fast = engine.transform(&data, dir, None);
            let slow = naive_dft(&data, n, sign);
            for (a, b) in fast.iter().zip(slow.iter()) {
                assert!((a - b).norm() < 1e-11, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn band_limited_output_matches_full_on_band() {
        let n = 8;
        let band: Vec<bool> = [0i64, 1, 2, 3, -4, -3, -2, -1].iter().map(|k| k.abs() <= 2).collect();
        let data: Vec<Complex64> = (0..n * n * n).map(|i| Complex64::new((i as f64 * 0.91).cos(), 0.0)).collect();
        let engine = FftEngine::new(n);
        let full = engine.transform(&data, Direction::Forward, None);
        let cut = engine.transform(&data, Direction::Forward, Some(&band));
        for i in 0..n * n * n {
            let inside = band[i % n] && band[(i / n) % n] && band[i / (n * n)];
            if inside {
                assert_eq!(full[i], cut[i]);
            } else {
                assert_eq!(cut[i], Complex64::new(0.0, 0.0));
            }
        }
    }
}
