//! Minimal 2-D FFT helpers shared by the spectral pipeline and the
//! denoising simulator.

use rustfft::num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

fn transpose(data: &[Complex<f64>], height: usize, width: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::default(); data.len()];
    for r in 0..height {
        for c in 0..width {
            out[c * height + r] = data[r * width + c];
        }
    }
    out
}

fn fft2_with_direction(
    data: &mut Vec<Complex<f64>>,
    height: usize,
    width: usize,
    direction: FftDirection,
) {
    debug_assert_eq!(data.len(), height * width);
    let mut planner = FftPlanner::new();

    let fft_w = planner.plan_fft(width, direction);
    let mut scratch = vec![Complex::default(); fft_w.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(width) {
        fft_w.process_with_scratch(row, &mut scratch);
    }

    let mut tr = transpose(data, height, width);
    let fft_h = planner.plan_fft(height, direction);
    scratch.resize(fft_h.get_inplace_scratch_len(), Complex::default());
    for col in tr.chunks_exact_mut(height) {
        fft_h.process_with_scratch(col, &mut scratch);
    }

    *data = transpose(&tr, width, height);
}

/// Unnormalized forward 2-D FFT of a row-major buffer.
pub(crate) fn fft2_forward(data: &mut Vec<Complex<f64>>, height: usize, width: usize) {
    fft2_with_direction(data, height, width, FftDirection::Forward);
}

/// Unnormalized inverse 2-D FFT; divide by `height * width` to invert a
/// forward transform.
pub(crate) fn fft2_inverse(data: &mut Vec<Complex<f64>>, height: usize, width: usize) {
    fft2_with_direction(data, height, width, FftDirection::Inverse);
}

/// Signed frequency index in cycles per image for FFT bin `i` of `n`:
/// `0..=n/2` maps to itself, the upper half wraps to negative.
pub(crate) fn signed_freq(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Radial frequency of cell `(i, j)` of an `n x n` spectrum, in normalized
/// cycles/pixel (DC is 0, the axis Nyquist is 0.5, corners reach ~0.707).
pub(crate) fn cell_frequency(i: usize, j: usize, n: usize) -> f64 {
    let fy = signed_freq(i, n) / n as f64;
    let fx = signed_freq(j, n) / n as f64;
    fy.hypot(fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_round_trips() {
        let (h, w) = (8, 4);
        let orig: Vec<Complex<f64>> = (0..h * w)
            .map(|i| Complex::new(i as f64 * 0.37 - 3.0, 0.0))
            .collect();
        let mut data = orig.clone();
        fft2_forward(&mut data, h, w);
        fft2_inverse(&mut data, h, w);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a.re / (h * w) as f64 - b.re).abs() < 1e-12);
            assert!((a.im / (h * w) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let n = 8;
        let mut data = vec![Complex::default(); n * n];
        data[0] = Complex::new(1.0, 0.0);
        fft2_forward(&mut data, n, n);
        for c in &data {
            assert!((c.re - 1.0).abs() < 1e-12 && c.im.abs() < 1e-12);
        }
    }

    #[test]
    fn signed_frequency_wraps() {
        assert_eq!(signed_freq(0, 8), 0.0);
        assert_eq!(signed_freq(4, 8), 4.0);
        assert_eq!(signed_freq(5, 8), -3.0);
        assert_eq!(signed_freq(7, 8), -1.0);
    }
}
