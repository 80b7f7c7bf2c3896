//! Analytic spectrum model of frequency-progressive denoising and the
//! empirical radial-PSD pipeline.
//!
//! The model side tracks how the expected power spectral density of a
//! linearly noised field evolves, `(1-t)^2 S(f) + t^2 C`, and derives the
//! per-frequency signal-dominance ratio, bounded recovery score, and
//! critical transition time. The empirical side measures radially averaged
//! power spectra of grayscale images (resize, 2-D Hanning window, centered
//! FFT, annulus average) and compares corpora band by band.

use std::fmt;

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::fft2::{fft2_forward, signed_freq};

/// Lower edge of the normalized frequency domain; `S(f)` is defined on
/// `(0, 0.5]` cycles/pixel.
pub const MAX_NORMALIZED_FREQ: f64 = 0.5;

/// A clean-data power spectrum `S(f)` over normalized frequency
/// `f` in `(0, 0.5]` cycles/pixel.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumShape {
    /// Constant power at every frequency.
    Flat { level: f64 },
    /// `S(f) = amplitude * f^(-exponent)`.
    PowerLaw { amplitude: f64, exponent: f64 },
    /// Piecewise-constant power over equal-width bands covering `(0, 0.5]`.
    Bands { levels: Vec<f64> },
}

impl SpectrumShape {
    /// Checks that `S(f) > 0` over the whole domain.
    pub fn validate_positive(&self) -> Result<()> {
        let ok = match self {
            Self::Flat { level } => *level > 0.0 && level.is_finite(),
            Self::PowerLaw {
                amplitude,
                exponent,
            } => *amplitude > 0.0 && amplitude.is_finite() && exponent.is_finite(),
            Self::Bands { levels } => {
                !levels.is_empty() && levels.iter().all(|&l| l > 0.0 && l.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("spectrum {self} is not positive")))
        }
    }

    /// True when `S` never increases with frequency.
    pub fn is_non_increasing(&self) -> bool {
        match self {
            Self::Flat { .. } => true,
            Self::PowerLaw { exponent, .. } => *exponent >= 0.0,
            Self::Bands { levels } => levels.windows(2).all(|w| w[1] <= w[0]),
        }
    }

    /// Evaluates `S(f)`; `f` must lie in `(0, 0.5]`.
    pub fn value(&self, f: f64) -> Result<f64> {
        if !(f > 0.0 && f <= MAX_NORMALIZED_FREQ) {
            return Err(Error::Domain(format!(
                "frequency {f} outside (0, {MAX_NORMALIZED_FREQ}]"
            )));
        }
        Ok(match self {
            Self::Flat { level } => *level,
            Self::PowerLaw {
                amplitude,
                exponent,
            } => amplitude * f.powf(-exponent),
            Self::Bands { levels } => levels[self.band_index(f).expect("f in domain")],
        })
    }

    /// Band index holding frequency `f`, for banded shapes.
    pub fn band_index(&self, f: f64) -> Option<usize> {
        match self {
            Self::Bands { levels } => {
                if !(f > 0.0 && f <= MAX_NORMALIZED_FREQ) {
                    return None;
                }
                let k = levels.len() as f64;
                let idx = (f / MAX_NORMALIZED_FREQ * k).ceil() as usize - 1;
                Some(idx.min(levels.len() - 1))
            }
            _ => None,
        }
    }

    /// `(f_lo, f_hi]` edges of band `b`, for banded shapes.
    pub fn band_edges(&self, b: usize) -> Option<(f64, f64)> {
        match self {
            Self::Bands { levels } if b < levels.len() => {
                let width = MAX_NORMALIZED_FREQ / levels.len() as f64;
                Some((b as f64 * width, (b + 1) as f64 * width))
            }
            _ => None,
        }
    }

    /// Parses `flat:LEVEL`, `powerlaw:AMP:EXP`, or `bands:L1,L2,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Config(msg);
        let mut parts = s.splitn(2, ':');
        let kind = parts.next().unwrap_or_default().to_ascii_lowercase();
        let rest = parts.next().unwrap_or_default();
        let shape = match kind.as_str() {
            "flat" => Self::Flat {
                level: rest
                    .parse()
                    .map_err(|e| bad(format!("flat spectrum level {rest:?}: {e}")))?,
            },
            "powerlaw" => {
                let (a, e) = rest
                    .split_once(':')
                    .ok_or_else(|| bad(format!("powerlaw needs AMP:EXP, got {rest:?}")))?;
                Self::PowerLaw {
                    amplitude: a
                        .parse()
                        .map_err(|e| bad(format!("powerlaw amplitude {a:?}: {e}")))?,
                    exponent: e
                        .parse()
                        .map_err(|err| bad(format!("powerlaw exponent {e:?}: {err}")))?,
                }
            }
            "bands" => Self::Bands {
                levels: rest
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .parse()
                            .map_err(|e| bad(format!("band level {p:?}: {e}")))
                    })
                    .collect::<Result<Vec<f64>>>()?,
            },
            other => return Err(bad(format!("unknown spectrum kind {other:?}"))),
        };
        shape.validate_positive()?;
        Ok(shape)
    }
}

impl fmt::Display for SpectrumShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Flat { level } => write!(f, "flat:{level}"),
            Self::PowerLaw {
                amplitude,
                exponent,
            } => write!(f, "powerlaw:{amplitude}:{exponent}"),
            Self::Bands { levels } => {
                write!(f, "bands:")?;
                for (i, l) in levels.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{l}")?;
                }
                Ok(())
            }
        }
    }
}

/// Clean-data spectrum plus the white noise floor `C`.
///
/// The shape must be positive and non-increasing in frequency; the noise
/// floor must be positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumModel {
    shape: SpectrumShape,
    noise_floor: f64,
}

impl SpectrumModel {
    pub fn new(shape: SpectrumShape, noise_floor: f64) -> Result<Self> {
        shape.validate_positive()?;
        if !shape.is_non_increasing() {
            return Err(Error::Domain(format!(
                "spectrum {shape} must be non-increasing in frequency"
            )));
        }
        if !(noise_floor > 0.0) || !noise_floor.is_finite() {
            return Err(Error::Domain(format!(
                "noise floor {noise_floor} must be > 0"
            )));
        }
        Ok(Self { shape, noise_floor })
    }

    pub fn shape(&self) -> &SpectrumShape {
        &self.shape
    }

    pub fn noise_floor(&self) -> f64 {
        self.noise_floor
    }

    /// Clean signal power `S(f)`.
    pub fn signal_power(&self, f: f64) -> Result<f64> {
        self.shape.value(f)
    }

    /// Expected PSD of the mixed field: `(1-t)^2 S(f) + t^2 C`.
    pub fn psd_at(&self, f: f64, t: f64) -> Result<f64> {
        let s = self.shape.value(f)?;
        check_time(t)?;
        Ok((1.0 - t).powi(2) * s + t * t * self.noise_floor)
    }

    /// Signal-dominance ratio `rho = (1-t)^2 S(f) / (t^2 C)`.
    ///
    /// At `t = 0` the signal fully dominates and the ratio is reported as
    /// the `f64::INFINITY` sentinel rather than an error.
    pub fn signal_ratio(&self, f: f64, t: f64) -> Result<f64> {
        let s = self.shape.value(f)?;
        check_time(t)?;
        if t == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok((1.0 - t).powi(2) * s / (t * t * self.noise_floor))
    }

    /// Bounded recovery score `P = rho / (1 + rho)` in `[0, 1]`.
    pub fn recovery_score(&self, f: f64, t: f64) -> Result<f64> {
        let rho = self.signal_ratio(f, t)?;
        Ok(if rho.is_infinite() {
            1.0
        } else {
            rho / (1.0 + rho)
        })
    }

    /// Critical transition time `t_c = sqrt(S) / (sqrt(S) + sqrt(C))`, the
    /// time at which signal and noise power are equal.
    pub fn critical_time(&self, f: f64) -> Result<f64> {
        let s = self.shape.value(f)?;
        let rs = s.sqrt();
        Ok(rs / (rs + self.noise_floor.sqrt()))
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("timestep t = {t} outside [0, 1]")));
    }
    Ok(())
}

/// A grayscale image with pixel values in `[0, 1]` and both sides >= 8.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl ImageGrid {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height < 8 || width < 8 {
            return Err(Error::InvalidDimension(format!(
                "image {height}x{width} must be at least 8x8"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::ShapeMismatch {
                expected: format!("{} pixels", height * width),
                got: format!("{}", pixels.len()),
            });
        }
        const SLACK: f64 = 1e-9;
        if pixels
            .iter()
            .any(|&p| !p.is_finite() || p < -SLACK || p > 1.0 + SLACK)
        {
            return Err(Error::Image("pixel values must lie in [0, 1]".into()));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

/// How the power column of a [`RadialSpectrum`] is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    LowFrequencyNormalized,
}

/// Radially averaged power spectrum. Bin `k` (1-based, DC excluded) holds
/// the mean periodogram power over cells whose rounded radius in
/// cycles/image equals `k`, together with the cell count of that annulus.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectrum {
    bin_centers: Vec<f64>,
    power: Vec<f64>,
    counts: Vec<usize>,
    normalization: Normalization,
    degenerate: bool,
}

impl RadialSpectrum {
    pub fn bin_centers(&self) -> &[f64] {
        &self.bin_centers
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Set when the source image was constant; the spectrum is all zeros.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Mean power over bins with center in the half-open range `(lo, hi]`.
    pub fn band_mean(&self, lo: f64, hi: f64) -> Result<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (c, p) in self.bin_centers.iter().zip(&self.power) {
            if *c > lo && *c <= hi {
                sum += p;
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::Domain(format!("no bins inside ({lo}, {hi}]")));
        }
        Ok(sum / n as f64)
    }

    /// Mean power over the inclusive integer-bin range `lo..=hi`.
    pub fn bin_range_mean(&self, lo: usize, hi: usize) -> Result<f64> {
        if lo == 0 || hi < lo {
            return Err(Error::Domain(format!("bad bin range {lo}..={hi}")));
        }
        self.band_mean(lo as f64 - 0.5, hi as f64 + 0.5)
    }
}

/// Separable symmetric Hanning window value at index `i` of `n`.
fn hann(i: usize, n: usize) -> f64 {
    0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos())
}

/// Bilinear resize with pixel-center alignment and edge clamping.
/// Resizing to the source size reproduces the source exactly.
pub fn bilinear_resize(image: &ImageGrid, out_h: usize, out_w: usize) -> Vec<f64> {
    let (in_h, in_w) = (image.height, image.width);
    let mut out = Vec::with_capacity(out_h * out_w);
    for oy in 0..out_h {
        let sy = (oy as f64 + 0.5) * in_h as f64 / out_h as f64 - 0.5;
        let sy = sy.clamp(0.0, (in_h - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(in_h - 1);
        let fy = sy - y0 as f64;
        for ox in 0..out_w {
            let sx = (ox as f64 + 0.5) * in_w as f64 / out_w as f64 - 0.5;
            let sx = sx.clamp(0.0, (in_w - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(in_w - 1);
            let fx = sx - x0 as f64;
            let top = image.get(y0, x0) * (1.0 - fx) + image.get(y0, x1) * fx;
            let bot = image.get(y1, x0) * (1.0 - fx) + image.get(y1, x1) * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }
    out
}

/// Radially averages an `n x n` periodogram into integer-radius annuli,
/// dropping the DC cell. Every non-DC cell lands in exactly one bin, so the
/// count-weighted bin sum reproduces the total non-DC energy.
fn radial_average(power_cells: &[f64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let half = n / 2;
    let r_max = ((half as f64).hypot(half as f64)).round() as usize;
    let mut sums = vec![0.0; r_max + 1];
    let mut counts = vec![0usize; r_max + 1];
    for i in 0..n {
        let fy = signed_freq(i, n);
        for j in 0..n {
            if i == 0 && j == 0 {
                continue;
            }
            let fx = signed_freq(j, n);
            let k = fy.hypot(fx).round() as usize;
            sums[k] += power_cells[i * n + j];
            counts[k] += 1;
        }
    }
    let mut centers = Vec::new();
    let mut power = Vec::new();
    let mut kept_counts = Vec::new();
    for k in 1..=r_max {
        if counts[k] > 0 {
            centers.push(k as f64);
            power.push(sums[k] / counts[k] as f64);
            kept_counts.push(counts[k]);
        }
    }
    (centers, power, kept_counts)
}

/// Computes the radially averaged PSD of a grayscale image.
///
/// Fixed pipeline: bilinear resize to `resize_to` squared, mean removal,
/// separable 2-D Hanning window, centered FFT, squared magnitude scaled by
/// `1/N^2`, average over integer-radius annuli, DC dropped. The mean is
/// removed before windowing because the window otherwise leaks the image
/// mean into the lowest annuli, swamping genuine low-frequency content.
/// A constant image yields an all-zero spectrum flagged degenerate instead
/// of an error.
pub fn radial_psd(image: &ImageGrid, resize_to: usize) -> Result<RadialSpectrum> {
    if resize_to < 8 {
        return Err(Error::InvalidDimension(format!(
            "resize target {resize_to} must be >= 8"
        )));
    }
    let n = resize_to;
    let resized = bilinear_resize(image, n, n);

    let lo = resized.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = resized.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        let (centers, power, counts) = radial_average(&vec![0.0; n * n], n);
        return Ok(RadialSpectrum {
            bin_centers: centers,
            power,
            counts,
            normalization: Normalization::Raw,
            degenerate: true,
        });
    }

    let mean = resized.iter().sum::<f64>() / resized.len() as f64;
    let mut data: Vec<Complex<f64>> = Vec::with_capacity(n * n);
    for i in 0..n {
        let wy = hann(i, n);
        for j in 0..n {
            data.push(Complex::new(
                (resized[i * n + j] - mean) * wy * hann(j, n),
                0.0,
            ));
        }
    }
    fft2_forward(&mut data, n, n);
    let scale = 1.0 / (n * n) as f64;
    let cells: Vec<f64> = data.iter().map(|c| c.norm_sqr() * scale).collect();
    let (centers, power, counts) = radial_average(&cells, n);
    Ok(RadialSpectrum {
        bin_centers: centers,
        power,
        counts,
        normalization: Normalization::Raw,
        degenerate: false,
    })
}

/// Radially averaged periodogram of a raw square field, without resizing
/// or windowing: `|FFT|^2 / (n*n)` per cell, so a unit-variance white field
/// averages to 1 in every bin. Used to measure synthetic fields against
/// prescribed spectra.
pub fn radial_periodogram(values: &[f64], n: usize) -> Result<RadialSpectrum> {
    if values.len() != n * n {
        return Err(Error::ShapeMismatch {
            expected: format!("{} values", n * n),
            got: format!("{}", values.len()),
        });
    }
    let mut data: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2_forward(&mut data, n, n);
    let scale = 1.0 / (n * n) as f64;
    let cells: Vec<f64> = data.iter().map(|c| c.norm_sqr() * scale).collect();
    let (centers, power, counts) = radial_average(&cells, n);
    Ok(RadialSpectrum {
        bin_centers: centers,
        power,
        counts,
        normalization: Normalization::Raw,
        degenerate: false,
    })
}

/// Divides the spectrum by its mean power over the inclusive baseline bin
/// range, re-tagging it as low-frequency normalized.
pub fn normalize_low_frequency(
    spectrum: &RadialSpectrum,
    baseline: (usize, usize),
) -> Result<RadialSpectrum> {
    let mean = spectrum.bin_range_mean(baseline.0, baseline.1)?;
    if !(mean > 0.0) {
        return Err(Error::Domain(format!(
            "baseline bins {}..={} have zero power",
            baseline.0, baseline.1
        )));
    }
    Ok(RadialSpectrum {
        bin_centers: spectrum.bin_centers.clone(),
        power: spectrum.power.iter().map(|p| p / mean).collect(),
        counts: spectrum.counts.clone(),
        normalization: Normalization::LowFrequencyNormalized,
        degenerate: spectrum.degenerate,
    })
}

/// Low/mid/high summary bands, `(lo, hi]` in cycles/image.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BandPartition {
    pub low: (f64, f64),
    pub mid: (f64, f64),
    pub high: (f64, f64),
}

impl Default for BandPartition {
    /// Defaults tuned for 512x512 spectra: (2, 16], (16, 96], (96, 240].
    fn default() -> Self {
        Self {
            low: (2.0, 16.0),
            mid: (16.0, 96.0),
            high: (96.0, 240.0),
        }
    }
}

/// Mean normalized power per summary band.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BandSummary {
    pub low: f64,
    pub mid: f64,
    pub high: f64,
}

impl BandPartition {
    pub fn summarize(&self, spectrum: &RadialSpectrum) -> Result<BandSummary> {
        Ok(BandSummary {
            low: spectrum.band_mean(self.low.0, self.low.1)?,
            mid: spectrum.band_mean(self.mid.0, self.mid.1)?,
            high: spectrum.band_mean(self.high.0, self.high.1)?,
        })
    }
}

/// Mean spectra of a corpus: the raw radial PSD and the per-image
/// low-frequency-normalized version, both averaged over the kept images.
#[derive(Debug, Clone)]
pub struct CorpusSpectrum {
    pub raw: RadialSpectrum,
    pub normalized: RadialSpectrum,
    pub images: usize,
    /// Images dropped because they were degenerate or had a zero baseline.
    pub skipped: usize,
}

/// Per-image spectra averaged over a corpus, in input order. Degenerate
/// images are skipped with a count rather than failing the run.
pub fn corpus_mean_spectrum(
    images: &[ImageGrid],
    resize_to: usize,
    baseline: (usize, usize),
) -> Result<CorpusSpectrum> {
    use rayon::prelude::*;
    if images.is_empty() {
        return Err(Error::Insufficient("corpus has no images".into()));
    }
    let spectra: Vec<Option<(RadialSpectrum, RadialSpectrum)>> = images
        .par_iter()
        .map(|img| {
            let raw = radial_psd(img, resize_to).ok()?;
            if raw.is_degenerate() {
                return None;
            }
            let normalized = normalize_low_frequency(&raw, baseline).ok()?;
            Some((raw, normalized))
        })
        .collect();
    let kept: Vec<&(RadialSpectrum, RadialSpectrum)> = spectra.iter().flatten().collect();
    let skipped = images.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::Insufficient(
            "corpus empty after skipping degenerate images".into(),
        ));
    }
    let bins = kept[0].0.len();
    let mut raw_power = vec![0.0; bins];
    let mut norm_power = vec![0.0; bins];
    for (raw, normalized) in &kept {
        for (acc, p) in raw_power.iter_mut().zip(raw.power()) {
            *acc += p;
        }
        for (acc, p) in norm_power.iter_mut().zip(normalized.power()) {
            *acc += p;
        }
    }
    for p in raw_power.iter_mut().chain(norm_power.iter_mut()) {
        *p /= kept.len() as f64;
    }
    let template = &kept[0].0;
    Ok(CorpusSpectrum {
        raw: RadialSpectrum {
            bin_centers: template.bin_centers.clone(),
            power: raw_power,
            counts: template.counts.clone(),
            normalization: Normalization::Raw,
            degenerate: false,
        },
        normalized: RadialSpectrum {
            bin_centers: template.bin_centers.clone(),
            power: norm_power,
            counts: template.counts.clone(),
            normalization: Normalization::LowFrequencyNormalized,
            degenerate: false,
        },
        images: kept.len(),
        skipped,
    })
}

/// Paired corpus comparison: mean normalized spectra plus band summaries.
#[derive(Debug, Clone)]
pub struct CorpusComparison {
    pub corpus_a: CorpusSpectrum,
    pub corpus_b: CorpusSpectrum,
    pub bands_a: BandSummary,
    pub bands_b: BandSummary,
}

pub fn corpus_compare(
    corpus_a: &[ImageGrid],
    corpus_b: &[ImageGrid],
    resize_to: usize,
    baseline: (usize, usize),
    bands: BandPartition,
) -> Result<CorpusComparison> {
    let a = corpus_mean_spectrum(corpus_a, resize_to, baseline)?;
    let b = corpus_mean_spectrum(corpus_b, resize_to, baseline)?;
    let bands_a = bands.summarize(&a.normalized)?;
    let bands_b = bands.summarize(&b.normalized)?;
    Ok(CorpusComparison {
        corpus_a: a,
        corpus_b: b,
        bands_a,
        bands_b,
    })
}
