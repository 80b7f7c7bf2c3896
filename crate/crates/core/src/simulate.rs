//! Flow-matching denoising simulator with a spectral-oracle denoiser.
//!
//! The forward process mixes data and white noise linearly,
//! `x_t = (1-t) x_0 + t eps`, and the sampler integrates the matching
//! velocity field with Euler steps using x0-prediction:
//! `x_{n+1} = (t_{n+1} x_n - (t_{n+1} - t_n) x0_hat) / t_n`. At every step
//! the active method rescales the RoPE frequency table before the denoiser
//! is invoked, which is what the schedule trace records.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::extrapolation::{rescale_table, schedule_trace, Method, PromotionContext, TraceRow};
use crate::fft2::{cell_frequency, fft2_forward, fft2_inverse};
use crate::grid::Extent;
use crate::rope::{apply_rotary, FrequencyTable, GridPosition, RotaryVector};
use crate::spectral::{SpectrumModel, SpectrumShape, MAX_NORMALIZED_FREQ};

/// Descending denoising timesteps with `t_0 = 1` and `t_N = 0`.
///
/// A grid with `N + 1` values drives `N` sampler steps; the terminal zero
/// is only ever used as an integration endpoint, never evaluated by a
/// schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestepGrid {
    values: Vec<f64>,
}

impl TimestepGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Insufficient(
                "timestep grid needs at least one step".into(),
            ));
        }
        if values[0] != 1.0 || *values.last().unwrap() != 0.0 {
            return Err(Error::Domain(
                "timestep grid must start at exactly 1 and end at exactly 0".into(),
            ));
        }
        for pair in values.windows(2) {
            if pair[1] >= pair[0] {
                return Err(Error::Domain(format!(
                    "timesteps must be strictly descending, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Self { values })
    }

    /// `steps` uniform intervals on `[1, 0]`.
    pub fn uniform(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Insufficient("step count must be >= 1".into()));
        }
        Self::new(
            (0..=steps)
                .map(|i| (steps - i) as f64 / steps as f64)
                .collect(),
        )
    }

    /// Number of sampler steps (`values.len() - 1`).
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The evaluated (pre-terminal) timesteps `t_0 .. t_{N-1}`.
    pub fn pre_terminal(&self) -> &[f64] {
        &self.values[..self.values.len() - 1]
    }
}

/// A real-valued 2-D field with the seed and spectrum tag it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentField {
    extent: Extent,
    values: Vec<f64>,
    seed: u64,
    spectrum_tag: Option<String>,
}

impl LatentField {
    pub fn new(
        extent: Extent,
        values: Vec<f64>,
        seed: u64,
        spectrum_tag: Option<String>,
    ) -> Result<Self> {
        if values.len() != extent.tokens() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values for {extent}", extent.tokens()),
                got: format!("{}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field contains non-finite values".into()));
        }
        Ok(Self {
            extent,
            values,
            seed,
            spectrum_tag,
        })
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spectrum_tag(&self) -> Option<&str> {
        self.spectrum_tag.as_deref()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Linear forward mixture `(1-t) x0 + t eps`.
pub fn forward_mixture(x0: &LatentField, eps: &LatentField, t: f64) -> Result<LatentField> {
    if x0.extent() != eps.extent() {
        return Err(Error::ShapeMismatch {
            expected: x0.extent().to_string(),
            got: eps.extent().to_string(),
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("timestep t = {t} outside [0, 1]")));
    }
    let values = x0
        .values()
        .iter()
        .zip(eps.values())
        .map(|(a, b)| (1.0 - t) * a + t * b)
        .collect();
    LatentField::new(x0.extent(), values, x0.seed(), x0.spectrum_tag.clone())
}

/// I.i.d. Gaussian field with standard deviation `sigma`, deterministic per
/// seed.
pub fn gaussian_field(extent: Extent, sigma: f64, seed: u64) -> LatentField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..extent.tokens())
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    LatentField {
        extent,
        values,
        seed,
        spectrum_tag: None,
    }
}

/// Zero-mean Gaussian field whose expected radial periodogram matches the
/// prescribed spectrum: white noise is filtered in the Fourier domain by
/// `sqrt(S(f))`, with frequencies beyond the axis Nyquist clamped to
/// `S(0.5)` and the DC mode zeroed.
pub fn synth_field(shape: &SpectrumShape, extent: Extent, seed: u64) -> Result<LatentField> {
    shape.validate_positive()?;
    if !extent.is_square() {
        return Err(Error::InvalidDimension(format!(
            "prescribed-spectrum synthesis needs a square extent, got {extent}"
        )));
    }
    let n = extent.height;
    let white = gaussian_field(extent, 1.0, seed);
    let mut data: Vec<Complex<f64>> = white
        .values()
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    fft2_forward(&mut data, n, n);
    for i in 0..n {
        for j in 0..n {
            let f = cell_frequency(i, j, n);
            let gain = if f == 0.0 {
                0.0
            } else {
                shape.value(f.min(MAX_NORMALIZED_FREQ))?.sqrt()
            };
            data[i * n + j] *= gain;
        }
    }
    fft2_inverse(&mut data, n, n);
    let scale = 1.0 / (n * n) as f64;
    let values = data.iter().map(|c| c.re * scale).collect();
    LatentField::new(extent, values, seed, Some(shape.to_string()))
}

/// One denoising step: predict the clean field from the noisy state.
///
/// Implementations must be deterministic in their inputs. The rescaled
/// frequency table carries the per-step positional state; the conditioning
/// token is opaque and may be ignored.
pub trait Denoiser {
    fn predict_clean(
        &self,
        x_t: &LatentField,
        t: f64,
        table: &FrequencyTable,
        conditioning: Option<&str>,
    ) -> LatentField;
}

/// Minimum-MSE linear estimator under the spectral model: per Fourier mode,
/// `x0_hat = (1-t) S(f) / ((1-t)^2 S(f) + t^2 C) * x_t`. The DC mode is
/// predicted as zero (the model describes zero-mean fields).
#[derive(Debug, Clone)]
pub struct SpectralOracleDenoiser {
    model: SpectrumModel,
}

impl SpectralOracleDenoiser {
    pub fn new(model: SpectrumModel) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &SpectrumModel {
        &self.model
    }

    /// Wiener gain at normalized frequency `f` and time `t`.
    pub fn gain(&self, f: f64, t: f64) -> Result<f64> {
        let s = self.model.signal_power(f)?;
        let denom = (1.0 - t).powi(2) * s + t * t * self.model.noise_floor();
        Ok((1.0 - t) * s / denom)
    }
}

impl Denoiser for SpectralOracleDenoiser {
    fn predict_clean(
        &self,
        x_t: &LatentField,
        t: f64,
        _table: &FrequencyTable,
        _conditioning: Option<&str>,
    ) -> LatentField {
        let extent = x_t.extent();
        let n = extent.height;
        assert!(extent.is_square(), "oracle denoiser needs square fields");
        let mut data: Vec<Complex<f64>> = x_t
            .values()
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        fft2_forward(&mut data, n, n);
        for i in 0..n {
            for j in 0..n {
                let f = cell_frequency(i, j, n);
                let gain = if f == 0.0 {
                    0.0
                } else {
                    self.gain(f.min(MAX_NORMALIZED_FREQ), t)
                        .expect("frequency clamped into domain")
                };
                data[i * n + j] *= gain;
            }
        }
        fft2_inverse(&mut data, n, n);
        let scale = 1.0 / (n * n) as f64;
        LatentField {
            extent,
            values: data.iter().map(|c| c.re * scale).collect(),
            seed: x_t.seed(),
            spectrum_tag: x_t.spectrum_tag.clone(),
        }
    }
}

/// Result of a sampling run: the final field plus the per-step schedule
/// trace.
#[derive(Debug, Clone)]
pub struct InferenceRun {
    pub field: LatentField,
    pub trace: Vec<TraceRow>,
}

/// Runs the denoising loop at the target extent.
///
/// Noise is drawn from the seed, and for each pre-terminal step the method
/// rescales the frequency table, the denoiser predicts the clean field,
/// and an Euler step advances the state. Static methods ignore `t` in the
/// rescaling; the trace still gets one row per step.
pub fn run_inference(
    denoiser: &dyn Denoiser,
    table: &FrequencyTable,
    ctx: &PromotionContext,
    method: &Method,
    steps: &TimestepGrid,
    seed: u64,
    conditioning: Option<&str>,
) -> Result<InferenceRun> {
    let mut x = gaussian_field(ctx.target(), 1.0, seed);
    let trace = schedule_trace(table, ctx, method, steps.pre_terminal())?;
    for n in 0..steps.steps() {
        let t_n = steps.values()[n];
        let t_next = steps.values()[n + 1];
        let rescaled = rescale_table(table, ctx, method, t_n)?;
        let x0_hat = denoiser.predict_clean(&x, t_n, &rescaled, conditioning);
        if x0_hat.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: n });
        }
        let dt = t_next - t_n;
        let values: Vec<f64> = x
            .values()
            .iter()
            .zip(x0_hat.values())
            .map(|(&xv, &cv)| (xv * t_next - dt * cv) / t_n)
            .collect();
        x = LatentField {
            extent: x.extent,
            values,
            seed,
            spectrum_tag: x.spectrum_tag,
        };
    }
    Ok(InferenceRun { field: x, trace })
}

/// Measured SNR crossing for one frequency band of the crystallization
/// probe.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BandCrossing {
    pub band: usize,
    pub f_lo: f64,
    pub f_hi: f64,
    pub signal_level: f64,
    /// Closed-form critical time for this band's signal level.
    pub predicted: f64,
    pub measured_mean: f64,
    pub measured_sd: f64,
    pub seeds: usize,
}

/// Walks the denoising timesteps with the spectral-oracle denoiser and
/// records, per frequency band, when the measured band SNR of the oracle's
/// estimate first reaches 1.
///
/// For each seed a clean field with the model's banded spectrum and a white
/// noise field are drawn; at each step the oracle gain filters both mixture
/// components and the band-power ratio of the filtered signal and noise
/// parts is compared against 1, with the crossing located by log-linear
/// interpolation between adjacent steps. Requires a banded spectrum model
/// and at least 20 seeds.
pub fn crystallization_probe(
    model: &SpectrumModel,
    steps: &TimestepGrid,
    extent: Extent,
    seed_count: usize,
    base_seed: u64,
) -> Result<Vec<BandCrossing>> {
    if seed_count < 20 {
        return Err(Error::Insufficient(format!(
            "crystallization probe needs >= 20 seeds, got {seed_count}"
        )));
    }
    let SpectrumShape::Bands { levels } = model.shape() else {
        return Err(Error::Config(
            "crystallization probe needs a banded spectrum model".into(),
        ));
    };
    if !extent.is_square() {
        return Err(Error::InvalidDimension(format!(
            "crystallization probe needs a square extent, got {extent}"
        )));
    }
    let n = extent.height;
    let bands = levels.len();
    let noise_floor = model.noise_floor();

    let per_seed: Vec<Vec<f64>> = (0..seed_count)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let seed = base_seed.wrapping_add(i as u64);
            let x0 = synth_field(model.shape(), extent, seed)?;
            let eps = gaussian_field(extent, noise_floor.sqrt(), seed ^ 0x9e37_79b9_7f4a_7c15);

            // Per-band mean periodogram power of each mixture component.
            let band_power = |field: &LatentField| -> Vec<f64> {
                let mut data: Vec<Complex<f64>> = field
                    .values()
                    .iter()
                    .map(|&v| Complex::new(v, 0.0))
                    .collect();
                fft2_forward(&mut data, n, n);
                let scale = 1.0 / (n * n) as f64;
                let mut sums = vec![0.0; bands];
                let mut counts = vec![0usize; bands];
                for i in 0..n {
                    for j in 0..n {
                        let f = cell_frequency(i, j, n);
                        if let Some(b) = model.shape().band_index(f) {
                            sums[b] += data[i * n + j].norm_sqr() * scale;
                            counts[b] += 1;
                        }
                    }
                }
                sums.iter()
                    .zip(&counts)
                    .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                    .collect()
            };
            let signal_band = band_power(&x0);
            let noise_band = band_power(&eps);

            let centers: Vec<f64> = (0..bands)
                .map(|b| {
                    let (lo, hi) = model.shape().band_edges(b).expect("banded shape");
                    0.5 * (lo + hi)
                })
                .collect();
            let oracle = SpectralOracleDenoiser::new(model.clone());

            let mut crossings = vec![f64::NAN; bands];
            let mut prev: Vec<Option<(f64, f64)>> = vec![None; bands];
            for &t in steps.values() {
                if t == 0.0 {
                    break;
                }
                for b in 0..bands {
                    if !crossings[b].is_nan() {
                        continue;
                    }
                    // The oracle gain filters both components identically, so
                    // it cancels in the ratio; it is applied anyway to probe
                    // the estimator the sampler actually uses.
                    let g = oracle.gain(centers[b], t)?;
                    let sig = (g * (1.0 - t)).powi(2) * signal_band[b];
                    let noi = (g * t).powi(2) * noise_band[b];
                    // At t = 1 the gain is 0 and both components vanish.
                    let snr = if noi > 0.0 { sig / noi } else { 0.0 };
                    if snr >= 1.0 {
                        crossings[b] = match prev[b] {
                            // Log-linear interpolation between the bracketing steps.
                            Some((t_prev, snr_prev)) if snr_prev > 0.0 && snr > snr_prev => {
                                let w = (0.0 - snr_prev.ln()) / (snr.ln() - snr_prev.ln());
                                t_prev + w * (t - t_prev)
                            }
                            _ => t,
                        };
                    } else {
                        prev[b] = Some((t, snr));
                    }
                }
            }
            // A band that never crossed on the grid crosses between the last
            // positive step and 0; solve (1-t)^2 A = t^2 N exactly.
            for b in 0..bands {
                if crossings[b].is_nan() {
                    let a = signal_band[b].sqrt();
                    let nn = noise_band[b].sqrt();
                    crossings[b] = a / (a + nn);
                }
            }
            Ok(crossings)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(bands);
    for b in 0..bands {
        let xs: Vec<f64> = per_seed.iter().map(|c| c[b]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        let (f_lo, f_hi) = model.shape().band_edges(b).expect("banded shape");
        let center = 0.5 * (f_lo + f_hi);
        out.push(BandCrossing {
            band: b,
            f_lo,
            f_hi,
            signal_level: levels[b],
            predicted: model.critical_time(center)?,
            measured_mean: mean,
            measured_sd: var.sqrt(),
            seeds: seed_count,
        });
    }
    Ok(out)
}

/// Wall-clock comparison of per-step frequency rescaling against a dense
/// attention-score pass at the target token count.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TimingReport {
    pub method: String,
    pub tokens: usize,
    pub embed_dim: usize,
    pub reps: usize,
    pub attention_passes: usize,
    /// Median cost of one rescale_table call, nanoseconds.
    pub rescale_ns_per_step: f64,
    /// Median cost of one rotary-transformed dense score pass, nanoseconds.
    pub attention_ns_per_pass: f64,
    /// rescale_ns_per_step / attention_ns_per_pass.
    pub ratio: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        0.5 * (xs[mid - 1] + xs[mid])
    }
}

/// Times `rescale_table` over the step grid (median of `reps` sweeps,
/// normalized per step) against a dense attention-score computation over
/// every token pair at the target extent (median over a handful of passes;
/// a pass applies the rotary transform to all query/key rows and reduces
/// the full score matrix). Requires `reps >= 10`.
pub fn overhead_benchmark(
    table: &FrequencyTable,
    ctx: &PromotionContext,
    method: &Method,
    steps: &TimestepGrid,
    reps: usize,
) -> Result<TimingReport> {
    if reps < 10 {
        return Err(Error::Insufficient(format!(
            "benchmark needs reps >= 10, got {reps}"
        )));
    }
    let eval_steps = steps.pre_terminal();

    let mut rescale_samples = Vec::with_capacity(reps);
    let mut sink = 0.0f64;
    for _ in 0..reps {
        let start = Instant::now();
        for &t in eval_steps {
            let rescaled = rescale_table(table, ctx, method, t)?;
            sink += rescaled.thetas(0)[0];
        }
        rescale_samples.push(start.elapsed().as_nanos() as f64 / eval_steps.len() as f64);
    }
    std::hint::black_box(sink);

    let target = ctx.target();
    let tokens = target.tokens();
    let dim = table.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let make_rows = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..tokens * dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    let q = make_rows(&mut rng);
    let k = make_rows(&mut rng);
    let rescaled = rescale_table(table, ctx, method, eval_steps[0])?;

    let attention_passes = reps.min(3).max(1);
    let mut attention_samples = Vec::with_capacity(attention_passes);
    for _ in 0..attention_passes {
        let start = Instant::now();
        let rotate_all = |rows: &[f64]| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(rows.len());
            for (idx, row) in rows.chunks_exact(dim).enumerate() {
                let pos = GridPosition::new(idx / target.width, idx % target.width, target)?;
                let v = RotaryVector::new(row.to_vec())?;
                out.extend_from_slice(apply_rotary(&v, pos, &rescaled)?.values());
            }
            Ok(out)
        };
        let rq = rotate_all(&q)?;
        let rk = rotate_all(&k)?;
        let checksum: f64 = rq
            .par_chunks(dim)
            .map(|qrow| {
                let mut acc = 0.0;
                for krow in rk.chunks_exact(dim) {
                    let mut dot = 0.0;
                    for d in 0..dim {
                        dot += qrow[d] * krow[d];
                    }
                    acc += dot;
                }
                acc
            })
            .sum();
        std::hint::black_box(checksum);
        attention_samples.push(start.elapsed().as_nanos() as f64);
    }

    let rescale_ns = median(rescale_samples);
    let attention_ns = median(attention_samples);
    Ok(TimingReport {
        method: method.name().to_string(),
        tokens,
        embed_dim: dim,
        reps,
        attention_passes,
        rescale_ns_per_step: rescale_ns,
        attention_ns_per_pass: attention_ns,
        ratio: rescale_ns / attention_ns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrapolation::{RampBounds, ScheduleFamily, ScheduleSpec};
    use crate::spectral::radial_periodogram;

    fn sq(side: usize) -> Extent {
        Extent::square(side).unwrap()
    }

    fn ctx(train: usize, target: usize) -> PromotionContext {
        PromotionContext::new(sq(train), sq(target)).unwrap()
    }

    #[test]
    fn uniform_grid_has_exact_endpoints() {
        let grid = TimestepGrid::uniform(50).unwrap();
        assert_eq!(grid.steps(), 50);
        assert_eq!(grid.values()[0], 1.0);
        assert_eq!(*grid.values().last().unwrap(), 0.0);
        assert_eq!(grid.pre_terminal().len(), 50);
        assert!(TimestepGrid::uniform(0).is_err());
        assert!(TimestepGrid::new(vec![1.0, 0.5, 0.5, 0.0]).is_err());
        assert!(TimestepGrid::new(vec![0.9, 0.0]).is_err());
    }

    #[test]
    fn forward_mixture_endpoints_and_blend() {
        let x0 = LatentField::new(sq(8), vec![4.0; 64], 0, None).unwrap();
        let eps = LatentField::new(sq(8), vec![0.0; 64], 1, None).unwrap();
        assert_eq!(forward_mixture(&x0, &eps, 0.0).unwrap().values(), x0.values());
        assert_eq!(forward_mixture(&x0, &eps, 1.0).unwrap().values(), eps.values());
        let mid = forward_mixture(&x0, &eps, 0.25).unwrap();
        assert!(mid.values().iter().all(|&v| (v - 3.0).abs() < 1e-15));
        let small = LatentField::new(sq(9), vec![0.0; 81], 0, None).unwrap();
        assert!(forward_mixture(&x0, &small, 0.5).is_err());
        assert!(forward_mixture(&x0, &eps, 1.5).is_err());
    }

    #[test]
    fn synth_field_is_deterministic_per_seed() {
        let shape = SpectrumShape::Flat { level: 1.0 };
        let a = synth_field(&shape, sq(32), 99).unwrap();
        let b = synth_field(&shape, sq(32), 99).unwrap();
        assert_eq!(a.values(), b.values());
        let c = synth_field(&shape, sq(32), 100).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn flat_spectrum_synth_is_white() {
        let n = 64;
        let shape = SpectrumShape::Flat { level: 1.0 };
        let mut mean: Vec<f64> = Vec::new();
        let seeds = 50;
        for seed in 0..seeds {
            let field = synth_field(&shape, sq(n), seed).unwrap();
            let spec = radial_periodogram(field.values(), n).unwrap();
            if mean.is_empty() {
                mean = vec![0.0; spec.len()];
            }
            for (m, p) in mean.iter_mut().zip(spec.power()) {
                *m += p / seeds as f64;
            }
        }
        let max = mean[3..30].iter().cloned().fold(f64::MIN, f64::max);
        let min = mean[3..30].iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 1.5, "flat synth not white: {}", max / min);
        // And the calibration puts the mean level near 1.
        let level = mean[3..30].iter().sum::<f64>() / 27.0;
        assert!((level - 1.0).abs() < 0.2, "level {level}");
    }

    #[test]
    fn banded_spike_concentrates_energy() {
        // Nearly all power in one interior band; the field's measured
        // spectrum must put its energy in the matching bins.
        let n = 64;
        let mut levels = vec![1e-9; 8];
        levels[3] = 1.0;
        let shape = SpectrumShape::Bands { levels };
        let field = synth_field(&shape, sq(n), 5).unwrap();
        let spec = radial_periodogram(field.values(), n).unwrap();
        let (f_lo, f_hi) = shape.band_edges(3).unwrap();
        // Radial bins straddle the band edges, so allow one bin of slack.
        let slack = 1.0 / n as f64;
        let (mut inside, mut total) = (0.0, 0.0);
        for (c, p) in spec.bin_centers().iter().zip(spec.power()) {
            let f = c / n as f64;
            total += p;
            if f > f_lo - slack && f <= f_hi + slack {
                inside += p;
            }
        }
        assert!(inside / total > 0.9, "band energy share {}", inside / total);
    }

    #[test]
    fn synth_rejects_bad_inputs() {
        assert!(synth_field(
            &SpectrumShape::Flat { level: 0.0 },
            sq(16),
            0
        )
        .is_err());
        assert!(synth_field(
            &SpectrumShape::Flat { level: 1.0 },
            Extent::new(16, 32).unwrap(),
            0
        )
        .is_err());
    }

    struct ZeroDenoiser;
    impl Denoiser for ZeroDenoiser {
        fn predict_clean(
            &self,
            x_t: &LatentField,
            _t: f64,
            _table: &FrequencyTable,
            _c: Option<&str>,
        ) -> LatentField {
            LatentField::new(x_t.extent(), vec![0.0; x_t.values().len()], x_t.seed(), None)
                .unwrap()
        }
    }

    struct FixedDenoiser(LatentField);
    impl Denoiser for FixedDenoiser {
        fn predict_clean(
            &self,
            _x_t: &LatentField,
            _t: f64,
            _table: &FrequencyTable,
            _c: Option<&str>,
        ) -> LatentField {
            self.0.clone()
        }
    }

    struct BrokenDenoiser;
    impl Denoiser for BrokenDenoiser {
        fn predict_clean(
            &self,
            x_t: &LatentField,
            _t: f64,
            _table: &FrequencyTable,
            _c: Option<&str>,
        ) -> LatentField {
            LatentField {
                extent: x_t.extent(),
                values: vec![f64::NAN; x_t.values().len()],
                seed: x_t.seed(),
                spectrum_tag: None,
            }
        }
    }

    #[test]
    fn zero_predictor_collapses_to_zero() {
        let table = FrequencyTable::new(&[8, 8], 10_000.0).unwrap();
        let c = ctx(8, 16);
        let steps = TimestepGrid::uniform(25).unwrap();
        let run = run_inference(&ZeroDenoiser, &table, &c, &Method::Pi, &steps, 7, None).unwrap();
        assert!(run.field.max_abs() < 1e-6);
        assert_eq!(run.trace.len(), 25);
    }

    #[test]
    fn single_step_with_true_oracle_returns_x0_exactly() {
        let table = FrequencyTable::new(&[8, 8], 10_000.0).unwrap();
        let c = ctx(8, 16);
        let steps = TimestepGrid::uniform(1).unwrap();
        let x0 = gaussian_field(sq(16), 1.0, 123);
        let run = run_inference(
            &FixedDenoiser(x0.clone()),
            &table,
            &c,
            &Method::Direct,
            &steps,
            7,
            None,
        )
        .unwrap();
        assert_eq!(run.field.values(), x0.values());
    }

    #[test]
    fn non_finite_prediction_aborts_with_step_index() {
        let table = FrequencyTable::new(&[8, 8], 10_000.0).unwrap();
        let c = ctx(8, 16);
        let steps = TimestepGrid::uniform(4).unwrap();
        match run_inference(&BrokenDenoiser, &table, &c, &Method::Pi, &steps, 7, None) {
            Err(Error::NonFinite { step }) => assert_eq!(step, 0),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn runs_are_bitwise_deterministic() {
        let table = FrequencyTable::new(&[8, 8], 10_000.0).unwrap();
        let c = ctx(8, 16);
        let steps = TimestepGrid::uniform(10).unwrap();
        let model = SpectrumModel::new(SpectrumShape::Flat { level: 2.0 }, 1.0).unwrap();
        let oracle = SpectralOracleDenoiser::new(model);
        let spec = ScheduleSpec::new(ScheduleFamily::Rational, 3.0, RampBounds::default()).unwrap();
        let a = run_inference(&oracle, &table, &c, &Method::Sharp(spec), &steps, 55, None).unwrap();
        let b = run_inference(&oracle, &table, &c, &Method::Sharp(spec), &steps, 55, None).unwrap();
        assert_eq!(a.field.values(), b.field.values());
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn sharp_first_step_table_matches_yarn_everywhere() {
        let table = FrequencyTable::new(&[16, 16], 10_000.0).unwrap();
        let c = ctx(16, 48);
        let steps = TimestepGrid::uniform(8).unwrap();
        let bounds = RampBounds::default();
        let spec = ScheduleSpec::new(ScheduleFamily::Rational, 3.0, bounds).unwrap();
        let sharp =
            schedule_trace(&table, &c, &Method::Sharp(spec), steps.pre_terminal()).unwrap();
        let yarn =
            schedule_trace(&table, &c, &Method::Yarn(bounds), steps.pre_terminal()).unwrap();
        assert_eq!(sharp[0].freqs, yarn[0].freqs);
    }

    #[test]
    fn mixture_variance_interpolates() {
        // Var(x_t) = (1-t)^2 Var(x0) + t^2 within 5% over many seeds.
        let n = 32;
        let shape = SpectrumShape::PowerLaw {
            amplitude: 0.02,
            exponent: 1.0,
        };
        let t = 0.6;
        let seeds = 500;
        let mut var_x0 = 0.0;
        let mut var_xt = 0.0;
        for seed in 0..seeds {
            let x0 = synth_field(&shape, sq(n), seed).unwrap();
            let eps = gaussian_field(sq(n), 1.0, seed + 10_000);
            let xt = forward_mixture(&x0, &eps, t).unwrap();
            var_x0 += x0.values().iter().map(|v| v * v).sum::<f64>();
            var_xt += xt.values().iter().map(|v| v * v).sum::<f64>();
        }
        let samples = (seeds as usize * n * n) as f64;
        var_x0 /= samples;
        var_xt /= samples;
        let expected = (1.0 - t) * (1.0 - t) * var_x0 + t * t;
        assert!(
            (var_xt - expected).abs() / expected < 0.05,
            "variance {var_xt} vs expected {expected}"
        );
    }

    #[test]
    fn crossing_time_for_equal_powers_is_half() {
        let model = SpectrumModel::new(SpectrumShape::Bands { levels: vec![1.0] }, 1.0).unwrap();
        let steps = TimestepGrid::uniform(50).unwrap();
        let rows = crystallization_probe(&model, &steps, sq(48), 24, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].predicted - 0.5).abs() < 1e-12);
        assert!(
            (rows[0].measured_mean - 0.5).abs() < 0.05,
            "measured {}",
            rows[0].measured_mean
        );
    }

    #[test]
    fn probe_preconditions() {
        let model = SpectrumModel::new(SpectrumShape::Bands { levels: vec![1.0] }, 1.0).unwrap();
        let steps = TimestepGrid::uniform(10).unwrap();
        assert!(matches!(
            crystallization_probe(&model, &steps, sq(32), 5, 1),
            Err(Error::Insufficient(_))
        ));
        let flat = SpectrumModel::new(SpectrumShape::Flat { level: 1.0 }, 1.0).unwrap();
        assert!(crystallization_probe(&flat, &steps, sq(32), 24, 1).is_err());
        // A zero noise floor is rejected at model construction.
        assert!(SpectrumModel::new(SpectrumShape::Bands { levels: vec![1.0] }, 0.0).is_err());
    }

    #[test]
    fn benchmark_rejects_low_reps_and_reports_ratio() {
        let table = FrequencyTable::new(&[8, 8], 10_000.0).unwrap();
        let c = ctx(8, 16);
        let steps = TimestepGrid::uniform(5).unwrap();
        assert!(matches!(
            overhead_benchmark(&table, &c, &Method::Pi, &steps, 0),
            Err(Error::Insufficient(_))
        ));
        let report = overhead_benchmark(&table, &c, &Method::Pi, &steps, 10).unwrap();
        assert!(report.ratio > 0.0);
        assert_eq!(report.tokens, 256);
        assert_eq!(report.embed_dim, 16);
    }
}
