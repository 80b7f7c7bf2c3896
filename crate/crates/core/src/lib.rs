//! Rescaling rotary position embeddings for training-free resolution
//! promotion, with the spectral analysis that motivates doing it
//! dynamically.
//!
//! The crate has three layers:
//!
//! - [`rope`] and [`extrapolation`]: axial RoPE frequency tables, the four
//!   static rescaling rules (direct, position interpolation, NTK-aware,
//!   YaRN), and the dynamic rule that shrinks the frequency-selective ramp
//!   band over denoising time through a decay schedule.
//! - [`spectral`]: the analytic model of how per-frequency signal dominance
//!   evolves under linear noising, plus the radial-PSD pipeline for
//!   measuring image corpora.
//! - [`simulate`] and [`probe`]: a flow-matching Euler sampler with a
//!   Wiener-style spectral-oracle denoiser, a crystallization-time probe,
//!   an overhead microbenchmark, and a positional-drift probe comparing
//!   the rescaling rules.

pub mod config;
pub mod error;
pub mod extrapolation;
mod fft2;
pub mod grid;
pub mod io;
pub mod probe;
pub mod rope;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use extrapolation::{
    frequency_ratio, ramp, rescale_table, schedule_trace, Method, PromotionContext, RampBounds,
    ScheduleFamily, ScheduleSpec, TraceRow,
};
pub use grid::Extent;
pub use probe::{ood_drift, score_curve, ProbeConfig, ProbeEntry, ProbeReport};
pub use rope::{
    apply_rotary, relative_score, rotate_pair, FrequencyTable, GridPosition, RotaryVector,
};
pub use simulate::{
    crystallization_probe, forward_mixture, gaussian_field, overhead_benchmark, run_inference,
    synth_field, BandCrossing, Denoiser, InferenceRun, LatentField, SpectralOracleDenoiser,
    TimestepGrid, TimingReport,
};
pub use spectral::{
    bilinear_resize, corpus_compare, corpus_mean_spectrum, normalize_low_frequency, radial_psd,
    radial_periodogram, BandPartition, BandSummary, CorpusComparison, CorpusSpectrum, ImageGrid,
    Normalization, RadialSpectrum, SpectrumModel, SpectrumShape,
};
