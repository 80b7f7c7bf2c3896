//! Frequency rescaling rules for training-free resolution promotion.
//!
//! Four static rules (direct reuse, position interpolation, NTK-aware base
//! adjustment, and the YaRN frequency-selective ramp) plus the dynamic rule
//! that re-derives the ramp bounds at every denoising step from a decaying
//! schedule coefficient. All rules map a base [`FrequencyTable`] and a
//! promotion context onto a rescaled table; the dynamic rule additionally
//! takes the normalized timestep `t` in `[0, 1]` (1 = pure noise, 0 = fully
//! denoised).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Extent;
use crate::rope::FrequencyTable;

/// Threshold below which a ramp band `[alpha_t, beta_t]` is treated as a
/// step function at `beta_t` rather than a linear blend.
pub const DEGENERATE_BAND_WIDTH: f64 = 1e-9;

/// Static ramp bounds `(alpha, beta)` in frequency-ratio units, with
/// `beta > alpha >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampBounds {
    lower: f64,
    upper: f64,
}

impl RampBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || lower < 0.0 || upper <= lower {
            return Err(Error::InvalidSchedule(format!(
                "ramp bounds ({lower}, {upper}) must satisfy 0 <= alpha < beta"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }
}

impl Default for RampBounds {
    /// The default transition band `(1, 32)`.
    fn default() -> Self {
        Self {
            lower: 1.0,
            upper: 32.0,
        }
    }
}

/// Shape of the decay coefficient `kappa(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleFamily {
    /// `kappa = 1` at every step; reduces the dynamic rule to the static ramp.
    Static,
    /// `kappa = t`.
    Linear,
    /// `kappa = (1 - cos(pi t)) / 2`.
    Cosine,
    /// `kappa = t / (alpha_s - (alpha_s - 1) t)`: stays near 1 through the
    /// mid-stage and decays rapidly near `t = 0`.
    Rational,
}

impl fmt::Display for ScheduleFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Static => "static",
            Self::Linear => "linear",
            Self::Cosine => "cosine",
            Self::Rational => "rational",
        };
        f.write_str(name)
    }
}

impl FromStr for ScheduleFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "static" => Ok(Self::Static),
            "linear" => Ok(Self::Linear),
            "cosine" => Ok(Self::Cosine),
            "rational" => Ok(Self::Rational),
            other => Err(Error::Config(format!("unknown schedule family {other:?}"))),
        }
    }
}

/// A decay schedule together with the ramp bounds it modulates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSpec {
    family: ScheduleFamily,
    alpha_s: f64,
    bounds: RampBounds,
}

impl ScheduleSpec {
    /// `alpha_s` must be >= 1; it is only consulted by the rational family.
    pub fn new(family: ScheduleFamily, alpha_s: f64, bounds: RampBounds) -> Result<Self> {
        if !alpha_s.is_finite() || alpha_s < 1.0 {
            return Err(Error::InvalidSchedule(format!(
                "scheduler coefficient alpha_s = {alpha_s} must be >= 1"
            )));
        }
        Ok(Self {
            family,
            alpha_s,
            bounds,
        })
    }

    /// The default dynamic schedule: rational decay with `alpha_s = 3` over
    /// the `(1, 32)` band.
    pub fn default_rational() -> Self {
        Self {
            family: ScheduleFamily::Rational,
            alpha_s: 3.0,
            bounds: RampBounds::default(),
        }
    }

    pub fn family(&self) -> ScheduleFamily {
        self.family
    }

    pub fn alpha_s(&self) -> f64 {
        self.alpha_s
    }

    pub fn bounds(&self) -> RampBounds {
        self.bounds
    }

    /// Decay coefficient `kappa(t)` in `[0, 1]` for `t` in `[0, 1]`.
    ///
    /// Every family returns 1 at `t = 1`, and every family except `static`
    /// returns 0 at `t = 0`.
    pub fn kappa(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("timestep t = {t} outside [0, 1]")));
        }
        let k = match self.family {
            ScheduleFamily::Static => 1.0,
            _ if t == 0.0 => 0.0,
            _ if t == 1.0 => 1.0,
            ScheduleFamily::Linear => t,
            ScheduleFamily::Cosine => (1.0 - (PI * t).cos()) / 2.0,
            ScheduleFamily::Rational => t / (self.alpha_s - (self.alpha_s - 1.0) * t),
        };
        Ok(k.clamp(0.0, 1.0))
    }

    /// Time-dependent transition bounds `(alpha_t, beta_t) = (alpha, beta) * kappa(t)`.
    pub fn bounds_at(&self, t: f64) -> Result<(f64, f64)> {
        let k = self.kappa(t)?;
        Ok((self.bounds.lower * k, self.bounds.upper * k))
    }
}

/// Training and target token extents with per-axis promotion factors.
///
/// Each axis gets its own `s = L_target / L_train >= 1`, so anisotropic
/// (rectangular) promotion is supported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PromotionContext {
    train: Extent,
    target: Extent,
    s: [f64; 2],
}

impl PromotionContext {
    pub fn new(train: Extent, target: Extent) -> Result<Self> {
        let s = [
            target.height as f64 / train.height as f64,
            target.width as f64 / train.width as f64,
        ];
        for (axis, &factor) in s.iter().enumerate() {
            if factor < 1.0 {
                return Err(Error::InvalidPromotion(format!(
                    "axis {axis}: target {target} smaller than training {train} (s = {factor})"
                )));
            }
        }
        Ok(Self { train, target, s })
    }

    pub fn train(&self) -> Extent {
        self.train
    }

    pub fn target(&self) -> Extent {
        self.target
    }

    /// Promotion factor along one axis.
    pub fn s(&self, axis: usize) -> f64 {
        self.s[axis]
    }
}

/// A rescaling rule. `Yarn` carries its static ramp bounds; `Sharp` carries
/// the full dynamic schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// No rescaling: run the native frequencies beyond the training range.
    Direct,
    /// Position interpolation: every frequency divided by `s`.
    Pi,
    /// NTK-aware scaling: recompute the ladder from base `b * s^(D/(D-2))`.
    Ntk,
    /// Frequency-selective ramp with static bounds.
    Yarn(RampBounds),
    /// Frequency-selective ramp with schedule-shrunk bounds.
    Sharp(ScheduleSpec),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::Pi => "pi",
            Self::Ntk => "ntk",
            Self::Yarn(_) => "yarn",
            Self::Sharp(_) => "sharp",
        }
    }

    /// Builds a method from its CLI/config name plus ramp and schedule
    /// parameters (consulted only by the methods that use them).
    pub fn from_parts(
        kind: &str,
        family: ScheduleFamily,
        alpha_s: f64,
        bounds: RampBounds,
    ) -> Result<Self> {
        match kind.to_ascii_lowercase().as_str() {
            "direct" => Ok(Self::Direct),
            "pi" => Ok(Self::Pi),
            "ntk" => Ok(Self::Ntk),
            "yarn" => Ok(Self::Yarn(bounds)),
            "sharp" => Ok(Self::Sharp(ScheduleSpec::new(family, alpha_s, bounds)?)),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }

    /// Scheduler state `(kappa, alpha_t, beta_t)` recorded in traces.
    ///
    /// Static methods report `kappa = 1`; methods without a ramp report a
    /// `(0, 0)` band.
    pub fn schedule_state(&self, t: f64) -> Result<(f64, f64, f64)> {
        match self {
            Method::Sharp(spec) => {
                let kappa = spec.kappa(t)?;
                let (a, b) = spec.bounds_at(t)?;
                Ok((kappa, a, b))
            }
            Method::Yarn(bounds) => Ok((1.0, bounds.lower(), bounds.upper())),
            _ => Ok((1.0, 0.0, 0.0)),
        }
    }
}

/// Ramp weight `gamma` in `[0, 1]`: 0 below `alpha_t`, 1 above `beta_t`,
/// linear in between.
///
/// A band narrower than [`DEGENERATE_BAND_WIDTH`] collapses to a step at
/// `beta_t` (`r >= beta_t` maps to 1). This covers the `t -> 0` limit where
/// both bounds shrink to zero and every positive ratio is released.
pub fn ramp(r: f64, alpha_t: f64, beta_t: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!("frequency ratio r = {r} must be >= 0")));
    }
    if alpha_t < 0.0 || beta_t < alpha_t {
        return Err(Error::Domain(format!(
            "ramp bounds ({alpha_t}, {beta_t}) must satisfy beta_t >= alpha_t >= 0"
        )));
    }
    if beta_t - alpha_t < DEGENERATE_BAND_WIDTH {
        return Ok(if r >= beta_t { 1.0 } else { 0.0 });
    }
    Ok(((r - alpha_t) / (beta_t - alpha_t)).clamp(0.0, 1.0))
}

/// Normalized frequency ratio `r(d) = L_target / lambda_d` along one axis:
/// the number of full rotations pair `d` completes across the target image.
///
/// Strictly decreasing in `d`, since wavelengths grow with `d`.
pub fn frequency_ratio(
    table: &FrequencyTable,
    ctx: &PromotionContext,
    axis: usize,
    d: usize,
) -> f64 {
    ctx.target().axis_len(axis) as f64 / table.wavelengths(axis)[d]
}

fn blended_thetas(
    table: &FrequencyTable,
    ctx: &PromotionContext,
    alpha_t: f64,
    beta_t: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(table.axes());
    for axis in 0..table.axes() {
        let s = ctx.s(axis);
        let mut axis_thetas = Vec::with_capacity(table.pairs(axis));
        for (d, &theta) in table.thetas(axis).iter().enumerate() {
            let r = frequency_ratio(table, ctx, axis, d);
            let gamma = ramp(r, alpha_t, beta_t)?;
            axis_thetas.push((1.0 - gamma) * (theta / s) + gamma * theta);
        }
        out.push(axis_thetas);
    }
    Ok(out)
}

/// Rescales a frequency table for the given method.
///
/// `t` is the normalized timestep, consulted only by [`Method::Sharp`] and
/// ignored by the static methods. Blend methods satisfy
/// `theta/s <= h(theta) <= theta` per dimension.
pub fn rescale_table(
    table: &FrequencyTable,
    ctx: &PromotionContext,
    method: &Method,
    t: f64,
) -> Result<FrequencyTable> {
    if table.axes() > 2 {
        return Err(Error::InvalidDimension(format!(
            "promotion context is 2-D, table has {} axes",
            table.axes()
        )));
    }
    let thetas = match method {
        Method::Direct => return Ok(table.clone()),
        Method::Pi => (0..table.axes())
            .map(|axis| {
                let s = ctx.s(axis);
                table.thetas(axis).iter().map(|&th| th / s).collect()
            })
            .collect(),
        Method::Ntk => {
            let mut all = Vec::with_capacity(table.axes());
            for axis in 0..table.axes() {
                let dim = table.axis_dims()[axis];
                if dim <= 2 {
                    return Err(Error::InvalidDimension(format!(
                        "NTK base adjustment needs axis dim > 2, got {dim}"
                    )));
                }
                let s = ctx.s(axis);
                let adjusted = table.base() * s.powf(dim as f64 / (dim as f64 - 2.0));
                all.push(
                    (0..dim / 2)
                        .map(|d| adjusted.powf(-2.0 * d as f64 / dim as f64))
                        .collect(),
                );
            }
            all
        }
        Method::Yarn(bounds) => blended_thetas(table, ctx, bounds.lower(), bounds.upper())?,
        Method::Sharp(spec) => {
            let (alpha_t, beta_t) = spec.bounds_at(t)?;
            blended_thetas(table, ctx, alpha_t, beta_t)?
        }
    };
    FrequencyTable::from_thetas(table.axis_dims().to_vec(), table.base(), thetas)
}

/// One row of a schedule trace: the scheduler state at a timestep plus the
/// rescaled per-axis frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub kappa: f64,
    pub alpha_t: f64,
    pub beta_t: f64,
    /// Rescaled frequencies `h_t(theta_d)`, per axis.
    pub freqs: Vec<Vec<f64>>,
}

/// Evaluates the method over a descending timestep list, one row per step.
pub fn schedule_trace(
    table: &FrequencyTable,
    ctx: &PromotionContext,
    method: &Method,
    timesteps: &[f64],
) -> Result<Vec<TraceRow>> {
    if timesteps.is_empty() {
        return Err(Error::Insufficient("empty timestep list".into()));
    }
    for pair in timesteps.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::Domain(format!(
                "timesteps must be strictly descending, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    timesteps
        .iter()
        .enumerate()
        .map(|(step, &t)| {
            let (kappa, alpha_t, beta_t) = method.schedule_state(t)?;
            let rescaled = rescale_table(table, ctx, method, t)?;
            Ok(TraceRow {
                step,
                t,
                kappa,
                alpha_t,
                beta_t,
                freqs: (0..rescaled.axes())
                    .map(|a| rescaled.thetas(a).to_vec())
                    .collect(),
            })
        })
        .collect()
}
