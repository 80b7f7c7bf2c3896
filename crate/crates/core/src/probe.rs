//! Positional out-of-distribution drift probe.
//!
//! Quantifies how relative attention-score curves deform when a table is
//! promoted beyond its training extent. The reference is the unrescaled
//! table evaluated over in-range offsets at the training extent; each
//! method's table is evaluated at the target extent and sampled at the
//! offsets `round(s * delta)` that occupy the same image fraction. The
//! report aggregates the worst score deviation and the mean total-variation
//! distance between the softmax rows, over random unit probe vectors.
//! A content-free geometric proxy, not a trained-model measurement.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::extrapolation::{rescale_table, Method, PromotionContext};
use crate::grid::Extent;
use crate::rope::{relative_score, FrequencyTable, GridPosition, RotaryVector};

/// Inputs for [`ood_drift`].
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub table: FrequencyTable,
    pub ctx: PromotionContext,
    pub method: Method,
    /// Number of random unit (q, k) pairs; must be >= 1.
    pub probe_count: usize,
    pub seed: u64,
    /// Timesteps to probe; consulted by the dynamic method only. Static
    /// methods always produce a single entry.
    pub timesteps: Vec<f64>,
}

/// Drift for one (method, timestep) combination.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ProbeEntry {
    pub method: String,
    /// Per-axis promotion factors (row, column).
    pub s: [f64; 2],
    /// `None` for static methods.
    pub t: Option<f64>,
    /// Worst absolute score deviation over probes, axes, and offsets.
    pub max_dev: f64,
    /// Mean total-variation distance between softmax rows, in `[0, 1]`.
    pub mean_tv: f64,
}

/// Full probe output, one entry per probed timestep.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ProbeReport {
    pub probes: usize,
    pub entries: Vec<ProbeEntry>,
}

/// Relative scores between `q` at the origin and `k` shifted by
/// `0..=max_offset` tokens along one axis. The offset-0 entry is the plain
/// inner product.
pub fn score_curve(
    q: &RotaryVector,
    k: &RotaryVector,
    table: &FrequencyTable,
    axis: usize,
    max_offset: usize,
) -> Result<Vec<f64>> {
    if max_offset < 1 {
        return Err(Error::Domain("max_offset must be >= 1".into()));
    }
    let extent = match axis {
        0 => Extent::new(max_offset + 1, 1)?,
        1 => Extent::new(1, max_offset + 1)?,
        other => {
            return Err(Error::InvalidDimension(format!(
                "axis {other} out of range for a 2-D probe"
            )))
        }
    };
    let origin = GridPosition::new(0, 0, extent)?;
    (0..=max_offset)
        .map(|delta| {
            let pos_k = match axis {
                0 => GridPosition::new(delta, 0, extent)?,
                _ => GridPosition::new(0, delta, extent)?,
            };
            relative_score(q, k, origin, pos_k, table)
        })
        .collect()
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> RotaryVector {
    loop {
        let values: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return RotaryVector::new(values.iter().map(|v| v / norm).collect())
                .expect("even dim");
        }
    }
}

fn softmax_scaled(scores: &[f64], dim: usize) -> Vec<f64> {
    let scale = 1.0 / (dim as f64).sqrt();
    let max = scores
        .iter()
        .map(|s| s * scale)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s * scale - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Measures positional drift for the configured method.
///
/// For each probed timestep, rescales the table, builds per-axis score
/// curves at the target extent, and compares them against the unrescaled
/// training-extent reference at matching relative offsets.
pub fn ood_drift(config: &ProbeConfig) -> Result<ProbeReport> {
    if config.probe_count == 0 {
        return Err(Error::Insufficient("probe count must be >= 1".into()));
    }
    let table = &config.table;
    let ctx = &config.ctx;
    let dim = table.total_dim();
    let axes = table.axes();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pairs: Vec<(RotaryVector, RotaryVector)> = (0..config.probe_count)
        .map(|_| (unit_vector(&mut rng, dim), unit_vector(&mut rng, dim)))
        .collect();

    // Reference: in-range curves at the training extent, unrescaled table.
    let mut reference: Vec<Vec<Vec<f64>>> = Vec::with_capacity(axes);
    for axis in 0..axes {
        let max_offset = ctx.train().axis_len(axis) - 1;
        let curves = pairs
            .iter()
            .map(|(q, k)| score_curve(q, k, table, axis, max_offset))
            .collect::<Result<Vec<_>>>()?;
        reference.push(curves);
    }

    let probed: Vec<Option<f64>> = match config.method {
        Method::Sharp(_) => {
            if config.timesteps.is_empty() {
                return Err(Error::Insufficient(
                    "dynamic method needs at least one probe timestep".into(),
                ));
            }
            config.timesteps.iter().map(|&t| Some(t)).collect()
        }
        _ => vec![None],
    };

    let mut entries = Vec::with_capacity(probed.len());
    for t in probed {
        let rescaled = rescale_table(table, ctx, &config.method, t.unwrap_or(1.0))?;
        let mut max_dev = 0.0f64;
        let mut tv_sum = 0.0f64;
        let mut tv_count = 0usize;
        for axis in 0..axes {
            let s = ctx.s(axis);
            let train_len = ctx.train().axis_len(axis);
            let target_len = ctx.target().axis_len(axis);
            for (pair_idx, (q, k)) in pairs.iter().enumerate() {
                let target_curve = score_curve(q, k, &rescaled, axis, target_len - 1)?;
                let reference_curve = &reference[axis][pair_idx];
                let sampled: Vec<f64> = (0..train_len)
                    .map(|delta| {
                        let idx = ((delta as f64) * s).round() as usize;
                        target_curve[idx.min(target_len - 1)]
                    })
                    .collect();
                for (a, b) in sampled.iter().zip(reference_curve) {
                    max_dev = max_dev.max((a - b).abs());
                }
                tv_sum += total_variation(
                    &softmax_scaled(&sampled, dim),
                    &softmax_scaled(reference_curve, dim),
                );
                tv_count += 1;
            }
        }
        entries.push(ProbeEntry {
            method: config.method.name().to_string(),
            s: [ctx.s(0), ctx.s(1)],
            t,
            max_dev,
            mean_tv: tv_sum / tv_count as f64,
        });
    }
    Ok(ProbeReport {
        probes: config.probe_count,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrapolation::{RampBounds, ScheduleFamily, ScheduleSpec};

    fn table() -> FrequencyTable {
        FrequencyTable::new(&[16, 16], 10_000.0).unwrap()
    }

    fn ctx(train: usize, target: usize) -> PromotionContext {
        PromotionContext::new(
            Extent::square(train).unwrap(),
            Extent::square(target).unwrap(),
        )
        .unwrap()
    }

    fn config(method: Method, train: usize, target: usize, probes: usize) -> ProbeConfig {
        ProbeConfig {
            table: table(),
            ctx: ctx(train, target),
            method,
            probe_count: probes,
            seed: 42,
            timesteps: vec![1.0, 0.5, 0.1],
        }
    }

    #[test]
    fn curve_starts_at_plain_inner_product() {
        let t = table();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = unit_vector(&mut rng, 32);
        let k = unit_vector(&mut rng, 32);
        let curve = score_curve(&q, &k, &t, 0, 16).unwrap();
        assert_eq!(curve.len(), 17);
        let dot: f64 = q.values().iter().zip(k.values()).map(|(a, b)| a * b).sum();
        assert!((curve[0] - dot).abs() < 1e-12);
        assert!(score_curve(&q, &k, &t, 0, 0).is_err());
    }

    #[test]
    fn pi_curve_commutes_with_scaling() {
        // theta/2 at offset 2*delta spins the same angles as theta at delta.
        let t = table();
        let c = ctx(16, 32);
        let pi = rescale_table(&t, &c, &Method::Pi, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = unit_vector(&mut rng, 32);
        let k = unit_vector(&mut rng, 32);
        let reference = score_curve(&q, &k, &t, 0, 15).unwrap();
        let promoted = score_curve(&q, &k, &pi, 0, 31).unwrap();
        for delta in 0..16 {
            assert!(
                (promoted[2 * delta] - reference[delta]).abs() < 1e-9,
                "offset {delta}"
            );
        }
        // A direct table beyond the training extent still yields a curve.
        let beyond = score_curve(&q, &k, &t, 0, 63).unwrap();
        assert_eq!(beyond.len(), 64);
    }

    #[test]
    fn identity_promotion_has_zero_drift() {
        for method in [
            Method::Direct,
            Method::Pi,
            Method::Ntk,
            Method::Yarn(RampBounds::default()),
            Method::Sharp(ScheduleSpec::default_rational()),
        ] {
            let report = ood_drift(&config(method, 16, 16, 4)).unwrap();
            for entry in &report.entries {
                assert_eq!(entry.max_dev, 0.0, "{}", entry.method);
                assert_eq!(entry.mean_tv, 0.0, "{}", entry.method);
            }
        }
    }

    #[test]
    fn interpolation_drifts_less_than_direct_extrapolation() {
        let pi = ood_drift(&config(Method::Pi, 16, 32, 64)).unwrap();
        let direct = ood_drift(&config(Method::Direct, 16, 32, 64)).unwrap();
        assert!(
            pi.entries[0].max_dev < direct.entries[0].max_dev,
            "pi {} vs direct {}",
            pi.entries[0].max_dev,
            direct.entries[0].max_dev
        );
        assert!(pi.entries[0].mean_tv < direct.entries[0].mean_tv);
        // Interpolation commutes with the offset rescaling exactly.
        assert!(pi.entries[0].max_dev < 1e-9);
    }

    #[test]
    fn sharp_endpoints_match_yarn_and_direct() {
        let bounds = RampBounds::default();
        let spec = ScheduleSpec::new(ScheduleFamily::Rational, 3.0, bounds).unwrap();
        let mut sharp_cfg = config(Method::Sharp(spec), 16, 32, 8);
        sharp_cfg.timesteps = vec![1.0, 1e-12];
        let sharp = ood_drift(&sharp_cfg).unwrap();
        let yarn = ood_drift(&config(Method::Yarn(bounds), 16, 32, 8)).unwrap();
        let direct = ood_drift(&config(Method::Direct, 16, 32, 8)).unwrap();
        assert_eq!(sharp.entries[0].max_dev, yarn.entries[0].max_dev);
        assert_eq!(sharp.entries[0].mean_tv, yarn.entries[0].mean_tv);
        assert_eq!(sharp.entries[1].max_dev, direct.entries[0].max_dev);
        assert_eq!(sharp.entries[1].mean_tv, direct.entries[0].mean_tv);
    }

    #[test]
    fn sharp_requires_probe_timesteps() {
        let mut cfg = config(Method::Sharp(ScheduleSpec::default_rational()), 16, 32, 2);
        cfg.timesteps.clear();
        assert!(matches!(ood_drift(&cfg), Err(Error::Insufficient(_))));
        let mut cfg = config(Method::Pi, 16, 32, 0);
        cfg.probe_count = 0;
        assert!(ood_drift(&cfg).is_err());
    }
}
