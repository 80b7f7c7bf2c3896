//! Axial rotary position embeddings over 2-D token grids.
//!
//! A [`FrequencyTable`] holds one geometric frequency ladder per spatial
//! axis, `theta_d = base^(-2d/D)`, together with the matching wavelengths
//! `lambda_d = 2*pi/theta_d`. Applying the table rotates consecutive value
//! pairs of a query/key vector by `theta_d * p`, where `p` is the integer
//! coordinate along that pair's axis, so that inner products depend on
//! relative offsets only.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::Extent;

/// Per-axis base frequencies and wavelengths for axial RoPE.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    axis_dims: Vec<usize>,
    base: f64,
    thetas: Vec<Vec<f64>>,
    wavelengths: Vec<Vec<f64>>,
}

impl FrequencyTable {
    /// Builds the standard table: for an axis of embedding dimension `D`,
    /// pair `d` gets `theta_d = base^(-2d/D)` for `d` in `0..D/2`.
    ///
    /// Every `axis_dim` must be even and >= 2, and `base` must be > 1.
    pub fn new(axis_dims: &[usize], base: f64) -> Result<Self> {
        if axis_dims.is_empty() {
            return Err(Error::InvalidDimension("no axes given".into()));
        }
        for &dim in axis_dims {
            if dim < 2 || dim % 2 != 0 {
                return Err(Error::InvalidDimension(format!(
                    "axis dim {dim} must be even and >= 2"
                )));
            }
        }
        if !(base > 1.0) || !base.is_finite() {
            return Err(Error::InvalidBase(base));
        }
        let thetas: Vec<Vec<f64>> = axis_dims
            .iter()
            .map(|&dim| {
                (0..dim / 2)
                    .map(|d| base.powf(-2.0 * d as f64 / dim as f64))
                    .collect()
            })
            .collect();
        Self::from_thetas(axis_dims.to_vec(), base, thetas)
    }

    /// Wraps an explicit per-axis frequency ladder (used by the rescaling
    /// rules). Frequencies must be positive and strictly decreasing within
    /// each axis.
    pub(crate) fn from_thetas(
        axis_dims: Vec<usize>,
        base: f64,
        thetas: Vec<Vec<f64>>,
    ) -> Result<Self> {
        for (axis, axis_thetas) in thetas.iter().enumerate() {
            if axis_thetas.len() != axis_dims[axis] / 2 {
                return Err(Error::InvalidDimension(format!(
                    "axis {axis}: expected {} frequency pairs, got {}",
                    axis_dims[axis] / 2,
                    axis_thetas.len()
                )));
            }
            for (d, &theta) in axis_thetas.iter().enumerate() {
                if !(theta > 0.0) || !theta.is_finite() {
                    return Err(Error::Domain(format!(
                        "axis {axis} pair {d}: non-positive frequency {theta}"
                    )));
                }
                if d > 0 && theta >= axis_thetas[d - 1] {
                    return Err(Error::Domain(format!(
                        "axis {axis}: frequencies not strictly decreasing at pair {d}"
                    )));
                }
            }
        }
        let wavelengths = thetas
            .iter()
            .map(|axis| axis.iter().map(|&t| TAU / t).collect())
            .collect();
        Ok(Self {
            axis_dims,
            base,
            thetas,
            wavelengths,
        })
    }

    /// Number of spatial axes.
    pub fn axes(&self) -> usize {
        self.axis_dims.len()
    }

    pub fn axis_dims(&self) -> &[usize] {
        &self.axis_dims
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// Base frequencies for one axis, strictly decreasing in the pair index.
    pub fn thetas(&self, axis: usize) -> &[f64] {
        &self.thetas[axis]
    }

    /// Wavelengths `2*pi/theta_d` for one axis, strictly increasing.
    pub fn wavelengths(&self, axis: usize) -> &[f64] {
        &self.wavelengths[axis]
    }

    /// Number of frequency pairs on one axis (`axis_dim/2`).
    pub fn pairs(&self, axis: usize) -> usize {
        self.axis_dims[axis] / 2
    }

    /// Total embedding dimension covered by the table.
    pub fn total_dim(&self) -> usize {
        self.axis_dims.iter().sum()
    }
}

/// An integer token position on a bounded 2-D grid.
///
/// Positions are integer token indices by construction; fractional
/// positions are not representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPosition {
    row: usize,
    col: usize,
    extent: Extent,
}

impl GridPosition {
    pub fn new(row: usize, col: usize, extent: Extent) -> Result<Self> {
        if row >= extent.height || col >= extent.width {
            return Err(Error::Domain(format!(
                "position ({row}, {col}) outside extent {extent}"
            )));
        }
        Ok(Self { row, col, extent })
    }

    pub fn row(&self) -> usize {
        self.row
    }

    pub fn col(&self) -> usize {
        self.col
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    /// Coordinate along a spatial axis: 0 is the row axis, 1 the column axis.
    pub fn coordinate(&self, axis: usize) -> usize {
        match axis {
            0 => self.row,
            1 => self.col,
            _ => panic!("axis {axis} out of range for a 2-D position"),
        }
    }
}

/// A real-valued query/key vector whose length matches a frequency table.
#[derive(Debug, Clone, PartialEq)]
pub struct RotaryVector(Vec<f64>);

impl RotaryVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() % 2 != 0 {
            return Err(Error::InvalidDimension(format!(
                "rotary vector length {} must be even and nonzero",
                values.len()
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Rotates the pair `(x, y)` by `angle` radians.
pub fn rotate_pair(x: f64, y: f64, angle: f64) -> (f64, f64) {
    let (sin, cos) = angle.sin_cos();
    (x * cos - y * sin, x * sin + y * cos)
}

fn check_lengths(vector: &RotaryVector, table: &FrequencyTable) -> Result<()> {
    if table.axes() > 2 {
        return Err(Error::InvalidDimension(format!(
            "2-D positions support at most 2 axes, table has {}",
            table.axes()
        )));
    }
    if vector.len() != table.total_dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("vector of length {}", table.total_dim()),
            got: format!("length {}", vector.len()),
        });
    }
    Ok(())
}

/// Applies the rotary transform at a grid position.
///
/// Pair `d` of axis `a` is rotated by `theta[a][d] * p_a`, where `p_a` is
/// the position's coordinate along axis `a`. The Euclidean norm is
/// preserved.
pub fn apply_rotary(
    vector: &RotaryVector,
    pos: GridPosition,
    table: &FrequencyTable,
) -> Result<RotaryVector> {
    check_lengths(vector, table)?;
    let mut out = vector.values().to_vec();
    let mut offset = 0;
    for axis in 0..table.axes() {
        let coord = pos.coordinate(axis) as f64;
        for (d, &theta) in table.thetas(axis).iter().enumerate() {
            let i = offset + 2 * d;
            let (x, y) = rotate_pair(out[i], out[i + 1], theta * coord);
            out[i] = x;
            out[i + 1] = y;
        }
        offset += table.axis_dims()[axis];
    }
    Ok(RotaryVector(out))
}

/// Inner product of the rotary-transformed vectors.
///
/// For fixed `q` and `k` the result depends only on the per-axis offset
/// `pos_q - pos_k`.
pub fn relative_score(
    q: &RotaryVector,
    k: &RotaryVector,
    pos_q: GridPosition,
    pos_k: GridPosition,
    table: &FrequencyTable,
) -> Result<f64> {
    if q.len() != k.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("matching vector lengths ({})", q.len()),
            got: format!("{}", k.len()),
        });
    }
    let rq = apply_rotary(q, pos_q, table)?;
    let rk = apply_rotary(k, pos_k, table)?;
    Ok(rq
        .values()
        .iter()
        .zip(rk.values())
        .map(|(a, b)| a * b)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn pos(row: usize, col: usize, side: usize) -> GridPosition {
        GridPosition::new(row, col, Extent::square(side).unwrap()).unwrap()
    }

    #[test]
    fn four_dim_axis_matches_closed_form() {
        // base^(-2d/D) for d in {0, 1}, D = 4: [1, 10000^-0.5] = [1, 0.01].
        let table = FrequencyTable::new(&[4], 10_000.0).unwrap();
        let thetas = table.thetas(0);
        assert_eq!(thetas.len(), 2);
        assert!((thetas[0] - 1.0).abs() < 1e-15);
        assert!((thetas[1] - 0.01).abs() / 0.01 < 1e-12);
    }

    #[test]
    fn two_dim_axis_is_unit_frequency() {
        let table = FrequencyTable::new(&[2], 10_000.0).unwrap();
        assert_eq!(table.thetas(0), &[1.0]);
    }

    #[test]
    fn odd_dim_and_bad_base_rejected() {
        assert!(matches!(
            FrequencyTable::new(&[3], 10_000.0),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(
            FrequencyTable::new(&[4], 1.0),
            Err(Error::InvalidBase(_))
        ));
        assert!(matches!(
            FrequencyTable::new(&[4], 0.5),
            Err(Error::InvalidBase(_))
        ));
    }

    #[test]
    fn wavelengths_are_two_pi_over_theta() {
        let table = FrequencyTable::new(&[32, 32], 10_000.0).unwrap();
        for axis in 0..table.axes() {
            assert!((table.thetas(axis)[0] - 1.0).abs() < 1e-15);
            for (theta, lambda) in table.thetas(axis).iter().zip(table.wavelengths(axis)) {
                assert!((lambda - TAU / theta).abs() / lambda < 1e-12);
            }
            // Strictly decreasing frequencies, strictly increasing wavelengths.
            for d in 1..table.pairs(axis) {
                assert!(table.thetas(axis)[d] < table.thetas(axis)[d - 1]);
                assert!(table.wavelengths(axis)[d] > table.wavelengths(axis)[d - 1]);
            }
        }
    }

    #[test]
    fn longest_wavelength_exceeds_training_extent() {
        // With theta_d * L < 2*pi, the slow dimensions never complete a
        // rotation inside the training window, which is what promotion
        // beyond that window exploits.
        let table = FrequencyTable::new(&[32], 10_000.0).unwrap();
        let l_train = 64.0;
        let last = table.pairs(0) - 1;
        assert!(table.wavelengths(0)[last] > l_train);
        assert!(table.thetas(0)[last] * l_train < TAU);
    }

    #[test]
    fn quarter_turn_rotates_unit_pair() {
        let (x, y) = rotate_pair(1.0, 0.0, FRAC_PI_2);
        assert!(x.abs() < 1e-12);
        assert!((y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn origin_position_is_identity() {
        let table = FrequencyTable::new(&[4, 4], 10_000.0).unwrap();
        let v = RotaryVector::new(vec![0.3, -1.2, 0.5, 2.0, -0.7, 0.1, 0.9, -0.4]).unwrap();
        let rotated = apply_rotary(&v, pos(0, 0, 8), &table).unwrap();
        assert_eq!(rotated, v);
    }

    #[test]
    fn rotation_preserves_norm() {
        let table = FrequencyTable::new(&[8, 8], 10_000.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let v = RotaryVector::new((0..16).map(|_| rng.random_range(-2.0..2.0)).collect())
                .unwrap();
            let p = pos(rng.random_range(0..512), rng.random_range(0..512), 512);
            let rotated = apply_rotary(&v, p, &table).unwrap();
            let (n0, n1) = (v.norm(), rotated.norm());
            assert!((n0 - n1).abs() <= 1e-10 * n0.max(1e-300));
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let table = FrequencyTable::new(&[4, 4], 10_000.0).unwrap();
        let v = RotaryVector::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            apply_rotary(&v, pos(0, 0, 8), &table),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn equal_positions_give_plain_inner_product() {
        let table = FrequencyTable::new(&[4, 4], 10_000.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = RotaryVector::new((0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let k = RotaryVector::new((0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let p = pos(5, 3, 16);
        let score = relative_score(&q, &k, p, p, &table).unwrap();
        let dot: f64 = q.values().iter().zip(k.values()).map(|(a, b)| a * b).sum();
        assert!((score - dot).abs() < 1e-12);
    }

    #[test]
    fn score_is_shift_invariant() {
        let table = FrequencyTable::new(&[8, 8], 10_000.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let q =
                RotaryVector::new((0..16).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let k =
                RotaryVector::new((0..16).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let (r0, c0) = (rng.random_range(0..40), rng.random_range(0..40));
            let (r1, c1) = (rng.random_range(0..40), rng.random_range(0..40));
            let a = relative_score(&q, &k, pos(r0, c0, 64), pos(r1, c1, 64), &table).unwrap();
            let b = relative_score(
                &q,
                &k,
                pos(r0 + 5, c0 + 5, 64),
                pos(r1 + 5, c1 + 5, 64),
                &table,
            )
            .unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn unit_pair_offset_one_scores_cos_theta() {
        // q = k = e0; the first pair has theta = 1, so an offset of one
        // token along axis 0 scores cos(1).
        let table = FrequencyTable::new(&[4], 10_000.0).unwrap();
        let e0 = RotaryVector::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let score =
            relative_score(&e0, &e0, pos(3, 0, 16), pos(4, 0, 16), &table).unwrap();
        assert!((score - 1.0f64.cos()).abs() < 1e-12);
        assert!((score - 0.5403023058681398).abs() < 1e-12);
    }
}
