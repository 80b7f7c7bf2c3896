//! Monte Carlo check that the measured radial PSD of mixed fields follows
//! the analytic evolution law.

use ropescale::{
    forward_mixture, gaussian_field, radial_periodogram, synth_field, Extent, SpectrumModel,
    SpectrumShape,
};

/// Mean measured periodogram per model band, over the cells below the axis
/// Nyquist.
fn band_means(values: &[f64], n: usize, shape: &SpectrumShape, bands: usize) -> Vec<f64> {
    let spec = radial_periodogram(values, n).unwrap();
    let mut sums = vec![0.0; bands];
    let mut counts = vec![0usize; bands];
    for (c, p) in spec.bin_centers().iter().zip(spec.power()) {
        let f = c / n as f64;
        if let Some(b) = shape.band_index(f) {
            sums[b] += p;
            counts[b] += 1;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect()
}

#[test]
fn mixture_psd_follows_evolution_law() {
    let n = 128;
    let extent = Extent::square(n).unwrap();
    let levels = vec![9.0, 4.0, 1.0, 0.25];
    let bands = levels.len();
    let shape = SpectrumShape::Bands { levels };
    let model = SpectrumModel::new(shape.clone(), 1.0).unwrap();
    let seeds = 200u64;

    for &t in &[0.2, 0.5, 0.8] {
        let mut measured = vec![0.0; bands];
        for seed in 0..seeds {
            let x0 = synth_field(&shape, extent, seed).unwrap();
            let eps = gaussian_field(extent, 1.0, seed + 1_000_000);
            let xt = forward_mixture(&x0, &eps, t).unwrap();
            for (m, b) in measured
                .iter_mut()
                .zip(band_means(xt.values(), n, &shape, bands))
            {
                *m += b / seeds as f64;
            }
        }
        for b in 0..bands {
            let (lo, hi) = shape.band_edges(b).unwrap();
            let expected = model.psd_at(0.5 * (lo + hi), t).unwrap();
            let rel = (measured[b] - expected).abs() / expected;
            assert!(
                rel < 0.10,
                "t = {t}, band {b}: measured {} vs expected {expected} (rel {rel})",
                measured[b]
            );
        }
    }
}
