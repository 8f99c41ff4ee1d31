//! Shared test oracles, kept independent of the library's projection and
//! loss implementations: bin indices, histograms, CDFs, and divergences are
//! recomputed here from their definitions.

use cfkit::glyph::GlyphImage;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Bin count covering the image diagonal with unit-width bins.
pub fn oracle_bin_count(h: usize, w: usize) -> usize {
    (((h * h + w * w) as f64).sqrt().floor() as usize) + 1
}

/// Per-direction histograms recomputed from scratch.
pub fn oracle_histograms(img: &GlyphImage, n_dirs: usize, n_bins: usize) -> Vec<Vec<f64>> {
    let (h, w) = (img.height(), img.width());
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let offset = (n_bins as f64 - 1.0) / 2.0;
    (0..n_dirs)
        .map(|p| {
            let theta = p as f64 * std::f64::consts::PI / n_dirs as f64;
            let mut hist = vec![0.0; n_bins];
            for row in 0..h {
                for col in 0..w {
                    let t = (col as f64 - cx) * theta.cos() + (row as f64 - cy) * theta.sin();
                    let bin = (t + offset).round().clamp(0.0, n_bins as f64 - 1.0) as usize;
                    hist[bin] += img.get(row, col);
                }
            }
            hist
        })
        .collect()
}

fn normalize(h: &[f64]) -> Vec<f64> {
    let total: f64 = h.iter().sum();
    h.iter().map(|&v| v / total).collect()
}

/// Brute-force PC-WDL: normalized histograms, prefix sums, summed absolute
/// CDF differences, averaged over directions.
pub fn oracle_wdl(gen: &GlyphImage, gt: &GlyphImage, n_dirs: usize) -> f64 {
    let n_bins = oracle_bin_count(gen.height(), gen.width());
    let hg = oracle_histograms(gen, n_dirs, n_bins);
    let ht = oracle_histograms(gt, n_dirs, n_bins);
    let mut total = 0.0;
    for p in 0..n_dirs {
        let qg = normalize(&hg[p]);
        let qt = normalize(&ht[p]);
        let (mut cg, mut ct, mut dist) = (0.0, 0.0, 0.0);
        for k in 0..n_bins {
            cg += qg[k];
            ct += qt[k];
            dist += (cg - ct).abs();
        }
        total += dist;
    }
    total / n_dirs as f64
}

/// Brute-force PC-KL with explicit epsilon-smoothed histograms.
pub fn oracle_kl(gen: &GlyphImage, gt: &GlyphImage, n_dirs: usize, eps: f64) -> f64 {
    let n_bins = oracle_bin_count(gen.height(), gen.width());
    let hg = oracle_histograms(gen, n_dirs, n_bins);
    let ht = oracle_histograms(gt, n_dirs, n_bins);
    let smooth = |h: &[f64]| -> Vec<f64> {
        let total: f64 = h.iter().sum::<f64>() + n_bins as f64 * eps;
        h.iter().map(|&v| (v + eps) / total).collect()
    };
    let mut total = 0.0;
    for p in 0..n_dirs {
        let qg = smooth(&hg[p]);
        let qt = smooth(&ht[p]);
        let kl: f64 = qg
            .iter()
            .zip(&qt)
            .map(|(&a, &b)| a * (a / b).ln())
            .sum();
        total += kl;
    }
    total / n_dirs as f64
}

/// Random image with intensities uniform in [lo, hi].
pub fn random_image(h: usize, w: usize, seed: u64, lo: f64, hi: f64) -> GlyphImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GlyphImage::from_fn(h, w, |_, _| rng.gen_range(lo..hi)).unwrap()
}
