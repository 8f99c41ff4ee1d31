//! Pixel-level evaluation metrics: L1, RMSE, and windowed SSIM.
//!
//! SSIM uses the standard 11x11 Gaussian window (sigma 1.5),
//! C1 = (0.01 L)^2, C2 = (0.03 L)^2 with dynamic range L = 1, averaged over
//! valid window positions only (no padding). Means and moments are computed
//! with separable convolutions.

use crate::error::{Error, Result};
use crate::glyph::GlyphImage;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Mean absolute pixel difference.
pub fn l1(a: &GlyphImage, b: &GlyphImage) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let n = a.pixels().len() as f64;
    Ok(a.pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / n)
}

/// Root of the mean squared pixel difference.
pub fn rmse(a: &GlyphImage, b: &GlyphImage) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let n = a.pixels().len() as f64;
    Ok((a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
        .sqrt())
}

/// Normalized 1D Gaussian kernel.
fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let mid = (size as f64 - 1.0) / 2.0;
    let mut k: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - mid).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    for v in k.iter_mut() {
        *v /= total;
    }
    k
}

/// Valid-mode separable convolution of a (h x w) buffer with `kernel` along
/// both axes; output is (h - size + 1) x (w - size + 1).
fn convolve_valid(data: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let size = kernel.len();
    let out_w = w - size + 1;
    // Horizontal pass.
    let mut tmp = vec![0.0; h * out_w];
    for r in 0..h {
        for c in 0..out_w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * data[r * w + c + k];
            }
            tmp[r * out_w + c] = acc;
        }
    }
    // Vertical pass.
    let out_h = h - size + 1;
    let mut out = vec![0.0; out_h * out_w];
    for r in 0..out_h {
        for c in 0..out_w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * tmp[(r + k) * out_w + c];
            }
            out[r * out_w + c] = acc;
        }
    }
    out
}

/// Mean SSIM over all valid window positions.
pub fn ssim(a: &GlyphImage, b: &GlyphImage) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let (h, w) = (a.height(), a.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::invalid(
            "image size",
            format!("SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"),
        ));
    }
    let kernel = gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA);
    let x = a.pixels();
    let y = b.pixels();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(u, v)| u * v).collect();

    let mu_x = convolve_valid(x, h, w, &kernel);
    let mu_y = convolve_valid(y, h, w, &kernel);
    let e_xx = convolve_valid(&xx, h, w, &kernel);
    let e_yy = convolve_valid(&yy, h, w, &kernel);
    let e_xy = convolve_valid(&xy, h, w, &kernel);

    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (mx * mx + my * my + SSIM_C1) * (var_x + var_y + SSIM_C2);
        total += num / den;
    }
    Ok(total / mu_x.len() as f64)
}

/// L1, RMSE, and SSIM of one image pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    pub l1: f64,
    pub rmse: f64,
    pub ssim: f64,
}

pub fn compare(a: &GlyphImage, b: &GlyphImage) -> Result<PairMetrics> {
    Ok(PairMetrics {
        l1: l1(a, b)?,
        rmse: rmse(a, b)?,
        ssim: ssim(a, b)?,
    })
}

/// Per-pair metrics plus their aggregate.
#[derive(Debug, Clone, Default)]
pub struct MetricReport {
    pub pairs: Vec<PairMetrics>,
}

impl MetricReport {
    pub fn push(&mut self, m: PairMetrics) {
        self.pairs.push(m);
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Unweighted means over all pairs.
    pub fn aggregate(&self) -> PairMetrics {
        let n = self.pairs.len().max(1) as f64;
        PairMetrics {
            l1: self.pairs.iter().map(|p| p.l1).sum::<f64>() / n,
            rmse: self.pairs.iter().map(|p| p.rmse).sum::<f64>() / n,
            ssim: self.pairs.iter().map(|p| p.ssim).sum::<f64>() / n,
        }
    }
}
