//! Orthographic projection of glyphs onto evenly spaced directions.
//!
//! Direction p of P has angle theta_p = p * pi / P. Every pixel is assigned
//! to exactly one bin per direction by rounding its signed distance along
//! the direction, so the per-direction histograms partition the image's ink
//! mass and the map is constant with respect to pixel intensities (losses
//! built on top get exact linear gradients).

use crate::error::{Error, Result};
use crate::glyph::GlyphImage;

/// Default bin count: enough unit-width bins to cover the image diagonal.
pub fn default_bin_count(height: usize, width: usize) -> usize {
    ((height * height + width * width) as f64).sqrt().floor() as usize + 1
}

/// Precomputed per-direction pixel-to-bin assignment.
#[derive(Debug, Clone)]
pub struct ProjectionPlan {
    height: usize,
    width: usize,
    n_directions: usize,
    n_bins: usize,
    /// `index_map[p][pixel]` is the bin of `pixel` under direction `p`.
    index_map: Vec<Vec<u32>>,
}

impl ProjectionPlan {
    pub fn new(height: usize, width: usize, n_directions: usize) -> Result<Self> {
        Self::with_bins(height, width, n_directions, default_bin_count(height, width))
    }

    pub fn with_bins(
        height: usize,
        width: usize,
        n_directions: usize,
        n_bins: usize,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("plan size", "height and width must be >= 1"));
        }
        if n_directions == 0 {
            return Err(Error::invalid("n_directions", "must be >= 1"));
        }
        if n_bins == 0 {
            return Err(Error::invalid("n_bins", "must be >= 1"));
        }
        let cx = (width as f64 - 1.0) / 2.0;
        let cy = (height as f64 - 1.0) / 2.0;
        let offset = (n_bins as f64 - 1.0) / 2.0;
        let mut index_map = Vec::with_capacity(n_directions);
        for p in 0..n_directions {
            let theta = p as f64 * std::f64::consts::PI / n_directions as f64;
            let (sin, cos) = theta.sin_cos();
            let mut map = Vec::with_capacity(height * width);
            for row in 0..height {
                for col in 0..width {
                    let u = col as f64 - cx;
                    let v = row as f64 - cy;
                    let t = u * cos + v * sin;
                    // No in-bounds pixel can clamp with the default bin
                    // count; the clamp guards custom (smaller) counts.
                    let idx = (t + offset).round().clamp(0.0, n_bins as f64 - 1.0) as u32;
                    map.push(idx);
                }
            }
            index_map.push(map);
        }
        Ok(ProjectionPlan {
            height,
            width,
            n_directions,
            n_bins,
            index_map,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_directions(&self) -> usize {
        self.n_directions
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Bin of `pixel` (row-major index) under direction `p`.
    pub fn bin_index(&self, p: usize, pixel: usize) -> usize {
        self.index_map[p][pixel] as usize
    }

    pub fn direction_map(&self, p: usize) -> &[u32] {
        &self.index_map[p]
    }

    pub(crate) fn ensure_matches(&self, img: &GlyphImage) -> Result<()> {
        if img.height() != self.height || img.width() != self.width {
            return Err(Error::ShapeMismatch {
                expected_h: self.height,
                expected_w: self.width,
                found_h: img.height(),
                found_w: img.width(),
            });
        }
        Ok(())
    }
}

/// Per-direction histograms of one glyph.
#[derive(Debug, Clone)]
pub struct ProjectedDistribution {
    /// Raw ink-mass histograms, `hist[p][bin]`.
    pub hist: Vec<Vec<f64>>,
    /// Normalized histograms summing to 1 per direction.
    pub norm: Vec<Vec<f64>>,
}

pub fn project(img: &GlyphImage, plan: &ProjectionPlan) -> Result<ProjectedDistribution> {
    plan.ensure_matches(img)?;
    let pixels = img.pixels();
    let mut hist = Vec::with_capacity(plan.n_directions);
    let mut norm = Vec::with_capacity(plan.n_directions);
    for p in 0..plan.n_directions {
        let map = plan.direction_map(p);
        let mut h = vec![0.0; plan.n_bins];
        for (i, &v) in pixels.iter().enumerate() {
            h[map[i] as usize] += v;
        }
        let total: f64 = h.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let q = h.iter().map(|&x| x / total).collect();
        hist.push(h);
        norm.push(q);
    }
    Ok(ProjectedDistribution { hist, norm })
}
