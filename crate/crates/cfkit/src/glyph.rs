//! Grayscale glyph rasters.
//!
//! Intensities live in `[0, 1]` with 1.0 = ink and 0.0 = background.
//! The mass-positive convention makes projection histograms direct ink-mass
//! distributions; the on-disk PGM encoding inverts this (ink stored dark).

use crate::error::{Error, Result};

/// Fixed-size grayscale raster of a single character, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GlyphImage {
    /// Default raster edge length used throughout the pipeline.
    pub const DEFAULT_SIZE: usize = 80;

    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("image size", "height and width must be >= 1"));
        }
        if pixels.len() != height * width {
            return Err(Error::PixelCount {
                expected: height * width,
                found: pixels.len(),
            });
        }
        for &v in &pixels {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::IntensityOutOfRange { value: v });
            }
        }
        Ok(GlyphImage {
            height,
            width,
            pixels,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        GlyphImage {
            height,
            width,
            pixels: vec![0.0; height * width],
        }
    }

    /// Builds an image by evaluating `f(row, col)`; values are validated.
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        GlyphImage::new(height, width, pixels)
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

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::IntensityOutOfRange { value });
        }
        self.pixels[row * self.width + col] = value;
        Ok(())
    }

    /// Sum of all intensities, accumulated in row-major order.
    pub fn ink_mass(&self) -> f64 {
        self.pixels.iter().sum()
    }

    pub fn same_shape(&self, other: &GlyphImage) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub(crate) fn ensure_same_shape(&self, other: &GlyphImage) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected_h: self.height,
                expected_w: self.width,
                found_h: other.height,
                found_w: other.width,
            })
        }
    }
}
