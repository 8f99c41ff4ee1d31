//! Synthetic font rendering.
//!
//! A "font" is a small parameter bundle (stroke thickness, slant, scale,
//! jitter seed) applied to shared character skeletons. Rendering is a pure
//! function of (spec, skeleton, raster size): segments are jittered
//! deterministically, affine-transformed about the image center, and
//! rasterized by distance-to-segment thresholding with a 1-pixel linear
//! anti-aliasing ramp, so ink mass per unit stroke length equals the
//! stroke thickness.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::glyph::GlyphImage;

/// Maximum deterministic endpoint perturbation, in unit-square coordinates.
pub const JITTER_AMPLITUDE: f64 = 0.01;

pub const THICKNESS_RANGE: (f64, f64) = (1.0, 6.0);
pub const SLANT_RANGE: (f64, f64) = (-0.4, 0.4);
pub const SCALE_RANGE: (f64, f64) = (0.6, 1.0);

/// 2D line segment with endpoints in the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Segment {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Segment { x0, y0, x1, y1 }
    }

    fn in_unit_square(&self) -> bool {
        [self.x0, self.y0, self.x1, self.y1]
            .iter()
            .all(|&v| (0.0..=1.0).contains(&v))
    }
}

/// Stroke skeleton of one character: line segments in the unit square,
/// y = 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct CharSkeleton {
    pub char_id: String,
    pub segments: Vec<Segment>,
}

impl CharSkeleton {
    pub fn new(char_id: impl Into<String>, segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("skeleton", "needs at least one segment"));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !seg.in_unit_square() {
                return Err(Error::invalid(
                    "skeleton",
                    format!("segment {i} has an endpoint outside [0,1]^2"),
                ));
            }
        }
        Ok(CharSkeleton {
            char_id: char_id.into(),
            segments,
        })
    }
}

/// Parameters of one synthetic font.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFontSpec {
    pub font_id: String,
    pub stroke_thickness: f64,
    pub slant: f64,
    pub scale: f64,
    pub jitter_seed: u64,
}

impl SyntheticFontSpec {
    pub fn new(
        font_id: impl Into<String>,
        stroke_thickness: f64,
        slant: f64,
        scale: f64,
        jitter_seed: u64,
    ) -> Result<Self> {
        let check = |name: &'static str, v: f64, (lo, hi): (f64, f64)| -> Result<()> {
            if !(lo..=hi).contains(&v) {
                return Err(Error::invalid(
                    name,
                    format!("{v} outside [{lo}, {hi}]"),
                ));
            }
            Ok(())
        };
        check("stroke_thickness", stroke_thickness, THICKNESS_RANGE)?;
        check("slant", slant, SLANT_RANGE)?;
        check("scale", scale, SCALE_RANGE)?;
        Ok(SyntheticFontSpec {
            font_id: font_id.into(),
            stroke_thickness,
            slant,
            scale,
            jitter_seed,
        })
    }
}

/// FNV-1a over the character id; stable across builds, unlike `DefaultHasher`.
fn char_hash(char_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in char_id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Renders one glyph. Pure: identical inputs produce bit-identical rasters.
pub fn render_glyph(
    spec: &SyntheticFontSpec,
    skel: &CharSkeleton,
    height: usize,
    width: usize,
) -> GlyphImage {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;

    // Jitter endpoints, then map unit square -> centered pixel coordinates,
    // then scale and shear about the center. The shear displaces rows above
    // the center to the right for positive slant.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.jitter_seed ^ char_hash(&skel.char_id));
    let transformed: Vec<[f64; 4]> = skel
        .segments
        .iter()
        .map(|seg| {
            let j = |v: f64, rng: &mut ChaCha8Rng| {
                v + rng.gen_range(-JITTER_AMPLITUDE..=JITTER_AMPLITUDE)
            };
            let (x0, y0) = (j(seg.x0, &mut rng), j(seg.y0, &mut rng));
            let (x1, y1) = (j(seg.x1, &mut rng), j(seg.y1, &mut rng));
            let place = |x: f64, y: f64| {
                let u = (x - 0.5) * (width as f64 - 1.0) * spec.scale;
                let v = (y - 0.5) * (height as f64 - 1.0) * spec.scale;
                [u - spec.slant * v, v]
            };
            let a = place(x0, y0);
            let b = place(x1, y1);
            [a[0], a[1], b[0], b[1]]
        })
        .collect();

    let half = spec.stroke_thickness / 2.0;
    let mut pixels = Vec::with_capacity(height * width);
    for row in 0..height {
        for col in 0..width {
            let pu = col as f64 - cx;
            let pv = row as f64 - cy;
            let mut d = f64::INFINITY;
            for s in &transformed {
                d = d.min(point_segment_distance(pu, pv, s));
            }
            pixels.push((half + 0.5 - d).clamp(0.0, 1.0));
        }
    }
    GlyphImage::new(height, width, pixels).expect("clamped intensities are in range")
}

fn point_segment_distance(px: f64, py: f64, s: &[f64; 4]) -> f64 {
    let (ax, ay, bx, by) = (s[0], s[1], s[2], s[3]);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (ax + t * dx, ay + t * dy);
    ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
}

/// Built-in library of 26 letter-like skeletons, ids "A".."Z".
pub fn builtin_skeletons() -> Vec<CharSkeleton> {
    const L: f64 = 0.2;
    const R: f64 = 0.8;
    const T: f64 = 0.15;
    const B: f64 = 0.85;
    const MX: f64 = 0.5;
    const MY: f64 = 0.5;

    let table: &[(&str, &[(f64, f64, f64, f64)])] = &[
        ("A", &[(L, B, MX, T), (MX, T, R, B), (0.32, 0.6, 0.68, 0.6)]),
        ("B", &[(L, T, L, B), (L, T, 0.72, 0.28), (0.72, 0.28, L, MY), (L, MY, 0.78, 0.7), (0.78, 0.7, L, B)]),
        ("C", &[(R, T, L, T), (L, T, L, B), (L, B, R, B)]),
        ("D", &[(L, T, L, B), (L, T, R, 0.32), (R, 0.32, R, 0.68), (R, 0.68, L, B)]),
        ("E", &[(L, T, L, B), (L, T, R, T), (L, MY, 0.68, MY), (L, B, R, B)]),
        ("F", &[(L, T, L, B), (L, T, R, T), (L, MY, 0.68, MY)]),
        ("G", &[(R, T, L, T), (L, T, L, B), (L, B, R, B), (R, B, R, 0.55), (R, 0.55, 0.55, 0.55)]),
        ("H", &[(L, T, L, B), (R, T, R, B), (L, MY, R, MY)]),
        ("I", &[(MX, T, MX, B), (0.35, T, 0.65, T), (0.35, B, 0.65, B)]),
        ("J", &[(0.35, T, R, T), (0.65, T, 0.65, 0.7), (0.65, 0.7, 0.45, B), (0.45, B, L, 0.72)]),
        ("K", &[(L, T, L, B), (L, MY, R, T), (L, MY, R, B)]),
        ("L", &[(L, T, L, B), (L, B, R, B)]),
        ("M", &[(L, B, L, T), (L, T, MX, 0.55), (MX, 0.55, R, T), (R, T, R, B)]),
        ("N", &[(L, B, L, T), (L, T, R, B), (R, B, R, T)]),
        ("O", &[(L, T, R, T), (R, T, R, B), (R, B, L, B), (L, B, L, T)]),
        ("P", &[(L, T, L, B), (L, T, R, 0.22), (R, 0.22, R, 0.42), (R, 0.42, L, 0.52)]),
        ("Q", &[(L, T, R, T), (R, T, R, B), (R, B, L, B), (L, B, L, T), (0.58, 0.62, 0.88, 0.92)]),
        ("R", &[(L, T, L, B), (L, T, R, 0.22), (R, 0.22, R, 0.42), (R, 0.42, L, 0.52), (0.45, 0.52, R, B)]),
        ("S", &[(R, T, L, 0.24), (L, 0.24, 0.7, MY), (0.7, MY, R, 0.74), (R, 0.74, L, B)]),
        ("T", &[(L, T, R, T), (MX, T, MX, B)]),
        ("U", &[(L, T, L, B), (L, B, R, B), (R, B, R, T)]),
        ("V", &[(L, T, MX, B), (MX, B, R, T)]),
        ("W", &[(L, T, 0.35, B), (0.35, B, MX, 0.4), (MX, 0.4, 0.65, B), (0.65, B, R, T)]),
        ("X", &[(L, T, R, B), (R, T, L, B)]),
        ("Y", &[(L, T, MX, MY), (R, T, MX, MY), (MX, MY, MX, B)]),
        ("Z", &[(L, T, R, T), (R, T, L, B), (L, B, R, B)]),
    ];

    table
        .iter()
        .map(|(id, segs)| {
            let segments = segs
                .iter()
                .map(|&(x0, y0, x1, y1)| Segment::new(x0, y0, x1, y1))
                .collect();
            CharSkeleton::new(*id, segments).expect("builtin skeletons are valid")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain_spec(thickness: f64, slant: f64) -> SyntheticFontSpec {
        SyntheticFontSpec::new("t", thickness, slant, 1.0, 11).unwrap()
    }

    fn horizontal_skel() -> CharSkeleton {
        CharSkeleton::new("hbar", vec![Segment::new(0.0, 0.5, 1.0, 0.5)]).unwrap()
    }

    #[test]
    fn horizontal_segment_renders_a_centered_band() {
        let img = render_glyph(&plain_spec(1.0, 0.0), &horizontal_skel(), 80, 80);
        // Per-row ink mass; jitter can move the band by under a pixel.
        let row_mass: Vec<f64> = (0..80)
            .map(|r| (0..80).map(|c| img.get(r, c)).sum())
            .collect();
        for (r, &m) in row_mass.iter().enumerate() {
            if !(37..=42).contains(&r) {
                assert_eq!(m, 0.0, "row {r} should be empty");
            }
        }
        let total: f64 = row_mass.iter().sum();
        assert!(total > 60.0, "band carries ink, got {total}");
        let centroid: f64 = row_mass
            .iter()
            .enumerate()
            .map(|(r, m)| r as f64 * m)
            .sum::<f64>()
            / total;
        assert!((centroid - 39.5).abs() < 1.0, "centroid {centroid}");
    }

    #[test]
    fn rendering_is_deterministic() {
        let spec = SyntheticFontSpec::new("d", 2.5, 0.2, 0.8, 999).unwrap();
        let skel = &builtin_skeletons()[7];
        let a = render_glyph(&spec, skel, 80, 80);
        let b = render_glyph(&spec, skel, 80, 80);
        assert_eq!(a, b);
    }

    #[test]
    fn slant_shifts_row_centroids_proportionally() {
        let skel = CharSkeleton::new("vbar", vec![Segment::new(0.5, 0.05, 0.5, 0.95)]).unwrap();
        let straight = render_glyph(&plain_spec(2.0, 0.0), &skel, 80, 80);
        let slanted = render_glyph(&plain_spec(2.0, 0.4), &skel, 80, 80);
        // Brute-force centroid per row; rows near the segment ends are skipped
        // so end caps do not skew the cross-section.
        let centroid = |img: &GlyphImage, r: usize| -> f64 {
            let mass: f64 = (0..80).map(|c| img.get(r, c)).sum();
            assert!(mass > 0.0, "row {r} has no ink");
            (0..80).map(|c| c as f64 * img.get(r, c)).sum::<f64>() / mass
        };
        for r in [10usize, 20, 60, 70] {
            let v = r as f64 - 39.5;
            let shift = centroid(&slanted, r) - centroid(&straight, r);
            let expected = 0.4 * (-v);
            assert!(
                (shift - expected).abs() < 0.05,
                "row {r}: shift {shift}, expected {expected}"
            );
        }
    }

    #[test]
    fn ink_mass_increases_with_thickness() {
        let skel = &builtin_skeletons()[0];
        let mut last = 0.0;
        for t in [1.0, 2.0, 3.5, 5.0, 6.0] {
            let spec = SyntheticFontSpec::new("t", t, 0.1, 0.9, 4).unwrap();
            let mass = render_glyph(&spec, skel, 80, 80).ink_mass();
            assert!(mass > last, "thickness {t}: {mass} <= {last}");
            last = mass;
        }
    }

    #[test]
    fn spec_ranges_are_enforced() {
        assert!(SyntheticFontSpec::new("x", 0.5, 0.0, 1.0, 0).is_err());
        assert!(SyntheticFontSpec::new("x", 1.0, 0.5, 1.0, 0).is_err());
        assert!(SyntheticFontSpec::new("x", 1.0, 0.0, 0.5, 0).is_err());
        assert!(SyntheticFontSpec::new("x", 6.0, -0.4, 0.6, 0).is_ok());
    }

    #[test]
    fn skeleton_validation() {
        assert!(CharSkeleton::new("e", vec![]).is_err());
        assert!(CharSkeleton::new("o", vec![Segment::new(0.0, 0.0, 1.0, 1.1)]).is_err());
        let all = builtin_skeletons();
        assert_eq!(all.len(), 26);
        for s in &all {
            assert!(!s.segments.is_empty());
        }
    }
}
